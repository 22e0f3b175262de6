#pragma once

#include <stdexcept>
#include <vector>

namespace robustform {

/// Strictly increasing payment/observation dates in years, starting at 0.
/// step(k) is the length of the interval [time(k), time(k+1)).
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
        if (times_.size() < 2)
            throw std::invalid_argument("TimeGrid: need at least two times");
        if (times_.front() != 0.0)
            throw std::invalid_argument("TimeGrid: first time must be 0");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (times_[i] <= times_[i - 1])
                throw std::invalid_argument("TimeGrid: times must be strictly increasing");
    }

    static TimeGrid uniform(int steps, double dt) {
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
        if (dt <= 0.0) throw std::invalid_argument("TimeGrid: dt must be > 0");
        std::vector<double> t(static_cast<std::size_t>(steps) + 1);
        for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = k * dt;
        return TimeGrid(std::move(t));
    }

    /// Number of steps K; the grid holds K+1 times.
    int steps() const { return static_cast<int>(times_.size()) - 1; }
    double time(int k) const { return times_.at(static_cast<std::size_t>(k)); }
    double step(int k) const { return time(k + 1) - time(k); }
    double horizon() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }

private:
    std::vector<double> times_;
};

}  // namespace robustform
