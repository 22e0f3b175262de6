#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace robustform {

/// CSV writer with a fixed column order and 17-significant-digit numbers,
/// so identical runs produce byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void cell(const std::string& value);
    void cell(double value);
    void cell(int value);
    void end_row();
    void close();

    static std::string format(double value);

private:
    std::ofstream out_;
    bool row_started_ = false;
    std::size_t columns_ = 0;
    std::size_t filled_ = 0;
};

}  // namespace robustform
