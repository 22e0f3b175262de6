#include "robustform/csv.hpp"

#include <cstdio>

#include "robustform/errors.hpp"

namespace robustform {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open output file: " + path);
    columns_ = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

std::string CsvWriter::format(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void CsvWriter::cell(const std::string& value) {
    if (filled_) out_ << ',';
    out_ << value;
    ++filled_;
}

void CsvWriter::cell(double value) { cell(format(value)); }

void CsvWriter::cell(int value) { cell(std::to_string(value)); }

void CsvWriter::end_row() {
    if (filled_ != columns_)
        throw ConfigError("csv row has " + std::to_string(filled_) + " cells, expected " +
                          std::to_string(columns_));
    out_ << '\n';
    filled_ = 0;
}

void CsvWriter::close() { out_.close(); }

}  // namespace robustform
