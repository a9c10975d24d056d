#include "gprg/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gprg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string file_checksum_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += header[i];
    }
    buffer_ += '\n';
}

void CsvWriter::append_raw(const std::string& cell) {
    if (cells_in_row_) buffer_ += ',';
    buffer_ += cell;
    ++cells_in_row_;
}

void CsvWriter::end_row() {
    if (cells_in_row_ != columns_)
        throw std::logic_error("csv row has " + std::to_string(cells_in_row_) +
                               " cells, expected " + std::to_string(columns_));
    buffer_ += '\n';
    cells_in_row_ = 0;
}

void CsvWriter::save(const std::filesystem::path& path) const {
    write_file_atomic(path, buffer_);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            first = false;
            if (!expected_header.empty()) {
                if (cells.size() != expected_header.size())
                    throw std::runtime_error(path.string() + ": unexpected header");
                for (std::size_t i = 0; i < cells.size(); ++i)
                    if (cells[i] != expected_header[i])
                        throw std::runtime_error(path.string() + ": expected header column '" +
                                                 expected_header[i] + "', got '" + cells[i] + "'");
            }
            continue;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

void KeyValueWriter::set(const std::string& key, const std::string& value) {
    buffer_ += key;
    buffer_ += " = ";
    buffer_ += value;
    buffer_ += '\n';
}

void KeyValueWriter::save(const std::filesystem::path& path) const {
    write_file_atomic(path, buffer_);
}

}  // namespace gprg
