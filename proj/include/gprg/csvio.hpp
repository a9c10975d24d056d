#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gprg {

/// Formats a double with enough digits to round-trip, so that equal bits
/// always produce equal text (output determinism relies on this).
std::string format_double(double v);

/// Writes `content` to `path` atomically: temp file in the same directory,
/// then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit checksum of a file's bytes, as 16 hex digits.
std::string file_checksum_hex(const std::filesystem::path& path);

/// Row-oriented CSV builder with a fixed header.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void append_raw(const std::string& cell);
    void append(double v) { append_raw(format_double(v)); }
    void append(int v) { append_raw(std::to_string(v)); }
    void append(long v) { append_raw(std::to_string(v)); }
    void append(std::size_t v) { append_raw(std::to_string(v)); }
    void append(const std::string& v) { append_raw(v); }
    void end_row();

    const std::string& content() const { return buffer_; }
    void save(const std::filesystem::path& path) const;

private:
    std::string buffer_;
    std::size_t columns_;
    std::size_t cells_in_row_ = 0;
};

/// Minimal CSV reader: splits on commas, no quoting (the formats written
/// here never need it). Returns rows excluding the header.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& expected_header);

/// Flat `key = value` sidecar/manifest writer.
class KeyValueWriter {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, long value) { set(key, std::to_string(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

    const std::string& content() const { return buffer_; }
    void save(const std::filesystem::path& path) const;

private:
    std::string buffer_;
};

}  // namespace gprg
