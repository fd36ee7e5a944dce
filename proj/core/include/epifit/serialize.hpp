#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "epifit/common.hpp"

namespace epifit {

/// Little-endian binary writer. All container files use a fixed byte layout
/// (8-byte magic, u32 format version, then typed fields) so they can be
/// moved between machines and diffed bit for bit.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path);

    void write_bytes(const void* data, std::size_t n);
    void write_magic(const char magic[8]);
    void write_u32(std::uint32_t v);
    void write_u64(std::uint64_t v);
    void write_f64(double v);
    void write_f64_array(const double* data, std::size_t n);
    void write_string(const std::string& s); ///< u32 length + raw bytes

    std::uint64_t offset() const { return offset_; }
    void close();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::uint64_t offset_ = 0;
};

/// Little-endian binary reader mirroring BinaryWriter. Every failure is
/// reported as FormatError with the byte offset where reading stopped.
class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path);

    void read_bytes(void* data, std::size_t n);
    void expect_magic(const char magic[8]);
    std::uint32_t read_u32();
    std::uint64_t read_u64();
    double read_f64();
    void read_f64_array(double* data, std::size_t n);
    std::string read_string();

    std::uint64_t offset() const { return offset_; }
    std::uint64_t file_size() const { return file_size_; }

private:
    std::ifstream in_;
    std::filesystem::path path_;
    std::uint64_t offset_ = 0;
    std::uint64_t file_size_ = 0;
};

} // namespace epifit
