#include "epifit/serialize.hpp"

#include <bit>
#include <cstring>

namespace epifit {

namespace {

// Containers are little-endian on disk. On a big-endian host every scalar
// would need a byte swap; all supported targets are little-endian, so the
// check is compile-time and the hot path is a plain memcpy.
static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

} // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) {
        throw FormatError("cannot open '" + path.string() + "' for writing");
    }
}

void BinaryWriter::write_bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) {
        throw FormatError("write failed at byte " + std::to_string(offset_) +
                              " of '" + path_.string() + "'",
                          offset_);
    }
    offset_ += n;
}

void BinaryWriter::write_magic(const char magic[8]) { write_bytes(magic, 8); }

void BinaryWriter::write_u32(std::uint32_t v) { write_bytes(&v, sizeof v); }

void BinaryWriter::write_u64(std::uint64_t v) { write_bytes(&v, sizeof v); }

void BinaryWriter::write_f64(double v) { write_bytes(&v, sizeof v); }

void BinaryWriter::write_f64_array(const double* data, std::size_t n) {
    write_bytes(data, n * sizeof(double));
}

void BinaryWriter::write_string(const std::string& s) {
    write_u32(static_cast<std::uint32_t>(s.size()));
    write_bytes(s.data(), s.size());
}

void BinaryWriter::close() {
    out_.close();
    if (!out_) {
        throw FormatError("close failed for '" + path_.string() + "'", offset_);
    }
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path) {
    std::error_code ec;
    file_size_ = std::filesystem::file_size(path, ec);
    in_.open(path, std::ios::binary);
    if (ec || !in_) {
        throw FormatError("cannot open '" + path.string() + "' for reading");
    }
}

void BinaryReader::read_bytes(void* data, std::size_t n) {
    if (offset_ + n > file_size_) {
        throw FormatError("'" + path_.string() + "' truncated: need " +
                              std::to_string(n) + " bytes at offset " +
                              std::to_string(offset_) + " but file has " +
                              std::to_string(file_size_) + " bytes",
                          offset_);
    }
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
        throw FormatError("read failed at byte " + std::to_string(offset_) +
                              " of '" + path_.string() + "'",
                          offset_);
    }
    offset_ += n;
}

void BinaryReader::expect_magic(const char magic[8]) {
    char got[8];
    read_bytes(got, 8);
    if (std::memcmp(got, magic, 8) != 0) {
        throw FormatError("'" + path_.string() + "' has wrong magic (expected '" +
                              std::string(magic, 8) + "', got '" + std::string(got, 8) +
                              "')",
                          0);
    }
}

std::uint32_t BinaryReader::read_u32() {
    std::uint32_t v;
    read_bytes(&v, sizeof v);
    return v;
}

std::uint64_t BinaryReader::read_u64() {
    std::uint64_t v;
    read_bytes(&v, sizeof v);
    return v;
}

double BinaryReader::read_f64() {
    double v;
    read_bytes(&v, sizeof v);
    return v;
}

void BinaryReader::read_f64_array(double* data, std::size_t n) {
    read_bytes(data, n * sizeof(double));
}

std::string BinaryReader::read_string() {
    std::uint32_t n = read_u32();
    if (offset_ + n > file_size_) {
        throw FormatError("'" + path_.string() + "' truncated inside string at offset " +
                              std::to_string(offset_),
                          offset_);
    }
    std::string s(n, '\0');
    if (n > 0) read_bytes(s.data(), n);
    return s;
}

} // namespace epifit
