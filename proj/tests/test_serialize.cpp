#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "epifit/common.hpp"
#include "epifit/serialize.hpp"

using namespace epifit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    fs::path dir = fs::temp_directory_path() / "epifit_test_serialize";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("scalar round trips preserve exact bytes") {
    fs::path p = temp_file("scalars.bin");
    {
        BinaryWriter w(p);
        w.write_magic("TESTMAGC");
        w.write_u32(0xDEADBEEFu);
        w.write_u64(0x0123456789ABCDEFULL);
        w.write_f64(-1.5);
        w.write_f64(0.1);
        w.write_string("hello");
        w.write_string("");
        w.close();
    }
    BinaryReader r(p);
    r.expect_magic("TESTMAGC");
    CHECK(r.read_u32() == 0xDEADBEEFu);
    CHECK(r.read_u64() == 0x0123456789ABCDEFULL);
    CHECK(r.read_f64() == -1.5);
    CHECK(r.read_f64() == 0.1); // bit-exact, not approximate
    CHECK(r.read_string() == "hello");
    CHECK(r.read_string().empty());
    CHECK(r.offset() == r.file_size());
}

TEST_CASE("layout is little-endian with fixed field widths") {
    fs::path p = temp_file("layout.bin");
    {
        BinaryWriter w(p);
        w.write_u32(1);
        w.write_u64(2);
        w.write_f64(1.0);
        w.close();
    }
    std::vector<unsigned char> bytes = slurp(p);
    REQUIRE(bytes.size() == 4 + 8 + 8);
    // u32 1 -> 01 00 00 00
    CHECK(bytes[0] == 1);
    CHECK(bytes[1] == 0);
    CHECK(bytes[2] == 0);
    CHECK(bytes[3] == 0);
    // u64 2 -> 02 00 ... 00
    CHECK(bytes[4] == 2);
    for (int i = 5; i < 12; ++i) CHECK(bytes[i] == 0);
    // IEEE-754 double 1.0 -> 00 ... 00 F0 3F
    CHECK(bytes[12 + 6] == 0xF0);
    CHECK(bytes[12 + 7] == 0x3F);
}

TEST_CASE("f64 arrays round trip bit-exactly") {
    fs::path p = temp_file("array.bin");
    std::vector<double> vals = {0.0, -0.0, 1e-300, -1e300, 0.1, 3.5,
                                1.0 / 3.0, 2.2250738585072014e-308};
    {
        BinaryWriter w(p);
        w.write_f64_array(vals.data(), vals.size());
        w.close();
    }
    BinaryReader r(p);
    std::vector<double> got(vals.size());
    r.read_f64_array(got.data(), got.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        // Compare representations so -0.0 vs 0.0 is caught too.
        std::uint64_t a, b;
        static_assert(sizeof a == sizeof vals[i]);
        std::memcpy(&a, &vals[i], 8);
        std::memcpy(&b, &got[i], 8);
        CHECK(a == b);
    }
}

TEST_CASE("wrong magic reports offset 0") {
    fs::path p = temp_file("magic.bin");
    {
        BinaryWriter w(p);
        w.write_magic("AAAABBBB");
        w.close();
    }
    BinaryReader r(p);
    try {
        r.expect_magic("CCCCDDDD");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 0);
    }
}

TEST_CASE("truncated reads report the failing offset") {
    fs::path p = temp_file("trunc.bin");
    {
        BinaryWriter w(p);
        w.write_u32(7); // only 4 bytes in the file
        w.close();
    }
    BinaryReader r(p);
    CHECK(r.read_u32() == 7);
    try {
        r.read_u64();
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 4);
        CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
    }
}

TEST_CASE("string length beyond end of file is rejected before allocation") {
    fs::path p = temp_file("badstring.bin");
    {
        BinaryWriter w(p);
        w.write_u32(1000000); // claims a megabyte that is not there
        w.close();
    }
    BinaryReader r(p);
    CHECK_THROWS_AS(r.read_string(), FormatError);
}

TEST_CASE("missing file reports the path") {
    fs::path p = temp_file("does_not_exist.bin");
    std::error_code ec;
    fs::remove(p, ec);
    try {
        BinaryReader r(p);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(p.string()) != std::string::npos);
    }
}

TEST_CASE("writer tracks offsets as documented") {
    fs::path p = temp_file("offsets.bin");
    BinaryWriter w(p);
    CHECK(w.offset() == 0);
    w.write_magic("12345678");
    CHECK(w.offset() == 8);
    w.write_u32(1);
    CHECK(w.offset() == 12);
    w.write_string("abc"); // u32 length + 3 bytes
    CHECK(w.offset() == 19);
    w.close();
}
