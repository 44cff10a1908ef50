#ifndef CIF_SRC_IO_UTIL_HPP
#define CIF_SRC_IO_UTIL_HPP

// Internal little-endian binary IO helpers shared by the file-format code.

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "cif/error.hpp"

namespace cif::detail {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

inline constexpr uint32_t kFormatVersion = 1;

class BinReader {
public:
    BinReader(const std::string& path, const char* expected_magic) : path_(path) {
        in_.open(path, std::ios::binary);
        if (!in_)
            throw CifError(ErrorCode::IoFailure, "cannot open '" + path + "'");
        char magic[4];
        read_raw(magic, 4, "magic");
        if (std::memcmp(magic, expected_magic, 4) != 0)
            throw CifError(ErrorCode::BadMagic,
                           "'" + path + "' does not start with " + expected_magic);
        uint32_t version = read_u32("version");
        if (version != kFormatVersion)
            throw CifError(ErrorCode::VersionUnsupported,
                           "'" + path + "' has version " + std::to_string(version));
    }

    uint32_t read_u32(const char* what) {
        uint32_t v;
        read_raw(reinterpret_cast<char*>(&v), sizeof(v), what);
        return v;
    }

    double read_f64(const char* what) {
        double v;
        read_raw(reinterpret_cast<char*>(&v), sizeof(v), what);
        return v;
    }

    void read_f32(float* dst, size_t count, const char* what) {
        read_raw(reinterpret_cast<char*>(dst), count * sizeof(float), what);
    }

    void read_u8(uint8_t* dst, size_t count, const char* what) {
        read_raw(reinterpret_cast<char*>(dst), count, what);
    }

    std::string read_string(size_t len, const char* what) {
        std::string s(len, '\0');
        read_raw(s.data(), len, what);
        return s;
    }

    const std::string& path() const { return path_; }

private:
    void read_raw(char* dst, size_t bytes, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(bytes));
        if (in_.gcount() != static_cast<std::streamsize>(bytes))
            throw CifError(ErrorCode::TruncatedFile, "'" + path_ + "' ends inside " + what);
    }

    std::string path_;
    std::ifstream in_;
};

inline void append_u32(std::string& out, uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void append_f64(std::string& out, double v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void append_f32(std::string& out, const float* src, size_t count) {
    out.append(reinterpret_cast<const char*>(src), count * sizeof(float));
}

inline int checked_dim(uint32_t v, const char* what, const std::string& path) {
    if (v == 0 || v > (1u << 24))
        throw CifError(ErrorCode::TruncatedFile,
                       "'" + path + "' has implausible " + std::string(what));
    return static_cast<int>(v);
}

}  // namespace cif::detail

#endif
