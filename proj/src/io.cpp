#include "kgfit/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kgfit::io {

namespace {

constexpr std::array<char, 4> kMagic = {'K', 'G', 'F', 'E'};

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) {
        throw ParseError("matrix file truncated");
    }
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        u |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    return static_cast<T>(u);
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::string out;
    out.reserve(18 + m.data().size() * 4);
    out.append(kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(out, kMatrixFormatVersion);
    put_le<std::uint64_t>(out, m.rows());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) {
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    write_text(path, out);
}

Matrix read_matrix(const std::filesystem::path& path) {
    const std::string in = read_text(path);
    if (in.size() < kMagic.size() || std::memcmp(in.data(), kMagic.data(), kMagic.size()) != 0) {
        throw ParseError(path.string() + ": bad magic, expected KGFE");
    }
    std::size_t pos = kMagic.size();
    const auto version = get_le<std::uint16_t>(in, pos);
    if (version != kMatrixFormatVersion) {
        throw ParseError(path.string() + ": unsupported KGFE version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint64_t>(in, pos);
    const auto cols = get_le<std::uint32_t>(in, pos);
    const std::size_t expected = pos + rows * cols * 4;
    if (in.size() != expected) {
        throw ParseError(path.string() + ": payload size mismatch");
    }
    std::vector<double> data(rows * cols);
    for (auto& v : data) {
        v = std::bit_cast<float>(get_le<std::uint32_t>(in, pos));
    }
    return Matrix(rows, cols, std::move(data));
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + ": file not found or unreadable");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) {
        throw IoError("write failed for " + path.string());
    }
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace kgfit::io
