#include "uavdt/hash.hpp"

#include <bit>
#include <stdexcept>

#include <openssl/evp.h>

namespace uavdt {

Digest sha256_bytes(std::span<const unsigned char> data) {
    static const unsigned char empty = 0;
    Digest out{};
    unsigned int len = 0;
    const unsigned char* ptr = data.empty() ? &empty : data.data();
    if (EVP_Digest(ptr, data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw std::runtime_error("sha256 digest failed");
    }
    return out;
}

std::string hex_encode(std::span<const unsigned char> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (unsigned char b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::vector<unsigned char> hex_decode(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::runtime_error("hex string has odd length");
    std::vector<unsigned char> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw std::runtime_error("invalid hex character at offset " + std::to_string(2 * i));
        out[i] = static_cast<unsigned char>((hi << 4) | lo);
    }
    return out;
}

void ByteWriter::put_u32(std::uint32_t v) {
    bytes.push_back(static_cast<unsigned char>(v >> 24));
    bytes.push_back(static_cast<unsigned char>(v >> 16));
    bytes.push_back(static_cast<unsigned char>(v >> 8));
    bytes.push_back(static_cast<unsigned char>(v));
}

void ByteWriter::put_u64(std::uint64_t v) {
    put_u32(static_cast<std::uint32_t>(v >> 32));
    put_u32(static_cast<std::uint32_t>(v));
}

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_string(const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
}

Digest ByteWriter::digest() const { return sha256_bytes(bytes); }

std::uint8_t ByteReader::get_u8() {
    if (pos + 1 > bytes.size())
        throw std::runtime_error("truncated record at offset " + std::to_string(pos));
    return bytes[pos++];
}

std::uint32_t ByteReader::get_u32() {
    if (pos + 4 > bytes.size())
        throw std::runtime_error("truncated record at offset " + std::to_string(pos));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[pos++];
    return v;
}

std::uint64_t ByteReader::get_u64() {
    const std::uint64_t hi = get_u32();
    return (hi << 32) | get_u32();
}

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ByteReader::get_string() {
    const std::uint32_t n = get_u32();
    if (pos + n > bytes.size())
        throw std::runtime_error("truncated string at offset " + std::to_string(pos));
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
}

} // namespace uavdt
