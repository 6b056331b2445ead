#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uavdt {

using Digest = std::array<unsigned char, 32>;

Digest sha256_bytes(std::span<const unsigned char> data);

std::string hex_encode(std::span<const unsigned char> data);
std::vector<unsigned char> hex_decode(const std::string& hex); // throws on bad input

// Canonical big-endian byte stream used for hashing and the ledger log.
struct ByteWriter {
    std::vector<unsigned char> bytes;

    void put_u8(std::uint8_t v) { bytes.push_back(v); }
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
    void put_f64(double v); // raw IEEE-754 bits
    void put_string(const std::string& s);

    Digest digest() const;
};

struct ByteReader {
    std::span<const unsigned char> bytes;
    std::size_t pos = 0;

    std::uint8_t get_u8();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
    double get_f64();
    std::string get_string();
    bool done() const { return pos == bytes.size(); }
};

} // namespace uavdt
