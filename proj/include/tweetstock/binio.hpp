#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>

#include "tweetstock/error.hpp"

namespace tweetstock::detail {

// Checkpoints are little-endian on every platform.

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw DataError(std::string("checkpoint truncated reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    return v;
}

inline void write_f64(std::ostream& out, double d) {
    write_u64(out, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(read_u64(in, what));
}

inline void write_f64_span(std::ostream& out, std::span<const double> values) {
    for (double d : values) write_f64(out, d);
}

inline void read_f64_span(std::istream& in, std::span<double> values, const char* what) {
    for (double& d : values) d = read_f64(in, what);
}

} // namespace tweetstock::detail
