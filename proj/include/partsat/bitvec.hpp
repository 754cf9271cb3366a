#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace partsat {

// Fixed-width bit vector. Used for decomposition-set masks (chi), sampled
// assignments over a decomposition set and total models.
//
// Hex form: bits are grouped four at a time starting from bit 0; bit 4k is
// the most significant bit of hex digit k, so the hex string reads in the
// same left-to-right order as the bit string. The final digit is padded with
// zero bits.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t width, bool value = false);

    std::size_t size() const { return width_; }
    bool empty() const { return width_ == 0; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool value = true);
    void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    std::size_t count() const;
    std::vector<std::size_t> ones() const;

    std::span<const std::uint64_t> words() const { return words_; }

    std::string to_hex() const;
    std::string to_string() const;  // "0110..." with bit 0 first
    static BitVec from_hex(std::string_view hex, std::size_t width);
    static BitVec from_string(std::string_view bits);
    static BitVec from_uint(std::uint64_t value, std::size_t width);

    std::size_t hash() const;

    friend bool operator==(const BitVec&, const BitVec&) = default;

private:
    std::size_t width_ = 0;
    std::vector<std::uint64_t> words_;  // bits past width_ are always zero
};

// Lexicographic order on (bit 0, bit 1, ...), 0 before 1. Widths must match.
bool lex_less(const BitVec& a, const BitVec& b);

std::size_t hamming_distance(const BitVec& a, const BitVec& b);

struct BitVecHash {
    std::size_t operator()(const BitVec& v) const { return v.hash(); }
};

struct BitVecLexLess {
    bool operator()(const BitVec& a, const BitVec& b) const { return lex_less(a, b); }
};

}  // namespace partsat
