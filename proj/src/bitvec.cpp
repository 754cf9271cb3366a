#include "partsat/bitvec.hpp"

#include <bit>
#include <stdexcept>

namespace partsat {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

BitVec::BitVec(std::size_t width, bool value) : width_(width), words_((width + 63) / 64, 0) {
    if (value) {
        for (auto& w : words_) w = ~std::uint64_t{0};
        if (width_ % 64 != 0 && !words_.empty()) words_.back() = (std::uint64_t{1} << (width_ % 64)) - 1;
    }
}

void BitVec::set(std::size_t i, bool value) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value)
        words_[i >> 6] |= bit;
    else
        words_[i >> 6] &= ~bit;
}

std::size_t BitVec::count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<std::size_t> BitVec::ones() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < words_.size(); ++k) {
        std::uint64_t w = words_[k];
        while (w != 0) {
            out.push_back(k * 64 + static_cast<std::size_t>(std::countr_zero(w)));
            w &= w - 1;
        }
    }
    return out;
}

std::string BitVec::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve((width_ + 3) / 4);
    for (std::size_t base = 0; base < width_; base += 4) {
        int nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            nibble <<= 1;
            if (base + j < width_ && test(base + j)) nibble |= 1;
        }
        out.push_back(digits[nibble]);
    }
    return out;
}

std::string BitVec::to_string() const {
    std::string out(width_, '0');
    for (std::size_t i = 0; i < width_; ++i)
        if (test(i)) out[i] = '1';
    return out;
}

BitVec BitVec::from_hex(std::string_view hex, std::size_t width) {
    if (hex.size() != (width + 3) / 4)
        throw std::invalid_argument("hex string of length " + std::to_string(hex.size()) +
                                    " does not encode " + std::to_string(width) + " bits");
    BitVec v(width);
    for (std::size_t k = 0; k < hex.size(); ++k) {
        const int nibble = hex_value(hex[k]);
        if (nibble < 0) throw std::invalid_argument("invalid hex digit in '" + std::string(hex) + "'");
        for (std::size_t j = 0; j < 4; ++j) {
            const bool bit = (nibble >> (3 - j)) & 1;
            const std::size_t i = k * 4 + j;
            if (i < width)
                v.set(i, bit);
            else if (bit)
                throw std::invalid_argument("nonzero padding bits in hex '" + std::string(hex) + "'");
        }
    }
    return v;
}

BitVec BitVec::from_string(std::string_view bits) {
    BitVec v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            v.set(i);
        else if (bits[i] != '0')
            throw std::invalid_argument("invalid bit character in '" + std::string(bits) + "'");
    }
    return v;
}

BitVec BitVec::from_uint(std::uint64_t value, std::size_t width) {
    BitVec v(width);
    for (std::size_t i = 0; i < width && i < 64; ++i) v.set(i, (value >> i) & 1u);
    return v;
}

std::size_t BitVec::hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ width_;
    for (auto w : words_) {
        h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

bool lex_less(const BitVec& a, const BitVec& b) {
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t k = 0; k < wa.size(); ++k) {
        const std::uint64_t diff = wa[k] ^ wb[k];
        if (diff != 0) {
            const std::uint64_t lowest = diff & (~diff + 1);
            return (wa[k] & lowest) == 0;
        }
    }
    return false;
}

std::size_t hamming_distance(const BitVec& a, const BitVec& b) {
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t d = 0;
    for (std::size_t k = 0; k < wa.size(); ++k) d += static_cast<std::size_t>(std::popcount(wa[k] ^ wb[k]));
    return d;
}

}  // namespace partsat
