#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"

namespace osp {

// Bit-string, index 0 is the leftmost (most significant) symbol.
using Bits = std::vector<std::uint8_t>;

inline Bits zeros(std::size_t n) { return Bits(n, 0); }

inline Bits from_string(std::string_view s) {
    Bits b;
    b.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw std::invalid_argument("bit-string must contain only 0/1");
        b.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return b;
}

inline std::string to_string(const Bits& b) {
    std::string s;
    s.reserve(b.size());
    for (auto v : b) s.push_back(v ? '1' : '0');
    return s;
}

inline Bits from_uint(std::uint64_t v, std::size_t width) {
    Bits b(width);
    for (std::size_t i = 0; i < width; ++i) b[i] = (v >> (width - 1 - i)) & 1;
    return b;
}

inline std::uint64_t to_uint(const Bits& b) {
    if (b.size() > 64) throw std::out_of_range("bit-string wider than 64");
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 1) | x;
    return v;
}

inline int dot(const Bits& a, const Bits& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: width mismatch");
    int p = 0;
    for (std::size_t i = 0; i < a.size(); ++i) p ^= a[i] & b[i];
    return p;
}

inline int dot(std::uint64_t a, std::uint64_t b) { return __builtin_parityll(a & b); }

inline Bits operator^(const Bits& a, const Bits& b) {
    if (a.size() != b.size()) throw std::invalid_argument("xor: width mismatch");
    Bits c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] ^ b[i];
    return c;
}

inline Bits& operator^=(Bits& a, const Bits& b) {
    if (a.size() != b.size()) throw std::invalid_argument("xor: width mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
    return a;
}

inline Bits concat(const Bits& a, const Bits& b) {
    Bits c = a;
    c.insert(c.end(), b.begin(), b.end());
    return c;
}

inline bool is_zero(const Bits& a) {
    for (auto v : a)
        if (v) return false;
    return true;
}

inline int parity(const Bits& a) {
    int p = 0;
    for (auto v : a) p ^= v;
    return p;
}

inline Bits random_bits(std::size_t n, Rng& rng) {
    Bits b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng.bit());
    return b;
}

namespace gf2 {

// Row-reduce in place; returns pivot columns.
inline std::vector<std::size_t> rref(std::vector<Bits>& rows, std::size_t width) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < width && r < rows.size(); ++c) {
        std::size_t p = r;
        while (p < rows.size() && !rows[p][c]) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[r], rows[p]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != r && rows[i][c]) rows[i] ^= rows[r];
        pivots.push_back(c);
        ++r;
    }
    rows.resize(r);
    return pivots;
}

inline std::size_t rank(std::vector<Bits> rows, std::size_t width) { return rref(rows, width).size(); }

// Independent subset spanning the same space (reduced form).
inline std::vector<Bits> independent_basis(std::vector<Bits> rows, std::size_t width) {
    for (auto& r : rows)
        if (r.size() != width) throw std::invalid_argument("gf2: row width mismatch");
    rref(rows, width);
    return rows;
}

// Basis of {d : d.a = 0 for all rows a}.
inline std::vector<Bits> nullspace(std::vector<Bits> rows, std::size_t width) {
    auto pivots = rref(rows, width);
    std::vector<char> is_pivot(width, 0);
    for (auto p : pivots) is_pivot[p] = 1;
    std::vector<Bits> out;
    for (std::size_t f = 0; f < width; ++f) {
        if (is_pivot[f]) continue;
        Bits v(width, 0);
        v[f] = 1;
        for (std::size_t i = 0; i < pivots.size(); ++i)
            if (rows[i][f]) v[pivots[i]] = 1;
        out.push_back(std::move(v));
    }
    return out;
}

// One solution of rows * x = rhs, or empty optional-like result (ok=false).
struct Solution {
    bool ok = false;
    Bits x;
};

inline Solution solve(std::vector<Bits> rows, Bits rhs, std::size_t width) {
    if (rows.size() != rhs.size()) throw std::invalid_argument("gf2::solve: rhs size mismatch");
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].push_back(rhs[i]);
    auto pivots = rref(rows, width + 1);
    Solution s;
    if (!pivots.empty() && pivots.back() == width) return s;
    s.ok = true;
    s.x.assign(width, 0);
    for (std::size_t i = 0; i < pivots.size(); ++i) s.x[pivots[i]] = rows[i][width];
    return s;
}

inline Bits random_combination(const std::vector<Bits>& basis, std::size_t width, Rng& rng) {
    Bits v(width, 0);
    for (const auto& b : basis)
        if (rng.bit()) v ^= b;
    return v;
}

// Uniform sample from the solution set of rows * x = rhs.
inline Solution sample_solution(const std::vector<Bits>& rows, const Bits& rhs, std::size_t width, Rng& rng) {
    auto s = solve(rows, rhs, width);
    if (!s.ok) return s;
    s.x ^= random_combination(nullspace(rows, width), width, rng);
    return s;
}

inline bool in_span(const std::vector<Bits>& basis, const Bits& v, std::size_t width) {
    auto rows = basis;
    std::size_t r0 = rank(rows, width);
    rows.push_back(v);
    return rank(rows, width) == r0;
}

} // namespace gf2
} // namespace osp
