#include <set>

#include <gtest/gtest.h>

#include "osp/bits.hpp"

using namespace osp;

namespace {

// Brute-force span of a row set, as integers.
std::set<std::uint64_t> brute_span(const std::vector<Bits>& rows) {
    std::set<std::uint64_t> out;
    std::size_t k = rows.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (mask >> i & 1) v ^= to_uint(rows[i]);
        out.insert(v);
    }
    return out;
}

std::vector<Bits> random_rows(std::size_t k, std::size_t w, Rng& rng) {
    std::vector<Bits> r;
    for (std::size_t i = 0; i < k; ++i) r.push_back(random_bits(w, rng));
    return r;
}

} // namespace

TEST(Bits, StringRoundTrip) {
    EXPECT_EQ(to_string(from_string("01101")), "01101");
    EXPECT_EQ(to_uint(from_string("100")), 4u);
    EXPECT_EQ(from_uint(5, 4), from_string("0101"));
    EXPECT_THROW(from_string("012"), std::invalid_argument);
}

TEST(Bits, DotAndXor) {
    EXPECT_EQ(dot(from_string("1101"), from_string("1011")), 0);
    EXPECT_EQ(dot(from_string("1100"), from_string("1011")), 1);
    EXPECT_EQ(dot(0b1101u, 0b1011u), 0);
    EXPECT_EQ(from_string("110") ^ from_string("011"), from_string("101"));
    EXPECT_THROW(dot(Bits{1}, Bits{1, 0}), std::invalid_argument);
    EXPECT_EQ(concat({1}, from_string("01")), from_string("101"));
    EXPECT_TRUE(is_zero(zeros(3)));
    EXPECT_EQ(parity(from_string("1011")), 1);
}

TEST(Gf2, RankMatchesBruteSpan) {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        std::size_t w = 1 + rng.below(8), k = rng.below(8);
        auto rows = random_rows(k, w, rng);
        auto span = brute_span(rows);
        std::size_t r = gf2::rank(rows, w);
        EXPECT_EQ(span.size(), std::size_t{1} << r);
        EXPECT_EQ(brute_span(gf2::independent_basis(rows, w)), span);
    }
}

TEST(Gf2, NullspaceIsOrthogonalComplement) {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        std::size_t w = 1 + rng.below(8), k = rng.below(8);
        auto rows = random_rows(k, w, rng);
        auto ns = gf2::nullspace(rows, w);
        EXPECT_EQ(ns.size() + gf2::rank(rows, w), w);
        std::set<std::uint64_t> brute;
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << w); ++v) {
            bool ok = true;
            for (auto& r : rows) ok = ok && dot(from_uint(v, w), r) == 0;
            if (ok) brute.insert(v);
        }
        EXPECT_EQ(brute_span(ns), brute);
    }
}

TEST(Gf2, SolveAgainstEnumeration) {
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        std::size_t w = 1 + rng.below(7), k = 1 + rng.below(6);
        auto rows = random_rows(k, w, rng);
        Bits rhs = random_bits(k, rng);
        bool any = false;
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << w) && !any; ++v) {
            bool ok = true;
            for (std::size_t i = 0; i < k; ++i) ok = ok && dot(rows[i], from_uint(v, w)) == rhs[i];
            any = ok;
        }
        auto s = gf2::solve(rows, rhs, w);
        EXPECT_EQ(s.ok, any);
        if (s.ok)
            for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(dot(rows[i], s.x), rhs[i]);
        auto r = gf2::sample_solution(rows, rhs, w, rng);
        EXPECT_EQ(r.ok, any);
        if (r.ok)
            for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(dot(rows[i], r.x), rhs[i]);
    }
}

TEST(Gf2, SampleSolutionIsUniform) {
    Rng rng(4);
    std::vector<Bits> rows{from_string("1100")};
    std::map<std::uint64_t, int> hist;
    const int N = 40000;
    for (int i = 0; i < N; ++i) hist[to_uint(gf2::sample_solution(rows, Bits{1}, 4, rng).x)]++;
    EXPECT_EQ(hist.size(), 8u);
    for (auto& [k, v] : hist) EXPECT_NEAR(double(v) / N, 1.0 / 8, 0.01);
}

TEST(Gf2, InSpan) {
    std::vector<Bits> b{from_string("110"), from_string("011")};
    EXPECT_TRUE(gf2::in_span(b, from_string("101"), 3));
    EXPECT_TRUE(gf2::in_span(b, from_string("000"), 3));
    EXPECT_FALSE(gf2::in_span(b, from_string("100"), 3));
}
