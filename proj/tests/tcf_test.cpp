#include <map>
#include <set>

#include <gtest/gtest.h>

#include "osp/tcf.hpp"

using namespace osp;

namespace {

// Preimage multiset of each image, from the public table only.
std::map<std::uint32_t, std::vector<std::pair<int, std::uint32_t>>> scan(const TcfPublic& pp) {
    std::map<std::uint32_t, std::vector<std::pair<int, std::uint32_t>>> m;
    int branches = pp.dual() ? 2 : 1;
    for (int b = 0; b < branches; ++b)
        for (std::uint32_t x = 0; x < (1u << pp.n); ++x) m[pp.table[(std::size_t(b) << pp.n) | x]].push_back({b, x});
    return m;
}

} // namespace

TEST(Tcf, PlainIsTwoToOne) {
    for (int n = 1; n <= 10; ++n) {
        auto t = tcf_gen(TcfFamily::Plain, 1, n, 0, 1.0, 100 + n);
        auto m = scan(t.pp);
        EXPECT_EQ(m.size(), std::size_t{1} << (n - 1));
        for (auto& [y, pre] : m) {
            ASSERT_EQ(pre.size(), 2u);
            auto c = claw_invert(t, y);
            ASSERT_TRUE(c.has_value());
            std::set<std::uint32_t> want{pre[0].second, pre[1].second}, got{c->x0, c->x1};
            EXPECT_EQ(want, got);
            EXPECT_LT(c->x0, c->x1);
        }
    }
}

TEST(Tcf, DisjointIsInjective) {
    auto t = tcf_gen(TcfFamily::Dual, 0, 6, 0, 1.0, 7);
    auto m = scan(t.pp);
    EXPECT_EQ(m.size(), std::size_t{2} << 6);
    for (auto& [y, pre] : m) {
        ASSERT_EQ(pre.size(), 1u);
        EXPECT_FALSE(claw_invert(t, y).has_value());
        EXPECT_EQ(partial_invert(t, y), std::vector<int>{pre[0].first});
        EXPECT_EQ(*invert(t, pre[0].first, y), pre[0].second);
        EXPECT_FALSE(phase_invert(t, y, 3).has_value());
    }
}

TEST(Tcf, LossyClawFraction) {
    // delta * 2^k prefixes collide, the rest stay injective
    for (auto [k, delta] : std::vector<std::pair<int, double>>{{0, 1.0}, {1, 0.5}, {2, 0.25}, {2, 0.75}, {3, 0.375}}) {
        int n = 6;
        auto t = tcf_gen(TcfFamily::Dual, 1, n, k, delta, 99);
        auto m = scan(t.pp);
        int clawed_inputs = 0;
        for (auto& [y, pre] : m) {
            if (pre.size() == 2) {
                EXPECT_NE(pre[0].first, pre[1].first);
                auto c = claw_invert(t, y);
                ASSERT_TRUE(c.has_value());
                EXPECT_EQ(tcf_eval(t, 0, c->x0), y);
                EXPECT_EQ(tcf_eval(t, 1, c->x1), y);
                EXPECT_EQ(partial_invert(t, y), (std::vector<int>{0, 1}));
                clawed_inputs += 1;
            } else {
                ASSERT_EQ(pre.size(), 1u);
                EXPECT_FALSE(claw_invert(t, y).has_value());
            }
        }
        EXPECT_DOUBLE_EQ(double(clawed_inputs) / (1 << n), delta) << "k=" << k;
    }
}

TEST(Tcf, PhaseInvertIsShiftParity) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 4, 0, 1.0, 5);
    auto m = scan(t.pp);
    for (auto& [y, pre] : m) {
        std::uint32_t diff = pre[0].second ^ pre[1].second;
        for (std::uint32_t d = 0; d < 16; ++d) EXPECT_EQ(*phase_invert(t, y, d), dot(d, diff));
    }
}

TEST(Tcf, DecodeVariant) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 3, 0, 1.0, 8);
    std::uint32_t y = tcf_eval(t, 0, 2u);
    EXPECT_TRUE(std::holds_alternative<Claw>(decode(t, ClawInvertQuery{y})));
    EXPECT_TRUE(std::holds_alternative<std::vector<int>>(decode(t, PartialInvertQuery{y})));
    EXPECT_TRUE(std::holds_alternative<int>(decode(t, PhaseInvertQuery{y, 5})));
    EXPECT_THROW(decode(t, PhaseInvertQuery{y, 8}), std::invalid_argument);
    auto d = tcf_gen(TcfFamily::Dual, 0, 3, 0, 1.0, 8);
    EXPECT_TRUE(std::holds_alternative<Bottom>(decode(d, ClawInvertQuery{tcf_eval(d, 0, 2u)})));
}

TEST(Tcf, ParameterValidation) {
    EXPECT_THROW(tcf_gen(TcfFamily::Dual, 1, 19, 0, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(tcf_gen(TcfFamily::Dual, 1, 4, 4, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(tcf_gen(TcfFamily::Dual, 1, 4, 1, 0.3, 1), std::invalid_argument);
    EXPECT_THROW(tcf_gen(TcfFamily::Plain, 1, 0, 0, 1.0, 1), std::invalid_argument);
    EXPECT_NO_THROW(tcf_gen(TcfFamily::Dual, 1, 18, 0, 1.0, 1));
}

TEST(Tcf, SeedDeterminism) {
    auto a = tcf_gen(TcfFamily::Dual, 1, 5, 1, 0.5, 42), b = tcf_gen(TcfFamily::Dual, 1, 5, 1, 0.5, 42);
    EXPECT_EQ(a.pp.table, b.pp.table);
    EXPECT_EQ(a.sp.shift, b.sp.shift);
    auto c = tcf_gen(TcfFamily::Dual, 1, 5, 1, 0.5, 43);
    EXPECT_NE(a.pp.table, c.pp.table);
}

TEST(Tcf, CollapseOnImage) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 3, 1, 0.5, 3);
    for (auto& [y, pre] : scan(t.pp)) {
        auto st = collapse_on_image(t, y);
        EXPECT_EQ(st.width, 4u);
        EXPECT_EQ(st.u[0], pre.front().first);
        EXPECT_EQ(to_uint(Bits(st.u.begin() + 1, st.u.end())), pre.front().second);
        EXPECT_EQ(to_uint(Bits(st.v.begin() + 1, st.v.end())), pre.back().second);
    }
    EXPECT_THROW(collapse_on_image(t, 1u << 20), std::out_of_range);
}

TEST(Tcf, ClawOracleAgreesWithScan) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 5, 2, 0.5, 12);
    auto a = claw_oracle(t);
    auto b = scan(t.pp);
    ASSERT_EQ(a.size(), b.size());
    for (auto& [y, pre] : b) EXPECT_EQ(a.at(y), pre);
}

TEST(Tcf, JsonRoundTrip) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 4, 1, 0.5, 77);
    auto j = to_json(t.pp);
    auto p = tcf_public_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(p.table, t.pp.table);
    EXPECT_EQ(p.mode, TcfMode::Lossy);
    EXPECT_EQ(p.perm_seed, t.pp.perm_seed);
    j["table"].push_back(0);
    EXPECT_THROW(tcf_public_from_json(j), std::invalid_argument);
    auto s = to_json(t.sp, 4, 1);
    EXPECT_EQ(s["prefix_set"].size(), 1u);
}

TEST(Tcf, UniformDescriptor) {
    auto t = tcf_gen(TcfFamily::Dual, 1, 3, 0, 1.0, 1);
    auto d = densify(superposition_descriptor(t.pp, true));
    EXPECT_EQ(d.num_qubits(), 4);
    EXPECT_NEAR(std::abs(d.amp(5)), 0.25, 1e-12);
}
