#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "osp/osp.hpp"

using namespace osp;

namespace {

double chi2_p_1dof(int ones, int n) {
    double e = n / 2.0;
    double x = (ones - e) * (ones - e) / e * 2;
    return std::erfc(std::sqrt(x / 2));
}

} // namespace

TEST(Csg, PlainTcfGivesClawState) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        auto t = tcf_gen(TcfFamily::Plain, 1, 4, 0, 1.0, rng());
        auto c = csg_from_tcf(t, 8, rng);
        ASSERT_FALSE(c.aborted);
        EXPECT_EQ(c.iterations, 1);
        EXPECT_EQ(tcf_eval(t, 0, c.x0), tcf_eval(t, 0, c.x1));
        EXPECT_NE(c.x0, c.x1);
        EXPECT_NEAR(claw_projection_norm(c.x0, c.x1, c.z, densify(c.receiver_state)), 1.0, 1e-12);
        auto d = differentiate(c, rng);
        EXPECT_NEAR(dbcsg_projection_norm(d.x0, d.x1, d.z, densify(d.receiver_state)), 1.0, 1e-12);
    }
}

TEST(Csg, LossyAbortRate) {
    Rng rng(2);
    const int lambda = 2, N = 20000;
    const double delta = 0.25;
    int aborts = 0;
    for (int i = 0; i < N; ++i) {
        auto t = tcf_gen(TcfFamily::Dual, 1, 4, 2, delta, rng());
        auto c = csg_from_tcf(t, lambda, rng);
        aborts += c.aborted;
        if (!c.aborted) {
            EXPECT_EQ(tcf_eval(t, c.x0[0], Bits(c.x0.begin() + 1, c.x0.end())),
                      tcf_eval(t, c.x1[0], Bits(c.x1.begin() + 1, c.x1.end())));
        }
    }
    double p = std::pow(1 - delta, lambda / delta);
    double sigma = std::sqrt(p * (1 - p) / N);
    EXPECT_NEAR(double(aborts) / N, p, 3 * sigma);
}

TEST(Csg, DisjointRejected) {
    Rng rng(3);
    auto t = tcf_gen(TcfFamily::Dual, 0, 3, 0, 1.0, 1);
    EXPECT_THROW(csg_from_tcf(t, 4, rng), std::invalid_argument);
}

// Dense oracle for the random-input OSP: build the state explicitly, Hadamard-measure
// everything but the tag bit, and check the sender's formula.
TEST(OspFromCsg, DenseOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t w = 2 + rng.below(4);
        Bits x0 = random_bits(w, rng), x1 = random_bits(w, rng);
        if (x0 == x1) continue;
        int z = rng.bit();
        Bits r0 = random_bits(w, rng), r1 = random_bits(w, rng);
        Bits u = concat(concat({0}, x0), {static_cast<std::uint8_t>(dot(r0, x0))});
        Bits v = concat(concat({1}, x1), {static_cast<std::uint8_t>(dot(r1, x1))});
        std::vector<cplx> amps(std::size_t{1} << (w + 2));
        amps[to_uint(u)] += kInvSqrt2;
        amps[to_uint(v)] += (z ? -1.0 : 1.0) * kInvSqrt2;
        auto st = DenseState::from_amplitudes(amps);
        Bits d;
        for (std::size_t q = 0; q <= w; ++q) d.push_back(static_cast<std::uint8_t>(st.measure_qubit(int(q), Basis::X, rng)));
        for (int q = int(w); q >= 0; --q) st = st.discard_measured(q, Basis::X, d[std::size_t(q)]);
        int b = dot(r0, x0) ^ dot(r1, x1);
        int s = b ? z ^ dot(d, concat({1}, x0 ^ x1)) : dot(x0, r0);
        EXPECT_NEAR(osp_projection_norm(b, s, st.as_qubit()), 1.0, 1e-9);
    }
}

TEST(OspFromCsg, ChosenInputAllPaths) {
    Rng rng(5);
    for (int cb = 0; cb < 2; ++cb)
        for (int i = 0; i < 300; ++i) {
            auto t = tcf_gen(TcfFamily::Plain, 1, 3, 0, 1.0, rng());
            auto c = differentiate(csg_from_tcf(t, 4, rng), rng);
            auto o = osp_from_csg(c, cb, rng);
            ASSERT_FALSE(o.aborted);
            EXPECT_EQ(o.b, cb);
            EXPECT_NEAR(osp_projection_norm(o.b, o.s, o.receiver_state), 1.0, 1e-9);
        }
}

TEST(OspFromCsg, RandomInputBitIsUniform) {
    Rng rng(6);
    int ones = 0;
    const int N = 4000;
    for (int i = 0; i < N; ++i) {
        auto t = tcf_gen(TcfFamily::Plain, 1, 3, 0, 1.0, rng());
        auto c = differentiate(csg_from_tcf(t, 4, rng), rng);
        ones += osp_from_csg(c, std::nullopt, rng).b;
    }
    EXPECT_GT(chi2_p_1dof(ones, N), 0.001);
}

TEST(OspFromCsg, RequiresDifferentiated) {
    Rng rng(7);
    auto t = tcf_gen(TcfFamily::Plain, 1, 3, 0, 1.0, 1);
    EXPECT_THROW(osp_from_csg(csg_from_tcf(t, 4, rng), 0, rng), std::invalid_argument);
}

TEST(TwoRound, Correctness) {
    Rng rng(8);
    for (int b = 0; b < 2; ++b)
        for (int n : {1, 2, 3, 5})
            for (int i = 0; i < 200; ++i) {
                auto o = two_round_osp(b, n, rng);
                ASSERT_FALSE(o.aborted);
                EXPECT_NEAR(osp_projection_norm(b, o.s, o.receiver_state), 1.0, 1e-9);
            }
}

TEST(TwoRound, MessageJson) {
    TwoRoundReceiverMsg m{17, 5};
    auto r = two_round_msg_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(r.y, 17u);
    EXPECT_EQ(r.d, 5u);
}

TEST(Amplified, CorrectnessAndAborts) {
    Rng rng(9);
    const double delta = 0.5;
    const int lambda = 2, N = 3000;
    for (int b = 0; b < 2; ++b) {
        int aborts = 0;
        for (int i = 0; i < N; ++i) {
            auto o = amplified_two_round_osp(b, 3, 1, delta, lambda, rng);
            aborts += o.aborted;
            if (!o.aborted) ASSERT_NEAR(osp_projection_norm(b, o.s, o.receiver_state), 1.0, 1e-9);
        }
        double p = b ? std::pow(1 - delta, lambda / delta) : 0.0;
        double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / N);
        EXPECT_NEAR(double(aborts) / N, p, 3 * sigma + 1e-12) << "b=" << b;
    }
}

// The implied affine support equals the brute-force preimage set of
// G(c, x, r) = (F_i(r_i, x_i))_i with r_ell = c ^ r_1 ^ ... ^ r_{ell-1}.
TEST(Amplified, AffineSupportMatchesBruteForce) {
    const int n = 2, ell = 2;
    Rng rng(10);
    for (int mode = 0; mode < 2; ++mode)
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<TcfPublic> pps;
            for (int i = 0; i < ell; ++i) pps.push_back(tcf_gen(TcfFamily::Dual, mode, n, 1, 0.5, rng()).pp);
            std::map<std::vector<std::uint32_t>, std::set<std::uint64_t>> pre;
            const int W = n * ell + ell - 1;
            for (std::uint64_t in = 0; in < (std::uint64_t{1} << (W + 1)); ++in) {
                Bits bits = from_uint(in, std::size_t(W + 1));
                int c = bits[0];
                std::vector<std::uint32_t> y;
                int acc = c;
                for (int i = 0; i < ell; ++i) {
                    std::uint32_t x = static_cast<std::uint32_t>(to_uint(Bits(bits.begin() + 1 + i * n, bits.begin() + 1 + (i + 1) * n)));
                    int r = i < ell - 1 ? bits[std::size_t(1 + n * ell + i)] : acc;
                    if (i < ell - 1) acc ^= r;
                    y.push_back(tcf_eval(pps[std::size_t(i)], r, x));
                }
                pre[y].insert(in);
            }
            for (auto& [y, set] : pre) {
                auto v = amplified_view(pps, y);
                std::set<std::uint64_t> got;
                if (v.classical) {
                    got.insert(to_uint(concat({static_cast<std::uint8_t>(v.c)}, v.classical_rest)));
                } else {
                    for (auto& e : span_elements(v.state.subspace_basis, v.state.width)) {
                        got.insert(to_uint(concat({0}, v.state.shift0 ^ e)));
                        got.insert(to_uint(concat({1}, v.state.shift1 ^ e)));
                    }
                }
                EXPECT_EQ(got, set);
            }
        }
}

TEST(Epsilon, CombineAnglesOracle) {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        double a = rng.uniform() * 2 * kPi, b = rng.uniform() * 2 * kPi;
        int s1 = rng.bit(), s2 = rng.bit();
        auto r = combine_angles({a, s1, plus_theta(a, s1)}, {b, s2, plus_theta(b, s2)}, rng);
        double want = r.success ? a + b : a - b;
        EXPECT_NEAR(fidelity(r.out.q, plus_theta(want, s1 ^ s2)), 1.0, 1e-9);
        EXPECT_EQ(r.out.s, s1 ^ s2);
    }
}

TEST(Epsilon, CombineSuccessRateIsHalf) {
    Rng rng(12);
    int ok = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) ok += combine_angles({0.3, 0, plus_theta(0.3, 0)}, {1.1, 1, plus_theta(1.1, 1)}, rng).success;
    EXPECT_NEAR(double(ok) / N, 0.5, 3 * std::sqrt(0.25 / N));
}

TEST(Epsilon, Validation) {
    EXPECT_THROW(validate(EpsilonOspConfig{2, 4, 8}), std::invalid_argument);
    EXPECT_THROW(validate(EpsilonOspConfig{1, 3, 8}), std::invalid_argument);
    EXPECT_THROW(validate(EpsilonOspConfig{3, 2, 8}), std::invalid_argument);
    EXPECT_NO_THROW(validate(EpsilonOspConfig{3, 4, 8}));
    EXPECT_EQ((EpsilonOspConfig{1, 8, 1}).layers(), 3);
}

TEST(Epsilon, PipelineHalf) {
    Rng rng(13);
    EpsilonOspConfig cfg{1, 2, 4};
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 100; ++i) {
            EpsilonRunInfo info;
            auto o = epsilon_to_standard(cfg, b, rng, nullptr, &info);
            if (!o.aborted) EXPECT_NEAR(osp_projection_norm(b, o.s, o.receiver_state), 1.0, 1e-9);
            EXPECT_EQ(info.layers, 1);
        }
}

TEST(Epsilon, PipelineQuarterAndThreeQuarter) {
    Rng rng(14);
    for (int c : {1, 3}) {
        EpsilonOspConfig cfg{c, 4, 2};
        int done = 0;
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 20; ++i) {
                auto o = epsilon_to_standard(cfg, b, rng);
                if (o.aborted) continue;
                ++done;
                EXPECT_NEAR(osp_projection_norm(b, o.s, o.receiver_state), 1.0, 1e-9) << "c=" << c;
            }
        EXPECT_GT(done, 0);
    }
}

TEST(Sources, AllSatisfyProjector) {
    Rng rng(15);
    std::vector<std::pair<std::string, OspSource>> srcs{
        {"ideal", ideal_osp_source()},
        {"multi", multi_round_osp_source(3, 4)},
        {"two", two_round_osp_source(3)},
        {"amp", amplified_osp_source(3, 1, 0.5, 4)},
        {"eps", epsilon_pipeline_source({1, 2, 2})},
    };
    for (auto& [name, src] : srcs)
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 40; ++i) {
                auto o = src(b, rng, nullptr);
                if (o.aborted) continue;
                EXPECT_EQ(o.b, b) << name;
                EXPECT_NEAR(osp_projection_norm(b, o.s, o.receiver_state), 1.0, 1e-9) << name;
            }
}

TEST(Sources, SenderBitUniformPerBasis) {
    Rng rng(16);
    auto src = two_round_osp_source(3);
    for (int b = 0; b < 2; ++b) {
        int ones = 0;
        const int N = 4000;
        for (int i = 0; i < N; ++i) ones += src(b, rng, nullptr).s;
        EXPECT_GT(chi2_p_1dof(ones, N), 0.001) << "b=" << b;
    }
}

TEST(Sources, TranscriptIsRecorded) {
    Rng rng(17);
    Transcript tr("osp", 17);
    two_round_osp_source(2)(1, rng, &tr);
    ASSERT_EQ(tr.messages().size(), 2u);
    EXPECT_EQ(tr.messages()[0].role, Role::Client);
    EXPECT_EQ(tr.messages()[1].role, Role::Server);
}
