#include <cmath>

#include <gtest/gtest.h>

#include "osp/gadgets.hpp"

using namespace osp;

namespace {

std::vector<Qubit> six_states() {
    const cplx i(0, 1);
    return {Qubit{1, 0},
            Qubit{0, 1},
            Qubit{kInvSqrt2, kInvSqrt2},
            Qubit{kInvSqrt2, -kInvSqrt2},
            Qubit{kInvSqrt2, i * kInvSqrt2},
            Qubit{kInvSqrt2, -i * kInvSqrt2}};
}

DenseState random_state(int n, Rng& rng) {
    std::vector<cplx> a(std::size_t{1} << n);
    for (auto& x : a) x = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    auto s = DenseState::from_amplitudes(a);
    s.normalize();
    return s;
}

// Expected: X^r Z^s CNOT^b applied to qubits (0, 1).
DenseState expected_cnot(DenseState in, int b, const EcnotKeys& k) {
    if (b) in.apply(Gate::CNOT, {0, 1});
    PauliFrame f;
    f.x_keys = k.r;
    f.z_keys = k.s;
    apply_pad(in, {0, 1}, f);
    return in;
}

} // namespace

TEST(Pad, ApplyThenRemoveIsIdentity) {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        auto s = random_state(3, rng);
        PauliFrame f(3);
        f.x_keys = random_bits(3, rng);
        f.z_keys = random_bits(3, rng);
        auto t = s;
        apply_pad(t, {0, 1, 2}, f);
        remove_pad(t, {0, 1, 2}, f);
        EXPECT_NEAR(fidelity(s, t), 1.0, 1e-12);
    }
}

TEST(EncryptedCnot, DecodeTable) {
    auto k = ecnot_decode_table(0, 1, 0, 1, 1);
    EXPECT_EQ(k.r, (Bits{0, 1}));
    EXPECT_EQ(k.s, (Bits{0, 0}));
    k = ecnot_decode_table(1, 1, 0, 0, 1);
    EXPECT_EQ(k.r, (Bits{0, 1}));
    EXPECT_EQ(k.s, (Bits{1, 0}));
}

TEST(EncryptedCnot, ProductFamily) {
    Rng rng(2);
    auto fam = six_states();
    for (int b = 0; b < 2; ++b)
        for (auto& a : fam)
            for (auto& c : fam) {
                auto in = DenseState::from_qubit(a).tensor(DenseState::from_qubit(c));
                auto st = in;
                auto k = encrypted_cnot(b, st, 0, 1, rng);
                ASSERT_FALSE(k.aborted);
                EXPECT_NEAR(fidelity(st, expected_cnot(in, b, k)), 1.0, 1e-9);
            }
}

TEST(EncryptedCnot, EntangledWithReference) {
    Rng rng(3);
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 50; ++i) {
            // qubits 0,1 carry the gate, qubit 2 is a reference
            auto in = random_state(3, rng);
            auto st = in;
            auto k = encrypted_cnot(b, st, 0, 1, rng);
            ASSERT_EQ(st.num_qubits(), 3);
            EXPECT_NEAR(fidelity(st, expected_cnot(in, b, k)), 1.0, 1e-9);
        }
}

TEST(EncryptedCnot, ReversedWires) {
    Rng rng(4);
    auto in = random_state(2, rng);
    auto st = in;
    auto k = encrypted_cnot(1, st, 1, 0, rng);
    auto want = in;
    want.apply(Gate::CNOT, {1, 0});
    PauliFrame f;
    f.x_keys = {k.r[1], k.r[0]};
    f.z_keys = {k.s[1], k.s[0]};
    apply_pad(want, {0, 1}, f);
    EXPECT_NEAR(fidelity(st, want), 1.0, 1e-9);
}

TEST(EncryptedCnot, MessagesRoundTripJson) {
    Rng rng(5);
    auto [cm, cs] = ecnot_gen(1, rng);
    auto cm2 = ecnot_client_msg_from_json(json::parse(to_json(cm).dump()));
    EXPECT_EQ(cm2.pp0.table, cm.pp0.table);
    DenseState st(2);
    auto sm = ecnot_apply(st, 0, 1, cm2, rng);
    auto sm2 = ecnot_server_msg_from_json(json::parse(to_json(sm).dump()));
    auto k1 = ecnot_dec(cs, sm), k2 = ecnot_dec(cs, sm2);
    EXPECT_EQ(k1.r, k2.r);
    EXPECT_EQ(k1.s, k2.s);
}

TEST(EncryptedPhase, IdentityOnSingleQubits) {
    Rng rng(6);
    auto src = ideal_osp_source();
    for (int b = 0; b < 2; ++b)
        for (auto& q : six_states()) {
            auto st = DenseState::from_qubit(q);
            auto r = encrypted_phase(b, st, 0, src, rng);
            auto want = DenseState::from_qubit(q);
            if (b) want.apply(Gate::P, {0});
            if (r.s_out) want.apply(Gate::Z, {0});
            EXPECT_NEAR(fidelity(st, want), 1.0, 1e-9);
        }
}

TEST(EncryptedPhase, EntangledAndRealOsp) {
    Rng rng(7);
    std::vector<OspSource> srcs{ideal_osp_source(), two_round_osp_source(3), multi_round_osp_source(3, 4)};
    for (auto& src : srcs)
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 30; ++i) {
                auto in = random_state(3, rng);
                auto st = in;
                auto r = encrypted_phase(b, st, 1, src, rng);
                ASSERT_FALSE(r.aborted);
                auto want = in;
                if (b) want.apply(Gate::P, {1});
                if (r.s_out) want.apply(Gate::Z, {1});
                EXPECT_NEAR(fidelity(st, want), 1.0, 1e-9);
            }
}

TEST(CsgFromEcnot, DifferentiatedClawState) {
    Rng rng(8);
    for (int n : {1, 2, 3, 4})
        for (int i = 0; i < 40; ++i) {
            auto res = csg_from_ecnot(n, rng);
            ASSERT_FALSE(res.outcome.aborted);
            EXPECT_EQ(res.outcome.x0 ^ res.outcome.x1, res.delta);
            EXPECT_NEAR(dbcsg_projection_norm(res.outcome.x0, res.outcome.x1, res.outcome.z, res.state), 1.0, 1e-9);
            EXPECT_NEAR(fidelity(densify(res.outcome.receiver_state), res.state), 1.0, 1e-9);
        }
}

TEST(CsgFromEcnot, FeedsOspFromCsg) {
    Rng rng(9);
    for (int cb = 0; cb < 2; ++cb)
        for (int i = 0; i < 40; ++i) {
            auto res = csg_from_ecnot(2, rng);
            auto o = osp_from_csg(res.outcome, cb, rng);
            EXPECT_NEAR(osp_projection_norm(cb, o.s, o.receiver_state), 1.0, 1e-9);
        }
}

TEST(CsgFromEcnot, Errors) {
    Rng rng(10);
    EXPECT_THROW(csg_from_ecnot(0, rng), std::invalid_argument);
    EXPECT_THROW(csg_from_ecnot(18, rng), std::length_error);
}
