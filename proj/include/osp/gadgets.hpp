#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "bits.hpp"
#include "osp.hpp"
#include "qsim.hpp"
#include "rng.hpp"
#include "transcript.hpp"

namespace osp {

// X keys (r) and Z keys (s), one bit per server qubit; the pad is X^r Z^s.
struct PauliFrame {
    Bits x_keys;
    Bits z_keys;

    PauliFrame() = default;
    explicit PauliFrame(std::size_t n) : x_keys(n, 0), z_keys(n, 0) {}

    std::size_t size() const { return x_keys.size(); }

    PauliFrame& operator^=(const PauliFrame& o) {
        x_keys ^= o.x_keys;
        z_keys ^= o.z_keys;
        return *this;
    }
};

// Applies X^r Z^s (Z first) qubit by qubit.
inline void apply_pad(DenseState& st, const std::vector<int>& qubits, const PauliFrame& f) {
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        if (f.z_keys[i]) st.apply(Gate::Z, {qubits[i]});
        if (f.x_keys[i]) st.apply(Gate::X, {qubits[i]});
    }
}

// Inverse of apply_pad up to global phase.
inline void remove_pad(DenseState& st, const std::vector<int>& qubits, const PauliFrame& f) {
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        if (f.x_keys[i]) st.apply(Gate::X, {qubits[i]});
        if (f.z_keys[i]) st.apply(Gate::Z, {qubits[i]});
    }
}

struct EncryptedPhaseResult {
    int s_out = 0; // client output is (0, s_out)
    int s = 0;
    int m = 0;
    bool aborted = false;
};

// Leaves Z^{s_out} P^b on qubit v of `state`.
inline EncryptedPhaseResult encrypted_phase(int b, DenseState& state, int v, const OspSource& osp, Rng& rng,
                                            Transcript* tr = nullptr) {
    EncryptedPhaseResult r;
    auto o = osp(b, rng, tr);
    if (o.aborted) {
        r.aborted = true;
        return r;
    }
    // receiver: H then sqrt(X) turns H^b|s> into Z^s P^b |+>
    Qubit mq = osp::apply(gate_matrix(Gate::SqrtX), osp::apply(gate_matrix(Gate::H), o.receiver_state));
    int mi = state.append(mq);
    state.apply(Gate::CNOT, {v, mi});
    r.m = state.measure_qubit(mi, Basis::Z, rng);
    state = state.project_out(mi, r.m);
    record(tr, kReceiver, "ephase.m", {{"m", r.m}});
    r.s = o.s;
    r.s_out = b ? (o.s ^ r.m) : o.s;
    return r;
}

struct EcnotClientState {
    int b = 0;
    TwoRoundSenderState osp0;
    TwoRoundSenderState osp1;
};

struct EcnotClientMsg {
    TcfPublic pp0;
    TcfPublic pp1;
};

struct EcnotServerMsg {
    TwoRoundReceiverMsg osp0;
    TwoRoundReceiverMsg osp1;
    int m0 = 0;
    int m1 = 0;
};

struct EcnotKeys {
    int t0 = 0;
    int t1 = 0;
    int m0 = 0;
    int m1 = 0;
    int b = 0;
    Bits r{0, 0};
    Bits s{0, 0};
    bool aborted = false;
};

inline json to_json(const EcnotClientMsg& m) { return {{"pp0", to_json(m.pp0)}, {"pp1", to_json(m.pp1)}}; }

inline EcnotClientMsg ecnot_client_msg_from_json(const json& j) {
    return {tcf_public_from_json(j.at("pp0")), tcf_public_from_json(j.at("pp1"))};
}

inline json to_json(const EcnotServerMsg& m) {
    return {{"osp0", to_json(m.osp0)}, {"osp1", to_json(m.osp1)}, {"m0", m.m0}, {"m1", m.m1}};
}

inline EcnotServerMsg ecnot_server_msg_from_json(const json& j) {
    return {two_round_msg_from_json(j.at("osp0")), two_round_msg_from_json(j.at("osp1")), j.at("m0").get<int>(),
            j.at("m1").get<int>()};
}

inline std::pair<EcnotClientMsg, EcnotClientState> ecnot_gen(int b, Rng& rng, int n = 3) {
    EcnotClientState st;
    st.b = b;
    st.osp0 = two_round_sen(b, n, rng);
    st.osp1 = two_round_sen(1 - b, n, rng);
    return {{st.osp0.tcf.pp, st.osp1.tcf.pp}, st};
}

// Server side on (v0, v1); O0 measured in X (m0), O1 in Z (m1).
inline EcnotServerMsg ecnot_apply(DenseState& state, int v0, int v1, const EcnotClientMsg& msg, Rng& rng) {
    EcnotServerMsg out;
    Qubit q0 = two_round_rec(msg.pp0, rng, out.osp0);
    Qubit q1 = two_round_rec(msg.pp1, rng, out.osp1);
    int o0 = state.append(q0);
    int o1 = state.append(q1);
    state.apply(Gate::CNOT, {v0, o1});
    state.apply(Gate::CNOT, {o0, o1});
    state.apply(Gate::CNOT, {o0, v1});
    out.m0 = state.measure_qubit(o0, Basis::X, rng);
    out.m1 = state.measure_qubit(o1, Basis::Z, rng);
    state = state.discard_measured(o1, Basis::Z, out.m1);
    state = state.discard_measured(o0, Basis::X, out.m0);
    return out;
}

inline EcnotKeys ecnot_decode_table(int b, int t0, int t1, int m0, int m1) {
    EcnotKeys k;
    k.b = b;
    k.t0 = t0;
    k.t1 = t1;
    k.m0 = m0;
    k.m1 = m1;
    if (b == 0) {
        k.r = {0, static_cast<std::uint8_t>(t0)};
        k.s = {static_cast<std::uint8_t>(t1), 0};
    } else {
        k.r = {0, static_cast<std::uint8_t>(m1 ^ t1)};
        k.s = {static_cast<std::uint8_t>(m0 ^ t0), 0};
    }
    return k;
}

inline EcnotKeys ecnot_dec(const EcnotClientState& st, const EcnotServerMsg& msg) {
    auto t0 = two_round_dec(st.osp0, msg.osp0);
    auto t1 = two_round_dec(st.osp1, msg.osp1);
    if (!t0 || !t1) {
        EcnotKeys k;
        k.b = st.b;
        k.aborted = true;
        return k;
    }
    return ecnot_decode_table(st.b, *t0, *t1, msg.m0, msg.m1);
}

// One full two-round run: output is X^r Z^s CNOT^b (input) on (v0, v1).
inline EcnotKeys encrypted_cnot(int b, DenseState& state, int v0, int v1, Rng& rng, Transcript* tr = nullptr) {
    auto [cm, cs] = ecnot_gen(b, rng);
    if (tr) tr->record(kSender, "ecnot.msg", to_json(cm));
    auto sm = ecnot_apply(state, v0, v1, cm, rng);
    if (tr) tr->record(kReceiver, "ecnot.reply", to_json(sm));
    return ecnot_dec(cs, sm);
}

// ---- differentiated-bit CSG from encrypted CNOT

struct EcnotCsgSender {
    Bits delta;
    std::vector<EcnotClientState> gadgets;
};

// With allow_zero_shift the shift is uniform; otherwise x0 = x1 is excluded by resampling.
inline std::pair<std::vector<EcnotClientMsg>, EcnotCsgSender> csg_ecnot_sen(int n, Rng& rng,
                                                                           bool allow_zero_shift = false) {
    if (n < 1) throw std::invalid_argument("csg_from_ecnot: n must be positive");
    EcnotCsgSender st;
    do {
        st.delta = random_bits(static_cast<std::size_t>(n), rng);
    } while (!allow_zero_shift && is_zero(st.delta));
    std::vector<EcnotClientMsg> msgs;
    for (int i = 0; i < n; ++i) {
        auto [m, s] = ecnot_gen(st.delta[static_cast<std::size_t>(i)], rng);
        msgs.push_back(m);
        st.gadgets.push_back(s);
    }
    return {msgs, st};
}

// Receiver: B = |+>, W_i = |0>, then CNOT^{delta_i} from B onto W_i.
inline std::vector<EcnotServerMsg> csg_ecnot_rec(const std::vector<EcnotClientMsg>& msgs, DenseState& state, Rng& rng) {
    int n = static_cast<int>(msgs.size());
    if (n + 3 > DenseState::kMaxQubits) throw std::length_error("csg_from_ecnot: n too large for dense simulation");
    state = DenseState(n + 1);
    state.apply(Gate::H, {0});
    std::vector<EcnotServerMsg> out;
    for (int i = 0; i < n; ++i) out.push_back(ecnot_apply(state, 0, i + 1, msgs[static_cast<std::size_t>(i)], rng));
    return out;
}

struct ClawDescription {
    Bits x0;
    Bits x1;
    int z = 0;
    bool aborted = false;
};

inline ClawDescription csg_ecnot_dec(const EcnotCsgSender& st, const std::vector<EcnotServerMsg>& msgs) {
    ClawDescription c;
    std::size_t n = st.delta.size();
    if (msgs.size() != n) throw std::invalid_argument("csg_from_ecnot: reply count mismatch");
    int r0 = 0, s0 = 0;
    Bits r(n), sw(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto k = ecnot_dec(st.gadgets[i], msgs[i]);
        if (k.aborted) {
            c.aborted = true;
            return c;
        }
        r0 ^= k.r[0];
        s0 ^= k.s[0];
        r[i] = k.r[1];
        sw[i] = k.s[1];
    }
    Bits zero(n, 0);
    c.x0 = r ^ (r0 ? st.delta : zero);
    c.x1 = r ^ (r0 ? zero : st.delta);
    c.z = s0 ^ dot(sw, st.delta);
    return c;
}

struct EcnotCsgResult {
    CsgOutcome outcome;
    DenseState state; // qubit 0 is the differentiating bit
    Bits delta;
};

inline EcnotCsgResult csg_from_ecnot(int n, Rng& rng, Transcript* tr = nullptr) {
    auto [cm, cs] = csg_ecnot_sen(n, rng);
    if (tr) {
        json arr = json::array();
        for (const auto& m : cm) arr.push_back(to_json(m));
        tr->record(kSender, "csg.ecnot.msg", {{"gadgets", arr}});
    }
    EcnotCsgResult res;
    auto sm = csg_ecnot_rec(cm, res.state, rng);
    if (tr) {
        json arr = json::array();
        for (const auto& m : sm) arr.push_back(to_json(m));
        tr->record(kReceiver, "csg.ecnot.reply", {{"gadgets", arr}});
    }
    auto claw = csg_ecnot_dec(cs, sm);
    res.delta = cs.delta;
    res.outcome.aborted = claw.aborted;
    res.outcome.x0 = claw.x0;
    res.outcome.x1 = claw.x1;
    res.outcome.z = claw.z;
    res.outcome.differentiated = true;
    if (!claw.aborted)
        res.outcome.receiver_state = {static_cast<std::size_t>(n) + 1, concat({0}, claw.x0), concat({1}, claw.x1),
                                      claw.z ? 4 : 0};
    return res;
}

} // namespace osp
