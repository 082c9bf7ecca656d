#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bits.hpp"
#include "qsim.hpp"
#include "rng.hpp"
#include "tcf.hpp"
#include "transcript.hpp"

namespace osp {

// Classical sender is the client, quantum receiver the server.
constexpr Role kSender = Role::Client;
constexpr Role kReceiver = Role::Server;

struct CsgOutcome {
    Bits x0;
    Bits x1;
    int z = 0;
    TwoBranchState receiver_state;
    bool aborted = false;
    bool differentiated = false;
    int iterations = 0;
};

struct OspOutcome {
    int b = 0;
    int s = 0;
    Qubit receiver_state;
    bool aborted = false;
};

inline int ceil_div_delta(int lambda, double delta) { return static_cast<int>(std::ceil(lambda / delta - 1e-9)); }

// All (branch, x) with F(branch, x) = y, by scanning the public table.
inline std::vector<std::pair<int, std::uint32_t>> preimages(const TcfPublic& pp, std::uint32_t y) {
    std::vector<std::pair<int, std::uint32_t>> out;
    std::size_t half = std::size_t{1} << pp.n;
    for (std::size_t i = 0; i < pp.table.size(); ++i)
        if (pp.table[i] == y) out.push_back({static_cast<int>(i / half), static_cast<std::uint32_t>(i % half)});
    return out;
}

// Claw-state generation from a TCF (plain family, or dual family in lossy mode).
inline CsgOutcome csg_from_tcf(const Tcf& t, int lambda, Rng& rng, Transcript* tr = nullptr) {
    if (t.pp.mode == TcfMode::Disjoint) throw std::invalid_argument("csg_from_tcf: disjoint mode has no claws");
    const bool dual = t.pp.dual();
    const std::size_t w = static_cast<std::size_t>(t.pp.n) + (dual ? 1 : 0);
    auto enc = [&](int b, std::uint32_t x) {
        Bits xb = from_uint(x, static_cast<std::size_t>(t.pp.n));
        return dual ? concat({static_cast<std::uint8_t>(b)}, xb) : xb;
    };
    int limit = ceil_div_delta(lambda, t.sp.delta_param);
    record(tr, kSender, "csg.pp", {{"pp", to_json(t.pp)}});
    CsgOutcome out;
    for (int it = 0; it < limit; ++it) {
        out.iterations = it + 1;
        // the y-marginal of measuring F over a uniform superposition
        int b = dual ? rng.bit() : 0;
        auto x = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << t.pp.n));
        std::uint32_t y = tcf_eval(t.pp, b, x);
        record(tr, kReceiver, "csg.y", {{"y", y}});
        auto claw = claw_invert(t, y);
        record(tr, kSender, "csg.verdict", {{"claw", claw.has_value()}});
        if (claw) {
            out.x0 = enc(0, claw->x0);
            out.x1 = enc(dual ? 1 : 0, claw->x1);
            out.z = 0;
            out.receiver_state = {w, out.x0, out.x1, 0};
            return out;
        }
    }
    out.aborted = true;
    out.x0 = random_bits(w, rng);
    out.x1 = random_bits(w, rng);
    out.z = 0;
    return out;
}

// Turns a claw state over (x0, x1) into (|0,x0> + (-1)^z |1,x1>)/sqrt2.
inline CsgOutcome differentiate(const CsgOutcome& in, Rng& rng, Transcript* tr = nullptr) {
    if (in.aborted) return in;
    if (in.x0 == in.x1) throw std::invalid_argument("differentiate: x0 == x1 admits no separating y");
    std::size_t w = in.x0.size();
    auto sol = gf2::sample_solution({in.x0, in.x1}, Bits{0, 1}, w, rng);
    if (!sol.ok) throw std::invalid_argument("differentiate: no separating y");
    record(tr, kSender, "csg.differentiate", {{"y", bits_json(sol.x)}});
    CsgOutcome out = in;
    out.differentiated = true;
    out.receiver_state = {w + 1, concat({0}, in.x0), concat({1}, in.x1), in.z ? 4 : 0};
    return out;
}

struct OspFromCsgDetail {
    Bits r0;
    Bits r1;
    Bits d;
    int random_b = 0;
};

// Random-input OSP from a differentiated claw state; with chosen_b the sender
// also sends c = chosen_b ^ b and the receiver applies H^c.
inline OspOutcome osp_from_csg(const CsgOutcome& csg, std::optional<int> chosen_b, Rng& rng, Transcript* tr = nullptr,
                               OspFromCsgDetail* detail = nullptr) {
    OspOutcome out;
    if (csg.aborted) {
        out.aborted = true;
        if (chosen_b) out.b = *chosen_b;
        return out;
    }
    if (!csg.differentiated) throw std::invalid_argument("osp_from_csg: needs a differentiated claw state");
    const Bits& x0 = csg.x0;
    const Bits& x1 = csg.x1;
    std::size_t w = x0.size();
    Bits r0 = random_bits(w, rng), r1 = random_bits(w, rng);
    record(tr, kSender, "osp.r", {{"r0", bits_json(r0)}, {"r1", bits_json(r1)}});
    TwoBranchState st{w + 2, concat(concat({0}, x0), {static_cast<std::uint8_t>(dot(r0, x0))}),
                      concat(concat({1}, x1), {static_cast<std::uint8_t>(dot(r1, x1))}), csg.z ? 4 : 0};
    auto col = collapse_two_branch(st, w + 1, rng);
    record(tr, kReceiver, "osp.d", {{"d", bits_json(col.d)}});
    int b = dot(r0, x0) ^ dot(r1, x1);
    int s = b ? csg.z ^ dot(col.d, concat({1}, x0 ^ x1)) : dot(x0, r0);
    out.b = b;
    out.s = s;
    out.receiver_state = col.residual;
    if (detail) *detail = {r0, r1, col.d, b};
    if (chosen_b) {
        int c = *chosen_b ^ b;
        record(tr, kSender, "osp.c", {{"c", c}});
        if (c) out.receiver_state = osp::apply(gate_matrix(Gate::H), out.receiver_state);
        out.b = *chosen_b;
    }
    return out;
}

// ---- two-round OSP from a dual-mode TCF with phase computation (delta = 1)

struct TwoRoundSenderState {
    int b = 0;
    Tcf tcf;
};

struct TwoRoundReceiverMsg {
    std::uint32_t y = 0;
    std::uint32_t d = 0;
};

inline TwoRoundSenderState two_round_sen(int b, int n, Rng& rng) {
    return {b, tcf_gen(TcfFamily::Dual, b, n, 0, 1.0, rng())};
}

inline json to_json(const TwoRoundReceiverMsg& m) { return {{"y", m.y}, {"d", m.d}}; }

inline TwoRoundReceiverMsg two_round_msg_from_json(const json& j) {
    return {j.at("y").get<std::uint32_t>(), j.at("d").get<std::uint32_t>()};
}

// Receiver: |+>_B |psi_pp>_X, compute F, measure y, Hadamard-measure X.
inline Qubit two_round_rec(const TcfPublic& pp, Rng& rng, TwoRoundReceiverMsg& msg) {
    int b0 = rng.bit();
    auto x = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << pp.n));
    msg.y = tcf_eval(pp, b0, x);
    auto pre = preimages(pp, msg.y);
    std::size_t w = static_cast<std::size_t>(pp.n) + 1;
    auto enc = [&](const std::pair<int, std::uint32_t>& p) {
        return concat({static_cast<std::uint8_t>(p.first)}, from_uint(p.second, static_cast<std::size_t>(pp.n)));
    };
    TwoBranchState st{w, enc(pre.front()), enc(pre.back()), 0};
    auto col = collapse_two_branch(st, 0, rng);
    msg.d = static_cast<std::uint32_t>(to_uint(col.d));
    return col.residual;
}

inline std::optional<int> two_round_dec(const TwoRoundSenderState& st, const TwoRoundReceiverMsg& msg) {
    if (st.b == 0) {
        auto set = partial_invert(st.tcf, msg.y);
        if (set.size() != 1) return std::nullopt;
        return set.front();
    }
    return phase_invert(st.tcf, msg.y, msg.d);
}

inline OspOutcome two_round_osp(int b, int n, Rng& rng, Transcript* tr = nullptr) {
    auto st = two_round_sen(b, n, rng);
    record(tr, kSender, "osp2.pp", {{"pp", to_json(st.tcf.pp)}});
    TwoRoundReceiverMsg msg;
    OspOutcome out;
    out.b = b;
    out.receiver_state = two_round_rec(st.tcf.pp, rng, msg);
    record(tr, kReceiver, "osp2.yd", to_json(msg));
    auto s = two_round_dec(st, msg);
    out.aborted = !s.has_value();
    out.s = s.value_or(0);
    return out;
}

// ---- amplified two-round OSP from a plain dTCF with lossy fraction delta

struct AmplifiedReceiverView {
    int ell = 0;
    int n = 0;
    std::vector<int> clawed; // indices (0-based) whose y has two preimages
    bool classical = false;  // no claw: state is a basis state
    int c = 0;               // value of the leading qubit when classical
    AffineBranchState state; // over (x_1..x_ell, r_1..r_{ell-1})
    Bits classical_rest;
};

struct AmplifiedMsg {
    std::vector<std::uint32_t> y;
    std::vector<std::uint32_t> d;
    Bits e;
};

// Post-measurement receiver state implied by the claw set of (y_1..y_ell).
inline AmplifiedReceiverView amplified_view(const std::vector<TcfPublic>& pps, const std::vector<std::uint32_t>& ys) {
    AmplifiedReceiverView v;
    v.ell = static_cast<int>(pps.size());
    v.n = pps.front().n;
    const int ell = v.ell, n = v.n;
    const std::size_t W = static_cast<std::size_t>(n * ell + ell - 1);
    Bits base(W, 0);
    int cbase = 0;
    std::vector<Bits> flips;
    for (int i = 0; i < ell; ++i) {
        auto pre = preimages(pps[i], ys[i]);
        if (pre.empty()) throw std::invalid_argument("amplified_view: y has no preimage");
        auto put_x = [&](Bits& dst, std::uint32_t x) {
            Bits xb = from_uint(x, static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) dst[static_cast<std::size_t>(i * n + j)] = xb[static_cast<std::size_t>(j)];
        };
        // base point uses the first preimage
        put_x(base, pre.front().second);
        int ri = pre.front().first;
        if (i < ell - 1) base[static_cast<std::size_t>(n * ell + i)] = static_cast<std::uint8_t>(ri);
        cbase ^= ri;
        if (pre.size() == 2) {
            v.clawed.push_back(i);
            Bits f(W, 0);
            put_x(f, pre[0].second ^ pre[1].second);
            if (i < ell - 1) f[static_cast<std::size_t>(n * ell + i)] = 1;
            flips.push_back(f);
        }
    }
    if (flips.empty()) {
        v.classical = true;
        v.c = cbase;
        v.classical_rest = base;
        return v;
    }
    v.state.width = W;
    for (std::size_t j = 1; j < flips.size(); ++j) v.state.subspace_basis.push_back(flips[0] ^ flips[j]);
    Bits other = base ^ flips[0];
    v.state.shift0 = cbase ? other : base;
    v.state.shift1 = cbase ? base : other;
    return v;
}

inline OspOutcome amplified_two_round_osp(int b, int n, int k, double delta, int lambda, Rng& rng,
                                          Transcript* tr = nullptr, AmplifiedMsg* msg_out = nullptr) {
    const int ell = ceil_div_delta(lambda, delta);
    std::vector<Tcf> tcfs;
    std::vector<TcfPublic> pps;
    json ppj = json::array();
    for (int i = 0; i < ell; ++i) {
        tcfs.push_back(tcf_gen(TcfFamily::Dual, b, n, k, delta, rng()));
        pps.push_back(tcfs.back().pp);
        if (tr) ppj.push_back(to_json(pps.back()));
    }
    record(tr, kSender, "osp2amp.pp", {{"pp", ppj}});

    // receiver: sample the hidden classical variables, then the y's
    int c = rng.bit();
    std::vector<std::uint32_t> xs(static_cast<std::size_t>(ell));
    std::vector<int> rs(static_cast<std::size_t>(ell));
    int acc = c;
    for (int i = 0; i < ell; ++i) {
        xs[i] = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << n));
        if (i < ell - 1) {
            rs[i] = rng.bit();
            acc ^= rs[i];
        } else {
            rs[i] = acc;
        }
    }
    AmplifiedMsg msg;
    for (int i = 0; i < ell; ++i) msg.y.push_back(tcf_eval(pps[i], rs[i], xs[i]));
    auto view = amplified_view(pps, msg.y);
    const std::size_t W = static_cast<std::size_t>(n * ell + ell - 1);
    OspOutcome out;
    out.b = b;
    Bits dfull;
    if (view.classical) {
        dfull = random_bits(W, rng);
        out.receiver_state = h_pow_state(0, view.c);
    } else {
        auto col = collapse_affine(view.state, rng);
        dfull = col.d;
        out.receiver_state = col.residual;
    }
    for (int i = 0; i < ell; ++i) {
        Bits di(dfull.begin() + i * n, dfull.begin() + (i + 1) * n);
        msg.d.push_back(static_cast<std::uint32_t>(to_uint(di)));
    }
    msg.e.assign(dfull.begin() + n * ell, dfull.end());
    if (tr) {
        record(tr, kReceiver, "osp2amp.msg", {{"y", msg.y}, {"d", msg.d}, {"e", bits_json(msg.e)}});
    }
    if (msg_out) *msg_out = msg;

    // sender decode
    if (b == 0) {
        int s = 0;
        for (int i = 0; i < ell; ++i) {
            auto i0 = invert(tcfs[i], 0, msg.y[i]);
            auto i1 = invert(tcfs[i], 1, msg.y[i]);
            if (i0.has_value() == i1.has_value()) {
                out.aborted = true;
                return out;
            }
            s ^= i1.has_value() ? 1 : 0;
        }
        out.s = s;
        return out;
    }
    for (int i = 0; i < ell; ++i) {
        auto i0 = invert(tcfs[i], 0, msg.y[i]);
        auto i1 = invert(tcfs[i], 1, msg.y[i]);
        if (i0 && i1) {
            int e = i < ell - 1 ? msg.e[static_cast<std::size_t>(i)] : 0;
            out.s = dot(msg.d[i], *i0 ^ *i1) ^ e;
            return out;
        }
    }
    out.aborted = true;
    return out;
}

// ---- generalized angle

struct XYState {
    double angle = 0;
    int s = 0;
    Qubit q;
};

struct CombineResult {
    bool success = false;
    XYState out;
};

// CNOT first -> second, measure second in Z; outcome 0 sums the angles.
inline CombineResult combine_angles(const XYState& a, const XYState& b, Rng& rng) {
    DenseState st = DenseState::from_qubit(a.q).tensor(DenseState::from_qubit(b.q));
    st.apply(Gate::CNOT, {0, 1});
    int m = st.measure_qubit(1, Basis::Z, rng);
    CombineResult r;
    r.success = (m == 0);
    r.out.q = st.project_out(1, m).as_qubit();
    r.out.angle = r.success ? a.angle + b.angle : a.angle - b.angle;
    r.out.s = a.s ^ b.s;
    return r;
}

struct EpsilonOspConfig {
    int c = 1;
    int d = 1;
    int lambda = 8;
    int n = 3; // TCF input size of the underlying OSP

    double epsilon() const { return static_cast<double>(c) / d; }
    int layers() const {
        int l = 0;
        while ((1 << l) < d) ++l;
        return l;
    }
};

inline void validate(const EpsilonOspConfig& cfg) {
    if (cfg.d <= 0 || cfg.c <= 0 || cfg.c > cfg.d) throw std::invalid_argument("epsilon must lie in (0,1]");
    if (cfg.c % 2 == 0) throw std::invalid_argument("epsilon = c/d needs odd c");
    if ((cfg.d & (cfg.d - 1)) != 0) throw std::invalid_argument("epsilon denominator must be a power of two");
    if (cfg.lambda < 1) throw std::invalid_argument("lambda must be positive");
}

// Test source: a two-round OSP fixes (b, s); the receiver then holds Z^s|+_{b eps pi/2}>.
inline XYState epsilon_osp_instance(const EpsilonOspConfig& cfg, int b, Rng& rng, bool* aborted) {
    auto o = two_round_osp(b, cfg.n, rng);
    if (o.aborted) *aborted = true;
    double ang = b * cfg.epsilon() * kPi / 2;
    return {ang, o.s, plus_theta(ang, o.s)};
}

struct EpsilonRunInfo {
    int layers = 0;
    std::vector<int> successes_per_layer;
    XYState final_xy;
};

inline OspOutcome epsilon_to_standard(const EpsilonOspConfig& cfg, int b, Rng& rng, Transcript* tr = nullptr,
                                      EpsilonRunInfo* info = nullptr) {
    validate(cfg);
    const int L = cfg.layers();
    std::size_t total = static_cast<std::size_t>(cfg.lambda);
    for (int i = 0; i < L; ++i) total *= 8;
    OspOutcome out;
    out.b = b;
    bool aborted = false;
    std::vector<XYState> cur;
    cur.reserve(total);
    for (std::size_t i = 0; i < total; ++i) cur.push_back(epsilon_osp_instance(cfg, b, rng, &aborted));
    record(tr, kSender, "eosp.instances", {{"count", total}});
    EpsilonRunInfo inf;
    inf.layers = L;
    std::size_t k = total / 8;
    for (int layer = 0; layer < L; ++layer) {
        std::vector<XYState> next;
        for (std::size_t i = 0; i + 1 < cur.size(); i += 2) {
            auto r = combine_angles(cur[i], cur[i + 1], rng);
            if (r.success) next.push_back(r.out);
        }
        inf.successes_per_layer.push_back(static_cast<int>(next.size()));
        record(tr, kReceiver, "eosp.layer", {{"layer", layer}, {"successes", next.size()}});
        if (next.size() < k) {
            out.aborted = true;
            if (info) *info = inf;
            return out;
        }
        next.resize(k);
        cur = std::move(next);
        k /= 8;
    }
    XYState fin = cur.front();
    inf.final_xy = fin;
    // angle b*c*pi/2: c = 3 mod 4 lands on Z|+_{pi/2}>
    int s = fin.s;
    if (b && (cfg.c % 4 == 3)) s ^= 1;
    // Z^s P^b |+> -> H^b |s>
    Qubit q = osp::apply(gate_matrix(Gate::H), osp::apply(adjoint(gate_matrix(Gate::SqrtX)), fin.q));
    out.s = s;
    out.receiver_state = q;
    out.aborted = aborted;
    if (info) *info = inf;
    return out;
}

// ---- sources

using OspSource = std::function<OspOutcome(std::optional<int> chosen_b, Rng& rng, Transcript* tr)>;

inline OspSource ideal_osp_source() {
    return [](std::optional<int> chosen_b, Rng& rng, Transcript* tr) {
        OspOutcome o;
        o.b = chosen_b ? *chosen_b : rng.bit();
        o.s = rng.bit();
        o.receiver_state = h_pow_state(o.b, o.s);
        record(tr, kSender, "osp.ideal", json::object());
        return o;
    };
}

inline OspSource multi_round_osp_source(int n, int lambda) {
    return [n, lambda](std::optional<int> chosen_b, Rng& rng, Transcript* tr) {
        Tcf t = tcf_gen(TcfFamily::Plain, 1, n, 0, 1.0, rng());
        auto csg = csg_from_tcf(t, lambda, rng, tr);
        if (csg.aborted) return osp_from_csg(csg, chosen_b, rng, tr);
        return osp_from_csg(differentiate(csg, rng, tr), chosen_b, rng, tr);
    };
}

inline OspSource two_round_osp_source(int n) {
    return [n](std::optional<int> chosen_b, Rng& rng, Transcript* tr) {
        int b = chosen_b ? *chosen_b : rng.bit();
        return two_round_osp(b, n, rng, tr);
    };
}

inline OspSource amplified_osp_source(int n, int k, double delta, int lambda) {
    return [=](std::optional<int> chosen_b, Rng& rng, Transcript* tr) {
        int b = chosen_b ? *chosen_b : rng.bit();
        return amplified_two_round_osp(b, n, k, delta, lambda, rng, tr);
    };
}

inline OspSource epsilon_pipeline_source(EpsilonOspConfig cfg) {
    validate(cfg);
    return [cfg](std::optional<int> chosen_b, Rng& rng, Transcript* tr) {
        int b = chosen_b ? *chosen_b : rng.bit();
        return epsilon_to_standard(cfg, b, rng, tr);
    };
}

} // namespace osp
