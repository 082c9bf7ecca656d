#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bits.hpp"
#include "gadgets.hpp"
#include "osp.hpp"
#include "qsim.hpp"
#include "rng.hpp"
#include "transcript.hpp"

namespace osp {

// ---- proof of quantumness

// Everything a demo prover might look at; the honest prover only uses `state`.
struct PoqView {
    int r = 0;
    int s = 0;
    Qubit state;
};

using PoqProver = std::function<int(const PoqView&, int a, Rng&)>;

inline int honest_poq_answer(const Qubit& state, int a, Rng& rng) {
    return measure(state, a ? Basis::XminusZ : Basis::XplusZ, rng);
}

inline PoqProver honest_poq_prover() {
    return [](const PoqView& v, int a, Rng& rng) { return honest_poq_answer(v.state, a, rng); };
}

// Classical prover: measures once in a fixed basis, then answers table[(m << 1) | a].
inline PoqProver basis_oblivious_prover(Basis basis, std::array<int, 4> table) {
    return [basis, table](const PoqView& v, int a, Rng& rng) {
        int m = measure(v.state, basis, rng);
        return table[static_cast<std::size_t>((m << 1) | a)];
    };
}

// Every basis-oblivious prover over the Z/X bases and all answer tables.
inline std::vector<std::pair<std::string, PoqProver>> basis_oblivious_family() {
    std::vector<std::pair<std::string, PoqProver>> out;
    for (Basis b : {Basis::Z, Basis::X})
        for (int t = 0; t < 16; ++t) {
            std::array<int, 4> table{t & 1, (t >> 1) & 1, (t >> 2) & 1, (t >> 3) & 1};
            out.push_back({std::string(b == Basis::Z ? "Z" : "X") + "/" + std::to_string(t), basis_oblivious_prover(b, table)});
        }
    return out;
}

struct PoqResult {
    int r = 0;
    int s = 0;
    int a = 0;
    int b = 0;
    bool accept = false;
    bool aborted = false;
};

inline bool poq_predicate(int r, int s, int a, int b) { return b == (s ^ (r & a)); }

inline PoqResult poq_run(const OspSource& osp, const PoqProver& prover, Rng& rng, Transcript* tr = nullptr) {
    PoqResult res;
    res.r = rng.bit();
    auto o = osp(res.r, rng, tr);
    if (o.aborted) {
        res.aborted = true;
        record(tr, kSender, "poq.verdict", {{"accept", false}});
        return res;
    }
    res.s = o.s;
    res.a = rng.bit();
    record(tr, kSender, "poq.a", {{"a", res.a}});
    res.b = prover(PoqView{res.r, res.s, o.receiver_state}, res.a, rng);
    record(tr, kReceiver, "poq.b", {{"b", res.b}});
    res.accept = poq_predicate(res.r, res.s, res.a, res.b);
    record(tr, kSender, "poq.verdict", {{"accept", res.accept}});
    return res;
}

struct RewindResult {
    int r = 0;
    int guess = 0;
    bool aborted = false;
};

// Runs the OSP once and queries both challenges against the same prover state.
inline RewindResult rewind_extract(const PoqProver& prover, const OspSource& osp, Rng& rng) {
    RewindResult res;
    res.r = rng.bit();
    auto o = osp(res.r, rng, nullptr);
    if (o.aborted) {
        res.aborted = true;
        return res;
    }
    PoqView v{res.r, o.s, o.receiver_state};
    Rng internal = rng.child("prover", rng());
    Rng c0 = internal, c1 = internal;
    res.guess = prover(v, 0, c0) ^ prover(v, 1, c1);
    return res;
}

// ---- classical Goldreich-Levin

using GlOracle = std::function<int(const Bits& r0, const Bits& r1, Rng&)>;

// Predicts x0.r0 ^ x1.r1, flipping each answer with probability `noise`.
inline GlOracle noisy_gl_oracle(Bits x0, Bits x1, double noise) {
    return [x0 = std::move(x0), x1 = std::move(x1), noise](const Bits& r0, const Bits& r1, Rng& rng) {
        return dot(x0, r0) ^ dot(x1, r1) ^ static_cast<int>(rng.bernoulli(noise));
    };
}

// Recovers each bit of (x0, x1) by majority over pairs of queries differing in one coordinate.
inline std::pair<Bits, Bits> gl_extract(const GlOracle& oracle, std::size_t n, int repetitions, Rng& rng) {
    Bits x(2 * n, 0);
    for (std::size_t j = 0; j < 2 * n; ++j) {
        int votes = 0;
        for (int k = 0; k < repetitions; ++k) {
            Bits r = random_bits(2 * n, rng);
            Bits rj = r;
            rj[j] ^= 1;
            auto split = [n](const Bits& v) { return std::make_pair(Bits(v.begin(), v.begin() + long(n)), Bits(v.begin() + long(n), v.end())); };
            auto [a0, a1] = split(r);
            auto [b0, b1] = split(rj);
            votes += oracle(a0, a1, rng) ^ oracle(b0, b1, rng);
        }
        x[j] = static_cast<std::uint8_t>(2 * votes > repetitions);
    }
    return {Bits(x.begin(), x.begin() + long(n)), Bits(x.begin() + long(n), x.end())};
}

// ---- 1-of-2 puzzle

struct PuzzleKeys {
    int r = 0;
    int lambda = 0;
    double threshold = 0.85;
    std::vector<TwoRoundSenderState> vk;
    std::vector<TcfPublic> pk;
};

struct PuzzleObligation {
    std::vector<TwoRoundReceiverMsg> y;
    std::vector<Qubit> states;
};

inline PuzzleKeys puzzle_keygen(int lambda, double threshold, int n, Rng& rng) {
    if (lambda < 1) throw std::invalid_argument("puzzle: lambda must be positive");
    PuzzleKeys k;
    k.r = rng.bit();
    k.lambda = lambda;
    k.threshold = threshold;
    k.vk.reserve(std::size_t(lambda));
    for (int i = 0; i < lambda; ++i) {
        k.vk.push_back(two_round_sen(k.r, n, rng));
        k.pk.push_back(k.vk.back().tcf.pp);
    }
    return k;
}

inline PuzzleObligation puzzle_obligate(const std::vector<TcfPublic>& pk, Rng& rng) {
    PuzzleObligation ob;
    ob.y.resize(pk.size());
    for (std::size_t i = 0; i < pk.size(); ++i) ob.states.push_back(two_round_rec(pk[i], rng, ob.y[i]));
    return ob;
}

inline Bits puzzle_solve(const std::vector<Qubit>& states, int challenge, Rng& rng) {
    Bits a;
    a.reserve(states.size());
    for (const auto& q : states) a.push_back(static_cast<std::uint8_t>(honest_poq_answer(q, challenge, rng)));
    return a;
}

// Fraction of indices where a matches s (challenge 0) or s ^ r (challenge 1).
inline double puzzle_match_fraction(const PuzzleKeys& k, const std::vector<TwoRoundReceiverMsg>& y, int challenge,
                                    const Bits& a) {
    if (a.size() != k.vk.size() || y.size() != k.vk.size()) throw std::invalid_argument("puzzle: answer length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto s = two_round_dec(k.vk[i], y[i]);
        if (s && a[i] == (*s ^ (k.r & challenge))) ++hit;
    }
    return double(hit) / double(a.size());
}

inline bool puzzle_verify(const PuzzleKeys& k, const std::vector<TwoRoundReceiverMsg>& y, int challenge, const Bits& a) {
    return puzzle_match_fraction(k, y, challenge, a) >= k.threshold;
}

struct PuzzleRun {
    int r = 0;
    double fraction[2] = {0, 0};
    bool verdict[2] = {false, false};
};

// One keygen and obligation; each challenge is solved against its own copy of the per-index states.
inline PuzzleRun puzzle_roundtrip(int lambda, double threshold, int n, Rng& rng) {
    auto k = puzzle_keygen(lambda, threshold, n, rng);
    auto ob = puzzle_obligate(k.pk, rng);
    PuzzleRun run;
    run.r = k.r;
    for (int c = 0; c < 2; ++c) {
        auto a = puzzle_solve(ob.states, c, rng);
        run.fraction[c] = puzzle_match_fraction(k, ob.y, c, a);
        run.verdict[c] = run.fraction[c] >= threshold;
    }
    return run;
}

// ---- commitments

struct CommitRun {
    int b = 0;
    Bits s;
    std::vector<Qubit> states;
    bool aborted = false;
    bool accept = false;
};

inline CommitRun commit_run(const OspSource& osp, int b, int lambda, Rng& rng, Transcript* tr = nullptr) {
    CommitRun c;
    c.b = b;
    for (int i = 0; i < lambda; ++i) {
        auto o = osp(b, rng, tr);
        if (o.aborted) {
            c.aborted = true;
            return c;
        }
        c.s.push_back(static_cast<std::uint8_t>(o.s));
        c.states.push_back(o.receiver_state);
    }
    record(tr, kSender, "commit.open", {{"b", b}, {"s", bits_json(c.s)}});
    c.accept = true;
    for (int i = 0; i < lambda; ++i)
        if (measure(c.states[std::size_t(i)], b ? Basis::X : Basis::Z, rng) != c.s[std::size_t(i)]) c.accept = false;
    record(tr, kReceiver, "commit.verdict", {{"accept", c.accept}});
    return c;
}

struct BindingProbe {
    double pr0 = 0;
    double pr1 = 0;
    double sum() const { return pr0 + pr1; }
};

// pr0 = max_s |<s|psi>|^2, pr1 = max_s |<s|H^n psi>|^2.
inline BindingProbe binding_probe(const DenseState& psi) {
    if (psi.num_qubits() > 16) throw std::length_error("binding_probe: at most 16 qubits");
    BindingProbe p;
    for (std::size_t i = 0; i < psi.dim(); ++i) p.pr0 = std::max(p.pr0, std::norm(psi.amp(i)));
    DenseState h = psi;
    for (int q = 0; q < h.num_qubits(); ++q) h.apply(Gate::H, {q});
    for (std::size_t i = 0; i < h.dim(); ++i) p.pr1 = std::max(p.pr1, std::norm(h.amp(i)));
    return p;
}

// ---- toy extractable commitment (seed-expansion, tiny seeds so extraction is exhaustive)

namespace toycommit {

constexpr int kSeedBits = 10;
constexpr int kOutBits = 32;

inline std::uint32_t prg(std::uint32_t seed) {
    return static_cast<std::uint32_t>(splitmix64(0x70797a7a6c65ULL ^ seed) & ((std::uint64_t{1} << kOutBits) - 1));
}

struct Commitment {
    std::uint32_t c = 0;
};

struct Opening {
    int m = 0;
    std::uint32_t w = 0;
};

inline std::pair<Commitment, Opening> commit(int m, std::uint32_t rho, Rng& rng) {
    auto w = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << kSeedBits));
    return {{prg(w) ^ (m ? rho : 0u)}, {m, w}};
}

inline bool verify(const Commitment& c, std::uint32_t rho, const Opening& o) {
    return o.w < (1u << kSeedBits) && c.c == (prg(o.w) ^ (o.m ? rho : 0u));
}

inline std::optional<int> extract(const Commitment& c, std::uint32_t rho) {
    for (std::uint32_t w = 0; w < (1u << kSeedBits); ++w) {
        if (prg(w) == c.c) return 0;
        if ((prg(w) ^ rho) == c.c) return 1;
    }
    return std::nullopt;
}

inline std::uint32_t sample_rho(Rng& rng) {
    return static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << kOutBits)) | 1u;
}

} // namespace toycommit

// ---- oblivious transfer

enum class OtVariant { Search, Indistinguishability };

inline std::string to_string(OtVariant v) { return v == OtVariant::Search ? "search" : "indistinguishability"; }

inline OtVariant ot_variant_from_string(const std::string& s) {
    if (s == "search") return OtVariant::Search;
    if (s == "indistinguishability" || s == "indist") return OtVariant::Indistinguishability;
    throw std::invalid_argument("unknown OT variant: " + s);
}

// Classical party: runs 2*lambda claw-state generators as sender, with choice bit b.
struct OtReceiver {
    OtVariant variant = OtVariant::Search;
    int lambda = 0;
    int b = 0;
    bool cheat_all_zero = false;
    std::vector<EcnotCsgSender> csg;
    std::vector<ClawDescription> claws;
    std::vector<std::array<toycommit::Opening, 3>> openings;
    std::vector<int> checked;
    Bits output;

    std::size_t total() const { return 2 * static_cast<std::size_t>(lambda); }

    json start(Rng& rng) {
        json gadgets = json::array();
        for (std::size_t i = 0; i < total(); ++i) {
            auto [msgs, st] = csg_ecnot_sen(1, rng, true);
            csg.push_back(st);
            gadgets.push_back(to_json(msgs.front()));
        }
        return {{"gadgets", gadgets}};
    }

    // Decodes the claws; in the indistinguishability variant also commits to them.
    json commit(const json& reply, Rng& rng) {
        const auto& rs = reply.at("replies");
        if (rs.size() != total()) throw std::invalid_argument("ot: reply count");
        claws.clear();
        for (std::size_t i = 0; i < total(); ++i) {
            auto c = csg_ecnot_dec(csg[i], {ecnot_server_msg_from_json(rs[i])});
            if (cheat_all_zero) c = {{0}, {static_cast<std::uint8_t>(rng.bit())}, rng.bit(), false};
            claws.push_back(c);
        }
        if (variant == OtVariant::Search) return json::object();
        const auto& rho = reply.at("rho");
        json cs = json::array();
        for (std::size_t i = 0; i < total(); ++i) {
            int bits[3] = {claws[i].x0[0], claws[i].x1[0], claws[i].z};
            std::array<toycommit::Opening, 3> op;
            json row = json::array();
            for (int k = 0; k < 3; ++k) {
                auto [cm, o] = toycommit::commit(bits[k], rho[i][std::size_t(k)].get<std::uint32_t>(), rng);
                op[std::size_t(k)] = o;
                row.push_back(cm.c);
            }
            openings.push_back(op);
            cs.push_back(row);
        }
        return {{"commitments", cs}};
    }

    json open(const json& check) {
        checked = check.at("T").get<std::vector<int>>();
        std::vector<std::uint8_t> in_t(total(), 0);
        for (int i : checked) in_t.at(std::size_t(i)) = 1;
        json opened = json::array(), flips = json::array();
        output.clear();
        int acc = 0;
        for (std::size_t i = 0; i < total(); ++i) {
            const auto& c = claws[i];
            if (in_t[i]) {
                json o = {{"i", i}, {"x0", c.x0[0]}, {"x1", c.x1[0]}, {"z", c.z}};
                if (variant == OtVariant::Indistinguishability) {
                    json w = json::array();
                    for (const auto& op : openings[i]) w.push_back(op.w);
                    o["w"] = w;
                }
                opened.push_back(o);
            } else {
                flips.push_back(b ^ c.x0[0] ^ c.x1[0]);
                if (variant == OtVariant::Search)
                    output.push_back(c.x0[0]);
                else
                    acc ^= c.x0[0];
            }
        }
        if (variant == OtVariant::Indistinguishability) output = {static_cast<std::uint8_t>(acc)};
        return {{"opened", opened}, {"b", flips}};
    }
};

// Quantum party: holds the claw states, checks a random half, derives (r0, r1) from the rest.
struct OtSender {
    OtVariant variant = OtVariant::Search;
    int lambda = 0;
    std::vector<DenseState> states;
    std::vector<std::array<std::uint32_t, 3>> rho;
    std::vector<std::array<std::uint32_t, 3>> commitments;
    std::vector<int> checked;
    Bits r0, r1;
    bool caught = false;
    bool law_ok = true; // per-index law against the opened claws, filled by ot_run
    std::vector<std::array<int, 2>> measured; // (c, y) per unchecked index

    std::size_t total() const { return 2 * static_cast<std::size_t>(lambda); }

    json reply(const json& start, Rng& rng) {
        const auto& gs = start.at("gadgets");
        if (gs.size() != total()) throw std::invalid_argument("ot: gadget count");
        json replies = json::array();
        states.clear();
        for (std::size_t i = 0; i < total(); ++i) {
            DenseState st;
            auto sm = csg_ecnot_rec({ecnot_client_msg_from_json(gs[i])}, st, rng);
            states.push_back(st);
            replies.push_back(to_json(sm.front()));
        }
        json out = {{"replies", replies}};
        if (variant == OtVariant::Indistinguishability) {
            json rj = json::array();
            for (std::size_t i = 0; i < total(); ++i) {
                std::array<std::uint32_t, 3> r{toycommit::sample_rho(rng), toycommit::sample_rho(rng), toycommit::sample_rho(rng)};
                rho.push_back(r);
                rj.push_back(r);
            }
            out["rho"] = rj;
        }
        return out;
    }

    json choose_check(const json& commit, Rng& rng) {
        if (variant == OtVariant::Indistinguishability)
            for (const auto& row : commit.at("commitments"))
                commitments.push_back({row[0].get<std::uint32_t>(), row[1].get<std::uint32_t>(), row[2].get<std::uint32_t>()});
        std::vector<int> idx(total());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
        checked.assign(idx.begin(), idx.begin() + lambda);
        std::sort(checked.begin(), checked.end());
        return {{"T", checked}};
    }

    json finish(const json& open, Rng& rng) {
        std::vector<std::uint8_t> in_t(total(), 0);
        for (int i : checked) in_t[std::size_t(i)] = 1;
        const auto& opened = open.at("opened");
        const auto& flips = open.at("b");
        if (opened.size() != checked.size() || flips.size() != total() - checked.size())
            throw std::invalid_argument("ot: opening shape");
        for (std::size_t k = 0; k < opened.size(); ++k) {
            const auto& o = opened[k];
            auto i = o.at("i").get<std::size_t>();
            if (i >= total() || !in_t[i]) {
                caught = true;
                break;
            }
            Bits x0{o.at("x0").get<std::uint8_t>()}, x1{o.at("x1").get<std::uint8_t>()};
            int z = o.at("z").get<int>();
            if (variant == OtVariant::Indistinguishability) {
                int bits[3] = {x0[0], x1[0], z};
                for (int j = 0; j < 3; ++j)
                    if (!toycommit::verify({commitments[i][std::size_t(j)]}, rho[i][std::size_t(j)],
                                           {bits[j], o.at("w")[std::size_t(j)].get<std::uint32_t>()}))
                        caught = true;
            }
            // rank-1 projection onto the declared claw state
            double p = std::pow(claw_projection_norm(concat({0}, x0), concat({1}, x1), z, states[i]), 2);
            if (!rng.bernoulli(std::min(1.0, p))) caught = true;
        }
        std::size_t width = variant == OtVariant::Search ? static_cast<std::size_t>(lambda) : 1;
        if (caught) {
            r0 = random_bits(width, rng);
            r1 = random_bits(width, rng);
            return {{"ok", false}};
        }
        r0.clear();
        r1.clear();
        int a0 = 0, a1 = 0;
        std::size_t f = 0;
        measured.clear();
        for (std::size_t i = 0; i < total(); ++i) {
            if (in_t[i]) continue;
            DenseState st = states[i];
            int c = st.measure_qubit(0, Basis::Z, rng);
            int y = st.measure_qubit(1, Basis::Z, rng);
            measured.push_back({c, y});
            int bi = flips[f++].get<int>();
            int v0 = y ^ (bi & c), v1 = y ^ ((1 ^ bi) & c);
            if (variant == OtVariant::Search) {
                r0.push_back(static_cast<std::uint8_t>(v0));
                r1.push_back(static_cast<std::uint8_t>(v1));
            } else {
                a0 ^= v0;
                a1 ^= v1;
            }
        }
        if (variant == OtVariant::Indistinguishability) {
            r0 = {static_cast<std::uint8_t>(a0)};
            r1 = {static_cast<std::uint8_t>(a1)};
        }
        return {{"ok", true}};
    }
};

struct OtResult {
    Bits r;
    Bits r0;
    Bits r1;
    bool caught = false;
    bool law_ok = true;
};

inline OtResult ot_run(OtVariant variant, int b, int lambda, Rng& rng, Transcript* tr = nullptr, bool cheat_all_zero = false) {
    if (lambda < 1) throw std::invalid_argument("ot: lambda must be positive");
    OtReceiver rec;
    rec.variant = variant;
    rec.lambda = lambda;
    rec.b = b;
    rec.cheat_all_zero = cheat_all_zero;
    OtSender sen;
    sen.variant = variant;
    sen.lambda = lambda;
    Rng rr = rng.child("ot.receiver"), rs = rng.child("ot.sender");
    rng();

    auto m1 = rec.start(rr);
    record(tr, Role::Client, "ot.csg", m1);
    auto m2 = sen.reply(m1, rs);
    record(tr, Role::Server, "ot.csg.reply", m2);
    if (cheat_all_zero)
        for (auto& st : sen.states) st = DenseState(2);
    auto m3 = rec.commit(m2, rr);
    if (variant == OtVariant::Indistinguishability) record(tr, Role::Client, "ot.commit", m3);
    auto m4 = sen.choose_check(m3, rs);
    record(tr, Role::Server, "ot.check", m4);
    auto m5 = rec.open(m4);
    record(tr, Role::Client, "ot.open", m5);
    auto m6 = sen.finish(m5, rs);
    record(tr, Role::Server, "ot.result", m6);

    OtResult res;
    res.caught = sen.caught;
    res.r = rec.output;
    res.r0 = sen.r0;
    res.r1 = sen.r1;
    if (!sen.caught) {
        // x0 = y ^ (b ^ b_i) c on every measured index
        std::size_t k = 0;
        std::vector<std::uint8_t> in_t(rec.total(), 0);
        for (int i : rec.checked) in_t[std::size_t(i)] = 1;
        for (std::size_t i = 0; i < rec.total(); ++i) {
            if (in_t[i]) continue;
            const auto& c = rec.claws[i];
            int bi = b ^ c.x0[0] ^ c.x1[0];
            auto [cc, y] = sen.measured[k++];
            if (c.x0[0] != (y ^ ((b ^ bi) & cc))) res.law_ok = false;
        }
    }
    return res;
}

// ---- public-key encryption from a two-round claw-state generator

struct PkeKeys {
    std::vector<EcnotClientMsg> pk;
    EcnotCsgSender sk;
};

struct Ciphertext {
    std::vector<EcnotServerMsg> msg;
    int b = 0;
    int masked = 0;
};

inline PkeKeys pke_keygen(Rng& rng) {
    auto [pk, sk] = csg_ecnot_sen(1, rng);
    return {pk, sk};
}

inline Ciphertext pke_encrypt(const std::vector<EcnotClientMsg>& pk, int m, Rng& rng) {
    DenseState st;
    Ciphertext ct;
    ct.msg = csg_ecnot_rec(pk, st, rng);
    ct.b = st.measure_qubit(0, Basis::Z, rng);
    int xb = st.measure_qubit(1, Basis::Z, rng);
    ct.masked = m ^ xb;
    return ct;
}

inline std::optional<int> pke_decrypt(const EcnotCsgSender& sk, const Ciphertext& ct) {
    auto c = csg_ecnot_dec(sk, ct.msg);
    if (c.aborted) return std::nullopt;
    return ct.masked ^ (ct.b ? c.x1[0] : c.x0[0]);
}

inline json to_json(const Ciphertext& ct) {
    json m = json::array();
    for (const auto& x : ct.msg) m.push_back(to_json(x));
    return {{"msg", m}, {"b", ct.b}, {"c", ct.masked}};
}

struct PkeRoundtrip {
    int m = 0;
    int b = 0;
    std::optional<int> decrypted;
};

inline PkeRoundtrip pke_roundtrip(int m, Rng& rng, Transcript* tr = nullptr) {
    auto keys = pke_keygen(rng);
    if (tr) {
        json pk = json::array();
        for (const auto& x : keys.pk) pk.push_back(to_json(x));
        tr->record(Role::Client, "pke.pk", {{"pk", pk}});
    }
    auto ct = pke_encrypt(keys.pk, m, rng);
    if (tr) tr->record(Role::Server, "pke.ct", to_json(ct));
    return {m, ct.b, pke_decrypt(keys.sk, ct)};
}

} // namespace osp
