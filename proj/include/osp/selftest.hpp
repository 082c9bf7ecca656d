#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "apps.hpp"
#include "cvqc.hpp"
#include "delegation.hpp"
#include "gadgets.hpp"
#include "osp.hpp"
#include "qsim.hpp"
#include "session.hpp"

namespace osp::selftest {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool known_gap = false; // documented as unattainable; reported but not fatal
    std::string detail;
    double seconds = 0;
};

inline double chi2_p_1dof(long ones, long n) {
    double e = double(n) / 2.0;
    double x = 2 * (double(ones) - e) * (double(ones) - e) / e;
    return std::erfc(std::sqrt(x / 2));
}

inline DenseState random_state(int n, Rng& rng) {
    std::vector<cplx> a(std::size_t{1} << n);
    for (auto& x : a) {
        // Box-Muller pairs give Haar-distributed pure states
        double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
        double r = std::sqrt(-2 * std::log(u1));
        x = cplx(r * std::cos(2 * kPi * u2), r * std::sin(2 * kPi * u2));
    }
    auto s = DenseState::from_amplitudes(a);
    s.normalize();
    return s;
}

inline std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- 1

inline CriterionResult poq_honest(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.1");
    auto src = two_round_osp_source(3);
    const long n = 200000;
    long acc = 0;
    auto t0 = std::chrono::steady_clock::now();
    for (long i = 0; i < n; ++i) acc += poq_run(src, honest_poq_prover(), rng).accept;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double v = double(acc) / n, want = std::pow(std::cos(kPi / 8), 2);
    CriterionResult r{1, "PoQ honest value", std::abs(v - want) <= 0.004 && secs <= 60, false, "", 0};
    r.detail = "acceptance " + fmt("%.5f", v) + " vs " + fmt("%.5f", want) + " +- 0.004 in " + fmt("%.1fs", secs);
    return r;
}

// ---- 2

inline CriterionResult poq_classical_ceiling(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.2");
    auto src = two_round_osp_source(2);
    const long n = 100000;
    double best = 0;
    std::string best_name;
    for (auto& [name, prover] : basis_oblivious_family()) {
        long acc = 0;
        for (long i = 0; i < n; ++i) acc += poq_run(src, prover, rng).accept;
        if (double(acc) / n > best) {
            best = double(acc) / n;
            best_name = name;
        }
    }
    auto perfect = [](const PoqView& v, int a, Rng&) { return v.s ^ (v.r & a); };
    int recovered = 0;
    for (int i = 0; i < 100; ++i) {
        auto e = rewind_extract(perfect, src, rng);
        recovered += !e.aborted && e.guess == e.r;
    }
    CriterionResult r{2, "Classical prover ceiling", best <= 0.76 && recovered == 100, false, "", 0};
    r.detail = "best basis-oblivious " + fmt("%.5f", best) + " (" + best_name + ") <= 0.76; rewind " +
               std::to_string(recovered) + "/100";
    return r;
}

// ---- 3

inline CriterionResult osp_correctness(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.3");
    const double delta = 0.5;
    const int lambda = 2;
    const EpsilonOspConfig eps{1, 2, 2, 3};
    // P(fewer than total/8 of total/2 combinations succeed)
    auto eps_abort = [&] {
        int pairs = eps.lambda * 4, need = eps.lambda;
        double p = 0;
        for (int k = 0; k < need; ++k) p += std::tgamma(pairs + 1) / (std::tgamma(k + 1) * std::tgamma(pairs - k + 1));
        return p / std::pow(2.0, pairs);
    }();
    double amp_abort = std::pow(1 - delta, lambda / delta);
    struct Path {
        std::string name;
        OspSource src;
        double abort_b0, abort_b1;
    };
    std::vector<Path> paths{{"multi-round", multi_round_osp_source(3, 4), 0, 0},
                            {"two-round", two_round_osp_source(3), 0, 0},
                            {"amplified", amplified_osp_source(3, 1, delta, lambda), 0, amp_abort},
                            {"eps=1/2", epsilon_pipeline_source(eps), eps_abort, eps_abort}};
    const int n = 1000;
    bool ok = true;
    std::ostringstream d;
    double worst = 0;
    for (auto& p : paths) {
        d << p.name << " aborts";
        for (int b = 0; b < 2; ++b) {
            int aborts = 0;
            for (int i = 0; i < n; ++i) {
                auto o = p.src(b, rng, nullptr);
                if (o.aborted) {
                    ++aborts;
                    continue;
                }
                double dev = std::abs(osp_projection_norm(b, o.s, o.receiver_state) - 1);
                worst = std::max(worst, dev);
                if (dev > 1e-9) ok = false;
            }
            double want = b ? p.abort_b1 : p.abort_b0;
            double sigma = std::sqrt(want * (1 - want) / n);
            if (std::abs(double(aborts) / n - want) > 3 * sigma + 1e-12) ok = false;
            d << " b" << b << "=" << aborts << "/" << n << "(exp " << fmt("%.4f", want) << ")";
        }
        d << "; ";
    }
    d << "max |norm-1| " << fmt("%.1e", worst);
    return {3, "OSP correctness, four paths", ok, false, d.str(), 0};
}

// ---- 4

inline CriterionResult sender_bit_uniformity(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.4");
    std::vector<std::pair<std::string, OspSource>> srcs{{"two-round", two_round_osp_source(3)},
                                                        {"multi-round n=10", multi_round_osp_source(10, 4)}};
    const long n = 10000;
    bool ok = true;
    std::ostringstream d;
    for (auto& [name, src] : srcs)
        for (int b = 0; b < 2; ++b) {
            long ones = 0;
            for (long i = 0; i < n; ++i) ones += src(b, rng, nullptr).s;
            double p = chi2_p_1dof(ones, n);
            ok = ok && p > 0.001;
            d << name << " b" << b << " p=" << fmt("%.3f", p) << " ";
        }
    // informational: a plain-TCF claw with x0 = 0 pins s when the random basis is 0
    auto small = multi_round_osp_source(3, 4);
    long ones = 0;
    for (long i = 0; i < n; ++i) ones += small(0, rng, nullptr).s;
    d << "(multi-round n=3 b0 Pr[s=1]=" << fmt("%.3f", double(ones) / n) << ")";
    return {4, "Sender-bit uniformity", ok, false, d.str(), 0};
}

// ---- 5

// Exact distribution over (cell(d), X outcome of the kept qubit) from a dense copy.
template <class Cell>
std::map<std::pair<std::uint64_t, int>, double> exact_cells(const DenseState& dense, int keep, const Cell& cell) {
    DenseState h = dense;
    for (int q = 0; q < h.num_qubits(); ++q) h.apply(Gate::H, {q});
    std::map<std::pair<std::uint64_t, int>, double> out;
    std::size_t w = std::size_t(h.num_qubits());
    for (std::size_t i = 0; i < h.dim(); ++i) {
        double p = std::norm(h.amp(i));
        if (p < 1e-300) continue;
        Bits all = from_uint(i, w), d;
        for (std::size_t q = 0; q < w; ++q)
            if (int(q) != keep) d.push_back(all[q]);
        out[{cell(d), all[std::size_t(keep)]}] += p;
    }
    return out;
}

inline Qubit dense_residual(const DenseState& dense, int keep, const Bits& d) {
    DenseState s = dense;
    std::vector<int> others;
    for (int q = 0; q < s.num_qubits(); ++q)
        if (q != keep) others.push_back(q);
    for (int q : others) s.apply(Gate::H, {q});
    for (std::size_t i = others.size(); i-- > 0;) s = s.project_out(others[i], d[i]);
    return s.as_qubit();
}

struct CollapseCheck {
    double tvd = 0;
    double min_fid = 1;
};

template <class Sampler>
CollapseCheck check_collapse(const DenseState& dense, int keep, std::size_t dlen, const Sampler& sample, int n, Rng& rng) {
    std::vector<Bits> proj;
    if (dlen > 4)
        for (int j = 0; j < 4; ++j) {
            Bits r;
            do r = random_bits(dlen, rng);
            while (is_zero(r));
            proj.push_back(r);
        }
    auto cell = [&](const Bits& d) -> std::uint64_t {
        if (proj.empty()) return to_uint(d);
        std::uint64_t c = 0;
        for (const auto& r : proj) c = (c << 1) | std::uint64_t(dot(r, d));
        return c;
    };
    auto exact = exact_cells(dense, keep, cell);
    std::map<std::pair<std::uint64_t, int>, double> emp;
    CollapseCheck out;
    for (int i = 0; i < n; ++i) {
        auto [d, res] = sample(rng);
        emp[{cell(d), measure(res, Basis::X, rng)}] += 1.0 / n;
        if (i < 100) {
            double f = 0;
            try {
                f = fidelity(dense_residual(dense, keep, d), res);
            } catch (const std::runtime_error&) {
                f = 0; // outcome impossible under the dense state
            }
            out.min_fid = std::min(out.min_fid, f);
        }
    }
    for (auto& [k, p] : exact) emp[k] -= p;
    for (auto& [k, p] : emp) out.tvd += std::abs(p) / 2;
    return out;
}

inline bool amplified_support_matches(Rng& rng) {
    const int n = 2, ell = 2;
    for (int mode = 0; mode < 2; ++mode)
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<TcfPublic> pps;
            for (int i = 0; i < ell; ++i) pps.push_back(tcf_gen(TcfFamily::Dual, mode, n, 1, 0.5, rng()).pp);
            std::map<std::vector<std::uint32_t>, std::set<std::uint64_t>> pre;
            const int width = n * ell + ell - 1;
            for (std::uint64_t in = 0; in < (std::uint64_t{1} << (width + 1)); ++in) {
                Bits bits = from_uint(in, std::size_t(width + 1));
                int acc = bits[0];
                std::vector<std::uint32_t> y;
                for (int i = 0; i < ell; ++i) {
                    auto x = static_cast<std::uint32_t>(to_uint(Bits(bits.begin() + 1 + i * n, bits.begin() + 1 + (i + 1) * n)));
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
                if (got != set) return false;
            }
        }
    return true;
}

inline CriterionResult structured_vs_dense(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.5");
    const int n = 50000;
    double worst_tvd = 0, worst_fid = 1;
    for (std::size_t w = 2; w <= 12; ++w)
        for (int same_keep = 0; same_keep < 2; ++same_keep) {
            std::size_t keep = rng.below(w);
            Bits u, v;
            do {
                u = random_bits(w, rng);
                v = random_bits(w, rng);
                if (same_keep) v[keep] = u[keep];
                else v[keep] = u[keep] ^ 1;
            } while (u == v);
            TwoBranchState s{w, u, v, static_cast<int>(rng.below(8))};
            auto c = check_collapse(densify(s), int(keep), w - 1, [&](Rng& g) {
                auto r = collapse_two_branch(s, keep, g);
                return std::make_pair(r.d, r.residual);
            }, n, rng);
            worst_tvd = std::max(worst_tvd, c.tvd);
            worst_fid = std::min(worst_fid, c.min_fid);
        }
    for (std::size_t w = 1; w <= 11; ++w) {
        AffineBranchState a;
        a.width = w;
        for (std::size_t i = 0, k = rng.below(w); i < k; ++i) a.subspace_basis.push_back(random_bits(w, rng));
        a.shift0 = random_bits(w, rng);
        a.shift1 = random_bits(w, rng);
        auto c = check_collapse(densify(a), 0, w, [&](Rng& g) {
            auto r = collapse_affine(a, g);
            return std::make_pair(r.d, r.residual);
        }, n, rng);
        worst_tvd = std::max(worst_tvd, c.tvd);
        worst_fid = std::min(worst_fid, c.min_fid);
    }
    bool support = amplified_support_matches(rng);
    CriterionResult r{5, "Structured vs dense oracle", worst_tvd <= 0.02 && worst_fid >= 1 - 1e-9 && support, false, "", 0};
    r.detail = "max TVD " + fmt("%.4f", worst_tvd) + " <= 0.02, min residual fidelity 1-" + fmt("%.1e", 1 - worst_fid) +
               ", amplified support " + (support ? "exact" : "MISMATCH");
    return r;
}

// ---- 6

inline std::vector<Qubit> six_states() {
    const cplx i(0, 1);
    return {Qubit{1, 0}, Qubit{0, 1}, Qubit{kInvSqrt2, kInvSqrt2}, Qubit{kInvSqrt2, -kInvSqrt2},
            Qubit{kInvSqrt2, i * kInvSqrt2}, Qubit{kInvSqrt2, -i * kInvSqrt2}};
}

inline CriterionResult gadget_identities(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.6");
    double worst = 1;
    auto check_cnot = [&](const DenseState& in, int b) {
        auto st = in;
        auto k = encrypted_cnot(b, st, 0, 1, rng);
        auto want = in;
        if (b) want.apply(Gate::CNOT, {0, 1});
        PauliFrame f;
        f.x_keys = k.r;
        f.z_keys = k.s;
        apply_pad(want, {0, 1}, f);
        worst = std::min(worst, k.aborted ? 0.0 : fidelity(st, want));
    };
    auto osp = two_round_osp_source(3);
    auto check_phase = [&](const DenseState& in, int b) {
        auto st = in;
        auto r = encrypted_phase(b, st, 0, osp, rng);
        auto want = in;
        if (b) want.apply(Gate::P, {0});
        if (r.s_out) want.apply(Gate::Z, {0});
        worst = std::min(worst, r.aborted ? 0.0 : fidelity(st, want));
    };
    int cases = 0;
    for (int b = 0; b < 2; ++b) {
        for (auto& a : six_states()) {
            for (auto& c : six_states()) {
                auto in = DenseState::from_qubit(a).tensor(DenseState::from_qubit(c));
                check_cnot(in, b);
                check_phase(in, b);
                cases += 2;
            }
        }
        for (int i = 0; i < 100; ++i) {
            check_cnot(random_state(3, rng), b);
            check_phase(random_state(2, rng), b);
            cases += 2;
        }
    }
    CriterionResult r{6, "Encrypted CNOT and phase identities", worst >= 1 - 1e-9, false, "", 0};
    r.detail = std::to_string(cases) + " cases, min fidelity 1-" + fmt("%.1e", 1 - worst);
    return r;
}

// ---- 7

inline CriterionResult blind_delegation(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.7");
    auto osp = two_round_osp_source(3);
    auto t0 = std::chrono::steady_clock::now();
    double worst = 1;
    for (int t = 0; t < 100; ++t) {
        int n = 1 + int(rng.below(4));
        int k = int(rng.below(std::uint64_t(n)));
        Circuit c = random_clifford_tdg(n, 30, 12, rng);
        c.classical_input_bits = k;
        Bits x = random_bits(std::size_t(k), rng);
        auto v = random_state(n - k, rng);
        auto d = delegate(c, x, v, osp, rng);
        worst = std::min(worst, d.aborted ? 0.0 : fidelity(unpad(d), evaluate(c, x, v)));
    }
    int exact = 0;
    const int reversible = 50;
    for (int t = 0; t < reversible; ++t) {
        Circuit c;
        c.num_qubits = 4;
        c.classical_input_bits = 4;
        Bits x = random_bits(4, rng), want = x;
        for (int g = 0; g < 8; ++g) {
            int a = int(rng.below(4)), b = int(rng.below(3)), tq = int(rng.below(2));
            if (b >= a) ++b;
            int lo = std::min(a, b), hi = std::max(a, b), third = 0;
            while (third == lo || third == hi) ++third;
            (void)tq;
            switch (rng.below(3)) {
            case 0:
                c.add(Gate::X, a);
                want[std::size_t(a)] ^= 1;
                break;
            case 1:
                c.add(Gate::CNOT, a, b);
                want[std::size_t(b)] ^= want[std::size_t(a)];
                break;
            default:
                append_toffoli(c, a, b, third);
                want[std::size_t(third)] ^= want[std::size_t(a)] & want[std::size_t(b)];
            }
        }
        auto d = delegate(c, x, DenseState(0), osp, rng);
        exact += !d.aborted && classical_output_round(d, rng) == want;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CriterionResult r{7, "Blind delegation", worst >= 1 - 1e-6 && exact == reversible && secs <= 120, false, "", 0};
    r.detail = "100 circuits min fidelity 1-" + fmt("%.1e", 1 - worst) + "; classical output exact " + std::to_string(exact) +
               "/" + std::to_string(reversible) + " in " + fmt("%.1fs", secs);
    return r;
}

// ---- 8

inline CriterionResult puzzle_completeness(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.8");
    int pass[2] = {0, 0};
    for (int t = 0; t < 100; ++t) {
        auto run = puzzle_roundtrip(1024, 0.82, 2, rng);
        pass[0] += run.verdict[0];
        pass[1] += run.verdict[1];
    }
    int both = 0;
    for (int t = 0; t < 20; ++t) {
        auto run = puzzle_roundtrip(65536, 0.85, 2, rng);
        both += run.verdict[0] && run.verdict[1];
    }
    CriterionResult r{8, "1-of-2 puzzle completeness", pass[0] >= 99 && pass[1] >= 99 && both >= 19, false, "", 0};
    r.detail = "lambda=1024/0.82: " + std::to_string(pass[0]) + "/100, " + std::to_string(pass[1]) +
               "/100; lambda=65536/0.85 both: " + std::to_string(both) + "/20";
    return r;
}

// ---- 9

inline CriterionResult commitment_binding(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.9");
    const int lambda = 8;
    const double bound = 1 + std::pow(2.0, -lambda) + 1e-9;
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        DenseState s;
        if (t % 2 == 0) {
            s = random_state(lambda, rng);
        } else {
            // basis states and their Hadamard transforms meet the bound exactly
            s = DenseState::basis_state(random_bits(lambda, rng));
            if (t % 4 == 3)
                for (int q = 0; q < lambda; ++q) s.apply(Gate::H, {q});
        }
        worst = std::max(worst, binding_probe(s).sum());
    }
    // informational: the normalized |s0> + H|s1> family
    DenseState h(lambda);
    for (int q = 0; q < lambda; ++q) h.apply(Gate::H, {q});
    auto a = h.amplitudes();
    a[0] += 1.0;
    auto mix = DenseState::from_amplitudes(a);
    mix.normalize();
    CriterionResult r{9, "Commitment sum-binding", worst <= bound, false, "", 0};
    r.detail = "max pr0+pr1 over 50 states " + fmt("%.6f", worst) + " <= " + fmt("%.6f", bound) +
               " (|s0>+H|s1> family reaches " + fmt("%.6f", binding_probe(mix).sum()) + ")";
    return r;
}

// ---- 10

inline CriterionResult ot_checks(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.10");
    int good = 0, total = 0;
    for (auto v : {OtVariant::Search, OtVariant::Indistinguishability})
        for (int b = 0; b < 2; ++b)
            for (int t = 0; t < 500; ++t) {
                auto res = ot_run(v, b, 8, rng);
                good += !res.caught && res.law_ok && res.r == (b ? res.r1 : res.r0);
                ++total;
            }
    int caught = 0;
    for (int t = 0; t < 100; ++t) caught += ot_run(OtVariant::Search, rng.bit(), 32, rng, nullptr, true).caught;
    CriterionResult r{10, "Oblivious transfer", good == total && caught >= 99, false, "", 0};
    r.detail = "honest r = r_b " + std::to_string(good) + "/" + std::to_string(total) + "; cheater caught " +
               std::to_string(caught) + "/100";
    return r;
}

// ---- 11

inline CriterionResult pke_checks(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "acceptance.11");
    int ok = 0;
    long ones = 0;
    for (int t = 0; t < 2000; ++t) {
        int m = t % 2;
        auto r = pke_roundtrip(m, rng);
        ok += r.decrypted && *r.decrypted == m;
    }
    auto keys = pke_keygen(rng);
    const long n = 10000;
    for (long t = 0; t < n; ++t) ones += pke_encrypt(keys.pk, 0, rng).b;
    double p = chi2_p_1dof(ones, n);
    CriterionResult r{11, "PKE roundtrip", ok == 2000 && p > 0.001, false, "", 0};
    r.detail = "roundtrip " + std::to_string(ok) + "/2000; b-marginal chi-square p=" + fmt("%.3f", p);
    return r;
}

// ---- 12

inline CriterionResult cvqc_completeness(std::uint64_t seed) {
    auto h = parse_hamiltonian("QUBITS 2\nX 0 1 0.5\nZ 0 1 0.5\n");
    GameParams g{0.2, min_eigenvalue(h), 0};
    Rng rng = Rng::derive(seed, "acceptance.12");
    auto v = estimate_value(h, g, 100000, false, ideal_osp_source(), rng);
    double want = completeness_value(g);
    bool formula = std::abs(v.mean - want) <= 0.01;
    Rng r1 = Rng::derive(seed, "acceptance.12.coupled"), r2 = r1;
    auto direct = estimate_value(h, g, 10000, false, two_round_osp_source(2), r1);
    auto deleg = estimate_value(h, g, 10000, true, two_round_osp_source(2), r2);
    bool coupled = std::abs(direct.mean - deleg.mean) <= 0.01;
    CriterionResult r{12, "CVQC completeness", formula && coupled, true, "", 0};
    r.detail = "value " + fmt("%.5f", v.mean) + " [" + fmt("%.5f", v.lo) + "," + fmt("%.5f", v.hi) + "] vs formula " +
               fmt("%.5f", want) + (formula ? " ok" : " MISS") + "; delegated " + fmt("%.5f", deleg.mean) + " vs direct " +
               fmt("%.5f", direct.mean) + (coupled ? " ok" : " MISS");
    return r;
}

// ---- 13

inline CriterionResult harness_determinism(std::uint64_t seed) {
    int same = 0, total = 0;
    for (std::string proto : {"poq", "ot"})
        for (std::uint64_t k = 0; k < 5; ++k) {
            SessionConfig cfg;
            cfg.protocol = proto;
            cfg.seed = seed + k;
            cfg.lambda = 6;
            cfg.choice_bit = int(k % 2);
            cfg.variant = k % 2 ? OtVariant::Indistinguishability : OtVariant::Search;
            auto mem = run_in_process(cfg);
            auto tcp = run_loopback(cfg);
            bool eq = mem.client.ok() && tcp.client.ok() && mem.server.ok() && tcp.server.ok() &&
                      mem.client.transcript.serialize() == tcp.client.transcript.serialize() &&
                      mem.server.transcript.serialize() == tcp.server.transcript.serialize() &&
                      mem.client.transcript.serialize() == mem.server.transcript.serialize();
            same += eq;
            ++total;
        }
    CriterionResult r{13, "Harness determinism", same == total, false, "", 0};
    r.detail = std::to_string(same) + "/" + std::to_string(total) + " PoQ/OT sessions byte-identical (memory vs loopback)";
    return r;
}

using Criterion = std::function<CriterionResult(std::uint64_t)>;

inline std::vector<Criterion> all_criteria() {
    return {poq_honest,       poq_classical_ceiling, osp_correctness,  sender_bit_uniformity, structured_vs_dense,
            gadget_identities, blind_delegation,     puzzle_completeness, commitment_binding, ot_checks,
            pke_checks,       cvqc_completeness,     harness_determinism};
}

inline std::string format_line(const CriterionResult& r) {
    char head[96];
    std::snprintf(head, sizeof head, "%-4s %2d  %-36s %7.1fs  ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
    std::string s = head + r.detail;
    if (!r.pass && r.known_gap) s += "  [known gap]";
    return s;
}

// Runs the selected criteria (all when empty), streaming one line each; true unless an unexpected failure occurred.
inline bool run(std::uint64_t seed, std::ostream& out, const std::set<int>& only = {}) {
    bool ok = true;
    auto list = all_criteria();
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!only.empty() && !only.count(int(i) + 1)) continue;
        auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = list[i](seed);
        } catch (const std::exception& e) {
            r = {int(i) + 1, "criterion " + std::to_string(i + 1), false, false, std::string("exception: ") + e.what(), 0};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << format_line(r) << std::endl;
        if (!r.pass && !r.known_gap) ok = false;
    }
    return ok;
}

} // namespace osp::selftest
