#pragma once

#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bits.hpp"
#include "delegation.hpp"
#include "osp.hpp"
#include "qsim.hpp"
#include "rng.hpp"
#include "transcript.hpp"

namespace osp {

// ---- Hamiltonians of the form sum p W_i W_j, W in {X, Z}

enum class PauliType { X, Z };

struct HamiltonianTerm {
    PauliType w = PauliType::Z;
    int i = 0;
    int j = 1;
    double p = 0;
};

struct Hamiltonian {
    int num_qubits = 0;
    std::vector<HamiltonianTerm> terms;

    double weight(PauliType w) const {
        double s = 0;
        for (const auto& t : terms)
            if (t.w == w) s += t.p;
        return s;
    }
};

inline void validate(const Hamiltonian& h) {
    if (h.num_qubits < 2) throw std::invalid_argument("hamiltonian: needs at least two qubits");
    double sum = 0;
    for (const auto& t : h.terms) {
        if (t.i == t.j) throw std::invalid_argument("hamiltonian: term acts twice on one qubit");
        if (t.i < 0 || t.j < 0 || t.i >= h.num_qubits || t.j >= h.num_qubits)
            throw std::invalid_argument("hamiltonian: qubit index out of range");
        if (t.p < 0) throw std::invalid_argument("hamiltonian: negative weight");
        sum += t.p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("hamiltonian: weights must sum to 1");
}

inline Hamiltonian parse_hamiltonian(std::istream& in) {
    Hamiltonian h;
    bool have_header = false;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("hamiltonian line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (!have_header) {
            if (tok != "QUBITS" || !(ls >> h.num_qubits)) fail("expected QUBITS header");
            have_header = true;
        } else {
            HamiltonianTerm t;
            if (tok == "X")
                t.w = PauliType::X;
            else if (tok == "Z")
                t.w = PauliType::Z;
            else
                fail("unknown term '" + tok + "'");
            if (!(ls >> t.i >> t.j >> t.p)) fail("expected 'W i j p'");
            h.terms.push_back(t);
        }
        if (ls >> tok) fail("trailing tokens");
    }
    if (!have_header) throw std::invalid_argument("hamiltonian: missing QUBITS header");
    validate(h);
    return h;
}

inline Hamiltonian parse_hamiltonian(const std::string& text) {
    std::istringstream in(text);
    return parse_hamiltonian(in);
}

inline std::string format_hamiltonian(const Hamiltonian& h) {
    std::ostringstream out;
    out.precision(17);
    out << "QUBITS " << h.num_qubits << "\n";
    for (const auto& t : h.terms) out << (t.w == PauliType::X ? "X " : "Z ") << t.i << " " << t.j << " " << t.p << "\n";
    return out.str();
}

inline Eigen::MatrixXd hamiltonian_matrix(const Hamiltonian& h) {
    validate(h);
    if (h.num_qubits > 4) throw std::length_error("hamiltonian: dense diagonalization limited to 4 qubits");
    const int n = h.num_qubits;
    const std::size_t dim = std::size_t{1} << n;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(dim), Eigen::Index(dim));
    for (const auto& t : h.terms) {
        std::size_t mi = std::size_t{1} << (n - 1 - t.i), mj = std::size_t{1} << (n - 1 - t.j);
        for (std::size_t k = 0; k < dim; ++k) {
            if (t.w == PauliType::Z) {
                int par = ((k & mi) != 0) ^ ((k & mj) != 0);
                m(Eigen::Index(k), Eigen::Index(k)) += par ? -t.p : t.p;
            } else {
                m(Eigen::Index(k ^ mi ^ mj), Eigen::Index(k)) += t.p;
            }
        }
    }
    return m;
}

inline double min_eigenvalue(const Hamiltonian& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_matrix(h));
    return es.eigenvalues()(0);
}

// Lowest-eigenvalue eigenvector; sign fixed so the first nonzero amplitude is positive.
inline DenseState ground_state(const Hamiltonian& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_matrix(h));
    Eigen::VectorXd v = es.eigenvectors().col(0);
    std::vector<cplx> a(std::size_t(v.size()));
    double sign = 0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (sign == 0 && std::abs(v(k)) > 1e-12) sign = v(k) > 0 ? 1 : -1;
        a[std::size_t(k)] = v(k);
    }
    for (auto& x : a) x *= sign;
    auto s = DenseState::from_amplitudes(a);
    s.normalize();
    return s;
}

inline double energy(const Hamiltonian& h, const DenseState& psi) {
    auto m = hamiltonian_matrix(h);
    double e = 0;
    for (std::size_t r = 0; r < psi.dim(); ++r)
        for (std::size_t c = 0; c < psi.dim(); ++c)
            e += std::real(std::conj(psi.amp(r)) * m(Eigen::Index(r), Eigen::Index(c)) * psi.amp(c));
    return e;
}

// ---- the game

struct GameParams {
    double kappa = 0.2;
    double alpha = -1;
    double beta = 0;
};

inline void validate(const GameParams& g) {
    if (!(g.kappa >= 0 && g.kappa <= 1)) throw std::invalid_argument("game: kappa must lie in [0, 1]");
    if (!(g.beta > g.alpha)) throw std::invalid_argument("game: beta must exceed alpha");
}

enum class QuestionType { CHSH, Commutation, Teleport };

inline std::string to_string(QuestionType t) {
    switch (t) {
    case QuestionType::CHSH: return "chsh";
    case QuestionType::Commutation: return "commutation";
    default: return "teleport";
    }
}

struct Question {
    QuestionType type = QuestionType::Teleport;
    Bits a;
    Bits b;
    int x = 0;
    int y = 0;
};

struct Answers {
    Bits s_a;
    Bits s_b;
};

inline std::size_t answer_width(const Question& q, int lambda) {
    switch (q.type) {
    case QuestionType::CHSH: return 1;
    case QuestionType::Commutation: return 2;
    default: return 2 * static_cast<std::size_t>(lambda);
    }
}

inline const HamiltonianTerm& sample_term(const Hamiltonian& h, PauliType w, Rng& rng) {
    double total = h.weight(w);
    if (total <= 0) throw std::invalid_argument("hamiltonian: no terms of the requested type");
    double u = rng.uniform() * total, acc = 0;
    const HamiltonianTerm* last = nullptr;
    for (const auto& t : h.terms) {
        if (t.w != w || t.p <= 0) continue;
        acc += t.p;
        last = &t;
        if (u < acc) return t;
    }
    return *last;
}

inline Bits pair_vector(int lambda, int i, int j) {
    Bits v(static_cast<std::size_t>(lambda), 0);
    v[std::size_t(i)] = v[std::size_t(j)] = 1;
    return v;
}

// (a, b) from U x D_X conditioned on a.b = target.
inline std::pair<Bits, Bits> sample_conditioned(const Hamiltonian& h, int target, Rng& rng) {
    for (int k = 0; k < 10000; ++k) {
        Bits a = random_bits(std::size_t(h.num_qubits), rng);
        const auto& t = sample_term(h, PauliType::X, rng);
        Bits b = pair_vector(h.num_qubits, t.i, t.j);
        if (dot(a, b) == target) return {a, b};
    }
    throw std::runtime_error("sample_question: conditioned support is empty");
}

inline Question sample_question(const Hamiltonian& h, const GameParams& g, Rng& rng) {
    Question q;
    double u = rng.uniform();
    if (u < (1 - g.kappa) / 2) {
        q.type = QuestionType::CHSH;
        std::tie(q.a, q.b) = sample_conditioned(h, 1, rng);
        q.x = rng.bit();
    } else if (u < 1 - g.kappa) {
        q.type = QuestionType::Commutation;
        std::tie(q.a, q.b) = sample_conditioned(h, 0, rng);
    } else {
        q.type = QuestionType::Teleport;
    }
    q.y = rng.bit();
    return q;
}

// Bob's y = 0 is a Z-basis answer and y = 1 an X-basis answer; a Teleport round only checks the matching term type.
inline bool verify(const Question& q, const Answers& ans, const Hamiltonian& h, Rng& rng) {
    const std::size_t lam = static_cast<std::size_t>(h.num_qubits);
    if (ans.s_b.size() != lam) throw std::invalid_argument("verify: Bob answer width");
    if (ans.s_a.size() != answer_width(q, h.num_qubits)) throw std::invalid_argument("verify: Alice answer width");
    if (q.type != QuestionType::Teleport) {
        int z = q.y ? dot(q.b, ans.s_b) : dot(q.a, ans.s_b);
        if (q.type == QuestionType::CHSH) return (ans.s_a[0] ^ z) == (q.x & q.y);
        return ans.s_a[std::size_t(q.y)] == z;
    }
    double px = h.weight(PauliType::X);
    int w = rng.uniform() < px ? 0 : 1;
    int bob_w = q.y ? 0 : 1;
    if (w != bob_w) return true;
    const auto& t = sample_term(h, w == 0 ? PauliType::X : PauliType::Z, rng);
    auto i = std::size_t(t.i), j = std::size_t(t.j);
    std::size_t off = w == 0 ? lam : 0;
    return (ans.s_b[i] ^ ans.s_b[j] ^ ans.s_a[off + i] ^ ans.s_a[off + j]) == 1;
}

inline double completeness_value(const GameParams& g) {
    double chsh = std::pow(std::cos(kPi / 8), 2);
    return 0.5 * (1 - g.kappa) * (1 + chsh) + g.kappa * (1 - g.alpha / 4);
}

// ---- honest strategy on registers A (Alice halves), B (Bob halves), G (ground state)

struct PauliString {
    double coef = 1;
    std::vector<int> z;
    std::vector<int> x;
};

inline std::vector<int> support(const Bits& v, int offset = 0) {
    std::vector<int> q;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) q.push_back(offset + int(i));
    return q;
}

inline DenseState apply_pauli_string(DenseState s, const PauliString& p) {
    for (int q : p.x) s.apply(Gate::X, {q});
    for (int q : p.z) s.apply(Gate::Z, {q});
    for (auto& a : s.amplitudes()) a *= p.coef;
    return s;
}

// Measures a Hermitian O = sum of Pauli strings with O^2 = I; returns 0 for +1, 1 for -1.
inline int measure_observable(DenseState& s, const std::vector<PauliString>& o, Rng& rng) {
    std::vector<cplx> os(s.dim(), cplx(0));
    for (const auto& p : o) {
        auto t = apply_pauli_string(s, p);
        for (std::size_t k = 0; k < os.size(); ++k) os[k] += t.amp(k);
    }
    double ev = 0;
    for (std::size_t k = 0; k < os.size(); ++k) ev += std::real(std::conj(s.amp(k)) * os[k]);
    double p0 = std::clamp((1 + ev) / 2, 0.0, 1.0);
    int out = rng.uniform() < p0 ? 0 : 1;
    double sign = out ? -1 : 1;
    auto& a = s.amplitudes();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = (a[k] + sign * os[k]) / 2.0;
    s.normalize();
    return out;
}

// lambda EPR pairs on (A_i, B_i) followed by the ground state on G.
inline DenseState honest_initial_state(const DenseState& ground) {
    int lam = ground.num_qubits();
    DenseState epr(2 * lam);
    for (int i = 0; i < lam; ++i) {
        epr.apply(Gate::H, {i});
        epr.apply(Gate::CNOT, {i, lam + i});
    }
    return epr.tensor(ground);
}

// Bob measures his halves; returns s_B and the remaining (A, G) state.
inline std::pair<Bits, DenseState> bob_measure(DenseState full, int lam, int y, Rng& rng) {
    Basis basis = y ? Basis::X : Basis::Z;
    Bits sb;
    for (int i = 0; i < lam; ++i) sb.push_back(static_cast<std::uint8_t>(full.measure_qubit(lam + i, basis, rng)));
    for (int i = lam - 1; i >= 0; --i) full = full.discard_measured(lam + i, basis, sb[std::size_t(i)]);
    return {sb, full};
}

// Alice acts on (A_0..A_{lam-1}, G_0..G_{lam-1}).
inline Bits alice_direct(const Question& q, DenseState& s, int lam, Rng& rng) {
    switch (q.type) {
    case QuestionType::CHSH: {
        const double c = kInvSqrt2;
        PauliString za{c, support(q.a), {}}, xb{q.x ? -c : c, {}, support(q.b)};
        return {static_cast<std::uint8_t>(measure_observable(s, {za, xb}, rng))};
    }
    case QuestionType::Commutation: {
        int mz = measure_observable(s, {PauliString{1, support(q.a), {}}}, rng);
        int mx = measure_observable(s, {PauliString{1, {}, support(q.b)}}, rng);
        return {static_cast<std::uint8_t>(mz), static_cast<std::uint8_t>(mx)};
    }
    default: {
        Bits xk, zk;
        for (int i = 0; i < lam; ++i) {
            s.apply(Gate::CNOT, {lam + i, i});
            s.apply(Gate::H, {lam + i});
        }
        for (int i = 0; i < lam; ++i) xk.push_back(static_cast<std::uint8_t>(s.measure_qubit(i, Basis::Z, rng)));
        for (int i = 0; i < lam; ++i) zk.push_back(static_cast<std::uint8_t>(s.measure_qubit(lam + i, Basis::Z, rng)));
        return concat(xk, zk);
    }
    }
}

// ---- Alice's strategy as a classically controlled circuit (lambda = 2, so b = 11)

namespace compiled {

enum : int { kTel, kCom, kChsh, kP, kX, kInputs, kA0 = kInputs, kA1, kG0, kG1, kW, kWidth };

inline Circuit alice_circuit() {
    Circuit c;
    c.num_qubits = kWidth;
    c.classical_input_bits = kInputs;
    // teleport: Bell basis on (G_i, A_i)
    append_toffoli(c, kTel, kG0, kA0);
    append_toffoli(c, kTel, kG1, kA1);
    c.add(Gate::H, kG0).add(Gate::H, kG1);
    // commutation: Z0Z1 onto A0, X0X1 onto A1, then rotate A1 into Z
    append_toffoli(c, kCom, kA1, kA0);
    append_controlled_h(c, kCom, kA1);
    // chsh: map Z(a) and X(11) onto A0, move it into W, flip X by (-1)^x, rotate into Z
    append_toffoli(c, kChsh, kA0, kA1);
    append_toffoli(c, kP, kA1, kA0);
    append_fredkin(c, kChsh, kA0, kW);
    c.add(Gate::H, kW).add(Gate::CNOT, kX, kW).add(Gate::H, kW);
    append_hadamard_frame(c, kW);
    return c;
}

inline Bits alice_input(const Question& q) {
    Bits in(kInputs, 0);
    in[kTel] = q.type == QuestionType::Teleport;
    in[kCom] = q.type == QuestionType::Commutation;
    in[kChsh] = q.type == QuestionType::CHSH;
    in[kP] = q.type == QuestionType::CHSH && q.a == Bits{0, 1};
    in[kX] = static_cast<std::uint8_t>(q.type == QuestionType::CHSH ? q.x : 0);
    return in;
}

inline Bits decode_answer(const Question& q, const Bits& y) {
    switch (q.type) {
    case QuestionType::CHSH: return {y[kW]};
    case QuestionType::Commutation: return {static_cast<std::uint8_t>(q.a == Bits{1, 1} ? y[kA0] : 0), y[kA1]};
    default: return {y[kA0], y[kA1], y[kG0], y[kG1]};
    }
}

} // namespace compiled

struct RoundResult {
    Question question;
    Answers answers;
    bool accept = false;
    bool aborted = false;
};

// Question, strategy and verifier draw from separate streams keyed by one draw of `rng`.
inline RoundResult honest_round(const Hamiltonian& h, const GameParams& g, const DenseState& ground, bool delegated,
                                const OspSource& osp, Rng& rng, Transcript* tr = nullptr) {
    const int lam = h.num_qubits;
    if (ground.num_qubits() != lam) throw std::invalid_argument("honest_round: ground state width");
    if (lam > 3) throw std::length_error("honest_round: at most 3 qubits");
    if (delegated && lam != 2) throw std::invalid_argument("honest_round: delegated play supports 2 qubits");
    std::uint64_t key = rng();
    Rng qr = Rng::derive(key, "cvqc.question"), sr = Rng::derive(key, "cvqc.strategy"), vr = Rng::derive(key, "cvqc.verifier");

    RoundResult res;
    res.question = sample_question(h, g, qr);
    const auto& q = res.question;
    auto [sb, rest] = bob_measure(honest_initial_state(ground), lam, q.y, sr);
    res.answers.s_b = sb;
    if (!delegated) {
        res.answers.s_a = alice_direct(q, rest, lam, sr);
    } else {
        rest = rest.tensor(DenseState(1));
        auto d = delegate(compiled::alice_circuit(), compiled::alice_input(q), rest, osp, sr, tr);
        if (d.aborted) {
            res.aborted = true;
            return res;
        }
        auto y = classical_output_round(d, sr, tr);
        res.answers.s_a = compiled::decode_answer(q, y);
    }
    record(tr, Role::Server, "cvqc.answers", {{"s_a", bits_json(res.answers.s_a)}, {"s_b", bits_json(res.answers.s_b)}});
    res.accept = verify(q, res.answers, h, vr);
    record(tr, Role::Client, "cvqc.verdict", {{"accept", res.accept}});
    return res;
}

struct ValueEstimate {
    long accepts = 0;
    long rounds = 0;
    double mean = 0;
    double lo = 0;
    double hi = 0;
};

inline ValueEstimate wilson(long k, long n, double z = 1.96) {
    ValueEstimate v;
    v.accepts = k;
    v.rounds = n;
    if (n == 0) return v;
    double p = double(k) / double(n), z2 = z * z, dn = double(n);
    double centre = (p + z2 / (2 * dn)) / (1 + z2 / dn);
    double half = z * std::sqrt(p * (1 - p) / dn + z2 / (4 * dn * dn)) / (1 + z2 / dn);
    v.mean = p;
    v.lo = centre - half;
    v.hi = centre + half;
    return v;
}

inline ValueEstimate estimate_value(const Hamiltonian& h, const GameParams& g, long rounds, bool delegated,
                                    const OspSource& osp, Rng& rng) {
    validate(g);
    auto ground = ground_state(h);
    long k = 0;
    for (long r = 0; r < rounds; ++r) k += honest_round(h, g, ground, delegated, osp, rng).accept;
    return wilson(k, rounds);
}

// ||{Z(a), X(b)}|| for Bob's honest CHSH observables; zero exactly when a.b = 1.
inline double anticommutator_norm(const Bits& a, const Bits& b) {
    int n = static_cast<int>(a.size());
    if (b.size() != a.size() || n > 10) throw std::invalid_argument("anticommutator_norm: width");
    double worst = 0;
    for (std::size_t k = 0; k < (std::size_t{1} << n); ++k) {
        DenseState e = DenseState::basis_state(from_uint(k, std::size_t(n)));
        auto zx = apply_pauli_string(apply_pauli_string(e, {1, {}, support(b)}), {1, support(a), {}});
        auto xz = apply_pauli_string(apply_pauli_string(e, {1, support(a), {}}), {1, {}, support(b)});
        double s = 0;
        for (std::size_t i = 0; i < zx.dim(); ++i) s += std::norm(zx.amp(i) + xz.amp(i));
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

} // namespace osp
