#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bits.hpp"
#include "rng.hpp"

namespace osp {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

enum class Gate { H, X, Z, P, Pdg, T, Tdg, SqrtX, CNOT };
enum class Basis { Z, X, Y, XplusZ, XminusZ };

// row-major 2x2
using Mat2 = std::array<cplx, 4>;

inline cplx omega8(int k) {
    k = ((k % 8) + 8) % 8;
    return std::polar(1.0, k * kPi / 4);
}

inline Mat2 gate_matrix(Gate g) {
    const cplx i(0, 1);
    switch (g) {
    case Gate::H: return {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2};
    case Gate::X: return {0, 1, 1, 0};
    case Gate::Z: return {1, 0, 0, -1};
    case Gate::P: return {1, 0, 0, i};
    case Gate::Pdg: return {1, 0, 0, -i};
    case Gate::T: return {1, 0, 0, omega8(1)};
    case Gate::Tdg: return {1, 0, 0, omega8(-1)};
    // (I + iX)/sqrt2: squares to iX, and sends |0> to P|+>
    case Gate::SqrtX: return {kInvSqrt2, i * kInvSqrt2, i * kInvSqrt2, kInvSqrt2};
    case Gate::CNOT: break;
    }
    throw std::invalid_argument("gate_matrix: not a single-qubit gate");
}

inline Mat2 adjoint(const Mat2& m) { return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}; }

inline Mat2 matmul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

struct Qubit {
    cplx a0{1.0, 0.0};
    cplx a1{0.0, 0.0};
};

inline Qubit apply(const Mat2& m, const Qubit& q) { return {m[0] * q.a0 + m[1] * q.a1, m[2] * q.a0 + m[3] * q.a1}; }

// H^b |s>
inline Qubit h_pow_state(int b, int s) {
    if (!b) return s ? Qubit{0.0, 1.0} : Qubit{1.0, 0.0};
    return {kInvSqrt2, s ? -kInvSqrt2 : kInvSqrt2};
}

// Z^s |+_theta>
inline Qubit plus_theta(double theta, int s) {
    cplx ph = std::polar(1.0, theta);
    return {kInvSqrt2, (s ? -1.0 : 1.0) * kInvSqrt2 * ph};
}

inline double overlap(const Qubit& a, const Qubit& b) { return std::abs(std::conj(a.a0) * b.a0 + std::conj(a.a1) * b.a1); }

inline double fidelity(const Qubit& a, const Qubit& b) {
    double o = overlap(a, b);
    return o * o;
}

// Columns are the outcome-0 / outcome-1 vectors.
inline std::array<Qubit, 2> basis_vectors(Basis b) {
    const cplx i(0, 1);
    const double c = std::cos(kPi / 8), s = std::sin(kPi / 8);
    switch (b) {
    case Basis::Z: return {Qubit{1, 0}, Qubit{0, 1}};
    case Basis::X: return {Qubit{kInvSqrt2, kInvSqrt2}, Qubit{kInvSqrt2, -kInvSqrt2}};
    case Basis::Y: return {Qubit{kInvSqrt2, i * kInvSqrt2}, Qubit{kInvSqrt2, -i * kInvSqrt2}};
    case Basis::XplusZ: return {Qubit{c, s}, Qubit{-s, c}};
    case Basis::XminusZ: return {Qubit{c, -s}, Qubit{s, c}};
    }
    throw std::invalid_argument("unknown basis");
}

// Unitary taking |k> to the k-th basis vector.
inline Mat2 basis_unitary(Basis b) {
    auto v = basis_vectors(b);
    return {v[0].a0, v[1].a0, v[0].a1, v[1].a1};
}

// Sample a single-qubit measurement without building a DenseState.
inline int measure(const Qubit& q, Basis basis, Rng& rng) {
    auto v = basis_vectors(basis);
    double p0 = std::norm(std::conj(v[0].a0) * q.a0 + std::conj(v[0].a1) * q.a1);
    double tot = p0 + std::norm(std::conj(v[1].a0) * q.a0 + std::conj(v[1].a1) * q.a1);
    return rng.uniform() * tot < p0 ? 0 : 1;
}

class DenseState {
public:
    static constexpr int kMaxQubits = 20;

    explicit DenseState(int n = 0) : n_(check_width(n)), amps_(std::size_t{1} << n, cplx(0)) { amps_[0] = 1.0; }

    static DenseState basis_state(const Bits& bits) {
        DenseState s(static_cast<int>(bits.size()));
        s.amps_[0] = 0;
        s.amps_[to_uint(bits)] = 1.0;
        return s;
    }

    static DenseState from_qubit(const Qubit& q) {
        DenseState s(1);
        s.amps_ = {q.a0, q.a1};
        return s;
    }

    static DenseState from_amplitudes(std::vector<cplx> amps) {
        int n = 0;
        while ((std::size_t{1} << n) < amps.size()) ++n;
        if ((std::size_t{1} << n) != amps.size()) throw std::invalid_argument("amplitude count must be a power of two");
        DenseState s(n);
        s.amps_ = std::move(amps);
        return s;
    }

    int num_qubits() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    std::vector<cplx>& amplitudes() { return amps_; }
    cplx amp(std::size_t idx) const { return amps_.at(idx); }

    std::size_t mask(int q) const {
        check_index(q);
        return std::size_t{1} << (n_ - 1 - q);
    }

    void add_register(const std::string& name, std::vector<int> qubits) {
        for (int q : qubits) {
            check_index(q);
            for (const auto& [nm, r] : registers_)
                for (int o : r)
                    if (o == q) throw std::invalid_argument("register overlap on qubit " + std::to_string(q));
        }
        registers_[name] = std::move(qubits);
    }
    const std::vector<int>& reg(const std::string& name) const { return registers_.at(name); }
    const std::map<std::string, std::vector<int>>& registers() const { return registers_; }

    DenseState& apply_matrix(const Mat2& m, int q) {
        std::size_t bit = mask(q);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (i & bit) continue;
            cplx a = amps_[i], b = amps_[i | bit];
            amps_[i] = m[0] * a + m[1] * b;
            amps_[i | bit] = m[2] * a + m[3] * b;
        }
        return *this;
    }

    DenseState& apply_controlled(const Mat2& m, int c, int t) {
        if (c == t) throw std::invalid_argument("control and target must differ");
        std::size_t cb = mask(c), tb = mask(t);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (!(i & cb) || (i & tb)) continue;
            cplx a = amps_[i], b = amps_[i | tb];
            amps_[i] = m[0] * a + m[1] * b;
            amps_[i | tb] = m[2] * a + m[3] * b;
        }
        return *this;
    }

    DenseState& apply(Gate g, const std::vector<int>& targets) {
        if (g == Gate::CNOT) {
            if (targets.size() != 2) throw std::invalid_argument("CNOT takes (control, target)");
            if (targets[0] == targets[1]) throw std::invalid_argument("CNOT: duplicate targets");
            mask(targets[0]);
            mask(targets[1]);
            std::size_t cb = mask(targets[0]), tb = mask(targets[1]);
            for (std::size_t i = 0; i < amps_.size(); ++i)
                if ((i & cb) && !(i & tb)) std::swap(amps_[i], amps_[i | tb]);
            return *this;
        }
        if (targets.empty()) throw std::invalid_argument("gate needs a target");
        for (std::size_t a = 0; a < targets.size(); ++a)
            for (std::size_t b = a + 1; b < targets.size(); ++b)
                if (targets[a] == targets[b]) throw std::invalid_argument("duplicate targets");
        auto m = gate_matrix(g);
        for (int q : targets) apply_matrix(m, q);
        return *this;
    }

    // this ⊗ other; other's qubits follow this state's qubits
    DenseState tensor(const DenseState& other) const {
        DenseState out(n_ + other.n_);
        for (std::size_t i = 0; i < amps_.size(); ++i)
            for (std::size_t j = 0; j < other.amps_.size(); ++j) out.amps_[(i << other.n_) | j] = amps_[i] * other.amps_[j];
        out.registers_ = registers_;
        for (const auto& [nm, r] : other.registers_) {
            std::vector<int> shifted;
            for (int q : r) shifted.push_back(q + n_);
            out.registers_[nm] = shifted;
        }
        return out;
    }

    // Appends a fresh qubit at the end; returns its index.
    int append(const Qubit& q) {
        auto regs = registers_;
        *this = tensor(from_qubit(q));
        registers_ = regs;
        return n_ - 1;
    }

    double norm() const {
        double s = 0;
        for (const auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

    void normalize() {
        double nr = norm();
        if (nr == 0) throw std::runtime_error("cannot normalize zero vector");
        for (auto& a : amps_) a /= nr;
    }

    double prob_one(int q) const {
        std::size_t bit = mask(q);
        double p = 0;
        for (std::size_t i = 0; i < amps_.size(); ++i)
            if (i & bit) p += std::norm(amps_[i]);
        return p;
    }

    // Measures qubit q in the given basis; the qubit is left in the outcome vector.
    int measure_qubit(int q, Basis basis, Rng& rng) {
        auto u = basis_unitary(basis);
        apply_matrix(adjoint(u), q);
        double p1 = prob_one(q);
        int out = rng.uniform() < p1 ? 1 : 0;
        collapse_z(q, out);
        apply_matrix(u, q);
        return out;
    }

    // Zeroes the branch with qubit q != value, then renormalizes.
    void collapse_z(int q, int value) {
        std::size_t bit = mask(q);
        for (std::size_t i = 0; i < amps_.size(); ++i)
            if (((i & bit) != 0) != (value != 0)) amps_[i] = 0;
        normalize();
    }

    // Removes qubit q, keeping the slice where it equals value (renormalized).
    DenseState project_out(int q, int value) const {
        std::size_t bit = mask(q);
        int low = n_ - 1 - q;
        DenseState out(n_ - 1);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (((i & bit) != 0) != (value != 0)) continue;
            std::size_t hi = (i >> (low + 1)) << low;
            std::size_t lo = i & ((std::size_t{1} << low) - 1);
            out.amps_[hi | lo] = amps_[i];
        }
        out.normalize();
        for (const auto& [nm, r] : registers_) {
            std::vector<int> kept;
            for (int x : r)
                if (x != q) kept.push_back(x > q ? x - 1 : x);
            out.registers_[nm] = kept;
        }
        return out;
    }

    // Removes a qubit previously measured in `basis` with result `outcome`.
    DenseState discard_measured(int q, Basis basis, int outcome) const {
        DenseState tmp = *this;
        tmp.apply_matrix(adjoint(basis_unitary(basis)), q);
        return tmp.project_out(q, outcome);
    }

    Qubit as_qubit() const {
        if (n_ != 1) throw std::invalid_argument("as_qubit: state is not a single qubit");
        return {amps_[0], amps_[1]};
    }

    Eigen::MatrixXcd density() const {
        Eigen::VectorXcd v(amps_.size());
        for (std::size_t i = 0; i < amps_.size(); ++i) v[static_cast<Eigen::Index>(i)] = amps_[i];
        return v * v.adjoint();
    }

    // Reduced density matrix on `keep` (in the order given).
    Eigen::MatrixXcd reduced_density(const std::vector<int>& keep) const {
        std::size_t kd = std::size_t{1} << keep.size();
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(kd, kd);
        std::size_t keep_mask = 0;
        for (int q : keep) keep_mask |= mask(q);
        auto sub = [&](std::size_t i) {
            std::size_t k = 0;
            for (int q : keep) k = (k << 1) | ((i & mask(q)) ? 1 : 0);
            return k;
        };
        // group basis indices by their traced-out part
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < amps_.size(); ++i)
            if (amps_[i] != cplx(0)) groups[i & ~keep_mask].push_back(i);
        for (const auto& [env, idx] : groups)
            for (auto i : idx)
                for (auto j : idx) rho(sub(i), sub(j)) += amps_[i] * std::conj(amps_[j]);
        return rho;
    }

private:
    static int check_width(int n) {
        if (n < 0 || n > kMaxQubits) throw std::length_error("dense state limited to 20 qubits");
        return n;
    }
    void check_index(int q) const {
        if (q < 0 || q >= n_) throw std::out_of_range("qubit index " + std::to_string(q) + " out of range");
    }

    int n_;
    std::vector<cplx> amps_;
    std::map<std::string, std::vector<int>> registers_;
};

inline DenseState apply_gate(DenseState state, Gate g, const std::vector<int>& targets) {
    state.apply(g, targets);
    return state;
}

struct MeasureResult {
    Bits outcome;
    DenseState post;
};

inline MeasureResult measure(DenseState state, const std::vector<int>& targets, Basis basis, Rng& rng) {
    MeasureResult r;
    for (int q : targets) r.outcome.push_back(static_cast<std::uint8_t>(state.measure_qubit(q, basis, rng)));
    r.post = std::move(state);
    return r;
}

inline cplx inner(const DenseState& a, const DenseState& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
    cplx s = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
    return s;
}

inline double fidelity(const DenseState& a, const DenseState& b) { return std::norm(inner(a, b)); }

// <psi| rho |psi>
inline double fidelity(const Eigen::MatrixXcd& rho, const DenseState& psi) {
    if (static_cast<std::size_t>(rho.rows()) != psi.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    Eigen::VectorXcd v(psi.dim());
    for (std::size_t i = 0; i < psi.dim(); ++i) v[static_cast<Eigen::Index>(i)] = psi.amplitudes()[i];
    return (v.adjoint() * rho * v)(0, 0).real();
}

inline double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("trace_distance: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DenseState& a, const DenseState& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
    return trace_distance(a.density(), b.density());
}

// (|u> + w^phase |v>)/sqrt2, or |u> when u == v
struct TwoBranchState {
    std::size_t width = 0;
    Bits u;
    Bits v;
    int phase = 0; // power of exp(i pi/4)

    cplx phase_value() const { return omega8(phase); }
};

inline void validate(const TwoBranchState& s) {
    if (s.u.size() != s.width || s.v.size() != s.width) throw std::invalid_argument("two-branch: width mismatch");
}

inline DenseState densify(const TwoBranchState& s) {
    validate(s);
    DenseState d = DenseState::basis_state(s.u);
    if (s.u == s.v) return d;
    auto& a = d.amplitudes();
    a[to_uint(s.u)] = kInvSqrt2;
    a[to_uint(s.v)] = kInvSqrt2 * s.phase_value();
    return d;
}

struct TwoBranchCollapse {
    Bits d;
    Qubit residual;
};

// Hadamard-measures every qubit except `keep`.
inline TwoBranchCollapse collapse_two_branch(const TwoBranchState& s, std::size_t keep, Rng& rng) {
    validate(s);
    if (s.width < 2) throw std::invalid_argument("collapse_two_branch: width < 2");
    if (keep >= s.width) throw std::out_of_range("collapse_two_branch: keep out of range");
    auto drop = [&](const Bits& b) {
        Bits r;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (i != keep) r.push_back(b[i]);
        return r;
    };
    Bits up = drop(s.u), vp = drop(s.v), w = up ^ vp;
    int uk = s.u[keep], vk = s.v[keep];
    TwoBranchCollapse out;
    out.d = random_bits(s.width - 1, rng);
    if (s.u == s.v) {
        out.residual = h_pow_state(0, uk);
        return out;
    }
    cplx ph = s.phase_value();
    if (uk != vk) {
        cplx cu = dot(out.d, up) ? -1.0 : 1.0;
        cplx cv = ph * (dot(out.d, vp) ? -1.0 : 1.0);
        Qubit r;
        (uk ? r.a1 : r.a0) = cu * kInvSqrt2;
        (vk ? r.a1 : r.a0) = cv * kInvSqrt2;
        out.residual = r;
        return out;
    }
    // kept qubit factors out; the relative phase biases the parity d.w
    double p0 = std::norm(1.0 + ph), p1 = std::norm(1.0 - ph);
    int want = rng.uniform() * (p0 + p1) < p0 ? 0 : 1;
    if (dot(out.d, w) != want) {
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i]) {
                out.d[i] ^= 1;
                break;
            }
    }
    out.residual = h_pow_state(0, uk);
    return out;
}

// (|0>|A + shift0> + |1>|A + shift1>) with uniform amplitudes
struct AffineBranchState {
    std::size_t width = 0;
    std::vector<Bits> subspace_basis;
    Bits shift0;
    Bits shift1;
};

inline std::vector<Bits> span_elements(const std::vector<Bits>& basis, std::size_t width) {
    std::vector<Bits> out{zeros(width)};
    for (const auto& b : basis) {
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) out.push_back(out[i] ^ b);
    }
    return out;
}

inline DenseState densify(const AffineBranchState& s) {
    if (s.shift0.size() != s.width || s.shift1.size() != s.width) throw std::invalid_argument("affine: width mismatch");
    auto basis = gf2::independent_basis(s.subspace_basis, s.width);
    auto elems = span_elements(basis, s.width);
    DenseState d(static_cast<int>(s.width + 1));
    auto& a = d.amplitudes();
    a[0] = 0;
    double amp = 1.0 / std::sqrt(2.0 * static_cast<double>(elems.size()));
    for (const auto& e : elems) {
        a[to_uint(concat({0}, e ^ s.shift0))] = amp;
        a[to_uint(concat({1}, e ^ s.shift1))] = amp;
    }
    return d;
}

struct AffineCollapse {
    Bits d;
    int residual_phase_bit = 0;
    Qubit residual;
};

// Hadamard-measures the coset register; the leading qubit is left as Z^bit|+>.
inline AffineCollapse collapse_affine(const AffineBranchState& s, Rng& rng) {
    if (s.shift0.size() != s.width || s.shift1.size() != s.width) throw std::invalid_argument("affine: width mismatch");
    auto basis = gf2::independent_basis(s.subspace_basis, s.width);
    auto dual = gf2::nullspace(basis, s.width);
    AffineCollapse out;
    out.d = gf2::random_combination(dual, s.width, rng);
    out.residual_phase_bit = dot(out.d, s.shift0 ^ s.shift1);
    out.residual = plus_theta(0, out.residual_phase_bit);
    return out;
}

// ||Pi_{OSP,b} |s>|psi>||
inline double osp_projection_norm(int b, int s, const Qubit& psi) { return overlap(h_pow_state(b, s), psi); }

inline double eps_osp_projection_norm(double eps, int b, int s, const Qubit& psi) {
    return overlap(plus_theta(b * eps * kPi / 2, s), psi);
}

// ||Pi_CSG|x0,x1,z>|psi>|| with claw (|x0> + (-1)^z |x1>)/sqrt2
inline double claw_projection_norm(const Bits& x0, const Bits& x1, int z, const DenseState& psi) {
    TwoBranchState c{x0.size(), x0, x1, z ? 4 : 0};
    if (static_cast<std::size_t>(psi.num_qubits()) != x0.size()) throw std::invalid_argument("claw projection: width mismatch");
    return std::abs(inner(densify(c), psi));
}

inline double dbcsg_projection_norm(const Bits& x0, const Bits& x1, int z, const DenseState& psi) {
    if (x0 == x1) return 0.0;
    return claw_projection_norm(concat({0}, x0), concat({1}, x1), z, psi);
}

} // namespace osp
