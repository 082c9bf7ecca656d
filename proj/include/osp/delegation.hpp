#pragma once

#include <cctype>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
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

struct Op {
    Gate g = Gate::H;
    int q0 = 0;
    int q1 = -1;
};

// Classical input bits occupy the first qubits; the rest is the server register V.
struct Circuit {
    int num_qubits = 0;
    std::vector<Op> gates;
    int classical_input_bits = 0;

    Circuit& add(Gate g, int a, int b = -1) {
        gates.push_back({g, a, b});
        return *this;
    }
};

inline bool is_clifford_generator(Gate g) {
    return g == Gate::H || g == Gate::P || g == Gate::X || g == Gate::Z || g == Gate::CNOT;
}

inline void validate(const Circuit& c) {
    if (c.num_qubits < 1) throw std::invalid_argument("circuit: needs at least one qubit");
    if (c.classical_input_bits < 0 || c.classical_input_bits > c.num_qubits)
        throw std::invalid_argument("circuit: classical input count out of range");
    for (const auto& op : c.gates) {
        if (!is_clifford_generator(op.g) && op.g != Gate::Tdg && op.g != Gate::T)
            throw std::invalid_argument("circuit: unsupported gate");
        auto in_range = [&](int q) { return q >= 0 && q < c.num_qubits; };
        if (!in_range(op.q0)) throw std::out_of_range("circuit: qubit out of range");
        if (op.g == Gate::CNOT && (!in_range(op.q1) || op.q1 == op.q0))
            throw std::invalid_argument("circuit: bad CNOT operands");
    }
}

// C_1 T† C_2 T† ... C_{k+1}: blocks.size() == tdg.size() + 1.
struct Compiled {
    int num_qubits = 0;
    std::vector<std::vector<Op>> blocks;
    std::vector<int> tdg;
};

inline Compiled compile(const Circuit& c) {
    validate(c);
    Compiled out;
    out.num_qubits = c.num_qubits;
    out.blocks.emplace_back();
    for (const auto& op : c.gates) {
        if (op.g == Gate::Tdg || op.g == Gate::T) {
            out.tdg.push_back(op.q0);
            out.blocks.emplace_back();
            if (op.g == Gate::T) out.blocks.back().push_back({Gate::P, op.q0, -1});
        } else {
            out.blocks.back().push_back(op);
        }
    }
    return out;
}

// C X^r Z^s = X^r' Z^s' C up to global phase.
inline PauliFrame pauli_update_clifford(PauliFrame f, const Op& op) {
    auto q = static_cast<std::size_t>(op.q0);
    switch (op.g) {
    case Gate::H: std::swap(f.x_keys[q], f.z_keys[q]); break;
    case Gate::P: f.z_keys[q] ^= f.x_keys[q]; break;
    case Gate::X:
    case Gate::Z: break;
    case Gate::CNOT: {
        auto t = static_cast<std::size_t>(op.q1);
        f.x_keys[t] ^= f.x_keys[q];
        f.z_keys[q] ^= f.z_keys[t];
        break;
    }
    default: throw std::invalid_argument("pauli_update_clifford: not a Clifford generator");
    }
    return f;
}

inline void apply_op(DenseState& st, const Op& op) {
    if (op.g == Gate::CNOT)
        st.apply(Gate::CNOT, {op.q0, op.q1});
    else
        st.apply(op.g, {op.q0});
}

// Direct evaluation of Q on |x> ⊗ V.
inline DenseState evaluate(const Circuit& c, const Bits& x, const DenseState& v) {
    validate(c);
    if (static_cast<int>(x.size()) != c.classical_input_bits) throw std::invalid_argument("evaluate: input width");
    DenseState st = x.empty() ? v : DenseState::basis_state(x).tensor(v);
    if (st.num_qubits() != c.num_qubits) throw std::invalid_argument("evaluate: register width");
    for (const auto& op : c.gates) apply_op(st, op);
    return st;
}

struct DelegationResult {
    DenseState server_state;
    PauliFrame client_keys;
    std::optional<Bits> classical_output;
    int tdg_count = 0;
    bool aborted = false;
};

// Called after every protocol step with the current (padded) server state and client frame.
using FrameProbe = std::function<void(std::size_t step, const DenseState&, const PauliFrame&)>;

inline DelegationResult delegate(const Circuit& c, const Bits& x, const DenseState& v, const OspSource& osp, Rng& rng,
                                 Transcript* tr = nullptr, const FrameProbe& probe = {}) {
    auto comp = compile(c);
    const int k = c.classical_input_bits;
    if (static_cast<int>(x.size()) != k) throw std::invalid_argument("delegate: input width");
    if (k + v.num_qubits() != c.num_qubits) throw std::invalid_argument("delegate: register width");
    if (c.num_qubits + 1 > DenseState::kMaxQubits) throw std::length_error("delegate: too many qubits");

    DelegationResult res;
    PauliFrame f(static_cast<std::size_t>(c.num_qubits));
    Bits r_inp = random_bits(static_cast<std::size_t>(k), rng);
    for (int i = 0; i < k; ++i) f.x_keys[std::size_t(i)] = r_inp[std::size_t(i)];
    Bits padded = x ^ r_inp;
    record(tr, Role::Client, "deleg.input", {{"x", bits_json(padded)}});
    DenseState st = k ? DenseState::basis_state(padded).tensor(v) : v;

    std::size_t step = 0;
    for (std::size_t blk = 0; blk < comp.blocks.size(); ++blk) {
        for (const auto& op : comp.blocks[blk]) {
            apply_op(st, op);
            f = pauli_update_clifford(f, op);
        }
        if (probe) probe(step++, st, f);
        if (blk == comp.tdg.size()) break;
        int q = comp.tdg[blk];
        st.apply(Gate::Tdg, {q});
        // T† X^r Z^s = (P†)^r X^r Z^s T†, undone by an encrypted P^r
        auto e = encrypted_phase(f.x_keys[std::size_t(q)], st, q, osp, rng, tr);
        if (e.aborted) {
            res.aborted = true;
            res.server_state = st;
            res.client_keys = f;
            return res;
        }
        f.z_keys[std::size_t(q)] ^= static_cast<std::uint8_t>(e.s_out);
        ++res.tdg_count;
    }
    res.server_state = std::move(st);
    res.client_keys = f;
    return res;
}

inline DenseState unpad(const DelegationResult& r) {
    DenseState s = r.server_state;
    std::vector<int> all(static_cast<std::size_t>(s.num_qubits()));
    std::iota(all.begin(), all.end(), 0);
    remove_pad(s, all, r.client_keys);
    return s;
}

// Server measures everything in Z and returns y ^ r; the client removes r.
inline Bits classical_output_round(DelegationResult& r, Rng& rng, Transcript* tr = nullptr) {
    DenseState s = r.server_state;
    Bits masked;
    for (int q = 0; q < s.num_qubits(); ++q) masked.push_back(static_cast<std::uint8_t>(s.measure_qubit(q, Basis::Z, rng)));
    record(tr, Role::Server, "deleg.output", {{"y", bits_json(masked)}});
    Bits y = masked ^ r.client_keys.x_keys;
    r.classical_output = y;
    return y;
}

// `QUBITS n` then one gate per line: H q, P q, X q, Z q, T q, TDG q, CNOT c t; '#' starts a comment.
inline Circuit parse_circuit(std::istream& in) {
    Circuit c;
    std::string line;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        for (auto& ch : word) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        auto fail = [&](const std::string& why) {
            throw std::invalid_argument("circuit line " + std::to_string(lineno) + ": " + why);
        };
        if (!have_header) {
            if (word != "QUBITS" || !(ls >> c.num_qubits) || c.num_qubits < 1) fail("expected QUBITS n");
            have_header = true;
            continue;
        }
        Op op;
        if (word == "H") op.g = Gate::H;
        else if (word == "P" || word == "S") op.g = Gate::P;
        else if (word == "X") op.g = Gate::X;
        else if (word == "Z") op.g = Gate::Z;
        else if (word == "T") op.g = Gate::T;
        else if (word == "TDG") op.g = Gate::Tdg;
        else if (word == "CNOT" || word == "CX") op.g = Gate::CNOT;
        else fail("unknown gate " + word);
        if (!(ls >> op.q0)) fail("missing qubit");
        if (op.g == Gate::CNOT && !(ls >> op.q1)) fail("missing target");
        std::string extra;
        if (ls >> extra) fail("trailing tokens");
        c.gates.push_back(op);
    }
    if (!have_header) throw std::invalid_argument("circuit: missing QUBITS header");
    validate(c);
    return c;
}

inline Circuit parse_circuit(const std::string& text) {
    std::istringstream in(text);
    return parse_circuit(in);
}

inline std::string format_circuit(const Circuit& c) {
    std::ostringstream o;
    o << "QUBITS " << c.num_qubits << "\n";
    for (const auto& op : c.gates) {
        switch (op.g) {
        case Gate::H: o << "H"; break;
        case Gate::P: o << "P"; break;
        case Gate::X: o << "X"; break;
        case Gate::Z: o << "Z"; break;
        case Gate::T: o << "T"; break;
        case Gate::Tdg: o << "TDG"; break;
        case Gate::CNOT: o << "CNOT"; break;
        default: throw std::invalid_argument("format_circuit: unsupported gate");
        }
        o << " " << op.q0;
        if (op.g == Gate::CNOT) o << " " << op.q1;
        o << "\n";
    }
    return o.str();
}

// Random word over {H, P, X, Z, CNOT, Tdg} with at most max_tdg T† gates.
inline Circuit random_clifford_tdg(int n, int length, int max_tdg, Rng& rng) {
    Circuit c;
    c.num_qubits = n;
    int tdg = 0;
    for (int i = 0; i < length; ++i) {
        auto pick = rng.below(6);
        int q = static_cast<int>(rng.below(std::uint64_t(n)));
        if (pick == 5 && tdg < max_tdg) {
            c.add(Gate::Tdg, q);
            ++tdg;
        } else if (pick == 4 && n > 1) {
            int t = static_cast<int>(rng.below(std::uint64_t(n - 1)));
            if (t >= q) ++t;
            c.add(Gate::CNOT, q, t);
        } else {
            const Gate g1[] = {Gate::H, Gate::P, Gate::X, Gate::Z};
            c.add(g1[rng.below(4)], q);
        }
    }
    return c;
}

// ---- Clifford+T building blocks for classically controlled logic

inline void append_toffoli(Circuit& c, int a, int b, int t) {
    c.add(Gate::H, t).add(Gate::CNOT, b, t).add(Gate::Tdg, t).add(Gate::CNOT, a, t).add(Gate::T, t);
    c.add(Gate::CNOT, b, t).add(Gate::Tdg, t).add(Gate::CNOT, a, t).add(Gate::T, b).add(Gate::T, t).add(Gate::H, t);
    c.add(Gate::CNOT, a, b).add(Gate::T, a).add(Gate::Tdg, b).add(Gate::CNOT, a, b);
}

inline void append_fredkin(Circuit& c, int ctl, int a, int b) {
    c.add(Gate::CNOT, b, a);
    append_toffoli(c, ctl, a, b);
    c.add(Gate::CNOT, b, a);
}

inline void append_pdg(Circuit& c, int q) { c.add(Gate::P, q).add(Gate::Z, q); }

// V = S H T† H S† with V X V† = H; V maps the +1 eigenvector of H to |0>.
inline void append_hadamard_frame(Circuit& c, int q) {
    append_pdg(c, q);
    c.add(Gate::H, q).add(Gate::Tdg, q).add(Gate::H, q).add(Gate::P, q);
}

inline void append_hadamard_frame_dg(Circuit& c, int q) {
    append_pdg(c, q);
    c.add(Gate::H, q).add(Gate::T, q).add(Gate::H, q).add(Gate::P, q);
}

// Controlled-H as V CNOT V†.
inline void append_controlled_h(Circuit& c, int ctl, int t) {
    append_hadamard_frame_dg(c, t);
    c.add(Gate::CNOT, ctl, t);
    append_hadamard_frame(c, t);
}

} // namespace osp
