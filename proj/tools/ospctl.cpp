#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "osp/apps.hpp"
#include "osp/cvqc.hpp"
#include "osp/delegation.hpp"
#include "osp/osp.hpp"
#include "osp/selftest.hpp"
#include "osp/session.hpp"

using namespace osp;

namespace {

struct Common {
    std::uint64_t seed = 0;
    long trials = 1;
    int lambda = 8;
    int n = 3;
    double delta = 0.5;
    std::string out;
    std::string listen;
    std::string connect;
    std::string role;
    int timeout_ms = 10000;
};

std::uint64_t default_seed() {
    const char* s = std::getenv("OSPSIM_SEED");
    return s ? std::strtoull(s, nullptr, 10) : 0;
}

void add_common(CLI::App* app, Common& c, long trials, int lambda, bool network) {
    c.seed = default_seed();
    c.trials = trials;
    c.lambda = lambda;
    app->add_option("--seed", c.seed, "master seed (default $OSPSIM_SEED or 0)");
    app->add_option("--trials", c.trials, "number of runs")->check(CLI::PositiveNumber);
    app->add_option("--lambda", c.lambda, "security parameter")->check(CLI::PositiveNumber);
    app->add_option("--n", c.n, "TCF input size")->check(CLI::Range(1, 9));
    app->add_option("--delta", c.delta, "amplification delta")->check(CLI::Range(0.01, 1.0));
    app->add_option("--out", c.out, "write the transcript of the first run as JSON");
    if (network) {
        auto* l = app->add_option("--listen", c.listen, "accept sessions on host:port");
        auto* k = app->add_option("--connect", c.connect, "connect to host:port");
        l->excludes(k);
        app->add_option("--role", c.role, "client or server (default: listener serves)")
            ->check(CLI::IsMember({"client", "server"}));
        app->add_option("--timeout-ms", c.timeout_ms, "per-message timeout");
    }
}

void write_transcript(const Common& c, const Transcript& tr) {
    if (c.out.empty()) return;
    std::ofstream f(c.out);
    if (!f) throw std::runtime_error("cannot write " + c.out);
    f << tr.to_json().dump(2) << "\n";
}

OspSource osp_by_name(const std::string& name, const Common& c) {
    if (name == "ideal") return ideal_osp_source();
    if (name == "multi-round") return multi_round_osp_source(c.n, c.lambda);
    if (name == "two-round") return two_round_osp_source(c.n);
    if (name == "amplified") return amplified_osp_source(c.n, 1, c.delta, c.lambda);
    if (name == "epsilon") return epsilon_pipeline_source({1, 2, c.lambda, c.n});
    throw std::invalid_argument("unknown OSP path " + name);
}

const std::vector<std::string> kPaths{"ideal", "multi-round", "two-round", "amplified", "epsilon"};

// Runs `trials` sessions over TCP, one per connection; returns the client outcomes.
std::vector<SessionResult> network_sessions(SessionConfig cfg, const Common& c) {
    bool listening = !c.listen.empty();
    Role role = c.role.empty() ? (listening ? Role::Server : Role::Client) : (c.role == "client" ? Role::Client : Role::Server);
    std::optional<TcpListener> listener;
    if (listening) listener.emplace(parse_endpoint(c.listen));
    if (listening) std::cerr << "listening on port " << listener->port() << "\n";
    std::vector<SessionResult> out;
    for (long i = 0; i < c.trials; ++i) {
        cfg.seed = c.seed + std::uint64_t(i);
        std::unique_ptr<TcpChannel> ch;
        if (listening)
            ch = listener->accept(std::chrono::milliseconds(c.timeout_ms * 6));
        else
            ch = tcp_connect(parse_endpoint(c.connect), cfg.timeout);
        out.push_back(run_session(cfg, role, *ch));
        if (!out.back().ok()) {
            std::cerr << "session " << i << ": " << out.back().status << ": " << out.back().error << "\n";
            break;
        }
    }
    if (!out.empty()) write_transcript(c, out.front().transcript);
    return out;
}

int cmd_poq(const Common& c) {
    if (!c.listen.empty() || !c.connect.empty()) {
        SessionConfig cfg;
        cfg.protocol = "poq";
        cfg.n = c.n;
        cfg.timeout = std::chrono::milliseconds(c.timeout_ms);
        auto res = network_sessions(cfg, c);
        long acc = 0;
        for (auto& r : res) acc += r.outcome.value("accept", false);
        std::printf("sessions %zu  accepted %ld\n", res.size(), acc);
        return res.size() == std::size_t(c.trials) && res.back().ok() ? 0 : 1;
    }
    Rng rng = Rng::derive(c.seed, "poq");
    auto src = two_round_osp_source(c.n);
    Transcript tr("poq", c.seed);
    long acc = 0, aborted = 0;
    for (long i = 0; i < c.trials; ++i) {
        auto r = poq_run(src, honest_poq_prover(), rng, i == 0 ? &tr : nullptr);
        acc += r.accept;
        aborted += r.aborted;
    }
    write_transcript(c, tr);
    double p = double(acc) / double(c.trials);
    std::printf("acceptance %.4f  (%ld/%ld, aborted %ld; cos^2(pi/8) = %.4f)\n", p, acc, c.trials, aborted,
                std::pow(std::cos(kPi / 8), 2));
    return 0;
}

int cmd_ot(const Common& c, const std::string& variant, int choice) {
    auto v = ot_variant_from_string(variant);
    if (!c.listen.empty() || !c.connect.empty()) {
        SessionConfig cfg;
        cfg.protocol = "ot";
        cfg.lambda = c.lambda;
        cfg.variant = v;
        cfg.choice_bit = choice;
        cfg.timeout = std::chrono::milliseconds(c.timeout_ms);
        auto res = network_sessions(cfg, c);
        for (auto& r : res) std::cout << r.outcome.dump() << "\n";
        return res.size() == std::size_t(c.trials) && res.back().ok() ? 0 : 1;
    }
    Rng rng = Rng::derive(c.seed, "ot");
    Transcript tr("ot", c.seed);
    long good = 0;
    for (long i = 0; i < c.trials; ++i) {
        auto r = ot_run(v, choice, c.lambda, rng, i == 0 ? &tr : nullptr);
        bool ok = !r.caught && r.law_ok && r.r == (choice ? r.r1 : r.r0);
        good += ok;
        if (i == 0) std::printf("r0=%s r1=%s b=%d r=%s\n", to_string(r.r0).c_str(), to_string(r.r1).c_str(), choice, to_string(r.r).c_str());
    }
    write_transcript(c, tr);
    std::printf("r = r_b in %ld/%ld sessions (%s, lambda=%d)\n", good, c.trials, to_string(v).c_str(), c.lambda);
    return good == c.trials ? 0 : 1;
}

int cmd_puzzle(const Common& c, double threshold) {
    Rng rng = Rng::derive(c.seed, "puzzle");
    long pass[2] = {0, 0};
    double mean[2] = {0, 0};
    for (long i = 0; i < c.trials; ++i) {
        auto r = puzzle_roundtrip(c.lambda, threshold, c.n, rng);
        for (int k = 0; k < 2; ++k) {
            pass[k] += r.verdict[k];
            mean[k] += r.fraction[k] / double(c.trials);
        }
    }
    std::printf("lambda=%d threshold=%.3f\n", c.lambda, threshold);
    for (int k = 0; k < 2; ++k)
        std::printf("challenge %d: verified %ld/%ld, mean match fraction %.4f\n", k, pass[k], c.trials, mean[k]);
    return 0;
}

int cmd_delegate(const Common& c, const std::string& path, const std::string& input, const std::string& osp_name) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read circuit " + path);
    Circuit circ = parse_circuit(f);
    Bits x = from_string(input);
    if (int(x.size()) > circ.num_qubits) throw std::invalid_argument("input longer than circuit width");
    circ.classical_input_bits = int(x.size());
    DenseState v(circ.num_qubits - circ.classical_input_bits);
    auto osp = osp_by_name(osp_name, c);
    Rng rng = Rng::derive(c.seed, "delegate");
    auto want = evaluate(circ, x, v);
    Transcript tr("delegate", c.seed);
    double worst = 1;
    long aborted = 0;
    int tdg = 0;
    std::map<std::string, long> outputs;
    for (long i = 0; i < c.trials; ++i) {
        auto r = delegate(circ, x, v, osp, rng, i == 0 ? &tr : nullptr);
        if (r.aborted) {
            ++aborted;
            continue;
        }
        tdg = r.tdg_count;
        worst = std::min(worst, fidelity(unpad(r), want));
        outputs[to_string(classical_output_round(r, rng, i == 0 ? &tr : nullptr))]++;
    }
    write_transcript(c, tr);
    std::printf("circuit %s: %d qubits, %zu gates, %d T-dagger; input %s; OSP %s\n", path.c_str(), circ.num_qubits,
                circ.gates.size(), tdg, input.c_str(), osp_name.c_str());
    std::printf("runs %ld, aborted %ld, min output fidelity %.12f\n", c.trials, aborted, worst);
    for (auto& [y, k] : outputs) {
        double p = std::norm(want.amp(to_uint(from_string(y))));
        std::printf("  output %s: %ld (direct probability %.4f)\n", y.c_str(), k, p);
    }
    return worst >= 1 - 1e-6 ? 0 : 1;
}

int cmd_pke(const Common& c, int message) {
    Rng rng = Rng::derive(c.seed, "pke");
    Transcript tr("pke", c.seed);
    long ok = 0, ones = 0;
    for (long i = 0; i < c.trials; ++i) {
        int m = message >= 0 ? message : rng.bit();
        auto r = pke_roundtrip(m, rng, i == 0 ? &tr : nullptr);
        ok += r.decrypted && *r.decrypted == m;
        ones += r.b;
    }
    write_transcript(c, tr);
    std::printf("decrypted %ld/%ld; b=1 in %ld (chi-square p=%.3f)\n", ok, c.trials, ones, selftest::chi2_p_1dof(ones, c.trials));
    return ok == c.trials ? 0 : 1;
}

int cmd_commit(const Common& c, int bit, const std::string& osp_name) {
    Rng rng = Rng::derive(c.seed, "commit");
    auto osp = osp_by_name(osp_name, c);
    Transcript tr("commit", c.seed);
    long acc = 0, aborted = 0;
    for (long i = 0; i < c.trials; ++i) {
        int b = bit >= 0 ? bit : rng.bit();
        auto r = commit_run(osp, b, c.lambda, rng, i == 0 ? &tr : nullptr);
        acc += r.accept;
        aborted += r.aborted;
    }
    write_transcript(c, tr);
    std::printf("opened and accepted %ld/%ld (aborted %ld, lambda=%d)\n", acc, c.trials, aborted, c.lambda);
    if (c.lambda <= 16) {
        DenseState s(c.lambda);
        auto p = binding_probe(s);
        std::printf("binding probe on |0..0>: pr0 %.6f + pr1 %.6f = %.6f\n", p.pr0, p.pr1, p.sum());
    }
    return acc + aborted == c.trials ? 0 : 1;
}

int cmd_cvqc(const Common& c, const std::string& path, double kappa, bool delegated, const std::string& osp_name) {
    Hamiltonian h;
    if (path.empty()) {
        h = parse_hamiltonian("QUBITS 2\nX 0 1 0.5\nZ 0 1 0.5\n");
    } else {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot read Hamiltonian " + path);
        h = parse_hamiltonian(f);
    }
    GameParams g{kappa, min_eigenvalue(h), 0};
    Rng rng = Rng::derive(c.seed, "cvqc");
    auto osp = osp_by_name(osp_name, c);
    Transcript tr("cvqc", c.seed);
    honest_round(h, g, ground_state(h), delegated, osp, rng, &tr);
    write_transcript(c, tr);
    auto v = estimate_value(h, g, c.trials, delegated, osp, rng);
    std::printf("%s", format_hamiltonian(h).c_str());
    std::printf("min eigenvalue %.6f; kappa %.3f; %s\n", g.alpha, kappa, delegated ? "delegated" : "direct");
    std::printf("value %.5f  [%.5f, %.5f]  (%ld/%ld); formula %.5f\n", v.mean, v.lo, v.hi, v.accepts, v.rounds,
                completeness_value(g));
    return 0;
}

int cmd_osp_trace(const Common& c, const std::string& osp_name, int basis) {
    auto osp = osp_by_name(osp_name, c);
    Rng rng = Rng::derive(c.seed, "osp-trace");
    Transcript tr("osp-" + osp_name, c.seed);
    auto o = osp(basis >= 0 ? std::optional<int>(basis) : std::nullopt, rng, &tr);
    tr.summary() = {{"b", o.b}, {"s", o.s}, {"aborted", o.aborted}};
    if (c.out.empty())
        std::cout << tr.to_json().dump(2) << "\n";
    else
        write_transcript(c, tr);
    if (!o.aborted)
        std::fprintf(stderr, "b=%d s=%d projection norm %.12f\n", o.b, o.s, osp_projection_norm(o.b, o.s, o.receiver_state));
    else
        std::fprintf(stderr, "aborted\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"oblivious state preparation toolkit"};
    app.require_subcommand(1);

    Common poq, puzzle, deleg, ot, pke, commit, cvqc, trace, self;
    auto* s_poq = app.add_subcommand("poq", "proof of quantumness Monte-Carlo or networked session");
    add_common(s_poq, poq, 1000, 8, true);

    double threshold = 0.82;
    auto* s_puzzle = app.add_subcommand("puzzle", "1-of-2 puzzle keygen, obligation and both challenges");
    add_common(s_puzzle, puzzle, 10, 1024, false);
    puzzle.n = 2;
    s_puzzle->add_option("--threshold", threshold, "match fraction required")->check(CLI::Range(0.0, 1.0));

    std::string circuit, input, deleg_osp = "two-round";
    auto* s_deleg = app.add_subcommand("delegate", "blind delegation of a Clifford+T circuit");
    add_common(s_deleg, deleg, 1, 8, false);
    s_deleg->add_option("--circuit", circuit, "circuit file")->required()->check(CLI::ExistingFile);
    s_deleg->add_option("--input", input, "classical input bits for the leading qubits");
    s_deleg->add_option("--osp", deleg_osp, "OSP path")->check(CLI::IsMember(kPaths));

    std::string variant = "search";
    int choice = 0;
    auto* s_ot = app.add_subcommand("ot", "oblivious transfer");
    add_common(s_ot, ot, 1, 8, true);
    s_ot->add_option("--variant", variant, "search or indistinguishability")->check(CLI::IsMember({"search", "indistinguishability"}));
    s_ot->add_option("--choice", choice, "receiver choice bit")->check(CLI::Range(0, 1));

    int message = -1;
    auto* s_pke = app.add_subcommand("pke", "public-key encryption roundtrips");
    add_common(s_pke, pke, 100, 8, false);
    s_pke->add_option("--message", message, "plaintext bit (default random)")->check(CLI::Range(0, 1));

    int bit = -1;
    std::string commit_osp = "two-round";
    auto* s_commit = app.add_subcommand("commit", "OSP-based bit commitment");
    add_common(s_commit, commit, 100, 8, false);
    s_commit->add_option("--bit", bit, "committed bit (default random)")->check(CLI::Range(0, 1));
    s_commit->add_option("--osp", commit_osp, "OSP path")->check(CLI::IsMember(kPaths));

    std::string ham;
    double kappa = 0.2;
    bool delegated = false;
    std::string cvqc_osp = "two-round";
    auto* s_cvqc = app.add_subcommand("cvqc", "Hamiltonian verification game value");
    add_common(s_cvqc, cvqc, 10000, 2, false);
    cvqc.n = 2;
    s_cvqc->add_option("--hamiltonian", ham, "Hamiltonian file (default 0.5 XX + 0.5 ZZ)")->check(CLI::ExistingFile);
    s_cvqc->add_option("--kappa", kappa, "Teleport round weight")->check(CLI::Range(0.0, 1.0));
    s_cvqc->add_flag("--delegated", delegated, "run the first prover under blind delegation");
    s_cvqc->add_option("--osp", cvqc_osp, "OSP path for delegation")->check(CLI::IsMember(kPaths));

    std::string trace_osp = "two-round";
    int basis = -1;
    auto* s_trace = app.add_subcommand("osp-trace", "one OSP run with its full transcript");
    add_common(s_trace, trace, 1, 4, false);
    s_trace->add_option("--osp", trace_osp, "OSP path")->check(CLI::IsMember(kPaths));
    s_trace->add_option("--basis", basis, "chosen basis b (default random)")->check(CLI::Range(0, 1));

    std::vector<int> only;
    auto* s_self = app.add_subcommand("selftest", "run the acceptance suite");
    add_common(s_self, self, 1, 8, false);
    self.seed = std::getenv("OSPSIM_SEED") ? default_seed() : 20240601;
    s_self->add_option("--only", only, "criterion ids to run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*s_poq) return cmd_poq(poq);
        if (*s_puzzle) return cmd_puzzle(puzzle, threshold);
        if (*s_deleg) return cmd_delegate(deleg, circuit, input, deleg_osp);
        if (*s_ot) return cmd_ot(ot, variant, choice);
        if (*s_pke) return cmd_pke(pke, message);
        if (*s_commit) return cmd_commit(commit, bit, commit_osp);
        if (*s_cvqc) return cmd_cvqc(cvqc, ham, kappa, delegated, cvqc_osp);
        if (*s_trace) return cmd_osp_trace(trace, trace_osp, basis);
        if (*s_self) return selftest::run(self.seed, std::cout, std::set<int>(only.begin(), only.end())) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
