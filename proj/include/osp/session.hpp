#pragma once

#include <chrono>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "apps.hpp"
#include "osp.hpp"
#include "transcript.hpp"
#include "wire.hpp"

namespace osp {

constexpr int kWireVersion = 1;

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SessionConfig {
    std::string protocol = "poq";
    std::uint64_t seed = 0;
    int n = 3;
    int lambda = 8;
    OtVariant variant = OtVariant::Search;
    int choice_bit = 0; // OT client only; never sent
    std::chrono::milliseconds timeout{10000};

    // Parameters both sides must agree on.
    json public_params() const {
        json p = {{"protocol", protocol}, {"version", kWireVersion}};
        if (protocol == "poq") p["n"] = n;
        if (protocol == "ot") {
            p["lambda"] = lambda;
            p["variant"] = to_string(variant);
        }
        return p;
    }
};

struct SessionResult {
    Transcript transcript;
    json outcome = json::object();
    std::string status = "ok";
    std::string error;

    bool ok() const { return status == "ok"; }
};

class Peer {
public:
    Peer(Channel& ch, Transcript& tr, Role role, std::chrono::milliseconds timeout)
        : ch_(ch), tr_(tr), role_(role), timeout_(timeout) {}

    void send(const char* kind, json payload) { ch_.send(frame_encode(tr_.record(role_, kind, std::move(payload)))); }

    std::pair<std::string, json> recv_any(std::initializer_list<const char*> kinds) {
        Message m = frame_decode(ch_.recv(timeout_));
        if (m.session != tr_.session()) throw ProtocolError("session id mismatch");
        if (m.role == role_) throw ProtocolError("message from own role");
        tr_.append(m);
        if (m.kind == "error") throw ProtocolError("peer error: " + m.payload.value("reason", std::string("unknown")));
        for (const char* k : kinds)
            if (m.kind == k) return {m.kind, m.payload};
        throw ProtocolError("unexpected message kind " + m.kind);
    }

    json recv(const char* kind) { return recv_any({kind}).second; }

private:
    Channel& ch_;
    Transcript& tr_;
    Role role_;
    std::chrono::milliseconds timeout_;
};

inline Rng role_rng(const SessionConfig& cfg, Role role) { return Rng::derive(cfg.seed, cfg.protocol + "." + to_string(role)); }

inline void poq_client(const SessionConfig& cfg, Peer& p, SessionResult& res) {
    Rng rng = role_rng(cfg, Role::Client);
    int r = rng.bit();
    auto st = two_round_sen(r, cfg.n, rng);
    p.send("poq.pp", {{"pp", to_json(st.tcf.pp)}});
    auto yd = two_round_msg_from_json(p.recv("poq.yd"));
    auto s = two_round_dec(st, yd);
    if (!s) {
        p.send("poq.verdict", {{"accept", false}, {"aborted", true}});
        res.outcome = {{"r", r}, {"aborted", true}, {"accept", false}};
        return;
    }
    int a = rng.bit();
    p.send("poq.a", {{"a", a}});
    int b = p.recv("poq.b").at("b").get<int>();
    bool accept = poq_predicate(r, *s, a, b);
    p.send("poq.verdict", {{"accept", accept}, {"aborted", false}});
    res.outcome = {{"r", r}, {"s", *s}, {"a", a}, {"b", b}, {"accept", accept}, {"aborted", false}};
}

inline void poq_server(const SessionConfig& cfg, Peer& p, SessionResult& res) {
    Rng rng = role_rng(cfg, Role::Server);
    auto pp = tcf_public_from_json(p.recv("poq.pp").at("pp"));
    TwoRoundReceiverMsg msg;
    Qubit q = two_round_rec(pp, rng, msg);
    p.send("poq.yd", to_json(msg));
    auto [kind, body] = p.recv_any({"poq.a", "poq.verdict"});
    if (kind == "poq.verdict") {
        res.outcome = {{"aborted", true}, {"accept", false}};
        return;
    }
    int b = honest_poq_answer(q, body.at("a").get<int>(), rng);
    p.send("poq.b", {{"b", b}});
    res.outcome = {{"b", b}, {"accept", p.recv("poq.verdict").at("accept").get<bool>()}, {"aborted", false}};
}

inline void ot_client(const SessionConfig& cfg, Peer& p, SessionResult& res) {
    Rng rng = role_rng(cfg, Role::Client);
    OtReceiver rec;
    rec.variant = cfg.variant;
    rec.lambda = cfg.lambda;
    rec.b = cfg.choice_bit;
    p.send("ot.csg", rec.start(rng));
    auto commit = rec.commit(p.recv("ot.csg.reply"), rng);
    if (cfg.variant == OtVariant::Indistinguishability) p.send("ot.commit", commit);
    p.send("ot.open", rec.open(p.recv("ot.check")));
    bool ok = p.recv("ot.result").at("ok").get<bool>();
    res.outcome = {{"b", cfg.choice_bit}, {"r", bits_json(rec.output)}, {"ok", ok}};
}

inline void ot_server(const SessionConfig& cfg, Peer& p, SessionResult& res) {
    Rng rng = role_rng(cfg, Role::Server);
    OtSender sen;
    sen.variant = cfg.variant;
    sen.lambda = cfg.lambda;
    p.send("ot.csg.reply", sen.reply(p.recv("ot.csg"), rng));
    json commit = cfg.variant == OtVariant::Indistinguishability ? p.recv("ot.commit") : json::object();
    p.send("ot.check", sen.choose_check(commit, rng));
    p.send("ot.result", sen.finish(p.recv("ot.open"), rng));
    res.outcome = {{"r0", bits_json(sen.r0)}, {"r1", bits_json(sen.r1)}, {"ok", !sen.caught}};
}

// Runs one role of a session to completion; failures keep the partial transcript.
inline SessionResult run_session(const SessionConfig& cfg, Role role, Channel& ch) {
    SessionResult res;
    res.transcript = Transcript(cfg.protocol, cfg.seed);
    Peer p(ch, res.transcript, role, cfg.timeout);
    try {
        if (cfg.protocol != "poq" && cfg.protocol != "ot") throw std::invalid_argument("unknown protocol " + cfg.protocol);
        if (role == Role::Client) {
            p.send("hello", cfg.public_params());
        } else {
            json hello = p.recv("hello");
            if (hello != cfg.public_params()) {
                std::string reason = hello.value("version", 0) != kWireVersion ? "version mismatch" : "parameter mismatch";
                p.send("error", {{"reason", reason}});
                throw ProtocolError(reason);
            }
        }
        if (cfg.protocol == "poq")
            role == Role::Client ? poq_client(cfg, p, res) : poq_server(cfg, p, res);
        else
            role == Role::Client ? ot_client(cfg, p, res) : ot_server(cfg, p, res);
        res.transcript.summary() = {{"status", "ok"}};
    } catch (const TimeoutError& e) {
        res.status = "timeout";
        res.error = e.what();
    } catch (const DisconnectError& e) {
        res.status = "disconnected";
        res.error = e.what();
    } catch (const std::exception& e) {
        res.status = "error";
        res.error = e.what();
    }
    if (!res.ok()) res.transcript.summary() = {{"status", res.status}, {"error", res.error}};
    return res;
}

struct SessionPair {
    SessionResult client;
    SessionResult server;
};

inline SessionPair run_in_process(const SessionConfig& cfg) {
    auto [a, b] = MemoryChannel::pair();
    SessionPair out;
    std::thread t([&, ch = b] {
        out.server = run_session(cfg, Role::Server, *ch);
        ch->close();
    });
    out.client = run_session(cfg, Role::Client, *a);
    a->close();
    t.join();
    return out;
}

// Both roles in this process over a TCP loopback connection.
inline SessionPair run_loopback(const SessionConfig& cfg) {
    TcpListener listener(Endpoint{"127.0.0.1", 0});
    SessionPair out;
    std::thread t([&] {
        try {
            auto ch = listener.accept(cfg.timeout);
            out.server = run_session(cfg, Role::Server, *ch);
        } catch (const std::exception& e) {
            out.server.status = "error";
            out.server.error = e.what();
        }
    });
    try {
        auto ch = tcp_connect(Endpoint{"127.0.0.1", listener.port()}, cfg.timeout);
        out.client = run_session(cfg, Role::Client, *ch);
    } catch (const std::exception& e) {
        out.client.status = "error";
        out.client.error = e.what();
    }
    t.join();
    return out;
}

} // namespace osp
