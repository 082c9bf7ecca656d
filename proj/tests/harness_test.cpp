#include <gtest/gtest.h>

#include "osp/session.hpp"

using namespace osp;

namespace {

Message random_message(Rng& rng) {
    Message m;
    m.session = session_id(rng(), "p");
    m.seq = rng.below(1000);
    m.role = rng.bit() ? Role::Client : Role::Server;
    m.kind = "k" + std::to_string(rng.below(50));
    json p = json::object();
    for (std::uint64_t i = 0, n = rng.below(5); i < n; ++i) {
        std::string key = "f" + std::to_string(rng.below(100));
        switch (rng.below(4)) {
        case 0: p[key] = rng.below(1u << 30); break;
        case 1: p[key] = rng.bit() == 1; break;
        case 2: p[key] = to_string(random_bits(rng.below(20), rng)); break;
        default: p[key] = json::array({rng.below(10), "x\n\"y\"", nullptr});
        }
    }
    m.payload = p;
    return m;
}

} // namespace

TEST(Frame, EmptyPayload) {
    Message m{"s", 0, Role::Client, "hello", json::object()};
    auto f = frame_encode(m);
    std::string body = canonical(to_json(m));
    EXPECT_EQ(f.size(), 4 + body.size());
    EXPECT_EQ(read_length(f), body.size());
    EXPECT_EQ(frame_decode(f), m);
}

TEST(Frame, CanonicalSortedKeys) {
    Message m{"s", 1, Role::Server, "k", {{"zeta", 1}, {"alpha", 2}}};
    auto f = frame_encode(m);
    std::string body = f.substr(4);
    EXPECT_EQ(body, R"({"kind":"k","payload":{"alpha":2,"zeta":1},"role":"server","seq":1,"session":"s"})");
}

TEST(Frame, RandomRoundTrip) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        auto m = random_message(rng);
        auto f = frame_encode(m);
        ASSERT_EQ(frame_decode(f), m);
        ASSERT_EQ(frame_encode(frame_decode(f)), f);
    }
}

TEST(Frame, Errors) {
    Message m{"s", 0, Role::Client, "hello", {{"a", 1}}};
    auto f = frame_encode(m);
    EXPECT_THROW(frame_decode(f.substr(0, 2)), FrameError);
    EXPECT_THROW(frame_decode(f.substr(0, f.size() - 1)), FrameError);
    EXPECT_THROW(frame_decode(f + "x"), FrameError);
    std::string bad = "{not json";
    EXPECT_THROW(frame_decode(length_prefix(bad.size()) + bad), FrameError);
    std::string arr = "[1,2]";
    EXPECT_THROW(frame_decode(length_prefix(arr.size()) + arr), FrameError);
    std::string big("\x01\x00\x00\x01", 4);
    EXPECT_THROW(frame_decode(big), FrameError);
    EXPECT_THROW(length_prefix(kMaxFrame + 1), FrameError);
}

TEST(Channel, MemoryTimeoutAndDisconnect) {
    auto [a, b] = MemoryChannel::pair();
    EXPECT_THROW(b->recv(std::chrono::milliseconds(20)), TimeoutError);
    a->send("x");
    EXPECT_EQ(b->recv(std::chrono::milliseconds(20)), "x");
    a->close();
    EXPECT_THROW(b->recv(std::chrono::milliseconds(20)), DisconnectError);
    EXPECT_THROW(b->send("y"), DisconnectError);
}

TEST(Endpoint, Parse) {
    auto e = parse_endpoint("localhost:5000");
    EXPECT_EQ(e.host, "localhost");
    EXPECT_EQ(e.port, 5000);
    EXPECT_EQ(parse_endpoint(":7").host, "127.0.0.1");
    EXPECT_THROW(parse_endpoint("nohost"), std::invalid_argument);
    EXPECT_THROW(parse_endpoint("h:99999"), std::invalid_argument);
    EXPECT_THROW(parse_endpoint("h:abc"), std::invalid_argument);
}

TEST(Session, PoqInProcessMatchesLoopback) {
    for (std::uint64_t seed : {1, 2, 3, 7}) {
        SessionConfig cfg;
        cfg.protocol = "poq";
        cfg.seed = seed;
        auto mem = run_in_process(cfg);
        auto tcp = run_loopback(cfg);
        ASSERT_TRUE(mem.client.ok()) << mem.client.error;
        ASSERT_TRUE(tcp.client.ok()) << tcp.client.error;
        EXPECT_EQ(mem.client.transcript.serialize(), tcp.client.transcript.serialize());
        EXPECT_EQ(mem.client.transcript.serialize(), mem.server.transcript.serialize());
        EXPECT_EQ(tcp.server.transcript.serialize(), tcp.client.transcript.serialize());
        EXPECT_EQ(mem.client.outcome, tcp.client.outcome);
    }
}

TEST(Session, PoqHonestRate) {
    int acc = 0;
    const int n = 400;
    for (int s = 0; s < n; ++s) {
        SessionConfig cfg;
        cfg.seed = std::uint64_t(1000 + s);
        cfg.n = 2;
        auto r = run_in_process(cfg);
        ASSERT_TRUE(r.client.ok());
        acc += r.client.outcome.at("accept").get<bool>();
    }
    EXPECT_NEAR(double(acc) / n, 0.8536, 3 * std::sqrt(0.8536 * 0.1464 / n));
}

TEST(Session, OtOverLoopback) {
    for (auto v : {OtVariant::Search, OtVariant::Indistinguishability})
        for (int b = 0; b < 2; ++b) {
            SessionConfig cfg;
            cfg.protocol = "ot";
            cfg.seed = 40 + std::uint64_t(b);
            cfg.lambda = 6;
            cfg.variant = v;
            cfg.choice_bit = b;
            auto tcp = run_loopback(cfg);
            ASSERT_TRUE(tcp.client.ok()) << tcp.client.error;
            ASSERT_TRUE(tcp.server.ok()) << tcp.server.error;
            EXPECT_TRUE(tcp.client.outcome.at("ok").get<bool>());
            EXPECT_EQ(tcp.client.outcome.at("r"), tcp.server.outcome.at(b ? "r1" : "r0"));
            auto mem = run_in_process(cfg);
            EXPECT_EQ(mem.client.transcript.serialize(), tcp.client.transcript.serialize());
        }
}

TEST(Session, SameSeedSameTranscript) {
    SessionConfig cfg;
    cfg.protocol = "ot";
    cfg.seed = 99;
    cfg.lambda = 4;
    auto a = run_in_process(cfg), b = run_in_process(cfg);
    EXPECT_EQ(a.client.transcript.serialize(), b.client.transcript.serialize());
    cfg.seed = 100;
    auto c = run_in_process(cfg);
    EXPECT_NE(a.client.transcript.serialize(), c.client.transcript.serialize());
}

TEST(Session, VersionMismatch) {
    auto [a, b] = MemoryChannel::pair();
    SessionConfig cfg;
    cfg.timeout = std::chrono::milliseconds(2000);
    SessionResult server;
    std::thread t([&, ch = b] { server = run_session(cfg, Role::Server, *ch); });
    Transcript tr("poq", cfg.seed);
    Peer p(*a, tr, Role::Client, cfg.timeout);
    auto hello = cfg.public_params();
    hello["version"] = kWireVersion + 1;
    p.send("hello", hello);
    EXPECT_THROW(p.recv("poq.pp"), ProtocolError);
    t.join();
    EXPECT_EQ(server.status, "error");
    EXPECT_NE(server.error.find("version"), std::string::npos);
}

TEST(Session, DisconnectKeepsPartialTranscript) {
    auto [a, b] = MemoryChannel::pair();
    SessionConfig cfg;
    cfg.timeout = std::chrono::milliseconds(2000);
    SessionResult server;
    std::thread t([&, ch = b] { server = run_session(cfg, Role::Server, *ch); });
    Transcript tr("poq", cfg.seed);
    Peer p(*a, tr, Role::Client, cfg.timeout);
    p.send("hello", cfg.public_params());
    a->close();
    t.join();
    EXPECT_EQ(server.status, "disconnected");
    ASSERT_EQ(server.transcript.messages().size(), 1u);
    EXPECT_EQ(server.transcript.messages()[0].kind, "hello");
}

TEST(Session, TimeoutKeepsPartialTranscript) {
    auto [a, b] = MemoryChannel::pair();
    SessionConfig cfg;
    cfg.timeout = std::chrono::milliseconds(100);
    SessionResult server;
    std::thread t([&, ch = b] { server = run_session(cfg, Role::Server, *ch); });
    Transcript tr("poq", cfg.seed);
    Peer p(*a, tr, Role::Client, cfg.timeout);
    p.send("hello", cfg.public_params());
    t.join();
    EXPECT_EQ(server.status, "timeout");
    EXPECT_EQ(server.transcript.messages().size(), 1u);
    EXPECT_EQ(server.transcript.summary().at("status"), "timeout");
}

TEST(Session, TcpPeerVanishes) {
    TcpListener listener(Endpoint{"127.0.0.1", 0});
    SessionConfig cfg;
    cfg.timeout = std::chrono::milliseconds(2000);
    SessionResult server;
    std::thread t([&] {
        auto ch = listener.accept(cfg.timeout);
        server = run_session(cfg, Role::Server, *ch);
    });
    {
        auto ch = tcp_connect(Endpoint{"127.0.0.1", listener.port()}, cfg.timeout);
        Transcript tr("poq", cfg.seed);
        Peer p(*ch, tr, Role::Client, cfg.timeout);
        p.send("hello", cfg.public_params());
    }
    t.join();
    EXPECT_EQ(server.status, "disconnected");
    EXPECT_EQ(server.transcript.messages().size(), 1u);
}
