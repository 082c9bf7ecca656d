#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bits.hpp"
#include "rng.hpp"

namespace osp {

using json = nlohmann::json;

enum class Role { Client, Server };

inline std::string to_string(Role r) { return r == Role::Client ? "client" : "server"; }

inline Role role_from_string(const std::string& s) {
    if (s == "client") return Role::Client;
    if (s == "server") return Role::Server;
    throw std::invalid_argument("unknown role: " + s);
}

struct Message {
    std::string session;
    std::uint64_t seq = 0;
    Role role = Role::Client;
    std::string kind;
    json payload = json::object();

    bool operator==(const Message&) const = default;
};

inline json to_json(const Message& m) {
    return {{"session", m.session}, {"seq", m.seq}, {"role", to_string(m.role)}, {"kind", m.kind}, {"payload", m.payload}};
}

inline Message message_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("message must be a JSON object");
    Message m;
    m.session = j.at("session").get<std::string>();
    m.seq = j.at("seq").get<std::uint64_t>();
    m.role = role_from_string(j.at("role").get<std::string>());
    m.kind = j.at("kind").get<std::string>();
    m.payload = j.at("payload");
    if (!m.payload.is_object()) throw std::invalid_argument("payload must be a JSON object");
    return m;
}

// Sorted keys (json objects are ordered maps) and no whitespace.
inline std::string canonical(const json& j) { return j.dump(); }

// Deterministic UUID-shaped session id.
inline std::string session_id(std::uint64_t seed, const std::string& protocol) {
    Rng r = Rng::derive(seed, "session:" + protocol);
    std::uint64_t hi = r(), lo = r();
    hi = (hi & ~0xf000ULL) | 0x4000ULL;
    lo = (lo & ~(0xcULL << 60)) | (0x8ULL << 60);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx", (unsigned long long)(hi >> 32),
                  (unsigned long long)((hi >> 16) & 0xffff), (unsigned long long)(hi & 0xffff),
                  (unsigned long long)(lo >> 48), (unsigned long long)(lo & 0xffffffffffffULL));
    return buf;
}

class Transcript {
public:
    Transcript() = default;
    Transcript(std::string protocol, std::uint64_t seed)
        : protocol_(std::move(protocol)), seed_(seed), session_(session_id(seed, protocol_)) {}

    const Message& record(Role role, std::string kind, json payload = json::object()) {
        Message m{session_, next_seq_[role]++, role, std::move(kind), std::move(payload)};
        msgs_.push_back(std::move(m));
        return msgs_.back();
    }

    // Appends a message produced elsewhere, enforcing per-role monotone seq.
    void append(const Message& m) {
        auto& nx = next_seq_[m.role];
        if (m.seq < nx) throw std::invalid_argument("transcript: non-monotone seq");
        nx = m.seq + 1;
        msgs_.push_back(m);
    }

    const std::vector<Message>& messages() const { return msgs_; }
    const std::string& protocol() const { return protocol_; }
    const std::string& session() const { return session_; }
    std::uint64_t seed() const { return seed_; }
    json& summary() { return summary_; }
    const json& summary() const { return summary_; }
    std::uint64_t next_seq(Role r) const {
        auto it = next_seq_.find(r);
        return it == next_seq_.end() ? 0 : it->second;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& m : msgs_) arr.push_back(osp::to_json(m));
        return {{"header", {{"protocol", protocol_}, {"seed", std::to_string(seed_)}, {"session", session_}}},
                {"messages", arr},
                {"summary", summary_}};
    }

    std::string serialize() const { return canonical(to_json()); }

private:
    std::string protocol_;
    std::uint64_t seed_ = 0;
    std::string session_;
    std::vector<Message> msgs_;
    std::map<Role, std::uint64_t> next_seq_;
    json summary_ = json::object();
};

inline void record(Transcript* t, Role role, const char* kind, json payload = json::object()) {
    if (t) t->record(role, kind, std::move(payload));
}

inline json bits_json(const Bits& b) { return to_string(b); }
inline Bits bits_from_json(const json& j) { return from_string(j.get<std::string>()); }

} // namespace osp
