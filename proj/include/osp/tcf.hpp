#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bits.hpp"
#include "qsim.hpp"
#include "rng.hpp"

namespace osp {

enum class TcfFamily { Plain, Dual };
enum class TcfMode { Plain, Disjoint, Lossy };

inline std::string to_string(TcfMode m) {
    switch (m) {
    case TcfMode::Plain: return "plain";
    case TcfMode::Disjoint: return "disjoint";
    case TcfMode::Lossy: return "lossy";
    }
    return "?";
}

inline TcfMode tcf_mode_from_string(const std::string& s) {
    if (s == "plain") return TcfMode::Plain;
    if (s == "disjoint") return TcfMode::Disjoint;
    if (s == "lossy") return TcfMode::Lossy;
    throw std::invalid_argument("unknown tcf mode: " + s);
}

inline std::vector<std::uint32_t> seeded_permutation(int m, std::uint64_t seed) {
    std::vector<std::uint32_t> p(std::size_t{1} << m);
    std::iota(p.begin(), p.end(), 0u);
    Rng rng(seed);
    for (std::size_t i = p.size() - 1; i > 0; --i) std::swap(p[i], p[rng.below(i + 1)]);
    return p;
}

struct TcfPublic {
    int n = 0;
    int m = 0;
    TcfMode mode = TcfMode::Plain;
    int k = 0;
    std::uint64_t perm_seed = 0;
    // evaluation table indexed by (b << n) | x; the toy family keeps no secret from it
    std::vector<std::uint32_t> table;

    bool dual() const { return mode != TcfMode::Plain; }
    std::uint32_t in_mask() const { return (1u << n) - 1; }
};

struct TcfSecret {
    std::uint32_t shift = 0;
    std::vector<std::uint8_t> prefix_set; // indicator over {0,1}^k
    std::vector<std::uint32_t> perm_inverse;
    double delta_param = 1.0;

    bool prefix_ok(std::uint32_t x, int n, int k) const { return prefix_set[k == 0 ? 0 : x >> (n - k)] != 0; }
};

inline std::uint32_t fold(std::uint32_t x, std::uint32_t shift) { return std::min(x, x ^ shift); }

struct Tcf {
    TcfPublic pp;
    TcfSecret sp;
};

// Plain family: x -> pi(min(x, x^shift)); dual family tags disjoint images with a leading 1.
inline Tcf tcf_gen(TcfFamily family, int mu, int n, int k, double delta, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("tcf: n must be positive");
    Tcf t;
    Rng rng = Rng::derive(seed, "tcf.gen");
    t.pp.n = n;
    t.pp.perm_seed = rng();
    if (family == TcfFamily::Plain) {
        if (n > 20) throw std::invalid_argument("tcf: n exceeds 20");
        t.pp.m = n;
        t.pp.k = 0;
        t.pp.mode = TcfMode::Plain;
    } else {
        if (n + 2 > 20) throw std::invalid_argument("tcf: n+2 exceeds 20");
        if (k < 0 || k >= n) throw std::invalid_argument("tcf: prefix length must be in [0, n)");
        t.pp.m = n + 2;
        t.pp.k = k;
        t.pp.mode = mu ? TcfMode::Lossy : TcfMode::Disjoint;
    }
    double cells = delta * static_cast<double>(1u << t.pp.k);
    auto count = static_cast<std::uint32_t>(std::llround(cells));
    if (delta <= 0 || delta > 1 || std::abs(cells - count) > 1e-9 || count == 0)
        throw std::invalid_argument("tcf: delta * 2^k must be a positive integer <= 2^k");
    int free_bits = n - t.pp.k;
    t.sp.shift = 1u + static_cast<std::uint32_t>(rng.below((std::uint64_t{1} << free_bits) - 1));
    std::vector<std::uint32_t> prefixes(std::size_t{1} << t.pp.k);
    std::iota(prefixes.begin(), prefixes.end(), 0u);
    for (std::size_t i = prefixes.size() - 1; i > 0; --i) std::swap(prefixes[i], prefixes[rng.below(i + 1)]);
    t.sp.prefix_set.assign(prefixes.size(), 0);
    for (std::uint32_t i = 0; i < count; ++i) t.sp.prefix_set[prefixes[i]] = 1;
    t.sp.delta_param = delta;
    auto perm = seeded_permutation(t.pp.m, t.pp.perm_seed);
    t.sp.perm_inverse.resize(perm.size());
    for (std::uint32_t i = 0; i < perm.size(); ++i) t.sp.perm_inverse[perm[i]] = i;
    const auto& p = t.pp;
    int branches = p.dual() ? 2 : 1;
    t.pp.table.resize(std::size_t(branches) << n);
    for (int b = 0; b < branches; ++b)
        for (std::uint32_t x = 0; x < (1u << n); ++x) {
            std::uint32_t w = 0;
            switch (p.mode) {
            case TcfMode::Plain: w = fold(x, t.sp.shift); break;
            case TcfMode::Disjoint: w = (1u << (n + 1)) | (x << 1) | static_cast<std::uint32_t>(b); break;
            case TcfMode::Lossy:
                w = t.sp.prefix_ok(x, n, p.k) ? x ^ (b ? t.sp.shift : 0u)
                                              : (1u << (n + 1)) | (x << 1) | static_cast<std::uint32_t>(b);
                break;
            }
            t.pp.table[(std::size_t(b) << n) | x] = perm[w];
        }
    return t;
}

inline std::uint32_t tcf_eval(const TcfPublic& p, int b, std::uint32_t x) {
    x &= p.in_mask();
    return p.table[p.dual() && b ? (std::size_t{1} << p.n) | x : x];
}

inline std::uint32_t tcf_eval(const Tcf& t, int b, std::uint32_t x) { return tcf_eval(t.pp, b, x); }

inline Bits tcf_eval(const Tcf& t, int b, const Bits& x) {
    if (static_cast<int>(x.size()) != t.pp.n) throw std::invalid_argument("tcf_eval: input width");
    return from_uint(tcf_eval(t, b, static_cast<std::uint32_t>(to_uint(x))), static_cast<std::size_t>(t.pp.m));
}

struct Claw {
    std::uint32_t x0 = 0;
    std::uint32_t x1 = 0;
};

// Plain: x0 < x1 with F(x0)=F(x1). Dual lossy: F(0,x0) = F(1,x1).
inline std::optional<Claw> claw_invert(const Tcf& t, std::uint32_t y) {
    const auto& p = t.pp;
    if (y >= t.sp.perm_inverse.size()) throw std::out_of_range("claw_invert: y out of range");
    std::uint32_t w = t.sp.perm_inverse[y];
    if (p.mode == TcfMode::Plain) {
        if (fold(w, t.sp.shift) != w) return std::nullopt;
        return Claw{w, w ^ t.sp.shift};
    }
    if (p.mode == TcfMode::Disjoint) return std::nullopt;
    if ((w >> p.n) != 0) return std::nullopt;
    if (!t.sp.prefix_ok(w, p.n, p.k)) return std::nullopt;
    return Claw{w, w ^ t.sp.shift};
}

// Preimage of y under F(b, .), if any.
inline std::optional<std::uint32_t> invert(const Tcf& t, int b, std::uint32_t y) {
    const auto& p = t.pp;
    if (y >= t.sp.perm_inverse.size()) throw std::out_of_range("invert: y out of range");
    std::uint32_t w = t.sp.perm_inverse[y];
    if (p.mode == TcfMode::Plain) {
        if (fold(w, t.sp.shift) != w) return std::nullopt;
        return b ? (w ^ t.sp.shift) : w;
    }
    if (auto c = claw_invert(t, y)) return b ? c->x1 : c->x0;
    if ((w >> (p.n + 1)) != 1) return std::nullopt;
    if (static_cast<int>(w & 1u) != b) return std::nullopt;
    std::uint32_t x = (w >> 1) & p.in_mask();
    if (p.mode == TcfMode::Lossy && t.sp.prefix_ok(x, p.n, p.k)) return std::nullopt;
    return x;
}

inline std::vector<int> partial_invert(const Tcf& t, std::uint32_t y) {
    std::vector<int> out;
    for (int b = 0; b < 2; ++b)
        if (invert(t, b, y)) out.push_back(b);
    return out;
}

inline std::optional<int> phase_invert(const Tcf& t, std::uint32_t y, std::uint32_t d) {
    if (!claw_invert(t, y)) return std::nullopt;
    return dot(d, t.sp.shift);
}

struct ClawInvertQuery {
    std::uint32_t y;
};
struct PartialInvertQuery {
    std::uint32_t y;
};
struct PhaseInvertQuery {
    std::uint32_t y;
    std::uint32_t d;
};
using DecodeQuery = std::variant<ClawInvertQuery, PartialInvertQuery, PhaseInvertQuery>;

struct Bottom {};
using DecodeResult = std::variant<Bottom, Claw, std::vector<int>, int>;

inline DecodeResult decode(const Tcf& t, const DecodeQuery& q) {
    if (auto* c = std::get_if<ClawInvertQuery>(&q)) {
        if (auto r = claw_invert(t, c->y)) return *r;
        return Bottom{};
    }
    if (auto* p = std::get_if<PartialInvertQuery>(&q)) return partial_invert(t, p->y);
    const auto& ph = std::get<PhaseInvertQuery>(q);
    if (ph.d >> t.pp.n) throw std::invalid_argument("decode: d wider than n");
    if (auto s = phase_invert(t, ph.y, ph.d)) return *s;
    return Bottom{};
}

// Uniform superposition over the input domain, optionally with a leading |+> bit.
struct UniformDescriptor {
    int width = 0;
    bool with_bit_register = false;
};

inline UniformDescriptor superposition_descriptor(const TcfPublic& pp, bool with_bit_register) {
    return {pp.n, with_bit_register};
}

inline DenseState densify(const UniformDescriptor& u) {
    int w = u.width + (u.with_bit_register ? 1 : 0);
    DenseState s(w);
    double a = 1.0 / std::sqrt(static_cast<double>(s.dim()));
    for (auto& x : s.amplitudes()) x = a;
    return s;
}

// Receiver state over (b, x) (dual) or x (plain) after observing y = F(...).
inline TwoBranchState collapse_on_image(const Tcf& t, std::uint32_t y) {
    const auto& p = t.pp;
    std::size_t w = static_cast<std::size_t>(p.n) + (p.dual() ? 1 : 0);
    auto enc = [&](int b, std::uint32_t x) {
        Bits xb = from_uint(x, static_cast<std::size_t>(p.n));
        return p.dual() ? concat({static_cast<std::uint8_t>(b)}, xb) : xb;
    };
    if (auto c = claw_invert(t, y)) return {w, enc(0, c->x0), enc(1, c->x1), 0};
    for (int b = 0; b < 2; ++b)
        if (auto x = invert(t, b, y)) return {w, enc(b, *x), enc(b, *x), 0};
    throw std::invalid_argument("collapse_on_image: y has no preimage");
}

using ClawTable = std::map<std::uint32_t, std::vector<std::pair<int, std::uint32_t>>>;

inline ClawTable claw_oracle(const Tcf& t) {
    if (t.pp.n > 12) throw std::invalid_argument("claw_oracle: n > 12");
    ClawTable tab;
    int bits = t.pp.dual() ? 2 : 1;
    for (int b = 0; b < bits; ++b)
        for (std::uint32_t x = 0; x < (1u << t.pp.n); ++x) tab[tcf_eval(t, b, x)].push_back({b, x});
    return tab;
}

inline nlohmann::json to_json(const TcfPublic& p) {
    return {{"n", p.n},
            {"m", p.m},
            {"mode", to_string(p.mode)},
            {"k", p.k},
            {"perm_seed", std::to_string(p.perm_seed)},
            {"table", p.table}};
}

inline TcfPublic tcf_public_from_json(const nlohmann::json& j) {
    TcfPublic p;
    p.n = j.at("n").get<int>();
    p.m = j.at("m").get<int>();
    p.mode = tcf_mode_from_string(j.at("mode").get<std::string>());
    p.k = j.at("k").get<int>();
    p.perm_seed = std::stoull(j.at("perm_seed").get<std::string>());
    if (p.m > 20 || p.n < 1 || p.n > p.m) throw std::invalid_argument("tcf public: bad sizes");
    p.table = j.at("table").get<std::vector<std::uint32_t>>();
    std::size_t want = std::size_t(p.dual() ? 2 : 1) << p.n;
    if (p.table.size() != want) throw std::invalid_argument("tcf public: table size");
    for (auto y : p.table)
        if (y >> p.m) throw std::invalid_argument("tcf public: table entry out of range");
    return p;
}

inline nlohmann::json to_json(const TcfSecret& s, int n, int k) {
    nlohmann::json set = nlohmann::json::array();
    for (std::uint32_t i = 0; i < s.prefix_set.size(); ++i)
        if (s.prefix_set[i]) set.push_back(to_string(from_uint(i, static_cast<std::size_t>(k))));
    return {{"shift", to_string(from_uint(s.shift, static_cast<std::size_t>(n)))},
            {"prefix_set", set},
            {"perm_inverse", s.perm_inverse},
            {"delta_param", s.delta_param}};
}

} // namespace osp
