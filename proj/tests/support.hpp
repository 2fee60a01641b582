#pragma once

// Shared fixtures, oracles and random generators for the test binaries.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "abac/model.hpp"
#include "abac/parser.hpp"
#include "abac/rule_format.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(FIXTURE_DIR) / name;
}

inline abac::Dataset sample_dataset() {
    return abac::load_dataset(fixture("sample_users.txt"), fixture("sample_resources.txt"),
                              fixture("sample_logs.txt"));
}

inline std::vector<abac::AbacRule> sample_policy_rules() {
    return abac::parse_policy(abac::read_text_file(fixture("sample_policy.txt")));
}

inline abac::Entity entity(std::string id, abac::AttributeMap attrs) {
    return abac::Entity{std::move(id), std::move(attrs)};
}

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("abac_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// ── Oracles ────────────────────────────────────────────────────────────────

/// Match by direct lookup, written independently of the library matcher.
inline bool oracle_match(const abac::AbacRule& rule, const abac::Entity& u, const abac::Entity& r,
                         const std::string& op) {
    for (const auto& [attr, values] : rule.user_expr) {
        auto it = u.attributes.find(attr);
        if (it == u.attributes.end()) return false;
        bool found = false;
        for (const auto& v : values) found = found || v == it->second;
        if (!found) return false;
    }
    for (const auto& [attr, values] : rule.resource_expr) {
        auto it = r.attributes.find(attr);
        if (it == r.attributes.end()) return false;
        bool found = false;
        for (const auto& v : values) found = found || v == it->second;
        if (!found) return false;
    }
    bool op_ok = false;
    for (const auto& o : rule.operations) op_ok = op_ok || o == op;
    if (!op_ok) return false;
    for (const auto& [ua, ra] : rule.constraints)
        if (u.attributes.at(ua) != r.attributes.at(ra)) return false;
    return true;
}

struct OracleCounts {
    std::size_t allow = 0, covered = 0, over = 0;
};

inline OracleCounts oracle_coverage(const std::vector<abac::AbacRule>& rules,
                                    const std::vector<abac::LogEntry>& logs,
                                    const abac::EntityMap& users, const abac::EntityMap& resources) {
    OracleCounts c;
    for (const auto& e : logs) {
        const auto& u = users.at(e.user_id);
        const auto& r = resources.at(e.resource_id);
        bool hit = false;
        for (const auto& rule : rules) hit = hit || oracle_match(rule, u, r, e.operation);
        if (e.decision == abac::Decision::Allow) {
            ++c.allow;
            if (hit) ++c.covered;
        } else if (hit) {
            ++c.over;
        }
    }
    return c;
}

// ── Random generators ──────────────────────────────────────────────────────

struct RandomWorld {
    abac::AttributeSchema schema;
    abac::EntityMap users;
    abac::EntityMap resources;
    std::vector<abac::LogEntry> logs;
};

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

/// Small schema with a shared 'region' value space so constraints can occur.
inline abac::AttributeSchema random_schema(std::mt19937_64& rng) {
    abac::AttributeSchema s;
    const std::vector<std::string> regions = {"EU", "NA", "APAC"};
    const std::size_t nu = 1 + pick(rng, 3), nr = 1 + pick(rng, 3);
    for (std::size_t i = 0; i < nu; ++i) {
        abac::AttributeDef d{"u" + std::to_string(i), {}};
        const std::size_t k = 2 + pick(rng, 3);
        for (std::size_t v = 0; v < k; ++v) d.domain.insert("v" + std::to_string(v));
        s.user_attributes.push_back(d);
    }
    s.user_attributes.push_back({"region", {regions.begin(), regions.end()}});
    for (std::size_t i = 0; i < nr; ++i) {
        abac::AttributeDef d{"r" + std::to_string(i), {}};
        const std::size_t k = 2 + pick(rng, 3);
        for (std::size_t v = 0; v < k; ++v) d.domain.insert("w" + std::to_string(v));
        s.resource_attributes.push_back(d);
    }
    s.resource_attributes.push_back({"region", {regions.begin(), regions.end()}});
    return s;
}

inline std::string pick_value(std::mt19937_64& rng, const std::set<std::string>& domain) {
    auto it = domain.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(pick(rng, domain.size())));
    return *it;
}

inline abac::EntityMap random_entities(std::mt19937_64& rng, const std::vector<abac::AttributeDef>& defs,
                                       const std::string& prefix, std::size_t n) {
    abac::EntityMap out;
    for (std::size_t i = 0; i < n; ++i) {
        abac::Entity e{prefix + std::to_string(i), {}};
        for (const auto& d : defs) e.attributes[d.name] = pick_value(rng, d.domain);
        out.emplace(e.id, e);
    }
    return out;
}

inline abac::AbacRule random_rule(std::mt19937_64& rng, const abac::AttributeSchema& s,
                                  const std::vector<std::string>& ops) {
    abac::AbacRule rule;
    auto fill = [&](const std::vector<abac::AttributeDef>& defs, abac::ValueSetMap& expr) {
        for (const auto& d : defs) {
            if (pick(rng, 2) == 0) continue;
            std::set<std::string> vs;
            const std::size_t k = 1 + pick(rng, d.domain.size());
            while (vs.size() < k) vs.insert(pick_value(rng, d.domain));
            expr[d.name] = vs;
        }
    };
    fill(s.user_attributes, rule.user_expr);
    fill(s.resource_attributes, rule.resource_expr);
    rule.operations.insert(ops[pick(rng, ops.size())]);
    if (pick(rng, 3) == 0) rule.operations.insert(ops[pick(rng, ops.size())]);
    if (pick(rng, 4) == 0) rule.constraints.emplace("region", "region");
    return rule;
}

/// Entities plus a log labelled by a random hidden policy.
inline RandomWorld random_world(std::uint64_t seed, std::size_t n_logs, double deny_keep = 0.5) {
    std::mt19937_64 rng(seed);
    RandomWorld w;
    w.schema = random_schema(rng);
    w.users = random_entities(rng, w.schema.user_attributes, "user", 6 + pick(rng, 10));
    w.resources = random_entities(rng, w.schema.resource_attributes, "res", 6 + pick(rng, 10));
    const std::vector<std::string> ops = {"read", "write"};
    std::vector<abac::AbacRule> hidden;
    const std::size_t nrules = 1 + pick(rng, 4);
    for (std::size_t i = 0; i < nrules; ++i) hidden.push_back(random_rule(rng, w.schema, ops));
    std::vector<const abac::Entity*> us, rs;
    for (const auto& [_, e] : w.users) us.push_back(&e);
    for (const auto& [_, e] : w.resources) rs.push_back(&e);
    std::size_t guard = 0;
    while (w.logs.size() < n_logs && guard++ < n_logs * 200) {
        const auto* u = us[pick(rng, us.size())];
        const auto* r = rs[pick(rng, rs.size())];
        const auto& op = ops[pick(rng, ops.size())];
        bool allow = false;
        for (const auto& h : hidden) allow = allow || oracle_match(h, *u, *r, op);
        if (!allow && std::uniform_real_distribution<double>(0, 1)(rng) > deny_keep) continue;
        w.logs.push_back({u->id, r->id, op, "t" + std::to_string(w.logs.size()),
                          allow ? abac::Decision::Allow : abac::Decision::Deny});
    }
    return w;
}

}  // namespace testing_support
