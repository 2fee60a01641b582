#include <catch_amalgamated.hpp>

#include <set>

#include "abac/compress.hpp"
#include "abac/datagen.hpp"
#include "abac/miner.hpp"
#include "support.hpp"

using namespace abac;
using namespace testing_support;

namespace {

using Key = std::tuple<std::vector<std::string>, std::vector<std::string>, std::string, Decision>;

std::vector<std::string> values(const Entity& e, const std::vector<AttributeDef>& defs) {
    std::vector<std::string> out;
    for (const auto& d : defs) out.push_back(e.attributes.at(d.name));
    return out;
}

/// Distinct keys computed straight from the log.
std::set<Key> oracle_keys(const std::vector<LogEntry>& logs, const EntityMap& users, const EntityMap& resources,
                          const AttributeSchema& s) {
    std::set<Key> out;
    for (const auto& e : logs)
        out.insert({values(users.at(e.user_id), s.user_attributes),
                    values(resources.at(e.resource_id), s.resource_attributes), e.operation, e.decision});
    return out;
}

std::set<Key> record_keys(const CompressedLog& c) {
    std::set<Key> out;
    for (const auto& r : c.records) out.insert({r.user, r.resource, r.operation, r.decision});
    return out;
}

std::map<Key, std::size_t> record_counts(const CompressedLog& c) {
    std::map<Key, std::size_t> out;
    for (const auto& r : c.records) out[{r.user, r.resource, r.operation, r.decision}] = r.multiplicity;
    return out;
}

/// Share of distinct Allow keys matched by the policy, computed by brute force.
double distinct_allow_coverage(const std::vector<AbacRule>& rules, const std::vector<LogEntry>& logs,
                               const EntityMap& users, const EntityMap& resources, const AttributeSchema& s) {
    std::set<Key> allow, covered;
    for (const auto& e : logs) {
        if (e.decision != Decision::Allow) continue;
        const auto& u = users.at(e.user_id);
        const auto& r = resources.at(e.resource_id);
        Key k{values(u, s.user_attributes), values(r, s.resource_attributes), e.operation, e.decision};
        allow.insert(k);
        for (const auto& rule : rules)
            if (oracle_match(rule, u, r, e.operation)) covered.insert(k);
    }
    return allow.empty() ? 100.0 : 100.0 * static_cast<double>(covered.size()) / static_cast<double>(allow.size());
}

AttributeSchema two_by_two() {
    AttributeSchema s;
    s.user_attributes = {{"department", {"Finance", "Sales"}}, {"designation", {"Manager", "Clerk"}}};
    s.resource_attributes = {{"type", {"Financial", "Operational"}}, {"sensitivity", {"Low", "High"}}};
    return s;
}

}  // namespace

TEST_CASE("identical attribute patterns collapse into one record") {
    EntityMap users{{"u1", entity("u1", {{"department", "Finance"}, {"designation", "Manager"}})},
                    {"u2", entity("u2", {{"department", "Finance"}, {"designation", "Manager"}})}};
    EntityMap res{{"r1", entity("r1", {{"type", "Financial"}, {"sensitivity", "Low"}})},
                  {"r2", entity("r2", {{"type", "Financial"}, {"sensitivity", "Low"}})}};
    std::vector<LogEntry> logs{{"u1", "r1", "read", "t1", Decision::Allow},
                               {"u2", "r2", "read", "t2", Decision::Allow}};
    const auto c = compress_log(logs, users, res, two_by_two());
    REQUIRE(c.records.size() == 1);
    CHECK(c.records[0].multiplicity == 2);
    CHECK(c.records[0].user == std::vector<std::string>{"Finance", "Manager"});
    CHECK(c.records[0].resource == std::vector<std::string>{"Financial", "Low"});
    CHECK(c.records[0].first_timestamp == "t1");
    CHECK(c.records[0].last_timestamp == "t2");
    CHECK(c.diagnostics.empty());
}

TEST_CASE("operation and decision are part of the grouping key") {
    EntityMap users{{"u1", entity("u1", {{"department", "Finance"}, {"designation", "Manager"}})}};
    EntityMap res{{"r1", entity("r1", {{"type", "Financial"}, {"sensitivity", "Low"}})}};
    std::vector<LogEntry> logs{{"u1", "r1", "read", "a", Decision::Allow},
                               {"u1", "r1", "write", "b", Decision::Allow},
                               {"u1", "r1", "read", "c", Decision::Deny},
                               {"u1", "r1", "read", "d", Decision::Allow}};
    const auto c = compress_log(logs, users, res, two_by_two());
    REQUIRE(c.records.size() == 3);
    // first-occurrence order
    CHECK(c.records[0].operation == "read");
    CHECK(c.records[0].decision == Decision::Allow);
    CHECK(c.records[0].multiplicity == 2);
    CHECK(c.records[1].operation == "write");
    CHECK(c.records[2].decision == Decision::Deny);
}

TEST_CASE("all-distinct patterns give one record per entry") {
    const auto s = two_by_two();
    EntityMap users, res;
    std::vector<LogEntry> logs;
    std::size_t i = 0;
    for (const auto& d : s.user_attributes[0].domain)
        for (const auto& g : s.user_attributes[1].domain) {
            const auto id = "u" + std::to_string(i++);
            users.emplace(id, entity(id, {{"department", d}, {"designation", g}}));
        }
    res.emplace("r", entity("r", {{"type", "Financial"}, {"sensitivity", "High"}}));
    for (const auto& [id, _] : users) logs.push_back({id, "r", "read", "t", Decision::Allow});
    const auto c = compress_log(logs, users, res, s);
    CHECK(c.records.size() == logs.size());
    CHECK(c.ratio() == 1.0);
}

TEST_CASE("unresolvable entries are dropped with a diagnostic") {
    EntityMap users{{"u1", entity("u1", {{"department", "Finance"}, {"designation", "Manager"}})},
                    {"u2", entity("u2", {{"department", "Finance"}})}};
    EntityMap res{{"r1", entity("r1", {{"type", "Financial"}, {"sensitivity", "Low"}})}};
    std::vector<LogEntry> logs{{"ghost", "r1", "read", "a", Decision::Allow},
                               {"u1", "nowhere", "read", "b", Decision::Allow},
                               {"u2", "r1", "read", "c", Decision::Allow},
                               {"u1", "r1", "read", "d", Decision::Allow}};
    const auto c = compress_log(logs, users, res, two_by_two());
    CHECK(c.records.size() == 1);
    CHECK(c.total_multiplicity() == 1);
    CHECK(c.source_entries == 4);
    REQUIRE(c.diagnostics.size() == 3);
    CHECK(c.diagnostics[0].find("ghost") != std::string::npos);
    CHECK(c.diagnostics[1].find("nowhere") != std::string::npos);
}

TEST_CASE("weights add into multiplicities and must align") {
    EntityMap users{{"u1", entity("u1", {{"department", "Finance"}, {"designation", "Manager"}})}};
    EntityMap res{{"r1", entity("r1", {{"type", "Financial"}, {"sensitivity", "Low"}})}};
    std::vector<LogEntry> logs{{"u1", "r1", "read", "a", Decision::Allow}, {"u1", "r1", "read", "b", Decision::Allow}};
    const std::vector<std::size_t> w{3, 4};
    const auto c = compress_log(logs, users, res, two_by_two(), w);
    REQUIRE(c.records.size() == 1);
    CHECK(c.records[0].multiplicity == 7);
    const std::vector<std::size_t> bad{1};
    CHECK_THROWS_AS(compress_log(logs, users, res, two_by_two(), bad), ContractViolation);
}

TEST_CASE("expand of nothing is nothing") {
    CompressedLog empty;
    empty.schema = two_by_two();
    const auto ex = expand(empty);
    CHECK(ex.entries.empty());
    CHECK(ex.users.empty());
    CHECK(ex.resources.empty());
}

TEST_CASE("expand of a single record keeps its tuples") {
    CompressedLog c;
    c.schema = two_by_two();
    c.records.push_back({{"Sales", "Clerk"}, {"Operational", "High"}, "write", Decision::Deny, 5, "t0", "t9"});
    const auto ex = expand(c);
    REQUIRE(ex.entries.size() == 1);
    CHECK(ex.weights == std::vector<std::size_t>{5});
    const auto& e = ex.entries[0];
    CHECK(e.operation == "write");
    CHECK(e.decision == Decision::Deny);
    CHECK(e.timestamp == "t0");
    CHECK(ex.users.at(e.user_id).attributes == AttributeMap{{"department", "Sales"}, {"designation", "Clerk"}});
    CHECK(ex.resources.at(e.resource_id).attributes == AttributeMap{{"sensitivity", "High"}, {"type", "Operational"}});
    CHECK(e.user_id.rfind("cu", 0) == 0);
    CHECK(e.resource_id.rfind("cr", 0) == 0);
}

TEST_CASE("generated 2000-entry log compresses to its distinct keys") {
    GenConfig cfg;
    cfg.log_size = 2000;
    const auto ds = generate_dataset(DataModel::Abac, cfg);
    const auto c = compress_log(ds.logs, ds.users, ds.resources, ds.schema);
    const auto oracle = oracle_keys(ds.logs, ds.users, ds.resources, ds.schema);
    CHECK(c.records.size() == oracle.size());
    CHECK(record_keys(c) == oracle);
    CHECK(c.total_multiplicity() == 2000);
    CHECK(c.records.size() < 2000);
}

TEST_CASE("compression properties hold on random logs") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const auto w = random_world(seed, 20 + seed % 50);
        const auto c = compress_log(w.logs, w.users, w.resources, w.schema);
        INFO("seed " << seed);
        // multiplicity conservation and key preservation
        CHECK(c.total_multiplicity() == w.logs.size());
        CHECK(record_keys(c) == oracle_keys(w.logs, w.users, w.resources, w.schema));
        CHECK(c.records.size() <= w.logs.size());
        if (oracle_keys(w.logs, w.users, w.resources, w.schema).size() < w.logs.size())
            CHECK(c.records.size() < w.logs.size());

        // idempotence through expansion
        const auto ex = expand(c);
        const auto again = compress_log(ex.entries, ex.users, ex.resources, ex.schema, ex.weights);
        CHECK(record_counts(again) == record_counts(c));
        CHECK(record_keys(compress_log(ex.entries, ex.users, ex.resources, ex.schema)) == record_keys(c));
    }
}

TEST_CASE("mining the expanded log covers the same distinct permissions") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto w = random_world(seed, 80);
        if (std::none_of(w.logs.begin(), w.logs.end(), [](const LogEntry& e) { return e.decision == Decision::Allow; }))
            continue;
        const auto c = compress_log(w.logs, w.users, w.resources, w.schema);
        const auto ex = expand(c);
        const auto direct = mine_policy(w.users, w.resources, w.logs, w.schema, {});
        const auto via = mine_policy(ex.users, ex.resources, ex.entries, ex.schema, {});
        INFO("seed " << seed);
        CHECK(distinct_allow_coverage(direct.policy.rules, w.logs, w.users, w.resources, w.schema) ==
              distinct_allow_coverage(via.policy.rules, w.logs, w.users, w.resources, w.schema));
        CHECK(via.report.over_permissions == 0);
    }
}

TEST_CASE("mining a compressed generated log matches the uncompressed coverage") {
    GenConfig cfg;
    cfg.log_size = 2000;
    const auto ds = generate_dataset(DataModel::Abac, cfg);
    const auto c = compress_log(ds.logs, ds.users, ds.resources, ds.schema);
    const auto ex = expand(c);
    const auto direct = mine_policy(ds.users, ds.resources, ds.logs, ds.schema, {});
    const auto via = mine_policy(ex.users, ex.resources, ex.entries, ex.schema, {});
    CHECK(via.report.coverage_percent == direct.report.coverage_percent);
    const auto on_source = coverage(via.policy, ds.logs, ds.users, ds.resources);
    CHECK(on_source.coverage_percent == direct.report.coverage_percent);
}

TEST_CASE("compressed output round-trips through the parser with multiplicities") {
    GenConfig cfg;
    cfg.log_size = 500;
    const auto ds = generate_dataset(DataModel::Abac, cfg);
    const auto c = compress_log(ds.logs, ds.users, ds.resources, ds.schema);
    for (auto style : {EmitStyle::Angle, EmitStyle::Csv, EmitStyle::Pipe}) {
        TempDir dir("compressed");
        const auto paths = DatasetPaths::in(dir.path);
        emit_compressed(c, style, paths);
        LoadOptions opts;
        opts.schema = ds.schema;
        const auto back = load_dataset(paths.users, paths.resources, paths.logs, opts);
        INFO("style " << to_string(style));
        CHECK(back.report.warnings.empty());
        REQUIRE(back.multiplicities.size() == back.logs.size());
        const auto again = compress_log(back.logs, back.users, back.resources, back.schema, back.multiplicities);
        CHECK(record_counts(again) == record_counts(c));
        CHECK(again.total_multiplicity() == 500);
    }
}
