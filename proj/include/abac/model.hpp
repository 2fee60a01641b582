#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abac/errors.hpp"

namespace abac {

enum class Side { User, Resource };

std::string_view to_string(Side side);

// ── Schema ──────────────────────────────────────────────────────────────────

struct AttributeDef {
    std::string name;
    std::set<std::string> domain;

    friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

/// Declares user and resource attributes with finite value domains.
/// Declaration order is significant only for positional file formats.
struct AttributeSchema {
    std::vector<AttributeDef> user_attributes;
    std::vector<AttributeDef> resource_attributes;

    const std::vector<AttributeDef>& side(Side s) const {
        return s == Side::User ? user_attributes : resource_attributes;
    }
    std::vector<AttributeDef>& side(Side s) {
        return s == Side::User ? user_attributes : resource_attributes;
    }

    const AttributeDef* find(Side s, std::string_view name) const;
    std::vector<std::string> names(Side s) const;

    /// Throws SchemaMismatch on duplicate names or empty domains.
    void validate() const;

    /// Keeps only the named attributes, in the order given.
    AttributeSchema project(std::span<const std::string> user_names,
                            std::span<const std::string> resource_names) const;

    friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;
};

// ── Entities and logs ───────────────────────────────────────────────────────

using AttributeMap = std::map<std::string, std::string>;

struct Entity {
    std::string id;
    AttributeMap attributes;

    const std::string& attribute(std::string_view name) const;  // throws SchemaMismatch

    friend bool operator==(const Entity&, const Entity&) = default;
};

/// Entities keyed by id.
using EntityMap = std::map<std::string, Entity>;

/// Derives a schema whose domains are the observed values. Attribute order is
/// first appearance in id order.
AttributeSchema schema_from_entities(const EntityMap& users, const EntityMap& resources);

/// Throws SchemaMismatch if the entity is not well-formed for that schema side.
void validate_entity(const Entity& entity, Side side, const AttributeSchema& schema);

enum class Decision { Allow, Deny };

std::string_view to_string(Decision d);

struct LogEntry {
    std::string user_id;
    std::string resource_id;
    std::string operation;
    std::string timestamp;  // opaque
    Decision decision = Decision::Allow;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

// ── Rules and policies ──────────────────────────────────────────────────────

/// attribute name -> permitted values. Absent attribute = wildcard.
using ValueSetMap = std::map<std::string, std::set<std::string>>;

/// Equality between user attribute `first` and resource attribute `second`.
using Constraint = std::pair<std::string, std::string>;

struct AbacRule {
    ValueSetMap user_expr;
    ValueSetMap resource_expr;
    std::set<std::string> operations;
    std::set<Constraint> constraints;

    friend auto operator<=>(const AbacRule&, const AbacRule&) = default;
    friend bool operator==(const AbacRule&, const AbacRule&) = default;
};

struct WscWeights {
    std::size_t user_value = 1;
    std::size_t resource_value = 1;
    std::size_t operation = 1;
    std::size_t constraint = 1;
};

struct Policy {
    std::vector<AbacRule> rules;
    AttributeSchema schema;
};

struct EvaluationReport {
    double coverage_percent = 100.0;
    std::size_t rule_count = 0;
    std::size_t total_wsc = 0;
    double mining_seconds = 0.0;
    std::size_t over_permissions = 0;

    std::size_t allow_total = 0;
    std::size_t allow_covered = 0;
    std::vector<std::string> diagnostics;
};

/// True iff every expression condition, the operation and every constraint hold.
/// Throws SchemaMismatch when the rule names an attribute an entity lacks.
bool rule_matches(const AbacRule& rule, const Entity& user, const Entity& resource,
                  std::string_view operation);

std::size_t wsc(const AbacRule& rule, const WscWeights& weights = {});
std::size_t wsc_user_side(const AbacRule& rule, const WscWeights& weights = {});
std::size_t wsc_resource_side(const AbacRule& rule, const WscWeights& weights = {});
std::size_t policy_wsc(const Policy& policy, const WscWeights& weights = {});
std::size_t policy_wsc(std::span<const AbacRule> rules, const WscWeights& weights = {});

struct CoverageOptions {
    /// Strict: unresolvable entries stay in the denominator (as uncovered).
    bool strict = false;
    unsigned threads = 1;
};

EvaluationReport coverage(const Policy& policy, std::span<const LogEntry> logs,
                          const EntityMap& users, const EntityMap& resources,
                          const CoverageOptions& options = {});

/// Collapses full-domain value sets to wildcards; drops empty value sets never.
AbacRule canonicalize(AbacRule rule, const AttributeSchema& schema);

/// Throws SchemaMismatch / ContractViolation when the rule is not well-formed.
void validate_rule(const AbacRule& rule, const AttributeSchema& schema);

}  // namespace abac
