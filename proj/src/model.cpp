#include "abac/model.hpp"

#include <algorithm>
#include <numeric>

#include "parallel.hpp"

namespace abac {

std::string_view to_string(Side side) {
    return side == Side::User ? "user" : "resource";
}

std::string_view to_string(Decision d) {
    return d == Decision::Allow ? "Allow" : "Deny";
}

// ── AttributeSchema ─────────────────────────────────────────────────────────

const AttributeDef* AttributeSchema::find(Side s, std::string_view name) const {
    for (const auto& def : side(s))
        if (def.name == name) return &def;
    return nullptr;
}

std::vector<std::string> AttributeSchema::names(Side s) const {
    std::vector<std::string> out;
    for (const auto& def : side(s)) out.push_back(def.name);
    return out;
}

void AttributeSchema::validate() const {
    for (Side s : {Side::User, Side::Resource}) {
        std::set<std::string> seen;
        for (const auto& def : side(s)) {
            if (def.name.empty())
                throw SchemaMismatch("empty " + std::string(to_string(s)) + " attribute name");
            if (!seen.insert(def.name).second)
                throw SchemaMismatch("duplicate " + std::string(to_string(s)) +
                                     " attribute '" + def.name + "'");
            if (def.domain.empty())
                throw SchemaMismatch("attribute '" + def.name + "' has an empty domain");
        }
    }
}

AttributeSchema AttributeSchema::project(std::span<const std::string> user_names,
                                         std::span<const std::string> resource_names) const {
    AttributeSchema out;
    for (const auto& n : user_names) {
        const auto* def = find(Side::User, n);
        if (!def) throw SchemaMismatch("unknown user attribute '" + n + "'");
        out.user_attributes.push_back(*def);
    }
    for (const auto& n : resource_names) {
        const auto* def = find(Side::Resource, n);
        if (!def) throw SchemaMismatch("unknown resource attribute '" + n + "'");
        out.resource_attributes.push_back(*def);
    }
    return out;
}

// ── Entities ────────────────────────────────────────────────────────────────

const std::string& Entity::attribute(std::string_view name) const {
    auto it = attributes.find(std::string(name));
    if (it == attributes.end())
        throw SchemaMismatch("entity '" + id + "' has no attribute '" + std::string(name) + "'");
    return it->second;
}

namespace {

void collect_side(const EntityMap& entities, std::vector<AttributeDef>& defs) {
    for (const auto& [id, e] : entities) {
        for (const auto& [name, value] : e.attributes) {
            auto it = std::find_if(defs.begin(), defs.end(),
                                   [&](const AttributeDef& d) { return d.name == name; });
            if (it == defs.end()) {
                defs.push_back({name, {}});
                it = std::prev(defs.end());
            }
            it->domain.insert(value);
        }
    }
}

}  // namespace

AttributeSchema schema_from_entities(const EntityMap& users, const EntityMap& resources) {
    AttributeSchema schema;
    collect_side(users, schema.user_attributes);
    collect_side(resources, schema.resource_attributes);
    return schema;
}

void validate_entity(const Entity& entity, Side side, const AttributeSchema& schema) {
    if (entity.id.empty()) throw SchemaMismatch("entity with empty id");
    for (const auto& [name, value] : entity.attributes) {
        const auto* def = schema.find(side, name);
        if (!def)
            throw SchemaMismatch("entity '" + entity.id + "': unknown " +
                                 std::string(to_string(side)) + " attribute '" + name + "'");
        if (!def->domain.contains(value))
            throw SchemaMismatch("entity '" + entity.id + "': value '" + value +
                                 "' outside the domain of '" + name + "'");
    }
    for (const auto& def : schema.side(side))
        if (!entity.attributes.contains(def.name))
            throw SchemaMismatch("entity '" + entity.id + "' is missing attribute '" + def.name + "'");
}

// ── Rules ───────────────────────────────────────────────────────────────────

bool rule_matches(const AbacRule& rule, const Entity& user, const Entity& resource,
                  std::string_view operation) {
    for (const auto& [attr, values] : rule.user_expr)
        if (!values.contains(user.attribute(attr))) return false;
    for (const auto& [attr, values] : rule.resource_expr)
        if (!values.contains(resource.attribute(attr))) return false;
    if (!rule.operations.contains(std::string(operation))) return false;
    for (const auto& [ua, ra] : rule.constraints)
        if (user.attribute(ua) != resource.attribute(ra)) return false;
    return true;
}

namespace {

std::size_t expr_size(const ValueSetMap& expr) {
    std::size_t n = 0;
    for (const auto& [_, values] : expr) n += values.size();
    return n;
}

}  // namespace

std::size_t wsc_user_side(const AbacRule& rule, const WscWeights& weights) {
    return weights.user_value * expr_size(rule.user_expr);
}

std::size_t wsc_resource_side(const AbacRule& rule, const WscWeights& weights) {
    return weights.resource_value * expr_size(rule.resource_expr);
}

std::size_t wsc(const AbacRule& rule, const WscWeights& weights) {
    return wsc_user_side(rule, weights) + wsc_resource_side(rule, weights) +
           weights.operation * rule.operations.size() +
           weights.constraint * rule.constraints.size();
}

std::size_t policy_wsc(std::span<const AbacRule> rules, const WscWeights& weights) {
    std::size_t total = 0;
    for (const auto& r : rules) total += wsc(r, weights);
    return total;
}

std::size_t policy_wsc(const Policy& policy, const WscWeights& weights) {
    return policy_wsc(policy.rules, weights);
}

AbacRule canonicalize(AbacRule rule, const AttributeSchema& schema) {
    auto collapse = [&](ValueSetMap& expr, Side side) {
        for (auto it = expr.begin(); it != expr.end();) {
            const auto* def = schema.find(side, it->first);
            if (def && it->second == def->domain)
                it = expr.erase(it);
            else
                ++it;
        }
    };
    collapse(rule.user_expr, Side::User);
    collapse(rule.resource_expr, Side::Resource);
    return rule;
}

void validate_rule(const AbacRule& rule, const AttributeSchema& schema) {
    auto check = [&](const ValueSetMap& expr, Side side) {
        for (const auto& [attr, values] : expr) {
            const auto* def = schema.find(side, attr);
            if (!def)
                throw SchemaMismatch("rule references unknown " + std::string(to_string(side)) +
                                     " attribute '" + attr + "'");
            if (values.empty())
                throw ContractViolation("empty value set for attribute '" + attr + "'");
            for (const auto& v : values)
                if (!def->domain.contains(v))
                    throw SchemaMismatch("value '" + v + "' outside the domain of '" + attr + "'");
        }
    };
    check(rule.user_expr, Side::User);
    check(rule.resource_expr, Side::Resource);
    if (rule.operations.empty()) throw ContractViolation("rule has no operations");
    for (const auto& [ua, ra] : rule.constraints) {
        if (!schema.find(Side::User, ua))
            throw SchemaMismatch("constraint references unknown user attribute '" + ua + "'");
        if (!schema.find(Side::Resource, ra))
            throw SchemaMismatch("constraint references unknown resource attribute '" + ra + "'");
    }
}

// ── Coverage ────────────────────────────────────────────────────────────────

EvaluationReport coverage(const Policy& policy, std::span<const LogEntry> logs,
                          const EntityMap& users, const EntityMap& resources,
                          const CoverageOptions& options) {
    EvaluationReport report;
    report.rule_count = policy.rules.size();
    report.total_wsc = policy_wsc(policy);

    struct Resolved {
        const Entity* user;
        const Entity* resource;
        const LogEntry* entry;
    };
    std::vector<Resolved> resolved;
    resolved.reserve(logs.size());
    std::size_t unresolved_allow = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& e = logs[i];
        auto u = users.find(e.user_id);
        auto r = resources.find(e.resource_id);
        if (u == users.end() || r == resources.end()) {
            report.diagnostics.push_back(
                "entry " + std::to_string(i + 1) + ": unresolvable " +
                (u == users.end() ? "user '" + e.user_id + "'"
                                  : "resource '" + e.resource_id + "'"));
            if (e.decision == Decision::Allow) ++unresolved_allow;
            continue;
        }
        resolved.push_back({&u->second, &r->second, &e});
    }

    // 0 = unmatched, 1 = matched
    std::vector<char> matched(resolved.size(), 0);
    detail::parallel_for(resolved.size(), options.threads, [&](std::size_t i) {
        const auto& rr = resolved[i];
        for (const auto& rule : policy.rules) {
            if (rule_matches(rule, *rr.user, *rr.resource, rr.entry->operation)) {
                matched[i] = 1;
                return;
            }
        }
    });

    for (std::size_t i = 0; i < resolved.size(); ++i) {
        if (resolved[i].entry->decision == Decision::Allow) {
            ++report.allow_total;
            if (matched[i]) ++report.allow_covered;
        } else if (matched[i]) {
            ++report.over_permissions;
        }
    }
    if (options.strict) report.allow_total += unresolved_allow;
    report.coverage_percent =
        report.allow_total == 0
            ? 100.0
            : 100.0 * static_cast<double>(report.allow_covered) /
                  static_cast<double>(report.allow_total);
    return report;
}

}  // namespace abac
