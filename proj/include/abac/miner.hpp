#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/model.hpp"

namespace abac {

// ── Pattern tracking ────────────────────────────────────────────────────────

/// Attribute values in schema declaration order.
using ValueTuple = std::vector<std::string>;
using PermissionPattern = std::tuple<ValueTuple, ValueTuple, std::string>;

/// Exact Allow-entry counts over three views of the log.
struct PatternIndex {
    std::map<PermissionPattern, std::size_t> user_resource_patterns;
    std::map<ValueTuple, std::size_t> user_side_patterns;
    std::map<ValueTuple, std::size_t> resource_side_patterns;
};

PatternIndex build_pattern_index(std::span<const LogEntry> logs, const EntityMap& users,
                                 const EntityMap& resources, const AttributeSchema& schema);

// ── Attribute ranking ───────────────────────────────────────────────────────

struct RankedAttribute {
    Side side = Side::User;
    std::string name;
    double information_gain = 0.0;
    std::size_t rank = 0;  // 0 = visited first during generalization
};

struct AttributeRanking {
    /// Sorted by rank.
    std::vector<RankedAttribute> attributes;
    std::optional<std::string> warning;

    const RankedAttribute* find(Side side, const std::string& name) const;
};

/// Information gain of each attribute with respect to the Allow/Deny label,
/// in bits. Ranks ascend with gain; ties go to the smaller domain, then to
/// (side, name). An all-Allow log gives zero gains and a domain-size order.
AttributeRanking rank_attributes(std::span<const LogEntry> logs, const EntityMap& users,
                                 const EntityMap& resources, const AttributeSchema& schema);

// ── Configuration ───────────────────────────────────────────────────────────

enum class QualitySideMode { SideNormalized, Summed };

struct MinerConfig {
    QualitySideMode quality_side_mode = QualitySideMode::SideNormalized;
    std::size_t min_rule_coverage = 1;
    std::size_t max_generalization_passes = 20;
    double deny_tolerance = 0.0;
    std::uint64_t rng_seed = 0;  // no stochastic step currently consumes it
    unsigned threads = 1;
    WscWeights weights;
    /// Reject generalization steps whose newly matched (user, resource, op)
    /// triples are missing from the log more often than the log's estimated
    /// completeness explains, at significance `evidence_alpha`.
    bool evidence_guard = true;
    double evidence_alpha = 0.001;
    /// Re-seed from every covered pattern and pick a cheaper cover by greedy set cover.
    bool consolidate = true;

    /// Throws ContractViolation on out-of-range values.
    void validate() const;
};

std::string_view to_string(QualitySideMode mode);
QualitySideMode quality_side_mode_from_string(std::string_view s);  // throws ContractViolation

// ── Mining steps ────────────────────────────────────────────────────────────

/// Most specific rule for an Allow entry. Throws ContractViolation on Deny.
AbacRule candidate_from_seed(const LogEntry& seed, const EntityMap& users,
                             const EntityMap& resources);

/// Complexity term of the quality ratio.
double complexity_norm(const AbacRule& rule, const MinerConfig& config);

/// covered_allow / complexity_norm. Throws ContractViolation when covered_allow is 0.
double rule_quality(const AbacRule& rule, std::size_t covered_allow, const MinerConfig& config);

/// Widens, then drops, attributes in ranking order and finally drops
/// constraints. A step is kept only when it stays within the deny tolerance
/// and raises quality. `uncovered_allow` drives quality; `covered_allow`
/// (already explained entries) only counts toward the deny tolerance.
AbacRule generalize(const AbacRule& rule, std::span<const LogEntry> uncovered_allow,
                    std::span<const LogEntry> deny_entries, const EntityMap& users,
                    const EntityMap& resources, const AttributeSchema& schema,
                    const AttributeRanking& ranking, const MinerConfig& config,
                    std::span<const LogEntry> covered_allow = {});

/// Removes rules whose covered Allow entries are all covered by the rest.
/// Rules covering the fewest entries go first (then higher WSC, then
/// lexically larger text). Relative order of the kept rules is preserved.
std::vector<AbacRule> redundancy_prune(std::span<const AbacRule> rules,
                                       std::span<const LogEntry> logs, const EntityMap& users,
                                       const EntityMap& resources);

struct MiningResult {
    Policy policy;
    EvaluationReport report;
    AttributeRanking ranking;
    std::size_t uncoverable_seeds = 0;
};

/// Seed, generalize, merge, prune. Throws EmptyLog when there is no Allow entry.
MiningResult mine_policy(const EntityMap& users, const EntityMap& resources,
                         std::span<const LogEntry> logs, const AttributeSchema& schema,
                         const MinerConfig& config = {});

/// Sorts by covered Allow entries (desc), WSC (asc), then rule text.
void order_policy(std::vector<AbacRule>& rules, std::span<const LogEntry> logs,
                  const EntityMap& users, const EntityMap& resources,
                  const WscWeights& weights = {});

/// Rules plus coverage statistics; timing is left out so output is reproducible.
nlohmann::json policy_to_json(const Policy& policy, const EvaluationReport& report,
                              const WscWeights& weights = {});

}  // namespace abac
