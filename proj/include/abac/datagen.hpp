#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/model.hpp"
#include "abac/parser.hpp"

namespace abac {

enum class SchemaVariant { U2O2, U3O2, U4O5 };

std::string_view to_string(SchemaVariant v);              // "u2o2" ...
SchemaVariant schema_variant_from_string(std::string_view s);  // case-insensitive; throws ContractViolation

enum class DataModel { Abac, Dac };

std::string_view to_string(DataModel m);
DataModel data_model_from_string(std::string_view s);

struct GenConfig {
    SchemaVariant schema_variant = SchemaVariant::U4O5;
    std::size_t log_size = 1000;
    double deny_sample_prob = 0.01;
    double dac_allow_ratio = 0.90;
    std::uint64_t rng_seed = 1;
    std::size_t abac_users = 50;
    std::size_t abac_resources = 40;

    /// Throws ContractViolation on out-of-range values.
    void validate() const;
};

struct GroundTruthPolicy {
    std::string name;
    std::vector<AbacRule> rules;
};

/// Bundled full schema, operations and per-variant attribute lists.
AttributeSchema abac_schema(SchemaVariant variant);
std::vector<std::string> abac_operations();

/// The bundled 12-rule policy over the full schema.
GroundTruthPolicy master_policy();

/// Rules of `master` whose attributes all exist in the variant's schema.
GroundTruthPolicy variant_policy(SchemaVariant variant, const GroundTruthPolicy& master = master_policy());

struct AbacOrg {
    SchemaVariant variant = SchemaVariant::U4O5;
    AttributeSchema schema;
    EntityMap users;
    EntityMap resources;
    GroundTruthPolicy policy;
    std::vector<std::string> operations;
};

/// Entities are always drawn over the full schema and then projected, so the
/// variants of one seed share their people and documents.
AbacOrg generate_abac_org(const GenConfig& config, const GroundTruthPolicy& master = master_policy());

/// Throws AllDeny when the policy grants nothing or the attempt budget runs out.
std::vector<LogEntry> generate_abac_logs(const AbacOrg& org, const GroundTruthPolicy& policy,
                                         const GenConfig& config);

// ── DAC ─────────────────────────────────────────────────────────────────────

struct DacOrgConfig {
    std::size_t users = 74;
    std::size_t objects = 60;
    std::vector<std::string> departments;
    /// Ladder from junior to executive.
    std::vector<std::vector<std::string>> designation_tiers;
    std::vector<double> tier_weights;
    /// Within a tier the k-th title (0-based) is drawn with weight 1/(k+1)^skew.
    double designation_skew = 0.0;
    /// Tiers at or above this index count as senior.
    std::size_t senior_tier = 2;
    /// Object type -> department that usually owns it.
    std::map<std::string, std::string> types;
    double home_type_probability = 0.5;
    std::vector<std::string> sensitivities;
    std::vector<double> sensitivity_weights;
    std::string confidential_level = "Confidential";
    std::size_t confidential_acl_max = 3;
    /// (reader department, owner department): readers get read on the owner's objects.
    std::vector<std::pair<std::string, std::string>> cross_department;
    double discretionary_grants_per_user = 3.0;
    /// Probability that a request targets the requester's own or a partner department.
    double request_locality = 0.5;
    /// Probability that a non-local request goes to an object of the same type
    /// as one of the requester's individual grants.
    double discretionary_focus = 0.8;
    double read_probability = 0.75;

    void validate() const;
    static DacOrgConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

DacOrgConfig default_dac_config();

struct DacOrg {
    AttributeSchema schema;
    EntityMap users;
    EntityMap objects;
    /// object id -> owning department (not an object attribute).
    std::map<std::string, std::string> owners;
    /// object id -> granted (user id, operation) pairs.
    std::map<std::string, std::set<std::pair<std::string, std::string>>> acls;
    /// user id -> designation tier (0 = most junior).
    std::map<std::string, std::size_t> tiers;
    /// user id -> objects granted individually.
    std::map<std::string, std::vector<std::string>> discretionary;
    std::vector<std::string> operations;

    bool allows(const std::string& user, const std::string& object, const std::string& op) const;
};

DacOrg generate_dac_org(const GenConfig& config, const DacOrgConfig& dac = default_dac_config());

/// Exactly round(log_size * dac_allow_ratio) Allow entries, the rest Deny.
/// Throws RatioUnreachable when the ACLs cannot supply the requested mix.
std::vector<LogEntry> generate_dac_logs(const DacOrg& org, const GenConfig& config,
                                        const DacOrgConfig& dac = default_dac_config());

// ── Datasets on disk ────────────────────────────────────────────────────────

struct GeneratedDataset {
    AttributeSchema schema;
    EntityMap users;
    EntityMap resources;
    std::vector<LogEntry> logs;
    std::vector<AbacRule> ground_truth;  // empty for DAC
};

GeneratedDataset generate_dataset(DataModel model, const GenConfig& config);

enum class EmitStyle { Angle, Csv, Pipe };

std::string_view to_string(EmitStyle s);
EmitStyle emit_style_from_string(std::string_view s);

/// FormatSpec used for one file of a dataset in the given style.
FormatSpec emit_format(EmitStyle style, FileKind kind, const AttributeSchema& schema);

struct DatasetPaths {
    std::filesystem::path users;
    std::filesystem::path resources;
    std::filesystem::path logs;

    /// users.txt / resources.txt / logs.txt inside dir.
    static DatasetPaths in(const std::filesystem::path& dir);
};

/// Writes the three files, entities in id order. Throws IoError with the path.
void emit_dataset(const GeneratedDataset& dataset, EmitStyle style, const DatasetPaths& paths);

/// 2024-10-15T08:00:00Z + seconds.
std::string format_timestamp(std::uint64_t seconds_after_epoch_start);

}  // namespace abac
