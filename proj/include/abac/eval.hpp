#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/datagen.hpp"
#include "abac/miner.hpp"

namespace abac {

struct ExperimentPlan {
    std::vector<SchemaVariant> variants{SchemaVariant::U4O5};
    std::vector<std::size_t> log_sizes;
    std::size_t repetitions = 1;
    /// One seed per repetition; empty means 1..repetitions.
    std::vector<std::uint64_t> seeds;
    double deny_sample_prob = 0.01;
    double dac_allow_ratio = 0.90;
    unsigned threads = 1;

    /// Throws ContractViolation: sizes must be non-empty, positive and strictly
    /// ascending, repetitions >= 1, seeds empty or one per repetition.
    void validate() const;
    std::vector<std::uint64_t> effective_seeds() const;

    /// Sizes may be a list or {"from", "to", "step"}. Throws DataError.
    static ExperimentPlan from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Aggregate of all repetitions at one (variant, size). Means over the
/// repetitions that succeeded; NaN when none did.
struct CurvePoint {
    std::string variant;  // "u4o5", ... or "dac"
    std::size_t log_size = 0;
    double coverage_percent = 0;
    double rule_count = 0;
    double total_wsc = 0;
    double mining_seconds = 0;
    double over_permissions = 0;

    double coverage_min = 0, coverage_max = 0;
    double rule_count_min = 0, rule_count_max = 0;
    double seconds_min = 0, seconds_max = 0;
    std::size_t runs = 0;  // successful repetitions
    std::vector<std::string> errors;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// One mining run: generate, mine, measure.
struct RunMeasurement {
    EvaluationReport report;  // mining_seconds covers mine_policy only
    Policy policy;
};

RunMeasurement run_once(DataModel model, SchemaVariant variant, std::size_t log_size, std::uint64_t seed,
                        const ExperimentPlan& plan);

/// Every (variant, size) in plan order; DAC ignores the variants. A failing
/// repetition is recorded in the point's errors and the run continues.
std::vector<CurvePoint> run_curve(const ExperimentPlan& plan, DataModel model);

// ── Compression ablation ────────────────────────────────────────────────────

struct ReferenceRow {
    std::size_t log_size = 0;
    /// nullopt rules = timed out without output; nullopt seconds = not reported.
    std::optional<double> llm_only_rules, llm_only_seconds;
    std::optional<double> compressed_llm_rules, compressed_llm_seconds;
};

const std::vector<ReferenceRow>& reference_ablation();

struct AblationRow {
    std::string variant;
    std::size_t log_size = 0;
    double rule_count = 0;
    double mining_seconds = 0;
    double coverage_percent = 0;
    double over_permissions = 0;
    /// Distinct records after compression, and the distinct Allow permissions
    /// covered by policies mined from the full and from the compressed log.
    double compressed_records = 0;
    double distinct_coverage_percent = 0;
    double compressed_distinct_coverage_percent = 0;
    std::size_t runs = 0;
    std::vector<std::string> errors;
    std::optional<ReferenceRow> reference;
};

/// Sizes from the plan, or the reference sizes when the plan has none.
std::vector<AblationRow> run_ablation(const ExperimentPlan& plan);

// ── Reports ─────────────────────────────────────────────────────────────────

enum class ReportFormat { Csv, Json, Markdown };

ReportFormat report_format_from_string(std::string_view s);  // throws ContractViolation
/// By extension: .json, .md, anything else CSV.
ReportFormat report_format_for(const std::filesystem::path& path);

inline constexpr std::string_view kCurveCsvHeader =
    "variant,log_size,coverage_percent,rule_count,total_wsc,mining_seconds,over_permissions";

std::string render_points(const std::vector<CurvePoint>& points, ReportFormat format);
std::vector<CurvePoint> points_from_json(const nlohmann::json& j);  // throws DataError
std::string render_ablation(const std::vector<AblationRow>& rows, ReportFormat format);

/// Throws IoError with the path.
void emit_report(const std::vector<CurvePoint>& points, ReportFormat format, const std::filesystem::path& path);
void emit_ablation(const std::vector<AblationRow>& rows, ReportFormat format, const std::filesystem::path& path);

}  // namespace abac
