#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/model.hpp"

namespace abac {

// ── Prompt documents ────────────────────────────────────────────────────────

enum class PromptKind { CodeGen, Summarization, Verification };

std::string_view to_string(PromptKind kind);

struct PromptBlock {
    std::string heading;
    std::string body;

    friend bool operator==(const PromptBlock&, const PromptBlock&) = default;
};

struct PromptDocument {
    PromptKind kind = PromptKind::CodeGen;
    std::vector<PromptBlock> blocks;

    /// Headings and bodies joined as plain text, the form sent to a model.
    std::string render() const;
    nlohmann::json to_json() const;

    friend bool operator==(const PromptDocument&, const PromptDocument&) = default;
};

/// Raw example lines for each input file, pasted into the prompt as-is.
struct FormatExamples {
    std::string users;
    std::string resources;
    std::string logs;
};

/// Throws ContractViolation when an example or the miner source is blank.
PromptDocument build_codegen_prompt(const FormatExamples& examples, std::string_view miner_source_text);

/// This library's miner header and source, embedded at build time.
std::string bundled_miner_source();

// ── Jargon map ──────────────────────────────────────────────────────────────

/// Technical term -> business phrasing, applied in order.
using JargonMap = std::vector<std::pair<std::string, std::string>>;

const JargonMap& default_jargon_map();
/// {"rule": "policy statement", ...}; throws DataError on a non-string value.
JargonMap jargon_map_from_json(const nlohmann::json& j);

/// Throws ContractViolation on an empty policy.
PromptDocument build_summary_prompt(const Policy& policy, const JargonMap& jargon = default_jargon_map());

/// Throws ContractViolation when the policy or summary is empty.
PromptDocument build_verification_prompt(const Policy& policy, std::string_view summary_text);

// ── Summaries ───────────────────────────────────────────────────────────────

struct SummarySection {
    std::string heading;  // "Opening" for the text before the first heading
    std::string body;

    friend bool operator==(const SummarySection&, const SummarySection&) = default;
};

struct TextSpan {
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

struct SummaryReport {
    std::string text;
    std::vector<SummarySection> sections;
    /// 0-based rule index -> spans of `text` describing it. Empty for model output.
    std::map<std::size_t, std::vector<TextSpan>> rule_trace;

    const SummarySection* section(std::string_view heading) const;  // case-insensitive
    nlohmann::json to_json() const;
};

/// Splits text into sections. Headings are '#' lines, "**X**" lines, or short
/// lines ending in ':' (an underline of dashes or '=' below is swallowed).
std::vector<SummarySection> parse_sections(std::string_view text);

/// Empty when the report has an opening, at least one principle section and a
/// conclusion; otherwise the reasons it does not.
std::vector<std::string> structural_problems(const SummaryReport& report);

/// Deterministic offline summary naming every value, operation and constraint.
SummaryReport summarize_template(const Policy& policy, const JargonMap& jargon = default_jargon_map());

// ── Fidelity ────────────────────────────────────────────────────────────────

struct FidelityScore {
    std::vector<double> rule_scores;
    /// Per rule, the tokens that could not be found.
    std::vector<std::vector<std::string>> missing;
    double overall = 1.0;  // mean of rule_scores; 1 for an empty policy
};

/// A rule's score is the fraction of its tokens (values, operations, constraint
/// attribute names) present in the text as whole words, with '_' and ' '
/// interchangeable. Case is ignored except for all-caps tokens (IT, HR). A
/// business phrase from the jargon map counts as its technical term. With a
/// rule_trace, a traced rule is only searched for inside its own spans.
FidelityScore check_fidelity(const Policy& policy, std::string_view text,
                             const JargonMap& jargon = default_jargon_map());
FidelityScore check_fidelity(const Policy& policy, const SummaryReport& report,
                             const JargonMap& jargon = default_jargon_map());

}  // namespace abac
