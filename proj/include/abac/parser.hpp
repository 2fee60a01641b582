#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/model.hpp"

namespace abac {

enum class FileKind { Users, Resources, Logs };
enum class Delimiter { Space, Comma, Pipe };
enum class AttributeStyle { KeyValueColon, Positional };

std::string_view to_string(FileKind kind);
std::string_view to_string(Delimiter d);
std::string_view to_string(AttributeStyle s);

/// Field order of every log line.
inline const std::vector<std::string> kLogFields = {"user", "resource", "operation", "timestamp",
                                                    "decision"};

/// Line structure of one input file.
struct FormatSpec {
    FileKind kind = FileKind::Users;
    std::optional<std::pair<char, char>> wrapper;
    Delimiter delimiter = Delimiter::Space;
    AttributeStyle style = AttributeStyle::KeyValueColon;
    /// Attribute names for Positional entity files (id excluded), or kLogFields.
    std::vector<std::string> positional_order;
    std::string comment_prefix = "#";

    /// Throws ContractViolation if the style/order combination is invalid.
    void validate() const;
    /// e.g. "wrapper=<> delimiter=space style=key:value"
    std::string describe() const;

    friend bool operator==(const FormatSpec&, const FormatSpec&) = default;
};

struct ParseWarning {
    std::string file;  // empty for single-file parses
    std::size_t line = 0;
    std::string message;
};

/// Every input line is accounted for exactly once:
/// parsed_count + skipped_comments + skipped_blank + warnings.size() == lines.
struct ParseReport {
    std::size_t parsed_count = 0;
    std::size_t skipped_comments = 0;
    std::size_t skipped_blank = 0;
    std::vector<ParseWarning> warnings;

    std::size_t accounted_lines() const {
        return parsed_count + skipped_comments + skipped_blank + warnings.size();
    }
    void merge(const ParseReport& other, const std::string& file);
};

struct EntityParseResult {
    std::vector<Entity> entities;
    ParseReport report;
};

struct LogParseResult {
    std::vector<LogEntry> entries;
    /// Per-entry multiplicity from a trailing "xN" annotation; 1 when absent.
    std::vector<std::size_t> multiplicities;
    ParseReport report;
};

struct ParseOptions {
    /// Lines that do not fit the primary spec are re-inferred on their own.
    bool allow_mixed = true;
};

/// Deterministic structure inference from example lines (comments and blank
/// lines in the examples are ignored). For Positional entity files the
/// attribute names are taken from `attribute_names` when given, otherwise
/// attr1..attrN. Throws AmbiguousFormat or ConflictingExamples.
FormatSpec infer_format(std::span<const std::string> example_lines, FileKind kind,
                        std::span<const std::string> attribute_names = {});

/// First `count` non-comment, non-blank lines of a file.
std::vector<std::string> example_lines(std::string_view content, std::size_t count,
                                       std::string_view comment_prefix = "#");

/// Malformed lines become warnings; the parse never aborts on data.
/// Throws FileKindMismatch when spec.kind != kind or kind is Logs.
EntityParseResult parse_entities(std::string_view content, const FormatSpec& spec, FileKind kind,
                                 const AttributeSchema* schema = nullptr,
                                 const ParseOptions& options = {});

/// Throws FileKindMismatch when spec.kind is not Logs.
LogParseResult parse_logs(std::string_view content, const FormatSpec& spec,
                          const ParseOptions& options = {});

/// key:value lines list `key_order` first, then any other attributes by name.
std::string format_entity_line(const Entity& entity, const FormatSpec& spec,
                               std::span<const std::string> key_order = {});
std::string format_log_line(const LogEntry& entry, const FormatSpec& spec,
                            std::optional<std::size_t> multiplicity = std::nullopt);

// ── Datasets ────────────────────────────────────────────────────────────────

struct Dataset {
    AttributeSchema schema;
    EntityMap users;
    EntityMap resources;
    std::vector<LogEntry> logs;
    std::vector<std::size_t> multiplicities;
    FormatSpec user_format;
    FormatSpec resource_format;
    FormatSpec log_format;
    ParseReport report;
};

struct LoadOptions {
    std::size_t examples_per_file = 5;
    /// Bound schema: positional names, domain checks, completeness checks.
    std::optional<AttributeSchema> schema;
    ParseOptions parse;
};

std::string read_text_file(const std::filesystem::path& path);  // throws MissingFile / IoError

/// Infers each file's format independently, parses, and resolves log ids.
/// Log entries with unknown ids are dropped with a warning.
Dataset load_dataset(const std::filesystem::path& user_path,
                     const std::filesystem::path& resource_path,
                     const std::filesystem::path& log_path, const LoadOptions& options = {});

/// Best-effort reader for the userAttrib(...)/resourceAttrib(...) benchmark
/// notation. Log lines are log(user, resource, op[, timestamp[, decision]]) or
/// permission(user, resource, op). Set-valued attributes are joined with '+'.
Dataset load_xu_stoller(const std::filesystem::path& user_path,
                        const std::filesystem::path& resource_path,
                        const std::filesystem::path& log_path);

nlohmann::json schema_to_json(const AttributeSchema& schema);
AttributeSchema schema_from_json(const nlohmann::json& j);

}  // namespace abac
