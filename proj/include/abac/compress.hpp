#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "abac/datagen.hpp"
#include "abac/model.hpp"

namespace abac {

/// One unique permission: entries equal at the attribute level collapse here.
struct CompressedRecord {
    std::vector<std::string> user;      // values in schema order
    std::vector<std::string> resource;  // values in schema order
    std::string operation;
    Decision decision = Decision::Allow;
    std::size_t multiplicity = 0;
    std::string first_timestamp;
    std::string last_timestamp;

    friend bool operator==(const CompressedRecord&, const CompressedRecord&) = default;
};

struct CompressedLog {
    AttributeSchema schema;
    std::vector<CompressedRecord> records;  // first-occurrence order
    /// Entries that went in, dropped ones included.
    std::size_t source_entries = 0;
    std::vector<std::string> diagnostics;

    std::size_t total_multiplicity() const;
    /// records / surviving entries; 1 for an empty log.
    double ratio() const;
};

/// Groups by (user tuple, resource tuple, operation, decision). Entries with an
/// unknown id, or an entity lacking a schema attribute, are dropped with a
/// diagnostic. `weights`, when given, holds one multiplicity per entry.
CompressedLog compress_log(std::span<const LogEntry> logs, const EntityMap& users, const EntityMap& resources,
                           const AttributeSchema& schema, std::span<const std::size_t> weights = {});

struct ExpandedLog {
    AttributeSchema schema;
    EntityMap users;      // cu<k>, one per distinct user tuple
    EntityMap resources;  // cr<k>, one per distinct resource tuple
    std::vector<LogEntry> entries;
    std::vector<std::size_t> weights;  // multiplicity of each entry
};

/// One representative entry per record, stamped with the record's first timestamp.
ExpandedLog expand(const CompressedLog& compressed);

/// Writes the expanded form; log lines carry a trailing "xN" when N > 1.
void emit_compressed(const CompressedLog& compressed, EmitStyle style, const DatasetPaths& paths);

}  // namespace abac
