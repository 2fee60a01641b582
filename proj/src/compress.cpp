#include "abac/compress.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "abac/errors.hpp"
#include "abac/parser.hpp"

namespace abac {

namespace {

std::optional<std::vector<std::string>> tuple_of(const Entity& e, const std::vector<AttributeDef>& defs) {
    std::vector<std::string> t;
    t.reserve(defs.size());
    for (const auto& d : defs) {
        auto it = e.attributes.find(d.name);
        if (it == e.attributes.end()) return std::nullopt;
        t.push_back(it->second);
    }
    return t;
}

std::string synthetic_id(const char* prefix, std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i);
    const std::size_t width = std::max<std::size_t>(std::to_string(n > 0 ? n - 1 : 0).size(), 2);
    return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::size_t CompressedLog::total_multiplicity() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.multiplicity;
    return n;
}

double CompressedLog::ratio() const {
    const auto kept = total_multiplicity();
    if (kept == 0) return 1.0;
    return static_cast<double>(records.size()) / static_cast<double>(kept);
}

CompressedLog compress_log(std::span<const LogEntry> logs, const EntityMap& users, const EntityMap& resources,
                           const AttributeSchema& schema, std::span<const std::size_t> weights) {
    if (!weights.empty() && weights.size() != logs.size())
        throw ContractViolation("weights must be empty or match the log length");
    CompressedLog out;
    out.schema = schema;
    out.source_entries = logs.size();

    using Key = std::tuple<std::vector<std::string>, std::vector<std::string>, std::string, Decision>;
    std::map<Key, std::size_t> index;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& e = logs[i];
        auto where = [&] { return "entry " + std::to_string(i + 1) + ": "; };
        auto u = users.find(e.user_id);
        auto r = resources.find(e.resource_id);
        if (u == users.end()) {
            out.diagnostics.push_back(where() + "unknown user '" + e.user_id + "', dropped");
            continue;
        }
        if (r == resources.end()) {
            out.diagnostics.push_back(where() + "unknown resource '" + e.resource_id + "', dropped");
            continue;
        }
        auto ut = tuple_of(u->second, schema.user_attributes);
        auto rt = tuple_of(r->second, schema.resource_attributes);
        if (!ut || !rt) {
            out.diagnostics.push_back(where() + "entity lacks a schema attribute, dropped");
            continue;
        }
        const std::size_t w = weights.empty() ? 1 : weights[i];
        Key key{*ut, *rt, e.operation, e.decision};
        auto [it, fresh] = index.emplace(std::move(key), out.records.size());
        if (fresh) {
            out.records.push_back(
                {std::move(*ut), std::move(*rt), e.operation, e.decision, w, e.timestamp, e.timestamp});
        } else {
            auto& rec = out.records[it->second];
            rec.multiplicity += w;
            rec.last_timestamp = e.timestamp;
        }
    }
    return out;
}

ExpandedLog expand(const CompressedLog& compressed) {
    ExpandedLog out;
    out.schema = compressed.schema;
    const auto& us = compressed.schema.user_attributes;
    const auto& rs = compressed.schema.resource_attributes;

    // id width needs the distinct counts up front
    std::set<std::vector<std::string>> distinct_users, distinct_resources;
    for (const auto& rec : compressed.records) {
        distinct_users.insert(rec.user);
        distinct_resources.insert(rec.resource);
    }
    std::map<std::vector<std::string>, std::string> uid, rid;
    std::size_t nu = 0, nr = 0;
    for (const auto& rec : compressed.records) {
        if (!uid.count(rec.user)) {
            const auto id = synthetic_id("cu", nu++, distinct_users.size());
            uid[rec.user] = id;
            Entity e{id, {}};
            for (std::size_t a = 0; a < us.size(); ++a) e.attributes[us[a].name] = rec.user[a];
            out.users.emplace(id, std::move(e));
        }
        if (!rid.count(rec.resource)) {
            const auto id = synthetic_id("cr", nr++, distinct_resources.size());
            rid[rec.resource] = id;
            Entity e{id, {}};
            for (std::size_t a = 0; a < rs.size(); ++a) e.attributes[rs[a].name] = rec.resource[a];
            out.resources.emplace(id, std::move(e));
        }
        out.entries.push_back({uid[rec.user], rid[rec.resource], rec.operation, rec.first_timestamp, rec.decision});
        out.weights.push_back(rec.multiplicity);
    }
    return out;
}

void emit_compressed(const CompressedLog& compressed, EmitStyle style, const DatasetPaths& paths) {
    const auto ex = expand(compressed);
    std::vector<std::string> lines;
    const auto uspec = emit_format(style, FileKind::Users, ex.schema);
    const auto unames = ex.schema.names(Side::User);
    for (const auto& [_, e] : ex.users) lines.push_back(format_entity_line(e, uspec, unames));
    write_lines(paths.users, lines);

    lines.clear();
    const auto rspec = emit_format(style, FileKind::Resources, ex.schema);
    const auto rnames = ex.schema.names(Side::Resource);
    for (const auto& [_, e] : ex.resources) lines.push_back(format_entity_line(e, rspec, rnames));
    write_lines(paths.resources, lines);

    lines.clear();
    const auto lspec = emit_format(style, FileKind::Logs, ex.schema);
    for (std::size_t i = 0; i < ex.entries.size(); ++i) {
        const auto m = ex.weights[i];
        lines.push_back(format_log_line(ex.entries[i], lspec, m > 1 ? std::optional<std::size_t>(m) : std::nullopt));
    }
    write_lines(paths.logs, lines);
}

}  // namespace abac
