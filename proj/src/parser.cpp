#include "abac/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace abac {

std::string_view to_string(FileKind kind) {
    switch (kind) {
        case FileKind::Users: return "users";
        case FileKind::Resources: return "resources";
        case FileKind::Logs: return "logs";
    }
    return "?";
}

std::string_view to_string(Delimiter d) {
    switch (d) {
        case Delimiter::Space: return "space";
        case Delimiter::Comma: return "comma";
        case Delimiter::Pipe: return "pipe";
    }
    return "?";
}

std::string_view to_string(AttributeStyle s) {
    return s == AttributeStyle::KeyValueColon ? "key:value" : "positional";
}

void FormatSpec::validate() const {
    if (style == AttributeStyle::Positional && positional_order.empty())
        throw ContractViolation("positional format requires an attribute order");
    if (style == AttributeStyle::KeyValueColon && !positional_order.empty())
        throw ContractViolation("key:value format must not carry a positional order");
    if (kind == FileKind::Logs &&
        (style != AttributeStyle::Positional || positional_order != kLogFields))
        throw ContractViolation("log formats are always positional");
}

std::string FormatSpec::describe() const {
    std::string out = "wrapper=";
    out += wrapper ? std::string{wrapper->first, wrapper->second} : std::string("none");
    out += " delimiter=";
    out += to_string(delimiter);
    out += " style=";
    out += to_string(style);
    return out;
}

void ParseReport::merge(const ParseReport& other, const std::string& file) {
    parsed_count += other.parsed_count;
    skipped_comments += other.skipped_comments;
    skipped_blank += other.skipped_blank;
    for (auto w : other.warnings) {
        if (w.file.empty()) w.file = file;
        warnings.push_back(std::move(w));
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view content) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

char delimiter_char(Delimiter d) {
    switch (d) {
        case Delimiter::Comma: return ',';
        case Delimiter::Pipe: return '|';
        case Delimiter::Space: return ' ';
    }
    return ' ';
}

bool is_wrapped(std::string_view line) {
    return line.size() >= 2 && line.front() == '<' && line.back() == '>';
}

/// Empty result when a field is empty.
std::optional<std::vector<std::string>> split_fields(std::string_view inner, Delimiter d) {
    std::vector<std::string> out;
    if (d == Delimiter::Space) {
        std::size_t i = 0;
        while (i < inner.size()) {
            while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
            const auto start = i;
            while (i < inner.size() && !std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
            if (i > start) out.emplace_back(inner.substr(start, i - start));
        }
        return out;
    }
    const char c = delimiter_char(d);
    std::size_t start = 0;
    while (true) {
        const auto end = inner.find(c, start);
        auto field = trim(inner.substr(start, end == std::string_view::npos ? inner.npos : end - start));
        if (field.empty()) return std::nullopt;
        out.emplace_back(field);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::optional<Decision> parse_decision(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "allow") return Decision::Allow;
    if (lower == "deny") return Decision::Deny;
    return std::nullopt;
}

std::string join_numbers(const std::vector<std::size_t>& ns) {
    std::string out;
    for (auto n : ns) {
        if (!out.empty()) out += ", ";
        out += std::to_string(n);
    }
    return out;
}

/// Indices (1-based) of lines whose flag differs from the majority (ties: line 1).
std::vector<std::size_t> minority(const std::vector<bool>& flags) {
    const auto yes = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    bool majority = yes * 2 > flags.size() ? true : (yes * 2 < flags.size() ? false : flags.front());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i] != majority) out.push_back(i + 1);
    return out;
}

Side side_of(FileKind kind) {
    return kind == FileKind::Users ? Side::User : Side::Resource;
}

// ── Single-line parsers ─────────────────────────────────────────────────────

std::optional<std::string_view> unwrap(std::string_view line, const FormatSpec& spec,
                                       std::string& error) {
    if (spec.wrapper) {
        if (line.size() < 2 || line.front() != spec.wrapper->first ||
            line.back() != spec.wrapper->second) {
            error = std::string("expected line wrapped in ") + spec.wrapper->first + "..." +
                    spec.wrapper->second;
            return std::nullopt;
        }
        return trim(line.substr(1, line.size() - 2));
    }
    if (is_wrapped(line)) {
        error = "unexpected wrapper characters";
        return std::nullopt;
    }
    return line;
}

std::optional<Entity> parse_entity_line(std::string_view line, const FormatSpec& spec, Side side,
                                        const AttributeSchema* schema, std::string& error) {
    auto inner = unwrap(line, spec, error);
    if (!inner) return std::nullopt;
    auto fields = split_fields(*inner, spec.delimiter);
    if (!fields || fields->empty()) {
        error = "empty field";
        return std::nullopt;
    }
    Entity e;
    e.id = (*fields)[0];
    if (spec.style == AttributeStyle::KeyValueColon) {
        for (std::size_t i = 1; i < fields->size(); ++i) {
            const auto& tok = (*fields)[i];
            const auto colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
                error = "expected name:value, got '" + tok + "'";
                return std::nullopt;
            }
            auto name = tok.substr(0, colon);
            if (!e.attributes.emplace(name, tok.substr(colon + 1)).second) {
                error = "attribute '" + name + "' given twice";
                return std::nullopt;
            }
        }
    } else {
        if (fields->size() != spec.positional_order.size() + 1) {
            error = "expected " + std::to_string(spec.positional_order.size() + 1) +
                    " fields, got " + std::to_string(fields->size());
            return std::nullopt;
        }
        for (std::size_t i = 0; i < spec.positional_order.size(); ++i)
            e.attributes[spec.positional_order[i]] = (*fields)[i + 1];
    }
    if (schema) {
        try {
            validate_entity(e, side, *schema);
        } catch (const SchemaMismatch& ex) {
            error = ex.what();
            return std::nullopt;
        }
    }
    return e;
}

std::size_t strip_multiplicity(std::string_view& line) {
    // trailing " xN"
    const auto sp = line.find_last_of(" \t");
    if (sp == std::string_view::npos) return 1;
    auto tail = line.substr(sp + 1);
    if (tail.size() < 2 || tail[0] != 'x') return 1;
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(tail.data() + 1, tail.data() + tail.size(), n);
    if (ec != std::errc{} || p != tail.data() + tail.size() || n == 0) return 1;
    line = trim(line.substr(0, sp));
    return n;
}

std::optional<LogEntry> parse_log_line(std::string_view line, const FormatSpec& spec,
                                       std::string& error) {
    auto inner = unwrap(line, spec, error);
    if (!inner) return std::nullopt;
    auto fields = split_fields(*inner, spec.delimiter);
    if (!fields || (fields->size() != 4 && fields->size() != 5)) {
        error = "expected 4 or 5 fields (user resource operation timestamp [decision])";
        return std::nullopt;
    }
    LogEntry e{(*fields)[0], (*fields)[1], (*fields)[2], (*fields)[3], Decision::Allow};
    if (fields->size() == 5) {
        auto d = parse_decision((*fields)[4]);
        if (!d) {
            error = "unknown decision '" + (*fields)[4] + "'";
            return std::nullopt;
        }
        e.decision = *d;
    }
    return e;
}

}  // namespace

// ── Inference ───────────────────────────────────────────────────────────────

std::vector<std::string> example_lines(std::string_view content, std::size_t count,
                                       std::string_view comment_prefix) {
    std::vector<std::string> out;
    for (auto line : split_lines(content)) {
        if (out.size() >= count) break;
        auto t = trim(line);
        if (t.empty() || (!comment_prefix.empty() && t.starts_with(comment_prefix))) continue;
        out.emplace_back(t);
    }
    return out;
}

FormatSpec infer_format(std::span<const std::string> example_lines_in, FileKind kind,
                        std::span<const std::string> attribute_names) {
    std::vector<std::string_view> lines;
    for (const auto& l : example_lines_in) {
        auto t = trim(l);
        if (t.empty() || t.starts_with("#")) continue;
        if (kind == FileKind::Logs) strip_multiplicity(t);
        lines.push_back(t);
    }
    if (lines.empty()) throw AmbiguousFormat("no usable example lines");

    FormatSpec spec;
    spec.kind = kind;

    std::vector<bool> wrapped;
    for (auto l : lines) wrapped.push_back(is_wrapped(l));
    if (auto odd = minority(wrapped); !odd.empty())
        throw ConflictingExamples("example lines disagree on <...> wrapping: lines " +
                                  join_numbers(odd));
    if (wrapped.front()) spec.wrapper = std::make_pair('<', '>');

    std::vector<std::string_view> inner;
    for (auto l : lines) inner.push_back(spec.wrapper ? trim(l.substr(1, l.size() - 2)) : l);

    std::vector<bool> has_pipe, has_comma;
    for (auto l : inner) {
        has_pipe.push_back(l.find('|') != std::string_view::npos);
        has_comma.push_back(l.find(',') != std::string_view::npos);
    }
    const auto pipes = static_cast<std::size_t>(std::count(has_pipe.begin(), has_pipe.end(), true));
    const auto commas = static_cast<std::size_t>(std::count(has_comma.begin(), has_comma.end(), true));
    const std::size_t n = lines.size();
    if (pipes * 2 > n)
        spec.delimiter = Delimiter::Pipe;
    else if (commas * 2 > n)
        spec.delimiter = Delimiter::Comma;
    else
        spec.delimiter = Delimiter::Space;

    {
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < n; ++i) {
            const bool ok = spec.delimiter == Delimiter::Pipe    ? has_pipe[i]
                            : spec.delimiter == Delimiter::Comma ? has_comma[i] && !has_pipe[i]
                                                                 : !has_pipe[i] && !has_comma[i];
            if (!ok) bad.push_back(i + 1);
        }
        if (!bad.empty())
            throw ConflictingExamples("example lines disagree on the field delimiter (majority: " +
                                      std::string(to_string(spec.delimiter)) + "): lines " +
                                      join_numbers(bad));
    }

    std::vector<std::vector<std::string>> fields;
    for (std::size_t i = 0; i < n; ++i) {
        auto f = split_fields(inner[i], spec.delimiter);
        if (!f || f->empty())
            throw ConflictingExamples("example line " + std::to_string(i + 1) + " has an empty field");
        fields.push_back(std::move(*f));
    }
    if (std::all_of(fields.begin(), fields.end(), [](const auto& f) { return f.size() == 1; }))
        throw AmbiguousFormat(
            "every example line is a single token; candidates: space-delimited and "
            "comma-delimited (add an example with attributes)");

    if (kind == FileKind::Logs) {
        spec.style = AttributeStyle::Positional;
        spec.positional_order = kLogFields;
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& f = fields[i];
            if (f.size() == 5 ? !parse_decision(f[4]).has_value() : f.size() != 4) bad.push_back(i + 1);
        }
        if (!bad.empty())
            throw ConflictingExamples(
                "log example lines must have 4 or 5 fields ending in Allow/Deny: lines " +
                join_numbers(bad));
        return spec;
    }

    const auto& first = fields.front();
    if (first.size() == 1)
        throw AmbiguousFormat(
            "first example line has no attributes; candidates: key:value and positional");
    const bool kv = std::all_of(first.begin() + 1, first.end(),
                                [](const std::string& t) { return t.find(':') != std::string::npos; });
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = fields[i];
        const bool ok =
            kv ? std::all_of(f.begin() + 1, f.end(),
                             [](const std::string& t) { return t.find(':') != std::string::npos; })
               : f.size() == first.size();
        if (!ok) bad.push_back(i + 1);
    }
    if (!bad.empty())
        throw ConflictingExamples(std::string("example lines disagree with the ") +
                                  (kv ? "key:value" : "positional") + " layout of line 1: lines " +
                                  join_numbers(bad));
    if (kv) {
        spec.style = AttributeStyle::KeyValueColon;
        return spec;
    }
    spec.style = AttributeStyle::Positional;
    const std::size_t width = first.size() - 1;
    if (!attribute_names.empty()) {
        if (attribute_names.size() != width)
            throw ConflictingExamples("examples carry " + std::to_string(width) +
                                      " positional attributes but the schema declares " +
                                      std::to_string(attribute_names.size()));
        spec.positional_order.assign(attribute_names.begin(), attribute_names.end());
    } else {
        for (std::size_t i = 1; i <= width; ++i) spec.positional_order.push_back("attr" + std::to_string(i));
    }
    return spec;
}

// ── File parsing ────────────────────────────────────────────────────────────

EntityParseResult parse_entities(std::string_view content, const FormatSpec& spec, FileKind kind,
                                 const AttributeSchema* schema, const ParseOptions& options) {
    if (kind == FileKind::Logs || spec.kind != kind)
        throw FileKindMismatch("a " + std::string(to_string(spec.kind)) +
                               " format cannot parse a " + std::string(to_string(kind)) + " file");
    spec.validate();
    const Side side = side_of(kind);

    std::vector<std::string> fallback_names;
    if (schema)
        fallback_names = schema->names(side);
    else if (spec.style == AttributeStyle::Positional)
        fallback_names = spec.positional_order;

    EntityParseResult result;
    std::map<std::string, std::size_t> index;
    std::size_t lineno = 0;
    for (auto raw : split_lines(content)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty()) {
            ++result.report.skipped_blank;
            continue;
        }
        if (!spec.comment_prefix.empty() && line.starts_with(spec.comment_prefix)) {
            ++result.report.skipped_comments;
            continue;
        }
        std::string error;
        auto entity = parse_entity_line(line, spec, side, schema, error);
        if (!entity && options.allow_mixed) {
            try {
                const std::string one(line);
                auto alt = infer_format(std::span(&one, 1), kind,
                                        std::span<const std::string>(fallback_names));
                // a positional reading without known names would invent attributes
                if (alt != spec && !(alt.style == AttributeStyle::Positional && fallback_names.empty())) {
                    std::string alt_error;
                    entity = parse_entity_line(line, alt, side, schema, alt_error);
                }
            } catch (const DataError&) {
                // keep the primary error
            }
        }
        if (!entity) {
            result.report.warnings.push_back({"", lineno, error});
            continue;
        }
        if (auto it = index.find(entity->id); it != index.end()) {
            result.report.warnings.push_back(
                {"", lineno, "duplicate id '" + entity->id + "': later definition wins"});
            result.entities[it->second] = std::move(*entity);
            continue;
        }
        index.emplace(entity->id, result.entities.size());
        result.entities.push_back(std::move(*entity));
        ++result.report.parsed_count;
    }
    return result;
}

LogParseResult parse_logs(std::string_view content, const FormatSpec& spec,
                          const ParseOptions& options) {
    if (spec.kind != FileKind::Logs)
        throw FileKindMismatch("a " + std::string(to_string(spec.kind)) +
                               " format cannot parse a logs file");
    spec.validate();
    LogParseResult result;
    std::size_t lineno = 0;
    for (auto raw : split_lines(content)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty()) {
            ++result.report.skipped_blank;
            continue;
        }
        if (!spec.comment_prefix.empty() && line.starts_with(spec.comment_prefix)) {
            ++result.report.skipped_comments;
            continue;
        }
        const std::size_t mult = strip_multiplicity(line);
        std::string error;
        auto entry = parse_log_line(line, spec, error);
        if (!entry && options.allow_mixed) {
            try {
                const std::string one(line);
                auto alt = infer_format(std::span(&one, 1), FileKind::Logs);
                if (alt != spec) {
                    std::string alt_error;
                    entry = parse_log_line(line, alt, alt_error);
                }
            } catch (const DataError&) {
            }
        }
        if (!entry) {
            result.report.warnings.push_back({"", lineno, error});
            continue;
        }
        result.entries.push_back(std::move(*entry));
        result.multiplicities.push_back(mult);
        ++result.report.parsed_count;
    }
    return result;
}

// ── Emission ────────────────────────────────────────────────────────────────

namespace {

void check_token(const std::string& value, const FormatSpec& spec) {
    const bool bad =
        value.empty() ||
        std::any_of(value.begin(), value.end(),
                    [](unsigned char c) { return std::isspace(c) || c == '<' || c == '>'; }) ||
        (spec.delimiter != Delimiter::Space && value.find(delimiter_char(spec.delimiter)) != std::string::npos);
    if (bad) throw ContractViolation("value '" + value + "' cannot be written in format " + spec.describe());
}

std::string assemble(const std::vector<std::string>& fields, const FormatSpec& spec) {
    std::string out;
    if (spec.wrapper) out += spec.wrapper->first;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += delimiter_char(spec.delimiter);
        out += fields[i];
    }
    if (spec.wrapper) out += spec.wrapper->second;
    return out;
}

}  // namespace

std::string format_entity_line(const Entity& entity, const FormatSpec& spec,
                               std::span<const std::string> key_order) {
    std::vector<std::string> fields{entity.id};
    check_token(entity.id, spec);
    if (spec.style == AttributeStyle::KeyValueColon) {
        auto put = [&](const std::string& name, const std::string& value) {
            check_token(value, spec);
            fields.push_back(name + ":" + value);
        };
        for (const auto& name : key_order)
            if (auto it = entity.attributes.find(name); it != entity.attributes.end()) put(name, it->second);
        for (const auto& [name, value] : entity.attributes)
            if (std::find(key_order.begin(), key_order.end(), name) == key_order.end()) put(name, value);
    } else {
        for (const auto& name : spec.positional_order) {
            auto it = entity.attributes.find(name);
            if (it == entity.attributes.end())
                throw ContractViolation("entity '" + entity.id + "' has no attribute '" + name + "'");
            check_token(it->second, spec);
            fields.push_back(it->second);
        }
    }
    return assemble(fields, spec);
}

std::string format_log_line(const LogEntry& entry, const FormatSpec& spec,
                            std::optional<std::size_t> multiplicity) {
    std::vector<std::string> fields{entry.user_id, entry.resource_id, entry.operation, entry.timestamp,
                                    std::string(to_string(entry.decision))};
    for (const auto& f : fields) check_token(f, spec);
    auto out = assemble(fields, spec);
    if (multiplicity) out += " x" + std::to_string(*multiplicity);
    return out;
}

// ── Datasets ────────────────────────────────────────────────────────────────

std::string read_text_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw MissingFile(path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

template <typename Fn>
auto with_file_context(const std::filesystem::path& path, Fn&& fn) {
    try {
        return fn();
    } catch (const AmbiguousFormat& e) {
        throw AmbiguousFormat(path.string() + ": " + e.what());
    } catch (const ConflictingExamples& e) {
        throw ConflictingExamples(path.string() + ": " + e.what());
    }
}

void drop_incomplete(EntityMap& entities, Side side, const AttributeSchema& schema,
                     ParseReport& report, const std::string& file) {
    for (auto it = entities.begin(); it != entities.end();) {
        bool complete = true;
        for (const auto& def : schema.side(side))
            if (!it->second.attributes.contains(def.name)) complete = false;
        if (complete) {
            ++it;
            continue;
        }
        report.warnings.push_back({file, 0, "entity '" + it->first + "' lacks attributes and was dropped"});
        --report.parsed_count;
        it = entities.erase(it);
    }
}

void resolve_logs(Dataset& ds, const std::string& file) {
    std::vector<LogEntry> kept;
    std::vector<std::size_t> mult;
    for (std::size_t i = 0; i < ds.logs.size(); ++i) {
        const auto& e = ds.logs[i];
        const bool ok = ds.users.contains(e.user_id) && ds.resources.contains(e.resource_id);
        if (!ok) {
            ds.report.warnings.push_back(
                {file, 0, "log entry " + std::to_string(i + 1) + " (" + e.user_id + ", " +
                              e.resource_id + ") references an unknown entity and was dropped"});
            --ds.report.parsed_count;
            continue;
        }
        kept.push_back(e);
        mult.push_back(ds.multiplicities[i]);
    }
    ds.logs = std::move(kept);
    ds.multiplicities = std::move(mult);
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& user_path,
                     const std::filesystem::path& resource_path,
                     const std::filesystem::path& log_path, const LoadOptions& options) {
    const auto user_text = read_text_file(user_path);
    const auto resource_text = read_text_file(resource_path);
    const auto log_text = read_text_file(log_path);

    Dataset ds;
    const AttributeSchema* schema = options.schema ? &*options.schema : nullptr;
    const auto user_names = schema ? schema->names(Side::User) : std::vector<std::string>{};
    const auto resource_names = schema ? schema->names(Side::Resource) : std::vector<std::string>{};

    ds.user_format = with_file_context(user_path, [&] {
        return infer_format(example_lines(user_text, options.examples_per_file), FileKind::Users,
                            user_names);
    });
    ds.resource_format = with_file_context(resource_path, [&] {
        return infer_format(example_lines(resource_text, options.examples_per_file),
                            FileKind::Resources, resource_names);
    });
    ds.log_format = with_file_context(log_path, [&] {
        return infer_format(example_lines(log_text, options.examples_per_file), FileKind::Logs);
    });

    auto users = parse_entities(user_text, ds.user_format, FileKind::Users, schema, options.parse);
    auto resources =
        parse_entities(resource_text, ds.resource_format, FileKind::Resources, schema, options.parse);
    auto logs = parse_logs(log_text, ds.log_format, options.parse);

    ParseReport user_report = users.report, resource_report = resources.report;
    for (auto& e : users.entities) ds.users.emplace(e.id, std::move(e));
    for (auto& e : resources.entities) ds.resources.emplace(e.id, std::move(e));

    if (schema) {
        ds.schema = *schema;
    } else {
        ds.schema = schema_from_entities(ds.users, ds.resources);
        drop_incomplete(ds.users, Side::User, ds.schema, user_report, user_path.string());
        drop_incomplete(ds.resources, Side::Resource, ds.schema, resource_report,
                        resource_path.string());
    }
    ds.report.merge(user_report, user_path.string());
    ds.report.merge(resource_report, resource_path.string());
    ds.report.merge(logs.report, log_path.string());
    ds.logs = std::move(logs.entries);
    ds.multiplicities = std::move(logs.multiplicities);
    resolve_logs(ds, log_path.string());
    return ds;
}

// ── Benchmark notation ──────────────────────────────────────────────────────

namespace {

std::vector<std::string> split_args(std::string_view args) {
    std::vector<std::string> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= args.size(); ++i) {
        if (i == args.size() || (args[i] == ',' && depth == 0)) {
            out.emplace_back(trim(args.substr(start, i - start)));
            start = i + 1;
        } else if (args[i] == '{') {
            ++depth;
        } else if (args[i] == '}') {
            --depth;
        }
    }
    return out;
}

std::optional<std::pair<std::string, std::vector<std::string>>> call_of(std::string_view line) {
    const auto open = line.find('(');
    const auto close = line.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        return std::nullopt;
    return std::make_pair(std::string(trim(line.substr(0, open))),
                          split_args(line.substr(open + 1, close - open - 1)));
}

std::optional<Entity> xs_entity(const std::vector<std::string>& args, std::string& error) {
    if (args.empty() || args[0].empty()) {
        error = "missing entity id";
        return std::nullopt;
    }
    Entity e{args[0], {}};
    for (std::size_t i = 1; i < args.size(); ++i) {
        const auto eq = args[i].find('=');
        if (eq == std::string::npos) {
            error = "expected name=value, got '" + args[i] + "'";
            return std::nullopt;
        }
        auto name = std::string(trim(std::string_view(args[i]).substr(0, eq)));
        auto value = std::string(trim(std::string_view(args[i]).substr(eq + 1)));
        if (value.starts_with("{") && value.ends_with("}")) {
            std::istringstream ss(value.substr(1, value.size() - 2));
            std::set<std::string> items;
            for (std::string item; ss >> item;) items.insert(item);
            if (items.empty()) continue;
            value.clear();
            for (const auto& item : items) value += (value.empty() ? "" : "+") + item;
        }
        if (name.empty() || value.empty()) {
            error = "empty attribute in '" + args[i] + "'";
            return std::nullopt;
        }
        e.attributes[name] = value;
    }
    return e;
}

}  // namespace

Dataset load_xu_stoller(const std::filesystem::path& user_path,
                        const std::filesystem::path& resource_path,
                        const std::filesystem::path& log_path) {
    Dataset ds;
    for (const auto& path : {user_path, resource_path, log_path}) {
        const auto text = read_text_file(path);
        ParseReport report;
        std::size_t lineno = 0;
        for (auto raw : split_lines(text)) {
            ++lineno;
            auto line = trim(raw);
            if (line.empty()) {
                ++report.skipped_blank;
                continue;
            }
            if (line.starts_with("#") || line.starts_with("//") || line.starts_with("%")) {
                ++report.skipped_comments;
                continue;
            }
            auto call = call_of(line);
            std::string error = "unrecognized line";
            bool ok = false;
            if (call && (call->first == "userAttrib" || call->first == "resourceAttrib")) {
                if (auto e = xs_entity(call->second, error)) {
                    auto& target = call->first == "userAttrib" ? ds.users : ds.resources;
                    target[e->id] = std::move(*e);
                    ok = true;
                }
            } else if (call && (call->first == "log" || call->first == "permission")) {
                const auto& a = call->second;
                if (a.size() >= 3 && a.size() <= 5 && !a[0].empty() && !a[1].empty() && !a[2].empty()) {
                    LogEntry e{a[0], a[1], a[2], a.size() >= 4 ? a[3] : "", Decision::Allow};
                    if (a.size() == 5) {
                        if (auto d = parse_decision(a[4])) {
                            e.decision = *d;
                            ok = true;
                        } else {
                            error = "unknown decision '" + a[4] + "'";
                        }
                    } else {
                        ok = true;
                    }
                    if (ok) {
                        ds.logs.push_back(std::move(e));
                        ds.multiplicities.push_back(1);
                    }
                } else {
                    error = "expected log(user, resource, op[, timestamp[, decision]])";
                }
            } else if (call && call->first == "rule") {
                ++report.skipped_comments;  // policy lines carry no data
                continue;
            }
            if (ok)
                ++report.parsed_count;
            else
                report.warnings.push_back({"", lineno, error});
        }
        ds.report.merge(report, path.string());
    }
    ds.schema = schema_from_entities(ds.users, ds.resources);
    drop_incomplete(ds.users, Side::User, ds.schema, ds.report, user_path.string());
    drop_incomplete(ds.resources, Side::Resource, ds.schema, ds.report, resource_path.string());
    resolve_logs(ds, log_path.string());
    return ds;
}

nlohmann::json schema_to_json(const AttributeSchema& schema) {
    nlohmann::json j;
    for (Side s : {Side::User, Side::Resource}) {
        auto& arr = j[s == Side::User ? "user_attributes" : "resource_attributes"];
        arr = nlohmann::json::array();
        for (const auto& def : schema.side(s)) arr.push_back({{"name", def.name}, {"domain", def.domain}});
    }
    return j;
}

AttributeSchema schema_from_json(const nlohmann::json& j) {
    AttributeSchema schema;
    try {
        for (Side s : {Side::User, Side::Resource}) {
            for (const auto& a : j.at(s == Side::User ? "user_attributes" : "resource_attributes"))
                schema.side(s).push_back(
                    {a.at("name").get<std::string>(), a.at("domain").get<std::set<std::string>>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("malformed schema JSON: ") + e.what());
    }
    schema.validate();
    return schema;
}

}  // namespace abac
