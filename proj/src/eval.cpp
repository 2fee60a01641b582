#include "abac/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "abac/compress.hpp"
#include "abac/embedded_data.hpp"
#include "abac/errors.hpp"

namespace abac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

nlohmann::json num_json(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

double num_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return kNaN;
    return j.at(key).get<double>();
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string opt_text(const std::optional<double>& v, const char* missing) {
    return v ? num(*v) : missing;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

GenConfig gen_config(SchemaVariant variant, std::size_t log_size, std::uint64_t seed, const ExperimentPlan& plan) {
    GenConfig g;
    g.schema_variant = variant;
    g.log_size = log_size;
    g.rng_seed = seed;
    g.deny_sample_prob = plan.deny_sample_prob;
    g.dac_allow_ratio = plan.dac_allow_ratio;
    return g;
}

MinerConfig miner_config(const ExperimentPlan& plan) {
    MinerConfig m;
    m.threads = plan.threads;
    return m;
}

struct Stats {
    std::vector<double> xs;
    double mean() const {
        if (xs.empty()) return kNaN;
        double t = 0;
        for (double x : xs) t += x;
        return t / static_cast<double>(xs.size());
    }
    double min() const { return xs.empty() ? kNaN : *std::min_element(xs.begin(), xs.end()); }
    double max() const { return xs.empty() ? kNaN : *std::max_element(xs.begin(), xs.end()); }
};

std::string describe(const std::exception& e) { return e.what(); }

/// Share of distinct Allow permissions that some rule grants.
double distinct_coverage(const std::vector<AbacRule>& rules, const CompressedLog& compressed) {
    const auto& us = compressed.schema.user_attributes;
    const auto& rs = compressed.schema.resource_attributes;
    std::size_t allow = 0, covered = 0;
    for (const auto& rec : compressed.records) {
        if (rec.decision != Decision::Allow) continue;
        ++allow;
        Entity u{"u", {}}, r{"r", {}};
        for (std::size_t i = 0; i < us.size(); ++i) u.attributes[us[i].name] = rec.user[i];
        for (std::size_t i = 0; i < rs.size(); ++i) r.attributes[rs[i].name] = rec.resource[i];
        for (const auto& rule : rules) {
            if (rule_matches(rule, u, r, rec.operation)) {
                ++covered;
                break;
            }
        }
    }
    return allow == 0 ? 100.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(allow);
}

}  // namespace

// ── Plan ────────────────────────────────────────────────────────────────────

void ExperimentPlan::validate() const {
    if (variants.empty()) throw ContractViolation("plan needs at least one variant");
    if (log_sizes.empty()) throw ContractViolation("plan needs at least one log size");
    for (std::size_t i = 0; i < log_sizes.size(); ++i) {
        if (log_sizes[i] == 0) throw ContractViolation("log sizes must be positive");
        if (i > 0 && log_sizes[i] <= log_sizes[i - 1])
            throw ContractViolation("log sizes must be strictly ascending");
    }
    if (repetitions < 1) throw ContractViolation("repetitions must be >= 1");
    if (!seeds.empty() && seeds.size() != repetitions)
        throw ContractViolation("seeds must be empty or list one seed per repetition");
    if (threads < 1) throw ContractViolation("threads must be >= 1");
    gen_config(variants.front(), log_sizes.front(), 1, *this).validate();
}

std::vector<std::uint64_t> ExperimentPlan::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (std::size_t i = 1; i <= repetitions; ++i) out.push_back(i);
    return out;
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("plan must be a JSON object");
    ExperimentPlan p;
    try {
        if (j.contains("variants")) {
            p.variants.clear();
            for (const auto& v : j.at("variants")) p.variants.push_back(schema_variant_from_string(v.get<std::string>()));
        }
        const auto& sizes = j.at("log_sizes");
        if (sizes.is_object()) {
            const auto from = sizes.at("from").get<std::size_t>();
            const auto to = sizes.at("to").get<std::size_t>();
            const auto step = sizes.value("step", std::size_t{1});
            if (step == 0) throw DataError("log_sizes step must be positive");
            for (auto s = from; s <= to; s += step) p.log_sizes.push_back(s);
        } else {
            p.log_sizes = sizes.get<std::vector<std::size_t>>();
        }
        p.repetitions = j.value("repetitions", p.repetitions);
        if (j.contains("seeds")) p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        p.deny_sample_prob = j.value("deny_sample_prob", p.deny_sample_prob);
        p.dac_allow_ratio = j.value("dac_allow_ratio", p.dac_allow_ratio);
        p.threads = j.value("threads", p.threads);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad plan: ") + e.what());
    } catch (const ContractViolation& e) {
        throw DataError(std::string("bad plan: ") + e.what());
    }
    try {
        p.validate();
    } catch (const ContractViolation& e) {
        throw DataError(std::string("bad plan: ") + e.what());
    }
    return p;
}

nlohmann::json ExperimentPlan::to_json() const {
    nlohmann::json vs = nlohmann::json::array();
    for (auto v : variants) vs.push_back(std::string(to_string(v)));
    return {{"variants", vs},
            {"log_sizes", log_sizes},
            {"repetitions", repetitions},
            {"seeds", seeds},
            {"deny_sample_prob", deny_sample_prob},
            {"dac_allow_ratio", dac_allow_ratio},
            {"threads", threads}};
}

// ── Curves ──────────────────────────────────────────────────────────────────

RunMeasurement run_once(DataModel model, SchemaVariant variant, std::size_t log_size, std::uint64_t seed,
                        const ExperimentPlan& plan) {
    const auto data = generate_dataset(model, gen_config(variant, log_size, seed, plan));
    const auto t0 = std::chrono::steady_clock::now();
    auto result = mine_policy(data.users, data.resources, data.logs, data.schema, miner_config(plan));
    const auto t1 = std::chrono::steady_clock::now();
    result.report.mining_seconds = std::chrono::duration<double>(t1 - t0).count();
    return {std::move(result.report), std::move(result.policy)};
}

std::vector<CurvePoint> run_curve(const ExperimentPlan& plan, DataModel model) {
    plan.validate();
    const auto seeds = plan.effective_seeds();
    std::vector<SchemaVariant> variants = plan.variants;
    if (model == DataModel::Dac) variants = {plan.variants.front()};

    std::vector<CurvePoint> out;
    for (auto variant : variants) {
        for (auto size : plan.log_sizes) {
            CurvePoint pt;
            pt.variant = model == DataModel::Dac ? "dac" : std::string(to_string(variant));
            pt.log_size = size;
            Stats cov, rules, wsc, secs, over;
            for (auto seed : seeds) {
                try {
                    const auto m = run_once(model, variant, size, seed, plan);
                    cov.xs.push_back(m.report.coverage_percent);
                    rules.xs.push_back(static_cast<double>(m.report.rule_count));
                    wsc.xs.push_back(static_cast<double>(m.report.total_wsc));
                    secs.xs.push_back(m.report.mining_seconds);
                    over.xs.push_back(static_cast<double>(m.report.over_permissions));
                } catch (const std::exception& e) {
                    pt.errors.push_back("seed " + std::to_string(seed) + ": " + describe(e));
                }
            }
            pt.runs = cov.xs.size();
            pt.coverage_percent = cov.mean();
            pt.rule_count = rules.mean();
            pt.total_wsc = wsc.mean();
            pt.mining_seconds = secs.mean();
            pt.over_permissions = over.mean();
            pt.coverage_min = cov.min();
            pt.coverage_max = cov.max();
            pt.rule_count_min = rules.min();
            pt.rule_count_max = rules.max();
            pt.seconds_min = secs.min();
            pt.seconds_max = secs.max();
            out.push_back(std::move(pt));
        }
    }
    return out;
}

// ── Ablation ────────────────────────────────────────────────────────────────

const std::vector<ReferenceRow>& reference_ablation() {
    static const std::vector<ReferenceRow> rows = [] {
        std::vector<ReferenceRow> out;
        const auto j = nlohmann::json::parse(embedded::kReferenceAblationJson);
        for (const auto& r : j.at("rows")) {
            ReferenceRow row;
            row.log_size = r.at("log_size").get<std::size_t>();
            row.llm_only_rules = opt_from(r, "llm_only_rules");
            row.llm_only_seconds = opt_from(r, "llm_only_seconds");
            row.compressed_llm_rules = opt_from(r, "compressed_llm_rules");
            row.compressed_llm_seconds = opt_from(r, "compressed_llm_seconds");
            out.push_back(row);
        }
        return out;
    }();
    return rows;
}

std::vector<AblationRow> run_ablation(const ExperimentPlan& input) {
    ExperimentPlan plan = input;
    if (plan.log_sizes.empty())
        for (const auto& r : reference_ablation()) plan.log_sizes.push_back(r.log_size);
    plan.validate();
    const auto seeds = plan.effective_seeds();

    std::vector<AblationRow> out;
    for (auto variant : plan.variants) {
        for (auto size : plan.log_sizes) {
            AblationRow row;
            row.variant = std::string(to_string(variant));
            row.log_size = size;
            for (const auto& ref : reference_ablation())
                if (ref.log_size == size) row.reference = ref;
            Stats rules, secs, cov, over, records, dcov, ccov;
            for (auto seed : seeds) {
                try {
                    const auto data = generate_dataset(DataModel::Abac, gen_config(variant, size, seed, plan));
                    const auto t0 = std::chrono::steady_clock::now();
                    const auto full = mine_policy(data.users, data.resources, data.logs, data.schema,
                                                  miner_config(plan));
                    const double elapsed =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

                    const auto compressed = compress_log(data.logs, data.users, data.resources, data.schema);
                    const auto ex = expand(compressed);
                    const auto small = mine_policy(ex.users, ex.resources, ex.entries, ex.schema, miner_config(plan));

                    rules.xs.push_back(static_cast<double>(full.report.rule_count));
                    secs.xs.push_back(elapsed);
                    cov.xs.push_back(full.report.coverage_percent);
                    over.xs.push_back(static_cast<double>(full.report.over_permissions));
                    records.xs.push_back(static_cast<double>(compressed.records.size()));
                    dcov.xs.push_back(distinct_coverage(full.policy.rules, compressed));
                    ccov.xs.push_back(distinct_coverage(small.policy.rules, compressed));
                } catch (const std::exception& e) {
                    row.errors.push_back("seed " + std::to_string(seed) + ": " + describe(e));
                }
            }
            row.runs = rules.xs.size();
            row.rule_count = rules.mean();
            row.mining_seconds = secs.mean();
            row.coverage_percent = cov.mean();
            row.over_permissions = over.mean();
            row.compressed_records = records.mean();
            row.distinct_coverage_percent = dcov.mean();
            row.compressed_distinct_coverage_percent = ccov.mean();
            out.push_back(std::move(row));
        }
    }
    return out;
}

// ── Reports ─────────────────────────────────────────────────────────────────

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    if (s == "md" || s == "markdown") return ReportFormat::Markdown;
    throw ContractViolation("unknown report format '" + std::string(s) + "'");
}

ReportFormat report_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".json") return ReportFormat::Json;
    if (ext == ".md") return ReportFormat::Markdown;
    return ReportFormat::Csv;
}

std::string render_points(const std::vector<CurvePoint>& points, ReportFormat format) {
    std::string out;
    switch (format) {
        case ReportFormat::Csv:
            out = std::string(kCurveCsvHeader) + "\n";
            for (const auto& p : points)
                out += p.variant + "," + std::to_string(p.log_size) + "," + num(p.coverage_percent) + "," +
                       num(p.rule_count) + "," + num(p.total_wsc) + "," + num(p.mining_seconds) + "," +
                       num(p.over_permissions) + "\n";
            return out;
        case ReportFormat::Json: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& p : points)
                arr.push_back({{"variant", p.variant},
                               {"log_size", p.log_size},
                               {"coverage_percent", num_json(p.coverage_percent)},
                               {"rule_count", num_json(p.rule_count)},
                               {"total_wsc", num_json(p.total_wsc)},
                               {"mining_seconds", num_json(p.mining_seconds)},
                               {"over_permissions", num_json(p.over_permissions)},
                               {"coverage_min", num_json(p.coverage_min)},
                               {"coverage_max", num_json(p.coverage_max)},
                               {"rule_count_min", num_json(p.rule_count_min)},
                               {"rule_count_max", num_json(p.rule_count_max)},
                               {"seconds_min", num_json(p.seconds_min)},
                               {"seconds_max", num_json(p.seconds_max)},
                               {"runs", p.runs},
                               {"errors", p.errors}});
            return arr.dump(2) + "\n";
        }
        case ReportFormat::Markdown:
            out = "| variant | log size | coverage % (min-max) | rules (min-max) | WSC | seconds | over | runs |\n"
                  "|---|---:|---:|---:|---:|---:|---:|---:|\n";
            for (const auto& p : points)
                out += "| " + p.variant + " | " + std::to_string(p.log_size) + " | " + fixed(p.coverage_percent, 1) +
                       " (" + fixed(p.coverage_min, 1) + "-" + fixed(p.coverage_max, 1) + ") | " +
                       fixed(p.rule_count, 1) + " (" + fixed(p.rule_count_min, 0) + "-" +
                       fixed(p.rule_count_max, 0) + ") | " + fixed(p.total_wsc, 1) + " | " +
                       fixed(p.mining_seconds, 3) + " | " + fixed(p.over_permissions, 1) + " | " +
                       std::to_string(p.runs) + " |\n";
            return out;
    }
    return out;
}

std::vector<CurvePoint> points_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("curve report must be a JSON array");
    std::vector<CurvePoint> out;
    try {
        for (const auto& o : j) {
            CurvePoint p;
            p.variant = o.at("variant").get<std::string>();
            p.log_size = o.at("log_size").get<std::size_t>();
            p.coverage_percent = num_from(o, "coverage_percent");
            p.rule_count = num_from(o, "rule_count");
            p.total_wsc = num_from(o, "total_wsc");
            p.mining_seconds = num_from(o, "mining_seconds");
            p.over_permissions = num_from(o, "over_permissions");
            p.coverage_min = num_from(o, "coverage_min");
            p.coverage_max = num_from(o, "coverage_max");
            p.rule_count_min = num_from(o, "rule_count_min");
            p.rule_count_max = num_from(o, "rule_count_max");
            p.seconds_min = num_from(o, "seconds_min");
            p.seconds_max = num_from(o, "seconds_max");
            p.runs = o.value("runs", std::size_t{0});
            p.errors = o.value("errors", std::vector<std::string>{});
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad curve report: ") + e.what());
    }
    return out;
}

std::string render_ablation(const std::vector<AblationRow>& rows, ReportFormat format) {
    std::string out;
    auto ref = [](const AblationRow& r, auto field) -> std::optional<double> {
        return r.reference ? (*r.reference).*field : std::nullopt;
    };
    switch (format) {
        case ReportFormat::Csv:
            out = "variant,log_size,rule_count,mining_seconds,coverage_percent,over_permissions,compressed_records,"
                  "distinct_coverage_percent,compressed_distinct_coverage_percent,ref_llm_only_rules,"
                  "ref_llm_only_seconds,ref_compressed_llm_rules,ref_compressed_llm_seconds\n";
            for (const auto& r : rows)
                out += r.variant + "," + std::to_string(r.log_size) + "," + num(r.rule_count) + "," +
                       num(r.mining_seconds) + "," + num(r.coverage_percent) + "," + num(r.over_permissions) + "," +
                       num(r.compressed_records) + "," + num(r.distinct_coverage_percent) + "," +
                       num(r.compressed_distinct_coverage_percent) + "," +
                       opt_text(ref(r, &ReferenceRow::llm_only_rules), "") + "," +
                       opt_text(ref(r, &ReferenceRow::llm_only_seconds), "") + "," +
                       opt_text(ref(r, &ReferenceRow::compressed_llm_rules), "") + "," +
                       opt_text(ref(r, &ReferenceRow::compressed_llm_seconds), "") + "\n";
            return out;
        case ReportFormat::Json: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : rows) {
                nlohmann::json o = {{"variant", r.variant},
                                    {"log_size", r.log_size},
                                    {"rule_count", num_json(r.rule_count)},
                                    {"mining_seconds", num_json(r.mining_seconds)},
                                    {"coverage_percent", num_json(r.coverage_percent)},
                                    {"over_permissions", num_json(r.over_permissions)},
                                    {"compressed_records", num_json(r.compressed_records)},
                                    {"distinct_coverage_percent", num_json(r.distinct_coverage_percent)},
                                    {"compressed_distinct_coverage_percent",
                                     num_json(r.compressed_distinct_coverage_percent)},
                                    {"runs", r.runs},
                                    {"errors", r.errors}};
                if (r.reference)
                    o["reference"] = {{"llm_only_rules", opt_json(r.reference->llm_only_rules)},
                                      {"llm_only_seconds", opt_json(r.reference->llm_only_seconds)},
                                      {"compressed_llm_rules", opt_json(r.reference->compressed_llm_rules)},
                                      {"compressed_llm_seconds", opt_json(r.reference->compressed_llm_seconds)}};
                arr.push_back(std::move(o));
            }
            return arr.dump(2) + "\n";
        }
        case ReportFormat::Markdown:
            out = "| variant | log size | rules | seconds | coverage % | compressed records | distinct cov. % | "
                  "distinct cov. % (compressed input) | ref. model-only rules / s | ref. compressed+model rules / s "
                  "|\n|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
            for (const auto& r : rows) {
                auto pair = [&](auto rules, auto secs) {
                    if (!r.reference) return std::string("-");
                    return opt_text(ref(r, rules), "timeout") + " / " + opt_text(ref(r, secs), "-");
                };
                out += "| " + r.variant + " | " + std::to_string(r.log_size) + " | " + fixed(r.rule_count, 1) +
                       " | " + fixed(r.mining_seconds, 3) + " | " + fixed(r.coverage_percent, 1) + " | " +
                       fixed(r.compressed_records, 0) + " | " + fixed(r.distinct_coverage_percent, 1) + " | " +
                       fixed(r.compressed_distinct_coverage_percent, 1) + " | " +
                       pair(&ReferenceRow::llm_only_rules, &ReferenceRow::llm_only_seconds) + " | " +
                       pair(&ReferenceRow::compressed_llm_rules, &ReferenceRow::compressed_llm_seconds) + " |\n";
            }
            return out;
    }
    return out;
}

void emit_report(const std::vector<CurvePoint>& points, ReportFormat format, const std::filesystem::path& path) {
    write_text(path, render_points(points, format));
}

void emit_ablation(const std::vector<AblationRow>& rows, ReportFormat format, const std::filesystem::path& path) {
    write_text(path, render_ablation(rows, format));
}

}  // namespace abac
