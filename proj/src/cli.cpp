#include "abac/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "abac/compress.hpp"
#include "abac/datagen.hpp"
#include "abac/errors.hpp"
#include "abac/eval.hpp"
#include "abac/llm_client.hpp"
#include "abac/miner.hpp"
#include "abac/nlgen.hpp"
#include "abac/parser.hpp"
#include "abac/rule_format.hpp"

namespace abac {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    const auto text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": not valid JSON: " + e.what());
    }
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// Rule text as written by `mine`, or the JSON it writes with --json.
Policy load_policy(const fs::path& path) {
    const auto text = read_text_file(path);
    Policy p;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
            for (const auto& r : j.at("rules")) p.rules.push_back(rule_from_json(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ": bad policy JSON: " + e.what());
        }
        if (j.contains("schema")) p.schema = schema_from_json(j["schema"]);
    } else {
        p.rules = parse_policy(text);
    }
    if (p.rules.empty()) throw DataError(path.string() + ": policy has no rules");
    return p;
}

struct InputFiles {
    std::string users, resources, logs, schema;
    bool xu_stoller = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--users", users, "User attribute file")->required();
        cmd->add_option("--resources", resources, "Resource attribute file")->required();
        cmd->add_option("--logs", logs, "Access log file")->required();
        cmd->add_option("--schema", schema, "Schema JSON binding attribute names and domains");
        cmd->add_flag("--xu-stoller", xu_stoller, "Read userAttrib/resourceAttrib benchmark notation");
    }

    Dataset load() const {
        if (xu_stoller) return load_xu_stoller(users, resources, logs);
        LoadOptions opt;
        if (!schema.empty()) opt.schema = schema_from_json(read_json(schema));
        return load_dataset(users, resources, logs, opt);
    }
};

void print_warnings(const ParseReport& report, std::ostream& err, std::size_t limit = 20) {
    std::size_t shown = 0;
    for (const auto& w : report.warnings) {
        if (shown++ == limit) {
            err << "warning: ... " << (report.warnings.size() - limit) << " more\n";
            break;
        }
        err << "warning: " << (w.file.empty() ? "" : w.file + ":") << w.line << ": " << w.message << "\n";
    }
}

std::string summary_lines(const EvaluationReport& r) {
    return "Coverage: " + fmt2(r.coverage_percent) + "% (" + std::to_string(r.allow_covered) + "/" +
           std::to_string(r.allow_total) + " Allow entries)\n" + "Rules: " + std::to_string(r.rule_count) +
           ", total WSC: " + std::to_string(r.total_wsc) + "\n" +
           "Over-permissions: " + std::to_string(r.over_permissions) + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attribute-based access control policy mining from access logs", "abacminer"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads for mining and coverage")
        ->check(CLI::Range(1u, 256u))
        ->capture_default_str();

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    std::string gen_model = "abac", gen_variant = "u4o5", gen_style = "angle", gen_out;
    GenConfig gen_cfg;
    gen->add_option("--model", gen_model, "abac or dac")->capture_default_str();
    gen->add_option("--variant", gen_variant, "u2o2, u3o2 or u4o5 (abac only)")->capture_default_str();
    gen->add_option("--size", gen_cfg.log_size, "Log entries")->capture_default_str();
    gen->add_option("--seed", gen_cfg.rng_seed, "Random seed")->capture_default_str();
    gen->add_option("--deny-prob", gen_cfg.deny_sample_prob, "Chance a denied request is logged (abac)")
        ->capture_default_str();
    gen->add_option("--allow-ratio", gen_cfg.dac_allow_ratio, "Allow share of the log (dac)")->capture_default_str();
    gen->add_option("--style", gen_style, "angle, csv or pipe")->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();

    // parse-check
    auto* pc = app.add_subcommand("parse-check", "Infer formats and report parse results");
    InputFiles pc_in;
    pc_in.add_to(pc);
    bool pc_strict = false;
    pc->add_flag("--strict", pc_strict, "Exit 2 when any line produced a warning");

    // mine
    auto* mine = app.add_subcommand("mine", "Mine a policy from a dataset");
    InputFiles mine_in;
    mine_in.add_to(mine);
    std::string mine_json, mine_out, mine_quality = "side-normalized";
    MinerConfig mcfg;
    bool no_guard = false, no_consolidate = false;
    mine->add_option("--json", mine_json, "Write rules and coverage as JSON");
    mine->add_option("--out", mine_out, "Write the rule text to a file as well");
    mine->add_option("--quality", mine_quality, "side-normalized or summed")->capture_default_str();
    mine->add_option("--min-rule-coverage", mcfg.min_rule_coverage)->capture_default_str();
    mine->add_option("--deny-tolerance", mcfg.deny_tolerance)->capture_default_str();
    mine->add_option("--evidence-alpha", mcfg.evidence_alpha)->capture_default_str();
    mine->add_flag("--no-evidence-guard", no_guard, "Accept generalizations without the evidence test");
    mine->add_flag("--no-consolidate", no_consolidate, "Skip the set-cover consolidation pass");

    // compress
    auto* comp = app.add_subcommand("compress", "Collapse repeated permissions");
    InputFiles comp_in;
    comp_in.add_to(comp);
    std::string comp_out, comp_style = "angle";
    comp->add_option("--out", comp_out, "Output directory")->required();
    comp->add_option("--style", comp_style, "angle, csv or pipe")->capture_default_str();

    // summarize
    auto* sum = app.add_subcommand("summarize", "Describe a mined policy in plain language");
    std::string sum_policy, sum_llm, sum_out, sum_json, sum_jargon;
    bool sum_offline = false, sum_verbose = false;
    sum->add_option("--policy", sum_policy, "Rule text or JSON written by mine")->required();
    sum->add_flag("--offline", sum_offline, "Use the built-in template (default without --llm-config)");
    sum->add_option("--llm-config", sum_llm, "Endpoint config JSON");
    sum->add_option("--out", sum_out, "Write the summary text to a file as well");
    sum->add_option("--json", sum_json, "Write sections and rule trace as JSON");
    sum->add_option("--jargon", sum_jargon, "Jargon map JSON replacing the bundled one");
    sum->add_flag("--verbose", sum_verbose, "Log endpoint traffic to stderr (key masked)");

    // verify
    auto* ver = app.add_subcommand("verify", "Score how fully a summary describes each rule");
    std::string ver_policy, ver_summary, ver_prompt, ver_jargon;
    double ver_min = -1;
    ver->add_option("--policy", ver_policy, "Rule text or JSON")->required();
    ver->add_option("--summary", ver_summary, "Summary text")->required();
    ver->add_option("--prompt-out", ver_prompt, "Also write a judge prompt for an external model");
    ver->add_option("--min-score", ver_min, "Exit 2 when the overall score is below this")->check(CLI::Range(0.0, 1.0));
    ver->add_option("--jargon", ver_jargon, "Jargon map JSON replacing the bundled one");

    // bench
    auto* bench = app.add_subcommand("bench", "Run an experiment plan");
    std::string bench_plan, bench_model = "abac", bench_out, bench_format;
    bool bench_ablation = false;
    bench->add_option("--plan", bench_plan, "Plan JSON")->required();
    bench->add_option("--model", bench_model, "abac or dac")->capture_default_str();
    bench->add_option("--out", bench_out, "Report file (.csv, .json or .md)")->required();
    bench->add_option("--format", bench_format, "csv, json or md; default from the extension");
    bench->add_flag("--ablation", bench_ablation, "Compression comparison table instead of curves");

    // export-prompts
    auto* exp = app.add_subcommand("export-prompts", "Write the code generation and summary prompts");
    std::string exp_users, exp_resources, exp_logs, exp_policy, exp_source, exp_out;
    std::size_t exp_examples = 5;
    exp->add_option("--users", exp_users, "User file to take examples from")->required();
    exp->add_option("--resources", exp_resources, "Resource file to take examples from")->required();
    exp->add_option("--logs", exp_logs, "Log file to take examples from")->required();
    exp->add_option("--examples", exp_examples, "Example lines per file")->check(CLI::Range(1, 1000))
        ->capture_default_str();
    exp->add_option("--policy", exp_policy, "Mined policy; adds the summary prompt");
    exp->add_option("--miner-source", exp_source, "Source to embed instead of the bundled miner");
    exp->add_option("--out", exp_out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    auto jargon_from = [](const std::string& path) {
        return path.empty() ? default_jargon_map() : jargon_map_from_json(read_json(path));
    };

    try {
        if (*gen) {
            GenConfig cfg = gen_cfg;
            cfg.schema_variant = schema_variant_from_string(gen_variant);
            const auto model = data_model_from_string(gen_model);
            const auto style = emit_style_from_string(gen_style);
            cfg.validate();
            const auto data = generate_dataset(model, cfg);
            const fs::path dir = gen_out;
            emit_dataset(data, style, DatasetPaths::in(dir));
            write_file(dir / "schema.json", schema_to_json(data.schema).dump(2) + "\n");
            if (!data.ground_truth.empty()) write_file(dir / "ground_truth.txt", format_policy(data.ground_truth));
            std::size_t allow = 0;
            for (const auto& e : data.logs) allow += e.decision == Decision::Allow;
            out << "Wrote " << data.users.size() << " users, " << data.resources.size() << " resources, "
                << data.logs.size() << " log entries (" << allow << " Allow) to " << dir.string() << "\n";
            return kExitOk;
        }

        if (*pc) {
            const auto d = pc_in.load();
            out << "users:     " << d.user_format.describe() << "\n";
            out << "resources: " << d.resource_format.describe() << "\n";
            out << "logs:      " << d.log_format.describe() << "\n";
            out << "Parsed " << d.users.size() << " users, " << d.resources.size() << " resources, "
                << d.logs.size() << " log entries\n";
            out << "Skipped " << d.report.skipped_comments << " comment and " << d.report.skipped_blank
                << " blank lines; " << d.report.warnings.size() << " warnings\n";
            print_warnings(d.report, err);
            return pc_strict && !d.report.warnings.empty() ? kExitData : kExitOk;
        }

        if (*mine) {
            const auto d = mine_in.load();
            print_warnings(d.report, err);
            MinerConfig cfg = mcfg;
            cfg.threads = threads;
            cfg.quality_side_mode = quality_side_mode_from_string(mine_quality);
            cfg.evidence_guard = !no_guard;
            cfg.consolidate = !no_consolidate;
            cfg.validate();
            const auto t0 = std::chrono::steady_clock::now();
            const auto result = mine_policy(d.users, d.resources, d.logs, d.schema, cfg);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const auto text = format_policy(result.policy.rules);
            out << text << "\n" << summary_lines(result.report);
            err << "Mining time: " << fmt3(secs) << " s\n";
            if (!mine_out.empty()) write_file(mine_out, text);
            if (!mine_json.empty()) {
                auto j = policy_to_json(result.policy, result.report);
                j["schema"] = schema_to_json(d.schema);
                write_file(mine_json, j.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*comp) {
            const auto d = comp_in.load();
            print_warnings(d.report, err);
            const auto c = compress_log(d.logs, d.users, d.resources, d.schema, d.multiplicities);
            for (const auto& diag : c.diagnostics) err << "warning: " << diag << "\n";
            const fs::path dir = comp_out;
            emit_compressed(c, emit_style_from_string(comp_style), DatasetPaths::in(dir));
            write_file(dir / "schema.json", schema_to_json(c.schema).dump(2) + "\n");
            out << "Compressed " << c.total_multiplicity() << " entries into " << c.records.size() << " records ("
                << fmt2(100.0 * c.ratio()) << "%) in " << dir.string() << "\n";
            return kExitOk;
        }

        if (*sum) {
            const auto policy = load_policy(sum_policy);
            const auto jargon = jargon_from(sum_jargon);
            SummaryReport report;
            if (!sum_llm.empty() && !sum_offline) {
                const auto endpoint = llm_config_from_json(read_json(sum_llm));
                LlmLogSink sink;
                if (sum_verbose) sink = [&err](std::string_view s) { err << s << "\n"; };
                report = summarize_llm(policy, endpoint, sink, jargon);
            } else {
                report = summarize_template(policy, jargon);
            }
            out << report.text;
            if (!report.text.empty() && report.text.back() != '\n') out << "\n";
            const auto f = check_fidelity(policy, report, jargon);
            err << "Fidelity: " << fmt3(f.overall) << "\n";
            if (!sum_out.empty()) write_file(sum_out, report.text);
            if (!sum_json.empty()) {
                auto j = report.to_json();
                j["fidelity"] = f.overall;
                write_file(sum_json, j.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*ver) {
            const auto policy = load_policy(ver_policy);
            const auto text = read_text_file(ver_summary);
            const auto jargon = jargon_from(ver_jargon);
            const auto f = check_fidelity(policy, std::string_view(text), jargon);
            for (std::size_t i = 0; i < f.rule_scores.size(); ++i) {
                out << "Rule " << (i + 1) << ": " << fmt3(f.rule_scores[i]);
                if (!f.missing[i].empty()) {
                    out << "  missing:";
                    for (const auto& m : f.missing[i]) out << " " << m;
                }
                out << "\n";
            }
            out << "Overall: " << fmt3(f.overall) << "\n";
            if (!ver_prompt.empty()) write_file(ver_prompt, build_verification_prompt(policy, text).render());
            return ver_min >= 0 && f.overall < ver_min ? kExitData : kExitOk;
        }

        if (*bench) {
            auto plan = ExperimentPlan::from_json(read_json(bench_plan));
            if (app.get_option("--threads")->count() > 0) plan.threads = threads;
            const auto format = bench_format.empty() ? report_format_for(bench_out)
                                                     : report_format_from_string(bench_format);
            std::size_t failures = 0;
            if (bench_ablation) {
                const auto rows = run_ablation(plan);
                for (const auto& r : rows) {
                    for (const auto& e : r.errors) err << "error: " << r.variant << "/" << r.log_size << ": " << e << "\n";
                    failures += r.errors.size();
                }
                emit_ablation(rows, format, bench_out);
                out << "Wrote " << rows.size() << " rows to " << bench_out << "\n";
            } else {
                const auto points = run_curve(plan, data_model_from_string(bench_model));
                for (const auto& p : points) {
                    for (const auto& e : p.errors) err << "error: " << p.variant << "/" << p.log_size << ": " << e << "\n";
                    failures += p.errors.size();
                }
                emit_report(points, format, bench_out);
                out << "Wrote " << points.size() << " points to " << bench_out << "\n";
            }
            if (failures > 0) err << failures << " run(s) failed\n";
            return kExitOk;
        }

        if (*exp) {
            FormatExamples ex;
            auto join = [&](const std::string& path) {
                std::string s;
                for (const auto& l : example_lines(read_text_file(path), exp_examples)) s += l + "\n";
                if (!s.empty()) s.pop_back();
                return s;
            };
            ex.users = join(exp_users);
            ex.resources = join(exp_resources);
            ex.logs = join(exp_logs);
            const auto source = exp_source.empty() ? bundled_miner_source() : read_text_file(exp_source);
            const fs::path dir = exp_out;
            const auto codegen = build_codegen_prompt(ex, source);
            write_file(dir / "codegen_prompt.txt", codegen.render());
            write_file(dir / "codegen_prompt.json", codegen.to_json().dump(2) + "\n");
            out << "Wrote " << (dir / "codegen_prompt.txt").string() << "\n";
            if (!exp_policy.empty()) {
                const auto summary = build_summary_prompt(load_policy(exp_policy));
                write_file(dir / "summary_prompt.txt", summary.render());
                write_file(dir / "summary_prompt.json", summary.to_json().dump(2) + "\n");
                out << "Wrote " << (dir / "summary_prompt.txt").string() << "\n";
            }
            return kExitOk;
        }
    } catch (const ContractViolation& e) {
        // bad flag values surface here
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ExternalError& e) {
        err << "error: " << e.what() << "\n";
        return kExitExternal;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace abac
