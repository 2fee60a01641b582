#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "abac/eval.hpp"
#include "abac/parser.hpp"
#include "support.hpp"

using namespace abac;
using namespace testing_support;

namespace {

ExperimentPlan small_plan() {
    ExperimentPlan p;
    p.variants = {SchemaVariant::U2O2};
    p.log_sizes = {100, 200};
    p.repetitions = 2;
    return p;
}

/// Everything except wall-clock fields.
void same_except_time(const CurvePoint& a, const CurvePoint& b) {
    CHECK(a.variant == b.variant);
    CHECK(a.log_size == b.log_size);
    CHECK(a.coverage_percent == b.coverage_percent);
    CHECK(a.rule_count == b.rule_count);
    CHECK(a.total_wsc == b.total_wsc);
    CHECK(a.over_permissions == b.over_permissions);
    CHECK(a.coverage_min == b.coverage_min);
    CHECK(a.coverage_max == b.coverage_max);
    CHECK(a.rule_count_min == b.rule_count_min);
    CHECK(a.rule_count_max == b.rule_count_max);
    CHECK(a.runs == b.runs);
    CHECK(a.errors == b.errors);
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

// ── plan ──

TEST_CASE("plan from json with a list and with a range") {
    auto p = ExperimentPlan::from_json(nlohmann::json::parse(
        R"({"variants": ["u2o2", "U4O5"], "log_sizes": [100, 400], "repetitions": 2, "seeds": [7, 9]})"));
    CHECK(p.variants == std::vector<SchemaVariant>{SchemaVariant::U2O2, SchemaVariant::U4O5});
    CHECK(p.log_sizes == std::vector<std::size_t>{100, 400});
    CHECK(p.effective_seeds() == std::vector<std::uint64_t>{7, 9});

    p = ExperimentPlan::from_json(
        nlohmann::json::parse(R"({"log_sizes": {"from": 100, "to": 2000, "step": 100}, "repetitions": 3})"));
    CHECK(p.log_sizes.size() == 20);
    CHECK(p.log_sizes.front() == 100);
    CHECK(p.log_sizes.back() == 2000);
    CHECK(p.variants == std::vector<SchemaVariant>{SchemaVariant::U4O5});
    CHECK(p.effective_seeds() == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(ExperimentPlan::from_json(p.to_json()).log_sizes == p.log_sizes);
}

TEST_CASE("plan validation") {
    for (const char* bad : {R"({"log_sizes": [400, 100]})", R"({"log_sizes": [100, 100]})", R"({"log_sizes": []})",
                            R"({"log_sizes": [0]})", R"({"log_sizes": [100], "repetitions": 0})",
                            R"({"log_sizes": [100], "repetitions": 2, "seeds": [1]})",
                            R"({"log_sizes": [100], "variants": ["u9o9"]})", R"({"log_sizes": [100], "threads": 0})",
                            R"({"log_sizes": {"from": 1, "to": 5, "step": 0}})", R"({"variants": ["u2o2"]})",
                            R"([1, 2])", R"({"log_sizes": [100], "dac_allow_ratio": 1.5})"}) {
        INFO(bad);
        CHECK_THROWS_AS(ExperimentPlan::from_json(nlohmann::json::parse(bad)), DataError);
    }
}

// ── curves ──

TEST_CASE("run_curve produces one aggregate per variant and size") {
    const auto pts = run_curve(small_plan(), DataModel::Abac);
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) {
        CHECK(p.variant == "u2o2");
        CHECK(p.runs == 2);
        CHECK(p.errors.empty());
        CHECK(p.coverage_min <= p.coverage_percent);
        CHECK(p.coverage_percent <= p.coverage_max);
        CHECK(p.coverage_max <= 100.0);
        CHECK(p.rule_count_min <= p.rule_count);
        CHECK(p.rule_count <= p.rule_count_max);
        CHECK(p.seconds_min <= p.mining_seconds);
        CHECK(p.mining_seconds <= p.seconds_max);
        CHECK(p.mining_seconds > 0);
        CHECK(p.over_permissions == 0);
    }
    CHECK(pts[0].log_size == 100);
    CHECK(pts[1].log_size == 200);
}

TEST_CASE("each point is re-derivable from variant, size and seed") {
    auto plan = small_plan();
    const auto pts = run_curve(plan, DataModel::Abac);
    // mean of two independent single runs equals the aggregate
    const auto a = run_once(DataModel::Abac, SchemaVariant::U2O2, 200, 1, plan);
    const auto b = run_once(DataModel::Abac, SchemaVariant::U2O2, 200, 2, plan);
    CHECK(pts[1].coverage_percent == Catch::Approx((a.report.coverage_percent + b.report.coverage_percent) / 2));
    CHECK(pts[1].rule_count == Catch::Approx((a.report.rule_count + b.report.rule_count) / 2.0));
    CHECK(pts[1].total_wsc == Catch::Approx((a.report.total_wsc + b.report.total_wsc) / 2.0));
}

TEST_CASE("fixed seed runs twice to identical points") {
    auto plan = small_plan();
    plan.repetitions = 1;
    plan.seeds = {42};
    const auto a = run_curve(plan, DataModel::Abac);
    const auto b = run_curve(plan, DataModel::Abac);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) same_except_time(a[i], b[i]);
}

TEST_CASE("DAC curve ignores variants and labels points dac") {
    ExperimentPlan plan;
    plan.variants = {SchemaVariant::U2O2, SchemaVariant::U4O5};
    plan.log_sizes = {300};
    const auto pts = run_curve(plan, DataModel::Dac);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].variant == "dac");
    CHECK(pts[0].runs == 1);
    CHECK(pts[0].coverage_percent < 100.0);
}

TEST_CASE("failing repetitions are recorded and the run continues") {
    ExperimentPlan plan;
    plan.log_sizes = {50, 100};
    plan.dac_allow_ratio = 0.0;  // all Deny: nothing to mine
    const auto pts = run_curve(plan, DataModel::Dac);
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) {
        CHECK(p.runs == 0);
        REQUIRE(p.errors.size() == 1);
        CHECK(p.errors[0].starts_with("seed 1: "));
        CHECK(std::isnan(p.coverage_percent));
    }
    const auto csv = render_points(pts, ReportFormat::Csv);
    CHECK(split_lines(csv)[1] == "dac,50,nan,nan,nan,nan,nan");
    const auto back = points_from_json(nlohmann::json::parse(render_points(pts, ReportFormat::Json)));
    CHECK(std::isnan(back[0].coverage_percent));
    CHECK(back[0].errors == pts[0].errors);
}

TEST_CASE("property: ABAC coverage is non-decreasing in size within 2pp") {
    ExperimentPlan plan;
    plan.variants = {SchemaVariant::U2O2};
    plan.log_sizes = {100, 200, 400};
    plan.repetitions = 5;
    const auto pts = run_curve(plan, DataModel::Abac);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        INFO("size " << pts[i].log_size);
        CHECK(pts[i].coverage_percent >= pts[i - 1].coverage_percent - 2.0);
    }
}

// ── reports ──

TEST_CASE("csv report has the fixed header") {
    CurvePoint p;
    p.variant = "u4o5";
    p.log_size = 800;
    p.coverage_percent = 100;
    p.rule_count = 11.5;
    p.total_wsc = 60;
    p.mining_seconds = 0.25;
    p.over_permissions = 0;
    const auto lines = split_lines(render_points({p}, ReportFormat::Csv));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "variant,log_size,coverage_percent,rule_count,total_wsc,mining_seconds,over_permissions");
    CHECK(lines[1] == "u4o5,800,100,11.5,60,0.25,0");
}

TEST_CASE("empty points give a header-only file") {
    CHECK(render_points({}, ReportFormat::Csv) == std::string(kCurveCsvHeader) + "\n");
    CHECK(render_points({}, ReportFormat::Json) == "[]\n");
    CHECK(split_lines(render_points({}, ReportFormat::Markdown)).size() == 2);
    TempDir dir("report");
    emit_report({}, ReportFormat::Csv, dir.path / "out" / "r.csv");
    CHECK(read_text_file(dir.path / "out" / "r.csv") == std::string(kCurveCsvHeader) + "\n");
}

TEST_CASE("json report round-trips") {
    const auto pts = run_curve(small_plan(), DataModel::Abac);
    const auto text = render_points(pts, ReportFormat::Json);
    CHECK(points_from_json(nlohmann::json::parse(text)) == pts);
    CHECK_THROWS_AS(points_from_json(nlohmann::json::object()), DataError);
    CHECK_THROWS_AS(points_from_json(nlohmann::json::parse(R"([{"variant": 1}])")), DataError);
}

TEST_CASE("markdown report rows") {
    const auto pts = run_curve(small_plan(), DataModel::Abac);
    const auto lines = split_lines(render_points(pts, ReportFormat::Markdown));
    REQUIRE(lines.size() == 4);
    CHECK(lines[2].starts_with("| u2o2 | 100 |"));
}

TEST_CASE("report format selection and write errors") {
    CHECK(report_format_for("a/b.json") == ReportFormat::Json);
    CHECK(report_format_for("x.md") == ReportFormat::Markdown);
    CHECK(report_format_for("x.csv") == ReportFormat::Csv);
    CHECK(report_format_for("x") == ReportFormat::Csv);
    CHECK(report_format_from_string("markdown") == ReportFormat::Markdown);
    CHECK_THROWS_AS(report_format_from_string("xml"), ContractViolation);
    TempDir dir("report_err");
    {
        std::ofstream f(dir.path / "file");
        f << "x";
    }
    CHECK_THROWS_AS(emit_report({}, ReportFormat::Csv, dir.path / "file" / "r.csv"), IoError);
}

// ── ablation ──

TEST_CASE("reference table") {
    const auto& ref = reference_ablation();
    REQUIRE(ref.size() == 8);
    CHECK(ref.front().log_size == 400);
    CHECK(ref.front().llm_only_rules == 13.0);
    CHECK(ref.front().compressed_llm_seconds == 228.0);
    CHECK_FALSE(ref[6].llm_only_rules.has_value());  // 5000: timed out
    CHECK(ref[6].llm_only_seconds == 631.0);
    CHECK(ref.back().log_size == 10000);
    CHECK_FALSE(ref.back().compressed_llm_rules.has_value());
    CHECK_FALSE(ref.back().llm_only_seconds.has_value());
}

TEST_CASE("ablation row: compression keeps distinct coverage") {
    ExperimentPlan plan;
    plan.variants = {SchemaVariant::U4O5};
    plan.log_sizes = {400, 450};
    const auto rows = run_ablation(plan);
    REQUIRE(rows.size() == 2);
    const auto& r = rows[0];
    CHECK(r.runs == 1);
    CHECK(r.errors.empty());
    CHECK(r.compressed_records > 0);
    CHECK(r.compressed_records < 400);
    CHECK(r.distinct_coverage_percent == r.compressed_distinct_coverage_percent);
    REQUIRE(r.reference.has_value());
    CHECK(r.reference->llm_only_rules == 13.0);
    // far below either model-only pipeline at this size
    CHECK(r.mining_seconds < *r.reference->llm_only_seconds);
    CHECK(r.mining_seconds < *r.reference->compressed_llm_seconds);
    CHECK_FALSE(rows[1].reference.has_value());

    const auto csv = split_lines(render_ablation(rows, ReportFormat::Csv));
    REQUIRE(csv.size() == 3);
    CHECK(csv[0].starts_with("variant,log_size,rule_count,mining_seconds,coverage_percent"));
    CHECK(csv[1].ends_with(",13,195,29,228"));
    CHECK(csv[2].ends_with(",,,,"));
    const auto md = render_ablation(rows, ReportFormat::Markdown);
    CHECK(md.find("13 / 195") != std::string::npos);
    const auto j = nlohmann::json::parse(render_ablation(rows, ReportFormat::Json));
    CHECK(j[0]["reference"]["compressed_llm_rules"] == 29.0);
}
