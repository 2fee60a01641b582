#include <catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>

#include "support.hpp"

using namespace abac;
using namespace testing_support;

namespace {

std::vector<std::string> lines(std::initializer_list<const char*> ls) {
    return {ls.begin(), ls.end()};
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

// ── Inference ───────────────────────────────────────────────────────────────

TEST_CASE("angle-bracket key:value lines") {
    const auto spec = infer_format(lines({"<alice department:Finance designation:Manager>"}), FileKind::Users);
    CHECK(spec.wrapper == std::make_pair('<', '>'));
    CHECK(spec.delimiter == Delimiter::Space);
    CHECK(spec.style == AttributeStyle::KeyValueColon);
    CHECK(spec.positional_order.empty());
}

TEST_CASE("comma positional lines") {
    const auto spec = infer_format(lines({"alice,Finance,Manager"}), FileKind::Users);
    CHECK_FALSE(spec.wrapper);
    CHECK(spec.delimiter == Delimiter::Comma);
    CHECK(spec.style == AttributeStyle::Positional);
    CHECK(spec.positional_order == std::vector<std::string>{"attr1", "attr2"});
}

TEST_CASE("pipe positional lines, named from the schema") {
    const std::vector<std::string> names{"department", "designation"};
    const auto spec = infer_format(lines({"alice|Finance|Manager"}), FileKind::Users, names);
    CHECK_FALSE(spec.wrapper);
    CHECK(spec.delimiter == Delimiter::Pipe);
    CHECK(spec.style == AttributeStyle::Positional);
    CHECK(spec.positional_order == names);
}

TEST_CASE("log lines are always positional") {
    const auto spec = infer_format(lines({"<alice report.finance read 2024-10-15 Allow>"}), FileKind::Logs);
    CHECK(spec.style == AttributeStyle::Positional);
    CHECK(spec.positional_order == kLogFields);
    const auto csv = infer_format(lines({"alice,report,read,2024-10-15"}), FileKind::Logs);
    CHECK(csv.delimiter == Delimiter::Comma);
}

TEST_CASE("single-token examples are ambiguous") {
    CHECK_THROWS_AS(infer_format(lines({"alice", "bob"}), FileKind::Users), AmbiguousFormat);
    CHECK_THROWS_AS(infer_format(lines({"# only comments", ""}), FileKind::Users), AmbiguousFormat);
}

TEST_CASE("disagreeing examples name the offending lines") {
    try {
        infer_format(lines({"<a x:1>", "<b x:2>", "c x:3"}), FileKind::Users);
        FAIL("expected ConflictingExamples");
    } catch (const ConflictingExamples& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS_AS(infer_format(lines({"a,b,c", "d,e,f", "g h i"}), FileKind::Users), ConflictingExamples);
    CHECK_THROWS_AS(infer_format(lines({"a,b,c", "d,e"}), FileKind::Users), ConflictingExamples);
}

TEST_CASE("inference ignores the order of the examples") {
    std::vector<std::string> ex = {"<a department:X designation:Y>", "<b department:Z designation:W>",
                                   "<c department:Q designation:R>"};
    const auto first = infer_format(ex, FileKind::Users);
    std::sort(ex.begin(), ex.end());
    do {
        CHECK(infer_format(ex, FileKind::Users) == first);
    } while (std::next_permutation(ex.begin(), ex.end()));
}

// ── Parsing ─────────────────────────────────────────────────────────────────

TEST_CASE("a log line in angle-bracket form") {
    const auto spec = infer_format(lines({"<alice report.finance read 2024-10-15 Allow>"}), FileKind::Logs);
    const auto res = parse_logs("<alice report.finance read 2024-10-15 Allow>\n", spec);
    REQUIRE(res.entries.size() == 1);
    CHECK(res.entries[0] == LogEntry{"alice", "report.finance", "read", "2024-10-15", Decision::Allow});
    CHECK(res.report.warnings.empty());
}

TEST_CASE("comment and blank lines are counted, not parsed") {
    const auto spec = infer_format(lines({"<a x:1>"}), FileKind::Users);
    const auto res = parse_entities("# header\n\n\n   \n", spec, FileKind::Users);
    CHECK(res.entities.empty());
    CHECK(res.report.skipped_comments == 1);
    CHECK(res.report.skipped_blank == 3);
    CHECK(res.report.accounted_lines() == 4);
}

TEST_CASE("the sample users parse into four entities") {
    const auto text = read_text_file(fixture("sample_users.txt"));
    const auto spec = infer_format(example_lines(text, 5), FileKind::Users);
    const auto res = parse_entities(text, spec, FileKind::Users);
    REQUIRE(res.entities.size() == 4);
    CHECK(res.entities[0] == entity("morgan_finance_1", {{"department", "Finance"}, {"designation", "Manager"}}));
    CHECK(res.entities[1] == entity("taylor_sales_0", {{"department", "Sales"}, {"designation", "Manager"}}));
    CHECK(res.entities[2] == entity("alex_it_1", {{"department", "IT"}, {"designation", "System_Admin"}}));
    CHECK(res.entities[3] == entity("jordan_hr_0", {{"department", "HR"}, {"designation", "Generalist"}}));
}

TEST_CASE("malformed lines become warnings and parsing continues") {
    const auto spec = infer_format(lines({"<a dept:X role:Y>"}), FileKind::Users);
    const std::string text = "<a dept:X role:Y>\n<b dept:>\n<c dept:Z role:W>\nnot wrapped at all\n<d>\n";
    const auto res = parse_entities(text, spec, FileKind::Users, nullptr, {false});
    CHECK(res.entities.size() == 3);  // <d> has only an id
    CHECK(res.report.warnings.size() == 2);
    CHECK(res.report.warnings[0].line == 2);
    CHECK(res.report.accounted_lines() == 5);
}

TEST_CASE("property: every line is accounted for exactly once") {
    std::mt19937_64 rng(9);
    const std::vector<std::string> pool = {"<u dept:A role:B>", "<v dept:C role:D>", "# c", "", "   ",
                                           "garbage line", "<w dept:>", "<x dept:E role:F extra>", "<y:z>"};
    const auto spec = infer_format(lines({"<u dept:A role:B>"}), FileKind::Users);
    for (int iter = 0; iter < 200; ++iter) {
        std::string text;
        const std::size_t n = 1 + pick(rng, 30);
        std::size_t malformed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& l = pool[pick(rng, pool.size())];
            // "<y:z>" is a bare id, which is well-formed
            malformed += l == "garbage line" || l == "<w dept:>" || l == "<x dept:E role:F extra>";
            text += l + (rng() % 2 ? "\n" : "\r\n");
        }
        const auto res = parse_entities(text, spec, FileKind::Users, nullptr, {false});
        CHECK(res.report.accounted_lines() == n);
        // duplicate ids overwrite with a warning, so count them separately
        std::size_t dup_warnings = 0;
        for (const auto& w : res.report.warnings) dup_warnings += w.message.find("duplicate") != std::string::npos;
        CHECK(res.report.warnings.size() - dup_warnings == malformed);
    }
}

TEST_CASE("duplicate ids: the later definition wins") {
    const auto spec = infer_format(lines({"<a dept:X>"}), FileKind::Users);
    const auto res = parse_entities("<a dept:X>\n<a dept:Y>\n", spec, FileKind::Users);
    REQUIRE(res.entities.size() == 1);
    CHECK(res.entities[0].attributes.at("dept") == "Y");
    CHECK(res.report.warnings.size() == 1);
    CHECK(res.report.accounted_lines() == 2);
}

TEST_CASE("applying a log format to a user file is a hard error") {
    const auto log_spec = infer_format(lines({"<a r read t Allow>"}), FileKind::Logs);
    CHECK_THROWS_AS(parse_entities("<a dept:X>\n", log_spec, FileKind::Users), FileKindMismatch);
    const auto user_spec = infer_format(lines({"<a dept:X>"}), FileKind::Users);
    CHECK_THROWS_AS(parse_logs("<a r read t Allow>\n", user_spec), FileKindMismatch);
}

TEST_CASE("four-field log lines default to Allow; decisions are case-insensitive") {
    const auto spec = infer_format(lines({"a,r,read,t"}), FileKind::Logs);
    const auto res = parse_logs("a,r,read,t\nb,r,write,t2,deny\nc,r,read,t3,ALLOW\n", spec);
    REQUIRE(res.entries.size() == 3);
    CHECK(res.entries[0].decision == Decision::Allow);
    CHECK(res.entries[1].decision == Decision::Deny);
    CHECK(res.entries[2].decision == Decision::Allow);
}

TEST_CASE("trailing multiplicity annotations") {
    const auto spec = infer_format(lines({"<a r read t Allow>"}), FileKind::Logs);
    const auto res = parse_logs("<a r read t Allow> x12\n<b r read t Deny>\n", spec);
    REQUIRE(res.entries.size() == 2);
    CHECK(res.multiplicities == std::vector<std::size_t>{12, 1});
}

TEST_CASE("mixed styles in one file fall back per line") {
    const std::vector<std::string> names{"department", "designation"};
    const auto spec = infer_format(lines({"<alice department:Finance designation:Manager>"}), FileKind::Users);
    const std::string text = "<alice department:Finance designation:Manager>\nbob,Sales,Analyst\ncarol|IT|Engineer\n";
    AttributeSchema schema;
    schema.user_attributes = {{"department", {"Finance", "Sales", "IT"}}, {"designation", {"Manager", "Analyst", "Engineer"}}};
    const auto res = parse_entities(text, spec, FileKind::Users, &schema);
    REQUIRE(res.entities.size() == 3);
    CHECK(res.entities[1] == entity("bob", {{"department", "Sales"}, {"designation", "Analyst"}}));
    CHECK(res.entities[2] == entity("carol", {{"department", "IT"}, {"designation", "Engineer"}}));
    const auto strict = parse_entities(text, spec, FileKind::Users, &schema, {false});
    CHECK(strict.entities.size() == 1);
    CHECK(strict.report.warnings.size() == 2);
}

TEST_CASE("a bound schema turns out-of-domain values into warnings") {
    AttributeSchema schema;
    schema.user_attributes = {{"dept", {"A", "B"}}};
    const auto spec = infer_format(lines({"<a dept:A>"}), FileKind::Users);
    const auto res = parse_entities("<a dept:A>\n<b dept:C>\n<c colour:red>\n", spec, FileKind::Users, &schema);
    CHECK(res.entities.size() == 1);
    CHECK(res.report.warnings.size() == 2);
}

// ── Emission ────────────────────────────────────────────────────────────────

TEST_CASE("formatting reproduces sample lines") {
    const auto text = read_text_file(fixture("sample_users.txt"));
    const auto spec = infer_format(example_lines(text, 5), FileKind::Users);
    const auto res = parse_entities(text, spec, FileKind::Users);
    std::string out;
    for (const auto& e : res.entities) out += format_entity_line(e, spec) + "\n";
    CHECK(out == text);
    const auto log_text = read_text_file(fixture("sample_logs.txt"));
    const auto log_spec = infer_format(example_lines(log_text, 5), FileKind::Logs);
    std::string log_out;
    for (const auto& e : parse_logs(log_text, log_spec).entries) log_out += format_log_line(e, log_spec) + "\n";
    CHECK(log_out == log_text);
}

TEST_CASE("values that clash with the delimiter cannot be written") {
    FormatSpec spec{FileKind::Users, std::nullopt, Delimiter::Comma, AttributeStyle::Positional, {"a"}, "#"};
    CHECK_THROWS_AS(format_entity_line(entity("x", {{"a", "has,comma"}}), spec), ContractViolation);
    CHECK_THROWS_AS(format_entity_line(entity("x", {{"a", "has space"}}), spec), ContractViolation);
}

TEST_CASE("property: parse(format(records)) round-trips in every format") {
    std::mt19937_64 rng(4);
    for (int iter = 0; iter < 50; ++iter) {
        const auto w = random_world(rng(), 30);
        const auto names = w.schema.names(Side::User);
        const std::vector<FormatSpec> specs = {
            {FileKind::Users, std::make_pair('<', '>'), Delimiter::Space, AttributeStyle::KeyValueColon, {}, "#"},
            {FileKind::Users, std::nullopt, Delimiter::Comma, AttributeStyle::Positional, names, "#"},
            {FileKind::Users, std::nullopt, Delimiter::Pipe, AttributeStyle::Positional, names, "#"},
        };
        for (const auto& spec : specs) {
            std::string text;
            std::vector<Entity> expected;
            for (const auto& [_, u] : w.users) {
                text += format_entity_line(u, spec) + "\n";
                expected.push_back(u);
            }
            const auto inferred = infer_format(example_lines(text, 5), FileKind::Users, names);
            CHECK(inferred == spec);
            const auto res = parse_entities(text, inferred, FileKind::Users, &w.schema);
            CHECK(res.entities == expected);
            CHECK(res.report.warnings.empty());
            FormatSpec log_spec = spec;
            log_spec.kind = FileKind::Logs;
            log_spec.style = AttributeStyle::Positional;
            log_spec.positional_order = kLogFields;
            std::string log_text;
            for (const auto& e : w.logs) log_text += format_log_line(e, log_spec) + "\n";
            if (w.logs.empty()) continue;
            const auto logs = parse_logs(log_text, infer_format(example_lines(log_text, 5), FileKind::Logs));
            CHECK(logs.entries == w.logs);
            CHECK(logs.report.warnings.empty());
        }
    }
}

// ── Datasets ────────────────────────────────────────────────────────────────

TEST_CASE("loading the sample dataset") {
    const auto ds = sample_dataset();
    CHECK(ds.users.size() == 4);
    CHECK(ds.resources.size() == 5);
    CHECK(ds.logs.size() == 6);
    CHECK(ds.report.warnings.empty());
    CHECK(ds.report.parsed_count == 15);
}

TEST_CASE("a three-line dataset in the documented formats") {
    TempDir dir("three_line");
    write(dir.path / "u.txt", "<alice department:Finance designation:Manager>\n");
    write(dir.path / "r.txt", "<report.finance type:Financial sensitivity:High>\n");
    write(dir.path / "l.txt", "<alice report.finance read 2024-10-15 Allow>\n");
    const auto ds = load_dataset(dir.path / "u.txt", dir.path / "r.txt", dir.path / "l.txt");
    CHECK(ds.users.size() == 1);
    CHECK(ds.logs.size() == 1);
    CHECK(ds.report.warnings.empty());
}

TEST_CASE("missing files are reported by path") {
    try {
        load_dataset(fixture("sample_users.txt"), fixture("sample_resources.txt"), fixture("absent/logs.txt"));
        FAIL("expected MissingFile");
    } catch (const MissingFile& e) {
        CHECK(std::string(e.what()).find("absent/logs.txt") != std::string::npos);
    }
}

TEST_CASE("each file's format is inferred on its own") {
    const std::vector<std::string> names_u{"department", "designation"}, names_r{"type", "sensitivity"};
    AttributeSchema schema;
    schema.user_attributes = {{"department", {"Finance", "Sales"}}, {"designation", {"Manager", "Analyst"}}};
    schema.resource_attributes = {{"type", {"Financial", "Operational"}}, {"sensitivity", {"High", "Low"}}};
    LoadOptions opts;
    opts.schema = schema;
    const auto ds = load_dataset(fixture("users_csv.txt"), fixture("resources_pipe.txt"), fixture("logs_angle.txt"), opts);
    CHECK(ds.user_format.delimiter == Delimiter::Comma);
    CHECK(ds.resource_format.delimiter == Delimiter::Pipe);
    CHECK(ds.log_format.wrapper.has_value());
    CHECK(ds.users.at("alice") == entity("alice", {{"department", "Finance"}, {"designation", "Manager"}}));
    CHECK(ds.resources.at("plan.sales") == entity("plan.sales", {{"type", "Operational"}, {"sensitivity", "Low"}}));
    REQUIRE(ds.logs.size() == 3);
    CHECK(ds.logs[2] == LogEntry{"bob", "report.finance", "write", "2024-10-16", Decision::Deny});
    CHECK(ds.report.warnings.empty());
}

TEST_CASE("log entries naming unknown entities are dropped with a warning") {
    TempDir dir("unknown");
    write(dir.path / "u.txt", "<a dept:X>\n");
    write(dir.path / "r.txt", "<r type:T>\n");
    write(dir.path / "l.txt", "<a r read t Allow>\n<ghost r read t Allow>\n");
    const auto ds = load_dataset(dir.path / "u.txt", dir.path / "r.txt", dir.path / "l.txt");
    CHECK(ds.logs.size() == 1);
    CHECK(ds.report.warnings.size() == 1);
    CHECK(ds.report.accounted_lines() == 4);
}

TEST_CASE("a stray unwrapped line does not poison the inferred schema") {
    TempDir dir("stray");
    write(dir.path / "u.txt", "<a dept:X>\n<b dept:Y>\n<c dept:X>\n<d dept:Y>\n<e dept:X>\n<f dept:Y>\nsome stray words\n");
    write(dir.path / "r.txt", "<r type:T>\n");
    write(dir.path / "l.txt", "<a r read t Allow>\n");
    const auto ds = load_dataset(dir.path / "u.txt", dir.path / "r.txt", dir.path / "l.txt");
    CHECK(ds.users.size() == 6);
    CHECK(ds.schema.names(Side::User) == std::vector<std::string>{"dept"});
    REQUIRE(ds.report.warnings.size() == 1);
    CHECK(ds.report.warnings[0].line == 7);
    CHECK(ds.logs.size() == 1);
}

TEST_CASE("format errors carry the file name") {
    TempDir dir("ambiguous");
    write(dir.path / "u.txt", "alice\nbob\n");
    write(dir.path / "r.txt", "<r type:T>\n");
    write(dir.path / "l.txt", "<a r read t Allow>\n");
    try {
        load_dataset(dir.path / "u.txt", dir.path / "r.txt", dir.path / "l.txt");
        FAIL("expected AmbiguousFormat");
    } catch (const AmbiguousFormat& e) {
        CHECK(std::string(e.what()).find("u.txt") != std::string::npos);
    }
}

TEST_CASE("benchmark notation loader") {
    TempDir dir("xs");
    write(dir.path / "u.txt", "# users\nuserAttrib(u1, dept=cs, role=student)\nuserAttrib(u2, dept=ee, role=faculty)\n");
    write(dir.path / "r.txt", "resourceAttrib(r1, dept=cs, type=homework)\nresourceAttrib(r2, dept=ee, type=exam)\n");
    write(dir.path / "l.txt", "log(u1, r1, read)\npermission(u2, r2, write)\nlog(u1, r2, read, t9, Deny)\nrubbish\n");
    const auto ds = load_xu_stoller(dir.path / "u.txt", dir.path / "r.txt", dir.path / "l.txt");
    CHECK(ds.users.size() == 2);
    CHECK(ds.resources.at("r2").attributes.at("type") == "exam");
    REQUIRE(ds.logs.size() == 3);
    CHECK(ds.logs[2].decision == Decision::Deny);
    CHECK(ds.report.warnings.size() == 1);
}

TEST_CASE("schema JSON round-trip") {
    const auto ds = sample_dataset();
    CHECK(schema_from_json(schema_to_json(ds.schema)) == ds.schema);
    CHECK_THROWS_AS(schema_from_json(nlohmann::json::object()), SchemaMismatch);
}
