#include "abac/nlgen.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "abac/embedded_data.hpp"
#include "abac/errors.hpp"
#include "abac/rule_format.hpp"

namespace abac {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string mapped(const std::string& term, const JargonMap& jargon) {
    for (const auto& [from, to] : jargon)
        if (from == term) return to;
    return term;
}

std::string quoted_list(const std::set<std::string>& values, std::string_view joiner) {
    std::string out;
    std::size_t i = 0;
    for (const auto& v : values) {
        if (i > 0) out += (i + 1 == values.size()) ? std::string(" ") + std::string(joiner) + " " : ", ";
        out += "'" + v + "'";
        ++i;
    }
    return out;
}

std::string conditions(const ValueSetMap& expr, const JargonMap& jargon) {
    std::string out;
    bool first = true;
    for (const auto& [attr, values] : expr) {
        if (!first) out += " and ";
        first = false;
        out += "whose " + mapped(attr, jargon) + " is " + quoted_list(values, "or");
    }
    return out;
}

std::string operations_phrase(const std::set<std::string>& ops, const JargonMap& jargon) {
    std::string out;
    std::size_t i = 0;
    for (const auto& op : ops) {
        if (i > 0) out += (i + 1 == ops.size()) ? " and " : ", ";
        const auto word = mapped(op, jargon);
        out += word == op ? "'" + op + "'" : word + " ('" + op + "')";
        ++i;
    }
    return out;
}

std::string constraint_phrase(const std::set<Constraint>& cs, const JargonMap& jargon) {
    std::string out;
    bool first = true;
    for (const auto& [u, r] : cs) {
        if (!first) out += " and ";
        first = false;
        out += "the user's " + mapped(u, jargon) + " matches the resource's " + mapped(r, jargon);
    }
    return out;
}

std::string rule_sentence(const AbacRule& rule, std::size_t number, const JargonMap& jargon) {
    const auto label = mapped("rule", jargon);
    std::string s = "* " + std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])))) +
                    label.substr(1) + " " + std::to_string(number) + ": ";
    s += rule.user_expr.empty() ? "Any user" : "Users " + conditions(rule.user_expr, jargon);
    s += " may " + operations_phrase(rule.operations, jargon) + " ";
    s += rule.resource_expr.empty() ? "any resource" : "resources " + conditions(rule.resource_expr, jargon);
    if (!rule.constraints.empty()) s += ", provided " + constraint_phrase(rule.constraints, jargon);
    s += ".";
    return s;
}

std::string join_numbers(const std::vector<std::size_t>& ns) {
    std::string out;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (i > 0) out += (i + 1 == ns.size()) ? " and " : ", ";
        out += std::to_string(ns[i]);
    }
    return out;
}

bool is_underline(std::string_view line) {
    const auto t = trim(line);
    if (t.size() < 3) return false;
    return std::all_of(t.begin(), t.end(), [](char c) { return c == '-' || c == '='; });
}

std::optional<std::string> heading_of(std::string_view raw) {
    const auto t = trim(raw);
    if (t.empty()) return std::nullopt;
    if (t[0] == '#') {
        auto h = trim(std::string_view(t).substr(t.find_first_not_of('#') == std::string::npos
                                                     ? t.size()
                                                     : t.find_first_not_of('#')));
        if (!h.empty() && h.back() == ':') h.pop_back();
        return h.empty() ? std::nullopt : std::optional<std::string>(trim(h));
    }
    if (t.size() > 4 && t.starts_with("**") && t.ends_with("**")) {
        auto h = trim(std::string_view(t).substr(2, t.size() - 4));
        if (!h.empty() && h.back() == ':') h.pop_back();
        if (!h.empty() && h.find("**") == std::string::npos) return trim(h);
    }
    if (t.back() == ':' && t.size() <= 60 && t[0] != '*' && t[0] != '-') {
        const auto words = std::count(t.begin(), t.end(), ' ') + 1;
        if (words <= 6) return trim(std::string_view(t).substr(0, t.size() - 1));
    }
    return std::nullopt;
}

bool is_ascii_upper_token(std::string_view token) {
    bool letter = false;
    for (unsigned char c : token) {
        if (std::islower(c)) return false;
        if (std::isupper(c)) letter = true;
    }
    return letter;
}

// '_' and whitespace runs become one space
std::string normalize(std::string_view s, bool fold_case) {
    std::string out;
    out.reserve(s.size());
    bool space = false;
    for (unsigned char c : s) {
        if (c == '_' || std::isspace(c)) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += static_cast<char>(fold_case ? std::tolower(c) : c);
    }
    return out;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    auto boundary = [](unsigned char c) { return !std::isalnum(c); };
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        const bool left = pos == 0 || boundary(haystack[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right = end == haystack.size() || boundary(haystack[end]);
        if (left && right) return true;
    }
    return false;
}

std::vector<std::string> rule_tokens(const AbacRule& rule) {
    std::vector<std::string> tokens;
    std::set<std::string> seen;
    auto add = [&](const std::string& t) {
        if (!t.empty() && seen.insert(t).second) tokens.push_back(t);
    };
    for (const auto& [_, vs] : rule.user_expr)
        for (const auto& v : vs) add(v);
    for (const auto& [_, vs] : rule.resource_expr)
        for (const auto& v : vs) add(v);
    for (const auto& op : rule.operations) add(op);
    for (const auto& [u, r] : rule.constraints) {
        add(u);
        add(r);
    }
    return tokens;
}

struct NormalizedText {
    std::string folded;
    std::string exact;
};

bool token_found(const std::string& token, const NormalizedText& text, const JargonMap& jargon) {
    auto present = [&](const std::string& t) {
        // all-caps tokens such as IT or HR would match ordinary words once folded
        if (is_ascii_upper_token(t)) return contains_word(text.exact, normalize(t, false));
        return contains_word(text.folded, normalize(t, true));
    };
    if (present(token)) return true;
    for (const auto& [from, to] : jargon)
        if (from == token && present(to)) return true;
    return false;
}

double score_rule(const AbacRule& rule, const NormalizedText& text, const JargonMap& jargon,
                  std::vector<std::string>& missing) {
    const auto tokens = rule_tokens(rule);
    if (tokens.empty()) return 1.0;
    std::size_t hit = 0;
    for (const auto& t : tokens) {
        if (token_found(t, text, jargon))
            ++hit;
        else
            missing.push_back(t);
    }
    return static_cast<double>(hit) / static_cast<double>(tokens.size());
}

NormalizedText prepare(std::string_view text) { return {normalize(text, true), normalize(text, false)}; }

FidelityScore finish(FidelityScore s) {
    if (s.rule_scores.empty()) {
        s.overall = 1.0;
        return s;
    }
    double total = 0;
    for (double x : s.rule_scores) total += x;
    s.overall = total / static_cast<double>(s.rule_scores.size());
    return s;
}

Policy example_policy() {
    Policy p;
    p.schema.user_attributes = {{"department", {"Finance", "Sales"}}, {"designation", {"Analyst", "Manager"}}};
    p.schema.resource_attributes = {{"type", {"Financial", "Operational"}}, {"sensitivity", {"Low", "High"}}};
    AbacRule r;
    r.user_expr["department"] = {"Finance"};
    r.resource_expr["type"] = {"Financial"};
    r.operations = {"read"};
    p.rules.push_back(r);
    return p;
}

}  // namespace

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::CodeGen: return "codegen";
        case PromptKind::Summarization: return "summarization";
        case PromptKind::Verification: return "verification";
    }
    return "?";
}

std::string PromptDocument::render() const {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += "\n";
        out += "## " + blocks[i].heading + "\n\n" + blocks[i].body;
        if (!blocks[i].body.empty() && blocks[i].body.back() != '\n') out += "\n";
    }
    return out;
}

nlohmann::json PromptDocument::to_json() const {
    nlohmann::json j;
    j["kind"] = std::string(to_string(kind));
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : blocks) j["blocks"].push_back({{"heading", b.heading}, {"body", b.body}});
    return j;
}

PromptDocument build_codegen_prompt(const FormatExamples& examples, std::string_view miner_source_text) {
    if (blank(examples.users) || blank(examples.resources) || blank(examples.logs))
        throw ContractViolation("code generation prompt needs at least one example for users, resources and logs");
    if (blank(miner_source_text)) throw ContractViolation("code generation prompt needs the miner source");

    PromptDocument doc;
    doc.kind = PromptKind::CodeGen;
    doc.blocks.push_back(
        {"Block 1: Role & Context",
         "You are an experienced Python developer on an access control analytics project. The code you write "
         "feeds an attribute-based policy miner whose implementation is given in Block 6. Its output must be "
         "exactly the structures that miner consumes."});
    doc.blocks.push_back(
        {"Block 2: Task Structure",
         "Write two functions.\n"
         "- parse_data_file(file_content: str, file_type: str) turns the raw text of one file into structured "
         "data. file_type is one of 'users', 'resources' or 'logs'.\n"
         "- main() runs the pipeline end to end."});
    doc.blocks.push_back(
        {"Block 3: Parsing Requirements",
         "Infer the layout of each file from the examples in Block 4: the field separator, any wrapper "
         "characters around a record, and whether attributes are written as key:value pairs or by position.\n"
         "- Skip blank lines and lines starting with '#'.\n"
         "- If a line does not fit the inferred layout, print a warning with its line number and keep going.\n"
         "- Users and resources become a dict of id -> {attribute: value}.\n"
         "- Log lines become dicts with user, resource, operation, timestamp and decision ('Allow' or 'Deny').\n"
         "- A trailing 'xN' on a log line is a repeat count of N."});
    doc.blocks.push_back({"Block 4: Format Examples", "Users:\n" + examples.users + "\n\nResources:\n" +
                                                          examples.resources + "\n\nLogs:\n" + examples.logs});
    doc.blocks.push_back(
        {"Block 5: Orchestration Workflow",
         "main() reads the users, resources and logs files, reporting a missing file and exiting with a "
         "non-zero status. It parses each file with parse_data_file, loads the results into the miner, runs "
         "mining, and prints every mined rule with its WSC followed by the coverage of the Allow entries."});
    doc.blocks.push_back({"Block 6: Algorithm Code",
                          "The miner implementation follows in full. Do not change or reimplement it.\n\n" +
                              std::string(miner_source_text)});
    doc.blocks.push_back(
        {"Block 7: Output Instructions",
         "Provide ONLY the complete, self-contained Python code for the parse_data_file function, including "
         "necessary imports. Do not include any example usage or explanations"});
    return doc;
}

std::string bundled_miner_source() {
    return std::string("// miner.hpp\n") + embedded::kMinerHeaderText + "\n// miner.cpp\n" +
           embedded::kMinerSourceText;
}

const JargonMap& default_jargon_map() {
    static const JargonMap map = jargon_map_from_json(nlohmann::json::parse(embedded::kJargonMapJson));
    return map;
}

JargonMap jargon_map_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("jargon map must be a JSON object");
    JargonMap out;
    // nlohmann objects iterate in key order; the file's order is not kept
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw DataError("jargon map value for '" + k + "' is not a string");
        out.emplace_back(k, v.get<std::string>());
    }
    return out;
}

PromptDocument build_summary_prompt(const Policy& policy, const JargonMap& jargon) {
    if (policy.rules.empty()) throw ContractViolation("cannot build a summary prompt for an empty policy");

    PromptDocument doc;
    doc.kind = PromptKind::Summarization;
    doc.blocks.push_back(
        {"Component 1: Role & Audience",
         "You are a cybersecurity analyst. Your readers are business leaders who approve access policy but "
         "never read rule syntax. Explain the policy below to them."});
    doc.blocks.push_back({"Component 2: Input Rules",
                          "The mined rules, one per entry. WSC is the rule's size.\n\n" +
                              format_policy(policy.rules)});
    doc.blocks.push_back(
        {"Component 3: Writing Guidelines",
         "- Keep a professional, confident tone.\n"
         "- Explain the business reason for each access pattern, tied to job functions and responsibilities.\n"
         "- Name every attribute value and operation a rule uses. Do not invent access the rules do not grant.\n"
         "- Avoid access control jargon; Component 5 lists replacements."});
    doc.blocks.push_back(
        {"Component 4: Report Structure",
         "1. An opening statement on what the policy is for.\n"
         "2. A heading '#Access Principles' with one bullet per rule, each under a short descriptive title.\n"
         "3. When any rule has constraints, a 'Cross-Functional Collaboration:' section explaining how data is "
         "shared across groups.\n"
         "4. 'Conclusion:' on how the policy protects assets and supports operations."});
    std::string mapping = "Rewrite technical wording in business terms, for example:\n"
                          "- technical rules -> organizational policies\n"
                          "- safe systems -> protected assets\n";
    for (const auto& [from, to] : jargon) mapping += "- " + from + " -> " + to + "\n";
    doc.blocks.push_back({"Component 5: Semantic Mapping Guidelines", mapping});
    doc.blocks.push_back({"Component 6: Example Output",
                          "For the rule set\n\n" + format_policy(example_policy().rules) +
                              "\na suitable report is:\n\n" + summarize_template(example_policy(), jargon).text});
    return doc;
}

PromptDocument build_verification_prompt(const Policy& policy, std::string_view summary_text) {
    if (policy.rules.empty()) throw ContractViolation("cannot verify a summary of an empty policy");
    if (blank(summary_text)) throw ContractViolation("cannot verify an empty summary");

    PromptDocument doc;
    doc.kind = PromptKind::Verification;
    doc.blocks.push_back({"Role",
                          "You are a verifier. Check whether a natural language summary faithfully describes a "
                          "set of formal access control rules."});
    doc.blocks.push_back({"Formal Rules", format_policy(policy.rules)});
    doc.blocks.push_back({"Summary", std::string(summary_text)});
    doc.blocks.push_back(
        {"Instructions",
         "Evaluate each rule independently against the summary. For every rule report whether the summary "
         "states its user conditions, resource conditions, operations and constraints, note anything missing "
         "or wrong, and give a score from 0 to 100. Finish with the overall score, the mean of the rule "
         "scores."});
    return doc;
}

// ── Summaries ───────────────────────────────────────────────────────────────

const SummarySection* SummaryReport::section(std::string_view heading) const {
    const auto want = lower(heading);
    for (const auto& s : sections)
        if (lower(s.heading) == want) return &s;
    return nullptr;
}

nlohmann::json SummaryReport::to_json() const {
    nlohmann::json j;
    j["text"] = text;
    j["sections"] = nlohmann::json::array();
    for (const auto& s : sections) j["sections"].push_back({{"heading", s.heading}, {"body", s.body}});
    j["rule_trace"] = nlohmann::json::object();
    for (const auto& [rule, spans] : rule_trace) {
        auto& arr = j["rule_trace"][std::to_string(rule + 1)];
        arr = nlohmann::json::array();
        for (const auto& sp : spans) arr.push_back({{"offset", sp.offset}, {"length", sp.length}});
    }
    return j;
}

std::vector<SummarySection> parse_sections(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    for (std::string l; std::getline(in, l);) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines.push_back(l);
    }

    std::vector<SummarySection> out;
    SummarySection current{"Opening", ""};
    auto flush = [&] {
        current.body = trim(current.body);
        if (current.heading != "Opening" || !current.body.empty()) out.push_back(current);
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        std::optional<std::string> h;
        const bool underlined = i + 1 < lines.size() && !blank(l) && is_underline(lines[i + 1]);
        if (underlined) {
            auto t = trim(l);
            if (!t.empty() && t.back() == ':') t.pop_back();
            h = trim(t);
        } else {
            h = heading_of(l);
        }
        if (h) {
            flush();
            current = {*h, ""};
            if (underlined) ++i;
            continue;
        }
        current.body += l + "\n";
    }
    flush();
    return out;
}

std::vector<std::string> structural_problems(const SummaryReport& report) {
    std::vector<std::string> problems;
    bool opening = false, principle = false, conclusion = false;
    for (const auto& s : report.sections) {
        const auto h = lower(s.heading);
        if (h == "opening")
            opening = !blank(s.body);
        else if (h.find("conclusion") != std::string::npos)
            conclusion = true;
        else if (!blank(s.body))
            principle = true;
    }
    if (!opening) problems.push_back("no opening statement");
    if (!principle) problems.push_back("no principle section");
    if (!conclusion) problems.push_back("no conclusion");
    return problems;
}

SummaryReport summarize_template(const Policy& policy, const JargonMap& jargon) {
    SummaryReport report;
    std::string& t = report.text;
    const auto n = policy.rules.size();
    const auto label = mapped("rule", jargon);
    const auto plural = label + "s";

    t += "This document gives an overview of the organization's data access policy as learned from recorded "
         "access decisions. It consists of " +
         std::to_string(n) + " " + (n == 1 ? label : plural) + " with a combined complexity of " +
         std::to_string(policy_wsc(policy.rules)) + ". Anything not granted below is denied.\n\n";

    t += "#Access Principles\n";
    std::vector<std::size_t> constrained;
    for (std::size_t i = 0; i < n; ++i) {
        const auto sentence = rule_sentence(policy.rules[i], i + 1, jargon);
        report.rule_trace[i].push_back({t.size(), sentence.size()});
        t += sentence + "\n";
        if (i + 1 < n) t += "\n";
        if (!policy.rules[i].constraints.empty()) constrained.push_back(i);
    }

    if (!constrained.empty()) {
        t += "\nCross-Functional Collaboration:\n";
        for (std::size_t k = 0; k < constrained.size(); ++k) {
            const auto i = constrained[k];
            const auto sentence = "- " + std::string(1, static_cast<char>(std::toupper(
                                                            static_cast<unsigned char>(label[0])))) +
                                  label.substr(1) + " " + std::to_string(i + 1) + " shares data only when " +
                                  constraint_phrase(policy.rules[i].constraints, jargon) + ".";
            report.rule_trace[i].push_back({t.size(), sentence.size()});
            t += sentence + "\n";
        }
    }

    std::vector<std::size_t> numbers;
    for (auto i : constrained) numbers.push_back(i + 1);
    t += "\nConclusion:\n-----------\n";
    const bool single = n == 1;
    t += "The " + (single ? label + " above limits" : plural + " above limit") +
         " each group to the protected assets its work requires";
    if (constrained.empty())
        t += single ? ". It does not depend on matching a user attribute against a resource attribute.\n"
                    : ". None of them depends on matching a user attribute against a resource attribute.\n";
    else
        t += ", and " + (numbers.size() == 1 ? label + " " : plural + " ") + join_numbers(numbers) +
             (numbers.size() == 1 ? " ties" : " tie") +
             " access to a shared attribute so that cooperation across groups stays contained.\n";

    report.sections = parse_sections(t);
    return report;
}

// ── Fidelity ────────────────────────────────────────────────────────────────

FidelityScore check_fidelity(const Policy& policy, std::string_view text, const JargonMap& jargon) {
    const auto norm = prepare(text);
    FidelityScore s;
    for (const auto& rule : policy.rules) {
        s.missing.emplace_back();
        s.rule_scores.push_back(score_rule(rule, norm, jargon, s.missing.back()));
    }
    return finish(std::move(s));
}

FidelityScore check_fidelity(const Policy& policy, const SummaryReport& report, const JargonMap& jargon) {
    const auto whole = prepare(report.text);
    FidelityScore s;
    for (std::size_t i = 0; i < policy.rules.size(); ++i) {
        s.missing.emplace_back();
        auto it = report.rule_trace.find(i);
        if (it == report.rule_trace.end() || it->second.empty()) {
            s.rule_scores.push_back(score_rule(policy.rules[i], whole, jargon, s.missing.back()));
            continue;
        }
        // a traced rule must be described inside its own spans
        std::string local;
        for (const auto& sp : it->second) {
            if (sp.offset <= report.text.size())
                local += report.text.substr(sp.offset, std::min(sp.length, report.text.size() - sp.offset));
            local += "\n";
        }
        s.rule_scores.push_back(score_rule(policy.rules[i], prepare(local), jargon, s.missing.back()));
    }
    return finish(std::move(s));
}

}  // namespace abac
