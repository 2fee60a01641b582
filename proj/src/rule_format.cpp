#include "abac/rule_format.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace abac {

namespace {

void append_quoted(std::string& out, const std::string& s) {
    out += '\'';
    out += s;
    out += '\'';
}

void append_set(std::string& out, const std::set<std::string>& values) {
    if (values.empty()) {
        out += "set()";
        return;
    }
    out += '{';
    bool first = true;
    for (const auto& v : values) {
        if (!first) out += ", ";
        first = false;
        append_quoted(out, v);
    }
    out += '}';
}

void append_expr(std::string& out, const ValueSetMap& expr) {
    out += '{';
    bool first = true;
    for (const auto& [attr, values] : expr) {
        if (!first) out += ", ";
        first = false;
        append_quoted(out, attr);
        out += ": ";
        append_set(out, values);
    }
    out += '}';
}

void append_constraints(std::string& out, const std::set<Constraint>& cs) {
    if (cs.empty()) {
        out += "set()";
        return;
    }
    out += '{';
    bool first = true;
    for (const auto& [ua, ra] : cs) {
        if (!first) out += ", ";
        first = false;
        out += '(';
        append_quoted(out, ua);
        out += ", ";
        append_quoted(out, ra);
        out += ')';
    }
    out += '}';
}

// ── Recursive-descent reader for the Python-literal subset ──────────────────

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw PolicySyntaxError(what + " at offset " + std::to_string(pos_) + " in \"" +
                                std::string(s_) + "\"");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    bool accept_word(std::string_view w) {
        skip_ws();
        if (s_.substr(pos_, w.size()) == w) {
            pos_ += w.size();
            return true;
        }
        return false;
    }
    bool at_end() {
        skip_ws();
        return pos_ == s_.size();
    }

    std::string quoted() {
        skip_ws();
        if (pos_ >= s_.size() || (s_[pos_] != '\'' && s_[pos_] != '"')) fail("expected quoted string");
        const char q = s_[pos_++];
        const auto end = s_.find(q, pos_);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(s_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    std::set<std::string> string_set() {
        std::set<std::string> out;
        if (accept_word("set()")) return out;
        expect('{');
        if (accept('}')) return out;
        do {
            out.insert(quoted());
        } while (accept(','));
        expect('}');
        return out;
    }

    ValueSetMap expr() {
        ValueSetMap out;
        expect('{');
        if (accept('}')) return out;
        do {
            auto key = quoted();
            expect(':');
            auto values = string_set();
            if (values.empty()) fail("empty value set for '" + key + "'");
            if (!out.emplace(std::move(key), std::move(values)).second) fail("duplicate attribute");
        } while (accept(','));
        expect('}');
        return out;
    }

    std::set<Constraint> constraints() {
        std::set<Constraint> out;
        if (accept_word("set()")) return out;
        expect('{');
        if (accept('}')) return out;
        do {
            expect('(');
            auto ua = quoted();
            expect(',');
            auto ra = quoted();
            expect(')');
            out.emplace(std::move(ua), std::move(ra));
        } while (accept(','));
        expect('}');
        return out;
    }

    std::string_view rest() const { return s_.substr(pos_); }
    std::size_t pos() const { return pos_; }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string format_rule_body(const AbacRule& rule) {
    std::string out = "<User_Expr: ";
    append_expr(out, rule.user_expr);
    out += ", Resource_Expr: ";
    append_expr(out, rule.resource_expr);
    out += ", Operations: ";
    append_set(out, rule.operations);
    out += ", Constraints: ";
    append_constraints(out, rule.constraints);
    out += '>';
    return out;
}

std::string format_rule(const AbacRule& rule, std::size_t number, const WscWeights& weights) {
    return "Rule " + std::to_string(number) + ": " + format_rule_body(rule) +
           "\n  WSC (Complexity): " + std::to_string(wsc(rule, weights));
}

std::string format_policy(std::span<const AbacRule> rules, const WscWeights& weights) {
    std::string out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (i) out += "\n";
        out += format_rule(rules[i], i + 1, weights);
        out += "\n";
    }
    return out;
}

AbacRule parse_rule(std::string_view text) {
    text = trim(text);
    if (text.starts_with("Rule")) {
        const auto colon = text.find(':');
        if (colon == std::string_view::npos) throw PolicySyntaxError("missing ':' after rule number");
        text = trim(text.substr(colon + 1));
    }
    Reader rd(text);
    AbacRule rule;
    bool seen[4] = {false, false, false, false};
    rd.expect('<');
    do {
        if (rd.accept_word("User_Expr")) {
            rd.expect(':');
            rule.user_expr = rd.expr();
            seen[0] = true;
        } else if (rd.accept_word("Resource_Expr")) {
            rd.expect(':');
            rule.resource_expr = rd.expr();
            seen[1] = true;
        } else if (rd.accept_word("Operations")) {
            rd.expect(':');
            rule.operations = rd.string_set();
            seen[2] = true;
        } else if (rd.accept_word("Constraints")) {
            rd.expect(':');
            rule.constraints = rd.constraints();
            seen[3] = true;
        } else {
            rd.fail("unknown rule component");
        }
    } while (rd.accept(','));
    rd.expect('>');
    if (rd.accept_word("WSC")) {
        // optional "WSC (Complexity): K" suffix, checked against the rule
        const auto rest = rd.rest();
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) rd.fail("malformed WSC suffix");
        const auto num = trim(rest.substr(colon + 1));
        std::size_t value = 0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (ec != std::errc{} || p != num.data() + num.size()) rd.fail("malformed WSC value");
        if (!seen[2] || value != wsc(rule)) rd.fail("WSC value does not match the rule");
        return rule;
    }
    if (!rd.at_end()) rd.fail("trailing text after rule");
    if (!seen[0] || !seen[1] || !seen[2] || !seen[3])
        throw PolicySyntaxError("rule is missing a component: " + std::string(text));
    if (rule.operations.empty()) throw PolicySyntaxError("rule has no operations");
    return rule;
}

std::vector<AbacRule> parse_policy(std::string_view text, const WscWeights& weights) {
    std::vector<AbacRule> rules;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.starts_with("#")) continue;
        if (t.starts_with("WSC")) {
            const auto colon = t.find(':');
            if (colon == std::string_view::npos || rules.empty())
                throw PolicySyntaxError("line " + std::to_string(lineno) + ": stray WSC line");
            const auto num = trim(t.substr(colon + 1));
            std::size_t value = 0;
            auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
            if (ec != std::errc{} || p != num.data() + num.size())
                throw PolicySyntaxError("line " + std::to_string(lineno) + ": bad WSC value");
            if (value != wsc(rules.back(), weights))
                throw PolicySyntaxError("line " + std::to_string(lineno) + ": WSC " +
                                        std::to_string(value) + " does not match rule (" +
                                        std::to_string(wsc(rules.back(), weights)) + ")");
            continue;
        }
        try {
            rules.push_back(parse_rule(t));
        } catch (const PolicySyntaxError& e) {
            throw PolicySyntaxError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rules;
}

nlohmann::json rule_to_json(const AbacRule& rule) {
    nlohmann::json j;
    j["user_expr"] = nlohmann::json::object();
    for (const auto& [a, vs] : rule.user_expr) j["user_expr"][a] = vs;
    j["resource_expr"] = nlohmann::json::object();
    for (const auto& [a, vs] : rule.resource_expr) j["resource_expr"][a] = vs;
    j["operations"] = rule.operations;
    j["constraints"] = nlohmann::json::array();
    for (const auto& [ua, ra] : rule.constraints) j["constraints"].push_back({ua, ra});
    j["wsc"] = wsc(rule);
    return j;
}

AbacRule rule_from_json(const nlohmann::json& j) {
    AbacRule rule;
    try {
        for (const auto& [a, vs] : j.at("user_expr").items())
            rule.user_expr[a] = vs.get<std::set<std::string>>();
        for (const auto& [a, vs] : j.at("resource_expr").items())
            rule.resource_expr[a] = vs.get<std::set<std::string>>();
        rule.operations = j.at("operations").get<std::set<std::string>>();
        for (const auto& c : j.at("constraints"))
            rule.constraints.emplace(c.at(0).get<std::string>(), c.at(1).get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw PolicySyntaxError(std::string("malformed rule JSON: ") + e.what());
    }
    return rule;
}

}  // namespace abac
