#pragma once

// Textual rule format:
//
//   Rule 1: <User_Expr: {'department': {'IT', 'Sales'}}, Resource_Expr: {}, Operations: {'read'}, Constraints: set()>
//     WSC (Complexity): 3
//
// Sets are always written in sorted order. Constraints are written as
// {('user_attr', 'resource_attr'), ...}.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abac/model.hpp"

namespace abac {

/// "<User_Expr: ..., Constraints: ...>"
std::string format_rule_body(const AbacRule& rule);

/// "Rule N: <...>\n  WSC (Complexity): K" (no trailing newline)
std::string format_rule(const AbacRule& rule, std::size_t number, const WscWeights& weights = {});

/// Rules separated by blank lines, numbered from 1, trailing newline.
std::string format_policy(std::span<const AbacRule> rules, const WscWeights& weights = {});

/// Accepts either "Rule N: <...>" or a bare "<...>". Throws PolicySyntaxError.
AbacRule parse_rule(std::string_view text);

/// Parses a whole policy document. "WSC (Complexity): K" lines are checked
/// against the preceding rule; blank lines and '#' comments are skipped.
std::vector<AbacRule> parse_policy(std::string_view text, const WscWeights& weights = {});

nlohmann::json rule_to_json(const AbacRule& rule);
AbacRule rule_from_json(const nlohmann::json& j);

}  // namespace abac
