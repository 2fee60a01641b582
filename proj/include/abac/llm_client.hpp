#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "abac/nlgen.hpp"

namespace abac {

/// A generic chat-completion endpoint. The key itself is never stored here,
/// only the name of the environment variable holding it.
struct LlmEndpointConfig {
    std::string base_url;         // e.g. https://host/v1 ; requests go to <base_url>/chat/completions
    std::string model_name;
    std::string api_key_env_var;  // empty: send no Authorization header
    double timeout_seconds = 60.0;
    int max_retries = 2;
    double backoff_seconds = 1.0;  // doubled after each failed attempt

    /// Throws ContractViolation on an unusable URL or out-of-range numbers.
    void validate() const;
};

/// Throws DataError if the object carries an "api_key" field or bad types.
LlmEndpointConfig llm_config_from_json(const nlohmann::json& j);
nlohmann::json llm_config_to_json(const LlmEndpointConfig& config);

/// Receives request/response traces with the key already masked.
using LlmLogSink = std::function<void(std::string_view)>;

/// Sends the rendered prompt as one user message and returns the reply text.
/// Retries transport failures, 429 and 5xx with backoff. Throws
/// TransportError, HttpError or InvalidResponse (empty or malformed reply).
std::string complete_chat(const LlmEndpointConfig& endpoint, const PromptDocument& prompt,
                          const LlmLogSink& log = {});

/// complete_chat on the summary prompt, then section parsing. A reply missing
/// an opening, a principle section or a conclusion is InvalidResponse.
SummaryReport summarize_llm(const Policy& policy, const LlmEndpointConfig& endpoint,
                            const LlmLogSink& log = {}, const JargonMap& jargon = default_jargon_map());

}  // namespace abac
