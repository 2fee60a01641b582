#include "abac/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <optional>
#include <regex>
#include <thread>

#include <httplib.h>

#include "abac/errors.hpp"

namespace abac {

namespace {

using Clock = std::chrono::steady_clock;

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing '/'
};

std::optional<ParsedUrl> parse_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/\s]+)(/[^\s]*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, re)) return std::nullopt;
    std::string path = m[2].matched ? m[2].str() : "";
    while (!path.empty() && path.back() == '/') path.pop_back();
    return ParsedUrl{m[1].str(), path};
}

std::string redact(std::string text, const std::string& secret) {
    if (secret.empty()) return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos + 3))
        text.replace(pos, secret.size(), "***");
    return text;
}

std::string snippet(const std::string& body) {
    return body.size() > 200 ? body.substr(0, 200) + "..." : body;
}

std::string extract_content(const std::string& body) {
    if (body.empty()) throw InvalidResponse("endpoint returned an empty body");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw InvalidResponse("endpoint reply is not JSON: " + snippet(body));
    }
    const auto* content = [&]() -> const nlohmann::json* {
        if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            return nullptr;
        const auto& c = j["choices"][0];
        if (!c.is_object() || !c.contains("message") || !c["message"].is_object()) return nullptr;
        const auto& m = c["message"];
        if (!m.contains("content") || !m["content"].is_string()) return nullptr;
        return &m["content"];
    }();
    if (!content) throw InvalidResponse("endpoint reply has no choices[0].message.content");
    auto text = content->get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw InvalidResponse("endpoint reply content is empty");
    return text;
}

}  // namespace

void LlmEndpointConfig::validate() const {
    if (!parse_url(base_url)) throw ContractViolation("base_url must be an http(s) URL: '" + base_url + "'");
    if (model_name.empty()) throw ContractViolation("model_name is empty");
    if (!(timeout_seconds > 0)) throw ContractViolation("timeout_seconds must be positive");
    if (max_retries < 0) throw ContractViolation("max_retries must be >= 0");
    if (backoff_seconds < 0) throw ContractViolation("backoff_seconds must be >= 0");
}

LlmEndpointConfig llm_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("endpoint config must be a JSON object");
    if (j.contains("api_key"))
        throw DataError("endpoint config must not contain api_key; name an environment variable instead");
    LlmEndpointConfig c;
    try {
        c.base_url = j.at("base_url").get<std::string>();
        c.model_name = j.at("model_name").get<std::string>();
        c.api_key_env_var = j.value("api_key_env_var", std::string{});
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.backoff_seconds = j.value("backoff_seconds", c.backoff_seconds);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad endpoint config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const ContractViolation& e) {
        throw DataError(e.what());
    }
    return c;
}

nlohmann::json llm_config_to_json(const LlmEndpointConfig& c) {
    return {{"base_url", c.base_url},
            {"model_name", c.model_name},
            {"api_key_env_var", c.api_key_env_var},
            {"timeout_seconds", c.timeout_seconds},
            {"max_retries", c.max_retries},
            {"backoff_seconds", c.backoff_seconds}};
}

std::string complete_chat(const LlmEndpointConfig& endpoint, const PromptDocument& prompt, const LlmLogSink& log) {
    endpoint.validate();
    const auto url = *parse_url(endpoint.base_url);

    std::string key;
    if (!endpoint.api_key_env_var.empty()) {
        const char* v = std::getenv(endpoint.api_key_env_var.c_str());
        if (!v || !*v) throw ExternalError("environment variable " + endpoint.api_key_env_var + " is not set");
        key = v;
    }

    const nlohmann::json request = {
        {"model", endpoint.model_name},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.render()}}})}};
    const auto body = request.dump();
    const auto path = url.path + "/chat/completions";

    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    auto emit = [&](const std::string& line) {
        if (log) log(redact(line, key));
    };

    const auto per_attempt = std::chrono::duration<double>(endpoint.timeout_seconds);
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             per_attempt * static_cast<double>(endpoint.max_retries + 1));
    auto backoff = std::chrono::duration<double>(endpoint.backoff_seconds);

    std::optional<ExternalError> last;
    bool last_http = false;
    int last_status = 0;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        const auto remaining = std::chrono::duration<double>(deadline - Clock::now());
        if (remaining.count() <= 0) break;
        const auto budget = std::chrono::duration_cast<std::chrono::microseconds>(std::min(per_attempt, remaining));

        httplib::Client cli(url.origin);
        cli.set_connection_timeout(budget);
        cli.set_read_timeout(budget);
        cli.set_write_timeout(budget);

        emit("request attempt " + std::to_string(attempt + 1) + ": POST " + url.origin + path +
             (key.empty() ? "" : "\nAuthorization: Bearer ***") + "\n" + body);
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            const auto msg = "cannot reach " + url.origin + ": " + httplib::to_string(res.error());
            emit("transport failure: " + msg);
            last.emplace(TransportError(redact(msg, key)));
            last_http = false;
        } else {
            emit("response status " + std::to_string(res->status) + "\n" + res->body);
            if (res->status >= 200 && res->status < 300) return extract_content(res->body);
            const auto msg = "endpoint returned HTTP " + std::to_string(res->status) + ": " + snippet(res->body);
            if (res->status != 429 && res->status < 500) throw HttpError(res->status, redact(msg, key));
            last.emplace(ExternalError(redact(msg, key)));
            last_http = true;
            last_status = res->status;
        }
        if (attempt == endpoint.max_retries) break;
        const auto left = std::chrono::duration<double>(deadline - Clock::now());
        if (left <= backoff) break;
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
    if (last_http) throw HttpError(last_status, last ? last->what() : "HTTP error");
    throw TransportError(last ? last->what() : "endpoint deadline passed before any attempt");
}

SummaryReport summarize_llm(const Policy& policy, const LlmEndpointConfig& endpoint, const LlmLogSink& log,
                            const JargonMap& jargon) {
    const auto prompt = build_summary_prompt(policy, jargon);
    SummaryReport report;
    report.text = complete_chat(endpoint, prompt, log);
    report.sections = parse_sections(report.text);
    const auto problems = structural_problems(report);
    if (!problems.empty()) {
        std::string msg = "summary reply is not a valid report:";
        for (const auto& p : problems) msg += " " + p + ";";
        msg.pop_back();
        throw InvalidResponse(msg);
    }
    return report;
}

}  // namespace abac
