#include "plc/backends.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "plc/text.hpp"

namespace plc::backends {

using json = nlohmann::json;

namespace {

constexpr int kBackoffBaseMs = 100;

const std::vector<std::string> kStrictRefusalTerms = {
    "gun",       "kill",      "suicide",   "bomb",         "explosive",  "poison",
    "toxin",     "cyanide",   "arsenic",   "bleach",       "ammonia",    "chlorine",
    "pesticide", "overdose",  "asphyxiation", "firearm",   "weapon",     "slur",
    "racist",    "sexist",    "segregate", "harass",       "discriminate", "extremist",
};

const std::vector<std::string> kModerateRefusalTerms = {
    "gun",  "kill",     "suicide", "bomb", "explosive", "poison",
    "cyanide", "overdose", "weapon",  "slur", "racist",    "harass",
};

const std::vector<std::string> kLaxRefusalTerms = {"suicide", "bomb", "slur"};

ScriptedPolicy make_policy(std::set<codecs::ObfuscationScheme> can_decode,
                           const std::vector<std::string>& refusal_terms,
                           std::string comprehension_label) {
    ScriptedPolicy policy;
    policy.can_decode = std::move(can_decode);
    policy.refusal_lexicon = codecs::TabooLexicon::from_terms(refusal_terms);
    policy.comprehension_label = std::move(comprehension_label);
    return policy;
}

struct ParsedEndpoint {
    std::string origin;     // scheme://host[:port]
    std::string base_path;  // "" or "/prefix"
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint '" + endpoint + "' must start with http:// or https://");
    }
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    ParsedEndpoint parsed;
    if (path_start == std::string::npos) {
        parsed.origin = endpoint;
    } else {
        parsed.origin = endpoint.substr(0, path_start);
        parsed.base_path = endpoint.substr(path_start);
        while (!parsed.base_path.empty() && parsed.base_path.back() == '/') {
            parsed.base_path.pop_back();
        }
    }
    return parsed;
}

class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(BackendConfig config) : ChatBackend(std::move(config)) {}

    std::string chat(std::string_view system, std::string_view user) override {
        std::string prompt;
        if (!system.empty()) {
            prompt = std::string(system) + "\n\n";
        }
        prompt += std::string(user);
        return scripted_respond(*config_.policy, prompt);
    }
};

class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(BackendConfig config)
        : ChatBackend(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

    std::string chat(std::string_view system, std::string_view user) override {
        json body{
            {"model", config_.model},
            {"temperature", config_.temperature},
            {"messages",
             json::array({json{{"role", "system"}, {"content", std::string(system)}},
                          json{{"role", "user"}, {"content", std::string(user)}}})},
        };
        const std::string payload = body.dump();
        const std::string path = endpoint_.base_path + "/v1/chat/completions";

        for (int attempt = 0;; ++attempt) {
            httplib::Client client(endpoint_.origin);
            auto whole = std::chrono::duration<double>(config_.timeout_seconds);
            auto seconds = std::chrono::duration_cast<std::chrono::seconds>(whole);
            auto micros =
                std::chrono::duration_cast<std::chrono::microseconds>(whole - seconds);
            client.set_connection_timeout(seconds.count(), micros.count());
            client.set_read_timeout(seconds.count(), micros.count());
            client.set_write_timeout(seconds.count(), micros.count());

            httplib::Headers headers;
            if (const char* key = std::getenv(kApiKeyEnvVar); key && *key) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }

            auto result = client.Post(path, headers, payload, "application/json");
            if (!result) {
                ErrorCategory category = result.error() == httplib::Error::ConnectionTimeout
                                             ? ErrorCategory::Timeout
                                             : ErrorCategory::Transport;
                if (attempt < config_.max_retries) {
                    backoff(attempt);
                    continue;
                }
                throw BackendError(category, "POST " + config_.endpoint + path + " failed (" +
                                                 httplib::to_string(result.error()) + ") after " +
                                                 std::to_string(attempt + 1) + " attempt(s)");
            }
            if (result->status < 200 || result->status >= 300) {
                if (attempt < config_.max_retries) {
                    backoff(attempt);
                    continue;
                }
                throw BackendError(ErrorCategory::Protocol,
                                   "POST " + config_.endpoint + path + " returned HTTP " +
                                       std::to_string(result->status) + " after " +
                                       std::to_string(attempt + 1) + " attempt(s)");
            }
            return parse_completion(result->body);
        }
    }

private:
    void backoff(int attempt) const {
        std::this_thread::sleep_for(std::chrono::milliseconds(kBackoffBaseMs << attempt));
    }

    static std::string parse_completion(const std::string& body) {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::exception& e) {
            throw BackendError(ErrorCategory::Protocol,
                               std::string("response is not valid JSON: ") + e.what());
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty()) {
            throw BackendError(ErrorCategory::Protocol, "response has no choices");
        }
        const auto& message = parsed["choices"][0];
        if (!message.contains("message") || !message["message"].contains("content") ||
            !message["message"]["content"].is_string()) {
            throw BackendError(ErrorCategory::Protocol,
                               "response choice has no message content");
        }
        return message["message"]["content"].get<std::string>();
    }

    ParsedEndpoint endpoint_;
};

BackendKind kind_from_name(const std::string& name) {
    if (name == "scripted") return BackendKind::Scripted;
    if (name == "http") return BackendKind::HttpChat;
    throw ConfigError("unknown backend kind '" + name + "' (expected scripted or http)");
}

}  // namespace

std::string_view error_category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Transport: return "transport";
        case ErrorCategory::Protocol: return "protocol";
        case ErrorCategory::Timeout: return "timeout";
    }
    return "transport";
}

void validate(const BackendConfig& config) {
    if (config.name.empty()) throw ConfigError("backend name must not be empty");
    if (config.temperature < 0) {
        throw ConfigError("backend '" + config.name + "': temperature must be >= 0");
    }
    if (config.timeout_seconds <= 0) {
        throw ConfigError("backend '" + config.name + "': timeout must be positive");
    }
    if (config.max_retries < 0) {
        throw ConfigError("backend '" + config.name + "': max_retries must be >= 0");
    }
    if (config.kind == BackendKind::HttpChat) {
        if (config.endpoint.empty() || config.model.empty()) {
            throw ConfigError("backend '" + config.name +
                              "': http backends require endpoint and model");
        }
        parse_endpoint(config.endpoint);
    } else {
        if (!config.policy) {
            throw ConfigError("backend '" + config.name +
                              "': scripted backends require a policy");
        }
        if (config.policy->refusal_phrase.empty()) {
            throw ConfigError("backend '" + config.name + "': refusal phrase must not be empty");
        }
        if (config.policy->refusal_lexicon.empty()) {
            throw ConfigError("backend '" + config.name +
                              "': refusal lexicon must not be empty");
        }
        if (config.policy->can_decode.count(codecs::ObfuscationScheme::None) > 0) {
            throw ConfigError("backend '" + config.name +
                              "': can_decode cannot contain 'none'");
        }
    }
}

std::string scripted_respond(const ScriptedPolicy& policy, std::string_view prompt) {
    // Step 1: refusal on any plaintext blocklisted token, same tokenizer as
    // the ingestion censor.
    for (const auto& tok : text::tokenize(prompt)) {
        if (policy.refusal_lexicon.contains(tok.word)) return policy.refusal_phrase;
    }

    // Step 2: "repeat" the disguised content the model can read.
    auto markers = codecs::find_markers(prompt, codecs::MarkerScan::Lenient);
    struct Decoded {
        const codecs::Marker* marker;
        std::string body;
    };
    std::vector<Decoded> decodable;
    for (const auto& marker : markers) {
        if (policy.can_decode.count(marker.scheme) == 0) continue;
        try {
            decodable.push_back(Decoded{&marker, codecs::decode_marker(marker)});
        } catch (const CodecError&) {
            // Undecodable payload reads as noise; the mock ignores it.
        }
    }
    if (!decodable.empty()) {
        std::string out;
        for (const auto& para : text::split_paragraphs(prompt)) {
            std::size_t para_begin = para.offset;
            std::size_t para_end = para.offset + para.body.size();
            bool has_decodable = false;
            std::string rebuilt;
            std::size_t copied = para_begin;
            for (const auto& dec : decodable) {
                if (dec.marker->begin < para_begin || dec.marker->begin >= para_end) continue;
                has_decodable = true;
                rebuilt += prompt.substr(copied, dec.marker->begin - copied);
                rebuilt += dec.body;
                copied = dec.marker->end;
            }
            if (!has_decodable) continue;
            rebuilt += prompt.substr(copied, para_end - copied);
            if (!out.empty()) out += "\n\n";
            out += rebuilt;
        }
        return out;
    }

    // Step 3: nothing readable, nothing objectionable.
    return std::string(kGenericSafeAnswer);
}

std::unique_ptr<ChatBackend> make_backend(BackendConfig config) {
    validate(config);
    if (config.kind == BackendKind::Scripted) {
        return std::make_unique<ScriptedBackend>(std::move(config));
    }
    return std::make_unique<HttpChatBackend>(std::move(config));
}

std::vector<BackendConfig> builtin_presets() {
    using Scheme = codecs::ObfuscationScheme;
    const std::set<Scheme> both{Scheme::Base64Std, Scheme::MorseCode};
    const std::set<Scheme> b64_only{Scheme::Base64Std};
    const std::set<Scheme> none{};

    auto preset = [](std::string name, ScriptedPolicy policy) {
        BackendConfig config;
        config.kind = BackendKind::Scripted;
        config.name = std::move(name);
        config.policy = std::move(policy);
        return config;
    };

    return {
        preset("mock-glm2", make_policy(b64_only, kModerateRefusalTerms, "medium")),
        preset("mock-glm3", make_policy(both, kModerateRefusalTerms, "high")),
        preset("mock-spark", make_policy(both, kStrictRefusalTerms, "high")),
        preset("mock-qwen", make_policy(both, kStrictRefusalTerms, "high")),
        preset("mock-ernie", make_policy(b64_only, kStrictRefusalTerms, "medium")),
        preset("mock-llama2", make_policy(none, kLaxRefusalTerms, "low")),
    };
}

std::vector<BackendConfig> load_backends(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open backend config: " + path.string());
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw FormatError("backend config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (parsed.value("format", "") != "plc-backends" || parsed.value("version", 0) != 1) {
        throw FormatError("backend config " + path.string() +
                          " is missing the plc-backends/1 format tag");
    }
    std::vector<BackendConfig> configs;
    for (const auto& entry : parsed.at("backends")) {
        BackendConfig config;
        config.kind = kind_from_name(entry.value("kind","scripted"));
        config.name = entry.value("name", "");
        config.endpoint = entry.value("endpoint", "");
        config.model = entry.value("model", "");
        config.temperature = entry.value("temperature", 1.0);
        config.timeout_seconds = entry.value("timeout_seconds", 30.0);
        config.max_retries = entry.value("max_retries", 2);
        if (config.kind == BackendKind::Scripted) {
            ScriptedPolicy policy;
            for (const auto& scheme_name : entry.value("can_decode", std::vector<std::string>{})) {
                auto scheme = codecs::scheme_from_name(scheme_name);
                if (!scheme) {
                    throw ConfigError("backend '" + config.name + "': unknown scheme '" +
                                      scheme_name + "' in can_decode");
                }
                policy.can_decode.insert(*scheme);
            }
            auto terms = entry.value("refusal_terms", std::vector<std::string>{});
            policy.refusal_lexicon = codecs::TabooLexicon::from_terms(terms);
            policy.refusal_phrase = entry.value("refusal_phrase", policy.refusal_phrase);
            policy.comprehension_label =
                entry.value("comprehension", policy.comprehension_label);
            config.policy = std::move(policy);
        }
        validate(config);
        configs.push_back(std::move(config));
    }
    if (configs.empty()) {
        throw ConfigError("backend config " + path.string() + " lists no backends");
    }
    return configs;
}

std::vector<BackendConfig> resolve_backends(const std::string& preset_or_path) {
    if (preset_or_path == "scripted-all") return builtin_presets();
    return load_backends(preset_or_path);
}

}  // namespace plc::backends
