#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "plc/codecs.hpp"
#include "plc/error.hpp"

namespace plc::backends {

enum class BackendKind { Scripted, HttpChat };

enum class ErrorCategory { Transport, Protocol, Timeout };

std::string_view error_category_name(ErrorCategory category);

class BackendError : public Error {
public:
    BackendError(ErrorCategory category, const std::string& what_arg)
        : Error("backend error (" + std::string(error_category_name(category)) + "): " +
                what_arg),
          category_(category) {}
    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

/// Deterministic stand-in for a chat model. The knobs model two properties
/// the campaign cares about: which encodings the model can read
/// (comprehension) and which plaintext tokens make it refuse (censorship).
struct ScriptedPolicy {
    std::set<codecs::ObfuscationScheme> can_decode;
    codecs::TabooLexicon refusal_lexicon;
    std::string refusal_phrase = "I cannot assist with that request.";
    std::string comprehension_label = "medium";
};

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string name;
    std::string endpoint;  // HttpChat: base URL, e.g. http://host:8080
    std::string model;     // HttpChat
    double temperature = 1.0;
    double timeout_seconds = 30.0;
    int max_retries = 2;
    std::optional<ScriptedPolicy> policy;  // Scripted
};

void validate(const BackendConfig& config);  // ConfigError on bad fields

/// Fixed three-step policy: (1) any refusal-lexicon token in the prompt ->
/// the refusal phrase; (2) otherwise, markers the policy can decode -> the
/// deobfuscated paragraphs that contained them (the model "repeats the
/// disguised content"); (3) otherwise a generic safe answer.
std::string scripted_respond(const ScriptedPolicy& policy, std::string_view prompt);

/// Step-3 fallback of scripted_respond.
inline constexpr std::string_view kGenericSafeAnswer =
    "Here is some general guidance based on the reference material available.";

/// Environment variable holding the bearer token for HttpChat backends.
inline constexpr const char* kApiKeyEnvVar = "PLC_API_KEY";

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    const BackendConfig& config() const { return config_; }
    const std::string& name() const { return config_.name; }

    /// Sends one exchange and returns the completion text. Safe to call
    /// concurrently; each call owns its own request state. Throws
    /// BackendError.
    virtual std::string chat(std::string_view system, std::string_view user) = 0;

protected:
    explicit ChatBackend(BackendConfig config) : config_(std::move(config)) {}
    BackendConfig config_;
};

std::unique_ptr<ChatBackend> make_backend(BackendConfig config);

/// The six scripted mock presets used by campaigns, graded from
/// dual-decoder commercial-style models down to a no-decoder one.
std::vector<BackendConfig> builtin_presets();

/// JSON backend list (see fixtures/backends.json for the shape).
std::vector<BackendConfig> load_backends(const std::filesystem::path& path);

/// "scripted-all" resolves to builtin_presets(); anything else is read as a
/// config file path.
std::vector<BackendConfig> resolve_backends(const std::string& preset_or_path);

}  // namespace plc::backends
