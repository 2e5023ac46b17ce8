#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "plc/backends.hpp"

using namespace plc;
using codecs::ObfuscationScheme;
using json = nlohmann::json;

namespace {

backends::ScriptedPolicy policy_with(std::set<ObfuscationScheme> can_decode,
                                     std::vector<std::string> refusal_terms) {
    backends::ScriptedPolicy policy;
    policy.can_decode = std::move(can_decode);
    policy.refusal_lexicon = codecs::TabooLexicon::from_terms(refusal_terms);
    return policy;
}

struct StubServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit StubServer(httplib::Server::Handler handler) {
        server.Post("/v1/chat/completions", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

backends::BackendConfig http_config(const std::string& endpoint, int max_retries = 0) {
    backends::BackendConfig config;
    config.kind = backends::BackendKind::HttpChat;
    config.name = "stub";
    config.endpoint = endpoint;
    config.model = "test-model";
    config.temperature = 1.0;
    config.timeout_seconds = 2.0;
    config.max_retries = max_retries;
    return config;
}

}  // namespace

TEST_CASE("scripted step 1: plaintext taboo tokens trigger the refusal") {
    auto policy = policy_with({ObfuscationScheme::Base64Std}, {"gun"});
    CHECK(backends::scripted_respond(policy, "where to buy a gun today") ==
          policy.refusal_phrase);
    // Whole-token matching: "shotgun" does not trip it.
    CHECK(backends::scripted_respond(policy, "shotgun pellets") !=
          policy.refusal_phrase);
}

TEST_CASE("scripted step 2: decodable markers are repeated, deobfuscated") {
    auto policy = policy_with({ObfuscationScheme::Base64Std}, {"gun"});
    std::string prompt =
        "intro paragraph\n\npayload: PLC-SENTINEL-r1 [[b64:Z3Vu]] cache\n\nQuestion: hi";
    std::string out = backends::scripted_respond(policy, prompt);
    CHECK(out == "payload: PLC-SENTINEL-r1 gun cache");
}

TEST_CASE("scripted step 2 skips schemes the model cannot read") {
    std::string prompt = "p1\n\nnote [[morse:--. ..- -.]] end\n\np3";
    auto morse_reader = policy_with({ObfuscationScheme::MorseCode}, {"bomb"});
    CHECK(backends::scripted_respond(morse_reader, prompt) == "note GUN end");

    auto b64_reader = policy_with({ObfuscationScheme::Base64Std}, {"bomb"});
    CHECK(backends::scripted_respond(b64_reader, prompt) ==
          std::string(backends::kGenericSafeAnswer));
}

TEST_CASE("scripted step 2 leaves unreadable markers verbatim in a mixed paragraph") {
    auto policy = policy_with({ObfuscationScheme::Base64Std}, {"bomb"});
    std::string prompt = "both [[b64:Z3Vu]] and [[morse:-.- .. .-.. .-..]] here";
    CHECK(backends::scripted_respond(policy, prompt) ==
          "both gun and [[morse:-.- .. .-.. .-..]] here");
}

TEST_CASE("refusal dominates even when a decodable marker is present") {
    auto policy = policy_with({ObfuscationScheme::Base64Std}, {"kill"});
    std::string prompt = "how to kill time\n\n[[b64:Z3Vu]]";
    CHECK(backends::scripted_respond(policy, prompt) == policy.refusal_phrase);
}

TEST_CASE("scripted step 3: generic safe answer otherwise") {
    auto policy = policy_with({}, {"gun"});
    CHECK(backends::scripted_respond(policy, "tell me about knitting") ==
          std::string(backends::kGenericSafeAnswer));
    // Pure function: same inputs, same output.
    CHECK(backends::scripted_respond(policy, "tell me about knitting") ==
          backends::scripted_respond(policy, "tell me about knitting"));
}

TEST_CASE("scripted backends survive prompts with truncated markers") {
    auto policy = policy_with({ObfuscationScheme::Base64Std}, {"gun"});
    CHECK_NOTHROW(backends::scripted_respond(policy, "chopped [[b64:Z3V"));
}

TEST_CASE("config validation") {
    backends::BackendConfig config;
    config.kind = backends::BackendKind::HttpChat;
    config.name = "x";
    CHECK_THROWS_AS(backends::validate(config), ConfigError);  // endpoint/model missing

    config = http_config("http://localhost:1");
    config.temperature = -0.5;
    CHECK_THROWS_AS(backends::validate(config), ConfigError);

    config = http_config("localhost:1");  // no scheme
    CHECK_THROWS_AS(backends::validate(config), ConfigError);

    backends::BackendConfig scripted;
    scripted.kind = backends::BackendKind::Scripted;
    scripted.name = "s";
    CHECK_THROWS_AS(backends::validate(scripted), ConfigError);  // no policy

    scripted.policy = policy_with({}, {"gun"});
    CHECK_NOTHROW(backends::validate(scripted));
    scripted.policy->can_decode.insert(ObfuscationScheme::None);
    CHECK_THROWS_AS(backends::validate(scripted), ConfigError);
    scripted.policy->can_decode.clear();
    scripted.policy->refusal_phrase.clear();
    CHECK_THROWS_AS(backends::validate(scripted), ConfigError);
}

TEST_CASE("the six builtin presets cover the comprehension spread") {
    auto presets = backends::builtin_presets();
    REQUIRE(presets.size() == 6);
    for (const auto& preset : presets) {
        CHECK_NOTHROW(backends::validate(preset));
        CHECK(preset.kind == backends::BackendKind::Scripted);
    }
    const auto& spark = presets[2];
    CHECK(spark.name == "mock-spark");
    CHECK(spark.policy->can_decode.size() == 2);
    CHECK(spark.policy->refusal_lexicon.size() == 24);  // strict: full lexicon
    const auto& llama = presets[5];
    CHECK(llama.name == "mock-llama2");
    CHECK(llama.policy->can_decode.empty());
    CHECK(llama.policy->comprehension_label == "low");
}

TEST_CASE("the shipped backends fixture mirrors the builtin presets") {
    auto from_file = backends::load_backends(PLC_FIXTURES_DIR "/backends.json");
    auto builtin = backends::builtin_presets();
    REQUIRE(from_file.size() == builtin.size());
    for (std::size_t i = 0; i < builtin.size(); ++i) {
        CHECK(from_file[i].name == builtin[i].name);
        CHECK(from_file[i].kind == builtin[i].kind);
        CHECK(from_file[i].policy->can_decode == builtin[i].policy->can_decode);
        CHECK(from_file[i].policy->refusal_lexicon.terms() ==
              builtin[i].policy->refusal_lexicon.terms());
        CHECK(from_file[i].policy->refusal_phrase == builtin[i].policy->refusal_phrase);
        CHECK(from_file[i].policy->comprehension_label ==
              builtin[i].policy->comprehension_label);
    }
    CHECK(backends::resolve_backends("scripted-all").size() == 6);
}

TEST_CASE("http chat round-trips through a local stub and conforms to the wire shape") {
    std::atomic<int> calls{0};
    json seen_body;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        seen_body = json::parse(req.body);
        res.set_content(
            json{{"choices",
                  json::array({json{{"message", json{{"role", "assistant"},
                                                     {"content", "stub says hi"}}}}})}}
                .dump(),
            "application/json");
    });

    auto backend = backends::make_backend(http_config(stub.endpoint()));
    std::string reply = backend->chat("system text", "user text");
    CHECK(reply == "stub says hi");
    CHECK(calls == 1);

    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["temperature"] == doctest::Approx(1.0));
    REQUIRE(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][0]["content"] == "system text");
    CHECK(seen_body["messages"][1]["role"] == "user");
    CHECK(seen_body["messages"][1]["content"] == "user text");
}

TEST_CASE("http chat sends the bearer token from the environment") {
    std::string seen_auth;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        res.set_content(
            json{{"choices",
                  json::array({json{{"message", json{{"content", "ok"}}}}})}}
                .dump(),
            "application/json");
    });
    setenv(backends::kApiKeyEnvVar, "sekrit", 1);
    auto backend = backends::make_backend(http_config(stub.endpoint()));
    CHECK(backend->chat("s", "u") == "ok");
    unsetenv(backends::kApiKeyEnvVar);
    CHECK(seen_auth == "Bearer sekrit");
}

TEST_CASE("http errors are categorized and retried") {
    SUBCASE("non-2xx ends as a protocol error after retries") {
        std::atomic<int> calls{0};
        StubServer stub([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 500;
        });
        auto backend = backends::make_backend(http_config(stub.endpoint(), 1));
        try {
            backend->chat("s", "u");
            FAIL("expected BackendError");
        } catch (const backends::BackendError& e) {
            CHECK(e.category() == backends::ErrorCategory::Protocol);
        }
        CHECK(calls == 2);  // initial try + one retry
    }

    SUBCASE("malformed response JSON is a protocol error without retries") {
        std::atomic<int> calls{0};
        StubServer stub([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.set_content("not json", "text/plain");
        });
        auto backend = backends::make_backend(http_config(stub.endpoint(), 3));
        try {
            backend->chat("s", "u");
            FAIL("expected BackendError");
        } catch (const backends::BackendError& e) {
            CHECK(e.category() == backends::ErrorCategory::Protocol);
        }
        CHECK(calls == 1);
    }

    SUBCASE("a refused connection is a transport error") {
        auto backend = backends::make_backend(http_config("http://127.0.0.1:9", 1));
        try {
            backend->chat("s", "u");
            FAIL("expected BackendError");
        } catch (const backends::BackendError& e) {
            CHECK(e.category() == backends::ErrorCategory::Transport);
        }
    }
}

TEST_CASE("error category names") {
    CHECK(backends::error_category_name(backends::ErrorCategory::Transport) == "transport");
    CHECK(backends::error_category_name(backends::ErrorCategory::Protocol) == "protocol");
    CHECK(backends::error_category_name(backends::ErrorCategory::Timeout) == "timeout");
}
