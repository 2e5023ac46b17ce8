#include <doctest.h>

#include <random>

#include "plc/censor.hpp"

using namespace plc;

namespace {

codecs::TabooLexicon lex(std::initializer_list<std::string> terms) {
    return codecs::TabooLexicon::from_terms(std::vector<std::string>(terms));
}

}  // namespace

TEST_CASE("plaintext taboo tokens are rejected with term and offset") {
    auto doc = docio::make_document("d", "how to kill time", docio::DocumentFormat::PlainText);
    auto verdict = censor::shallow_scan(doc, lex({"kill"}));
    REQUIRE_FALSE(verdict.passed());
    REQUIRE(verdict.reasons.size() == 1);
    CHECK(verdict.reasons[0].term == "kill");
    CHECK(verdict.reasons[0].offset == 7);
}

TEST_CASE("the same body inside a PDF passes unseen") {
    auto doc = docio::make_document("d", "how to kill time", docio::DocumentFormat::PortableDoc);
    CHECK(censor::shallow_scan(doc, lex({"kill"})).passed());
}

TEST_CASE("clean plaintext passes") {
    auto doc = docio::make_document("d", "gardening tips", docio::DocumentFormat::PlainText);
    CHECK(censor::shallow_scan(doc, lex({"kill"})).passed());
}

TEST_CASE("every hit is listed, not just the first") {
    auto doc = docio::make_document(
        "d", "kill the lights, stow the gun, then kill the engine",
        docio::DocumentFormat::PlainText);
    auto verdict = censor::shallow_scan(doc, lex({"kill", "gun"}));
    REQUIRE(verdict.reasons.size() == 3);
    CHECK(verdict.reasons[0].term == "kill");
    CHECK(verdict.reasons[1].term == "gun");
    CHECK(verdict.reasons[2].term == "kill");
}

TEST_CASE("matching is token-exact, not substring") {
    auto doc = docio::make_document("d", "sharpen your skill with shotgun drills",
                                    docio::DocumentFormat::PlainText);
    CHECK(censor::shallow_scan(doc, lex({"kill", "gun"})).passed());
}

TEST_CASE("undecodable plaintext is a scan error, not a verdict") {
    docio::StoredDocument doc;
    doc.id = "bad";
    doc.format = docio::DocumentFormat::PlainText;
    doc.bytes = "broken \xFF\xFE bytes";
    CHECK_THROWS_AS(censor::shallow_scan(doc, lex({"kill"})), ScanError);
}

TEST_CASE("format differential holds for generated taboo bodies") {
    auto lexicon = lex({"gun", "kill", "poison"});
    const std::vector<std::string> terms = {"gun", "kill", "poison"};
    const std::vector<std::string> fillers = {"morning", "walk", "garden", "note", "list"};
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> len_dist(3, 20);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int i = 0; i < 100; ++i) {
        std::string body = terms[static_cast<std::size_t>(i) % terms.size()];
        int len = len_dist(rng);
        for (int j = 0; j < len; ++j) {
            int p = pick(rng);
            body += " ";
            body += (p == 0) ? terms[static_cast<std::size_t>(j) % terms.size()]
                             : fillers[static_cast<std::size_t>(p) % fillers.size()];
        }
        auto as_txt = docio::make_document("t", body, docio::DocumentFormat::PlainText);
        auto as_pdf = docio::make_document("p", body, docio::DocumentFormat::PortableDoc);
        CHECK_FALSE(censor::shallow_scan(as_txt, lexicon).passed());
        CHECK(censor::shallow_scan(as_pdf, lexicon).passed());
    }
}
