#include <doctest.h>

#include "plc/text.hpp"

using namespace plc;

TEST_CASE("tokenize splits on non-alphanumerics and lowercases") {
    auto tokens = text::tokenize("How to, KILL-time? 42x");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[0].word == "how");
    CHECK(tokens[1].word == "to");
    CHECK(tokens[2].word == "kill");
    CHECK(tokens[2].offset == 8);
    CHECK(tokens[2].length == 4);
    CHECK(tokens[3].word == "time");
    CHECK(tokens[4].word == "42x");
}

TEST_CASE("tokenize of punctuation-only text is empty") {
    CHECK(text::tokenize("?!... --- ...").empty());
    CHECK(text::tokenize("").empty());
}

TEST_CASE("contains_token matches whole tokens only") {
    CHECK(text::contains_token("how to kill time", "kill"));
    CHECK_FALSE(text::contains_token("sharpen your skill set", "kill"));
    CHECK_FALSE(text::contains_token("shotgun shells", "gun"));
}

TEST_CASE("split_paragraphs separates on blank lines with offsets") {
    auto paras = text::split_paragraphs("first line\nstill first\n\nsecond\n\n\nthird");
    REQUIRE(paras.size() == 3);
    CHECK(paras[0].body == "first line\nstill first");
    CHECK(paras[0].offset == 0);
    CHECK(paras[1].body == "second");
    CHECK(paras[2].body == "third");
    CHECK(text::split_paragraphs("").empty());
    CHECK(text::split_paragraphs("\n\n\n").empty());
}

TEST_CASE("fnv1a64 matches the reference constants") {
    // Offset basis and a published test vector for the 64-bit variant.
    CHECK(text::fnv1a64("") == 14695981039346656037ULL);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(text::fnv1a64_hex("a") == "af63dc4c8601ec8c");
}
