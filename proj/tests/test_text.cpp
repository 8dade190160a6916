#include <doctest.h>

#include <random>

#include "emd/text.hpp"

using emd::split_sentences;
using emd::tokenize;
using Strings = std::vector<std::string>;

TEST_CASE("tokenize lowercases and splits on non-alphanumerics")
{
    CHECK(tokenize("Hello, World") == Strings{"hello", "world"});
    CHECK(tokenize("COVID-19") == Strings{"covid", "19"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  --  ").empty());
    CHECK(tokenize("caf\xc3\xa9 ok") == Strings{"caf", "ok"});
}

TEST_CASE("split_sentences on terminal punctuation")
{
    CHECK(split_sentences("A. B? C!") == Strings{"A.", "B?", "C!"});
    CHECK(split_sentences("").empty());
    CHECK(split_sentences("No terminal punctuation") == Strings{"No terminal punctuation"});
    CHECK(split_sentences("Version 3.5 is out. Yes") == Strings{"Version 3.5 is out.", "Yes"});
    CHECK(split_sentences("Really?! Yes.") == Strings{"Really?!", "Yes."});
    CHECK(split_sentences("  One.\n\nTwo.  ") == Strings{"One.", "Two."});
}

TEST_CASE("split_sentences preserves every non-whitespace character in order")
{
    std::mt19937 rng(7);
    std::string const alphabet = "ab .!?\n\t";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        std::uniform_int_distribution<std::size_t> len(0, 40);
        std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
        for (auto n = len(rng); n > 0; --n) {
            text.push_back(alphabet[pick(rng)]);
        }
        std::string expected;
        for (char c : text) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                expected.push_back(c);
            }
        }
        std::string got;
        for (auto const& s : split_sentences(text)) {
            CHECK_FALSE(s.empty());
            for (char c : s) {
                if (!std::isspace(static_cast<unsigned char>(c))) {
                    got.push_back(c);
                }
            }
        }
        CHECK(got == expected);
    }
}

TEST_CASE("stopword list has thirty entries")
{
    CHECK(emd::stopwords().size() == 30);
    CHECK(emd::is_stopword("the"));
    CHECK_FALSE(emd::is_stopword("coronavirus"));
}
