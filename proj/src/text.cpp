#include "emd/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace emd {

namespace {

bool is_alnum(char c)
{
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::isalnum(u) != 0;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

constexpr std::array<std::string_view, 30> kStopwords = {
    "a",    "an",   "and",   "are",  "as",   "at",   "be",   "by",  "for",  "from",
    "has",  "have", "how",   "in",   "is",   "it",   "its",  "of",  "on",   "or",
    "that", "the",  "this",  "to",   "was",  "were", "what", "which", "who", "with",
};

}  // namespace

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (is_alnum(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && is_terminal(text[end])) {
            ++end;
        }
        if (end == text.size() || is_space(text[end])) {
            auto sentence = trim(text.substr(start, end - start));
            if (!sentence.empty()) {
                sentences.emplace_back(sentence);
            }
            start = end;
        }
        i = end;
    }
    auto tail = trim(text.substr(std::min(start, text.size())));
    if (!tail.empty()) {
        sentences.emplace_back(tail);
    }
    return sentences;
}

std::string join(std::span<std::string const> parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

std::span<std::string_view const> stopwords() { return kStopwords; }

bool is_stopword(std::string_view term)
{
    return std::find(kStopwords.begin(), kStopwords.end(), term) != kStopwords.end();
}

}  // namespace emd
