#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emd {

/// Lowercases ASCII letters and splits on every non-alphanumeric byte.
/// Bytes >= 0x80 are treated as separators; empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Splits on '.', '!' or '?' followed by whitespace or end of text. A trailing
/// fragment without terminal punctuation is its own sentence. Sentences are
/// trimmed; runs of terminal punctuation stay with their sentence ("Wait?!").
std::vector<std::string> split_sentences(std::string_view text);

/// Joins with a single space.
std::string join(std::span<std::string const> parts, std::string_view sep = " ");

/// The fixed 30-word English stopword list used for keyword queries.
std::span<std::string_view const> stopwords();
bool is_stopword(std::string_view term);

}  // namespace emd
