#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emd/scorer.hpp"

// JSON bodies exchanged with a scorer/generator service (POST /score).
//
//   mono:   {"mode":"mono","query":q,"texts":[...]}          -> {"probs":[...]}
//   duo:    {"mode":"duo","query":q,"pairs":[[a,b],...]}      -> {"probs":[...]}
//   expand: {"mode":"expand","texts":[...],"num_queries":n}   -> {"queries":[[...],...]}
namespace emd::protocol {

inline constexpr std::size_t kMaxBatchItems = 4096;

std::string encode_mono_request(std::string const& query, std::span<std::string const> texts);
std::string encode_duo_request(std::string const& query, std::span<TextPair const> pairs);
std::string encode_expand_request(std::span<std::string const> texts, std::size_t num_queries);

/// Throws protocol_error on malformed JSON, misalignment or values outside [0, 1].
std::vector<double> decode_probs(std::string const& body, std::size_t expected);

/// Throws protocol_error unless there are `expected_texts` lists of exactly
/// `num_queries` strings each.
std::vector<std::vector<std::string>> decode_queries(std::string const& body, std::size_t expected_texts,
                                                     std::size_t num_queries);

}  // namespace emd::protocol
