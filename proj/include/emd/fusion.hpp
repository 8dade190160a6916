#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/ranked_list.hpp"

namespace emd {

struct FusionConfig {
    double rrf_k = 60.0;
    /// Entries consumed from each input list.
    std::size_t depth = 1000;

    void validate() const;
};

/// score(d) = Σ 1 / (rrf_k + rank_d) over the lists containing d (1-based
/// ranks, first `depth` entries of each list). Sorted by score, then id.
/// Throws emd::error on an empty input or lists for different queries.
RankedList rrf_fuse(std::span<RankedList const> lists, FusionConfig const& cfg = {});

enum class QueryMode {
    /// Tokens of the "query" field.
    query,
    /// Tokens of "query" + " " + "question".
    concat,
    /// Stopword-filtered tokens of the "query" field.
    keyword,
};

std::string_view to_string(QueryMode mode);
QueryMode parse_query_mode(std::string_view name);

struct FusionQuery {
    std::vector<std::string> terms;
    /// concat was requested but the topic has no question.
    bool fell_back = false;
};

FusionQuery build_fusion_query(Topic const& topic, QueryMode mode);

}  // namespace emd
