#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>

#include "emd/corpus.hpp"
#include "emd/ranked_list.hpp"
#include "emd/scorer.hpp"

namespace emd {

struct MonoPrompt {
    std::string query;
    std::string document;
    std::string rendered;
};

/// "Query: <q> Document: <d> Relevant:". Throws emd::error on empty input.
MonoPrompt render_mono_prompt(std::string const& query, std::string const& document);

struct RerankOptions {
    std::size_t batch_size = 32;
    /// Concurrent scorer requests per query.
    std::size_t max_in_flight = 1;
    RetryPolicy retry;
};

/// Raised when a scorer keeps failing after retries. `scored` counts the
/// inputs that had been scored before the failure.
struct rerank_error : error {
    rerank_error(std::string const& what, std::size_t scored, std::size_t total)
        : error(what + " (" + std::to_string(scored) + "/" + std::to_string(total) + " scored)"),
          scored(scored), total(total)
    {}
    std::size_t scored;
    std::size_t total;
};

/// Maps a candidate id to the text the reranker sees (never an expanded text).
using TextLookup = std::function<std::string const&(std::string const&)>;

/// Scores every candidate once and keeps the top k_out by probability.
/// Ties keep their order in `candidates`.
RankedList mono_rerank(std::string const& query, RankedList const& candidates, TextLookup const& texts,
                       std::size_t k_out, Scorer& scorer, RerankOptions const& opts = {});

struct MaxPResult {
    RankedList ranking;
    /// docid -> text of its best-scoring passage.
    std::unordered_map<std::string, std::string> representative;
    /// docid -> ordinal of that passage.
    std::unordered_map<std::string, std::size_t> representative_ordinal;
    std::size_t passages_scored = 0;
};

using DocumentLookup = std::function<Document const&(std::string const&)>;

/// Segments each candidate document, scores every passage and ranks
/// documents by their best passage. The first passage wins ties within a
/// document.
MaxPResult mono_rerank_maxp(std::string const& query, RankedList const& candidates, DocumentLookup const& docs,
                            SegmentationConfig const& seg, std::size_t k_out, Scorer& scorer,
                            RerankOptions const& opts = {});

}  // namespace emd
