#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emd/mono.hpp"
#include "emd/ranked_list.hpp"
#include "emd/scorer.hpp"

namespace emd {

struct DuoPrompt {
    std::string query;
    std::string doc0;
    std::string doc1;
    std::string rendered;
};

/// "Query: <q> Document0: <d0> Document1: <d1> Relevant:". Throws on any empty field.
DuoPrompt render_duo_prompt(std::string const& query, std::string const& doc0, std::string const& doc1);

enum class AggregationMethod { sum, sum_log, sym_sum, sym_sum_log };

inline constexpr AggregationMethod kAllAggregationMethods[] = {
    AggregationMethod::sum, AggregationMethod::sum_log, AggregationMethod::sym_sum, AggregationMethod::sym_sum_log};

std::string_view to_string(AggregationMethod method);
/// Accepts "sum", "sum-log", "sym-sum", "sym-sum-log" (case-insensitive, '_' for '-').
AggregationMethod parse_aggregation(std::string_view name);

/// Probabilities are clamped to [kLogClamp, 1 - kLogClamp] before taking logs.
inline constexpr double kLogClamp = 1e-6;

/// p(i, j) = P(candidate i more relevant than candidate j). The diagonal is unused.
class PairwiseMatrix {
  public:
    explicit PairwiseMatrix(std::vector<std::string> ids);

    [[nodiscard]] std::size_t size() const { return m_ids.size(); }
    [[nodiscard]] std::vector<std::string> const& ids() const { return m_ids; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const;
    /// Throws emd::error when i == j or p is outside [0, 1].
    void set(std::size_t i, std::size_t j, double p);

  private:
    std::vector<std::string> m_ids;
    std::vector<double> m_p;
};

/// Scores all n·(n−1) ordered pairs of the given texts, row-major (i, j≠i).
PairwiseMatrix score_pairs(std::string const& query, std::vector<std::string> ids,
                           std::span<std::string const> texts, Scorer& scorer, RerankOptions const& opts = {});

/// Per-candidate scores, with J_i = every other candidate:
///   sum          Σ p(i,j)
///   sum-log      Σ log p(i,j)
///   sym-sum      Σ p(i,j) + (1 − p(j,i))
///   sym-sum-log  Σ log p(i,j) + log(1 − p(j,i))
std::vector<double> aggregate(PairwiseMatrix const& matrix, AggregationMethod method);

/// Reorders the first min(k1, |mono_output|) entries by aggregated pairwise
/// score (ties keep mono order) and leaves the remaining entries exactly as
/// they were. Head scores are shifted by a constant when needed so the
/// list stays non-increasing.
RankedList duo_rerank(std::string const& query, RankedList const& mono_output, std::size_t k1,
                      AggregationMethod method, Scorer& scorer, TextLookup const& texts,
                      RerankOptions const& opts = {});

}  // namespace emd
