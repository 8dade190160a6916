#include "emd/duo.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "emd/detail/parallel.hpp"
#include "emd/error.hpp"

namespace emd {

namespace {

double clamped_log(double p) { return std::log(std::clamp(p, kLogClamp, 1.0 - kLogClamp)); }

}  // namespace

DuoPrompt render_duo_prompt(std::string const& query, std::string const& doc0, std::string const& doc1)
{
    if (query.empty() || doc0.empty() || doc1.empty()) {
        throw error("duo prompt needs a non-empty query and two non-empty documents");
    }
    return {query, doc0, doc1, "Query: " + query + " Document0: " + doc0 + " Document1: " + doc1 + " Relevant:"};
}

std::string_view to_string(AggregationMethod method)
{
    switch (method) {
        case AggregationMethod::sum: return "sum";
        case AggregationMethod::sum_log: return "sum-log";
        case AggregationMethod::sym_sum: return "sym-sum";
        case AggregationMethod::sym_sum_log: return "sym-sum-log";
    }
    return "?";
}

AggregationMethod parse_aggregation(std::string_view name)
{
    std::string normalized;
    for (char c : name) {
        normalized.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto method : kAllAggregationMethods) {
        if (normalized == to_string(method)) {
            return method;
        }
    }
    throw error("unknown aggregation method: " + std::string(name));
}

PairwiseMatrix::PairwiseMatrix(std::vector<std::string> ids)
    : m_ids(std::move(ids)), m_p(m_ids.size() * m_ids.size(), std::numeric_limits<double>::quiet_NaN())
{}

double PairwiseMatrix::operator()(std::size_t i, std::size_t j) const { return m_p.at(i * m_ids.size() + j); }

void PairwiseMatrix::set(std::size_t i, std::size_t j, double p)
{
    if (i == j) {
        throw error("pairwise matrix diagonal is undefined");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw error("pairwise probability outside [0, 1]");
    }
    m_p.at(i * m_ids.size() + j) = p;
}

PairwiseMatrix score_pairs(std::string const& query, std::vector<std::string> ids,
                           std::span<std::string const> texts, Scorer& scorer, RerankOptions const& opts)
{
    auto const n = texts.size();
    if (n < 2) {
        throw error("pairwise scoring needs at least two candidates");
    }
    if (ids.size() != n) {
        throw error("pairwise scoring needs one id per text");
    }
    std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
    std::vector<TextPair> pairs;
    index_pairs.reserve(n * (n - 1));
    pairs.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                index_pairs.emplace_back(i, j);
                pairs.emplace_back(texts[i], texts[j]);
            }
        }
    }

    PairwiseMatrix matrix(std::move(ids));
    std::size_t const batch = std::max<std::size_t>(opts.batch_size, 1);
    std::size_t const batches = (pairs.size() + batch - 1) / batch;
    std::atomic<std::size_t> scored{0};
    try {
        detail::parallel_for(batches, opts.max_in_flight, [&](std::size_t b) {
            auto first = b * batch;
            auto last = std::min(first + batch, pairs.size());
            std::span<TextPair const> slice(pairs.data() + first, last - first);
            auto probs = with_retry(opts.retry, [&] { return scorer.score_duo(query, slice); });
            check_probabilities(probs, slice.size());
            // Batches cover disjoint cells.
            for (std::size_t k = 0; k < probs.size(); ++k) {
                auto [i, j] = index_pairs[first + k];
                matrix.set(i, j, probs[k]);
            }
            scored.fetch_add(slice.size());
        });
    } catch (transport_error const& e) {
        throw rerank_error(std::string("duo scorer failed: ") + e.what(), scored.load(), pairs.size());
    } catch (protocol_error const& e) {
        throw rerank_error(std::string("duo scorer failed: ") + e.what(), scored.load(), pairs.size());
    }
    return matrix;
}

std::vector<double> aggregate(PairwiseMatrix const& matrix, AggregationMethod method)
{
    auto const n = matrix.size();
    if (n < 2) {
        throw error("aggregation needs at least two candidates");
    }
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            double const pij = matrix(i, j);
            double const pji = matrix(j, i);
            switch (method) {
                case AggregationMethod::sum:
                    s += pij;
                    break;
                case AggregationMethod::sum_log:
                    s += clamped_log(pij);
                    break;
                case AggregationMethod::sym_sum:
                    s += pij + (1.0 - pji);
                    break;
                case AggregationMethod::sym_sum_log:
                    s += clamped_log(pij) + clamped_log(1.0 - pji);
                    break;
            }
        }
        scores[i] = s;
    }
    return scores;
}

RankedList duo_rerank(std::string const& query, RankedList const& mono_output, std::size_t k1,
                      AggregationMethod method, Scorer& scorer, TextLookup const& texts, RerankOptions const& opts)
{
    RankedList out = mono_output;
    out.stage = "duo";
    auto const n = std::min(k1, mono_output.size());
    if (n < 2) {
        return out;
    }

    std::vector<std::string> ids;
    std::vector<std::string> inputs;
    ids.reserve(n);
    inputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(mono_output.entries[i].id);
        inputs.push_back(texts(ids.back()));
    }
    auto matrix = score_pairs(query, ids, inputs, scorer, opts);
    auto scores = aggregate(matrix, method);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double offset = 0.0;
    if (n < mono_output.size()) {
        double const tail_top = mono_output.entries[n].score;
        double const head_min = scores[order.back()];
        if (head_min <= tail_top) {
            offset = tail_top - head_min + 1.0;
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        out.entries[r] = {ids[order[r]], scores[order[r]] + offset};
    }
    return out;
}

}  // namespace emd
