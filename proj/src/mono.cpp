#include "emd/mono.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <unordered_set>

#include "emd/detail/parallel.hpp"
#include "emd/error.hpp"

namespace emd {

namespace {

/// Scores texts in batches; results are placed by position.
std::vector<double> score_all(std::string const& query, std::vector<std::string> const& texts, Scorer& scorer,
                              RerankOptions const& opts)
{
    std::vector<double> probs(texts.size());
    std::size_t const batch = std::max<std::size_t>(opts.batch_size, 1);
    std::size_t const batches = (texts.size() + batch - 1) / batch;
    std::atomic<std::size_t> scored{0};
    try {
        detail::parallel_for(batches, opts.max_in_flight, [&](std::size_t b) {
            auto first = b * batch;
            auto last = std::min(first + batch, texts.size());
            std::span<std::string const> slice(texts.data() + first, last - first);
            auto result = with_retry(opts.retry, [&] { return scorer.score_mono(query, slice); });
            check_probabilities(result, slice.size());
            std::copy(result.begin(), result.end(), probs.begin() + static_cast<std::ptrdiff_t>(first));
            scored.fetch_add(slice.size());
        });
    } catch (transport_error const& e) {
        throw rerank_error(std::string("mono scorer failed: ") + e.what(), scored.load(), texts.size());
    } catch (protocol_error const& e) {
        throw rerank_error(std::string("mono scorer failed: ") + e.what(), scored.load(), texts.size());
    }
    return probs;
}

RankedList rank_by_probability(RankedList const& candidates, std::vector<double> const& probs, std::size_t k_out)
{
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    order.resize(std::min(k_out, order.size()));
    RankedList out{candidates.qid, {}, "mono"};
    out.entries.reserve(order.size());
    for (auto i : order) {
        out.entries.push_back({candidates.entries[i].id, probs[i]});
    }
    return out;
}

}  // namespace

MonoPrompt render_mono_prompt(std::string const& query, std::string const& document)
{
    if (query.empty() || document.empty()) {
        throw error("mono prompt needs a non-empty query and document");
    }
    return {query, document, "Query: " + query + " Document: " + document + " Relevant:"};
}

RankedList mono_rerank(std::string const& query, RankedList const& candidates, TextLookup const& texts,
                       std::size_t k_out, Scorer& scorer, RerankOptions const& opts)
{
    std::vector<std::string> inputs;
    inputs.reserve(candidates.size());
    for (auto const& entry : candidates.entries) {
        inputs.push_back(texts(entry.id));
    }
    auto probs = score_all(query, inputs, scorer, opts);
    return rank_by_probability(candidates, probs, k_out);
}

MaxPResult mono_rerank_maxp(std::string const& query, RankedList const& candidates, DocumentLookup const& docs,
                            SegmentationConfig const& seg, std::size_t k_out, Scorer& scorer,
                            RerankOptions const& opts)
{
    std::vector<std::string> inputs;
    std::vector<std::size_t> first_passage;
    first_passage.reserve(candidates.size() + 1);
    for (auto const& entry : candidates.entries) {
        first_passage.push_back(inputs.size());
        for (auto& passage : segment(docs(entry.id), seg)) {
            inputs.push_back(std::move(passage.text));
        }
    }
    first_passage.push_back(inputs.size());

    auto probs = score_all(query, inputs, scorer, opts);

    MaxPResult result;
    result.passages_scored = inputs.size();
    std::vector<double> doc_probs(candidates.size());
    for (std::size_t d = 0; d < candidates.size(); ++d) {
        auto begin = probs.begin() + static_cast<std::ptrdiff_t>(first_passage[d]);
        auto end = probs.begin() + static_cast<std::ptrdiff_t>(first_passage[d + 1]);
        auto best = std::max_element(begin, end);
        auto ordinal = static_cast<std::size_t>(best - begin);
        doc_probs[d] = *best;
        auto const& docid = candidates.entries[d].id;
        result.representative[docid] = inputs[first_passage[d] + ordinal];
        result.representative_ordinal[docid] = ordinal;
    }
    result.ranking = rank_by_probability(candidates, doc_probs, k_out);
    result.ranking.stage = "mono-maxp";
    std::unordered_set<std::string> kept;
    for (auto const& entry : result.ranking.entries) {
        kept.insert(entry.id);
    }
    std::erase_if(result.representative, [&](auto const& item) { return !kept.contains(item.first); });
    std::erase_if(result.representative_ordinal, [&](auto const& item) { return !kept.contains(item.first); });
    return result;
}

}  // namespace emd
