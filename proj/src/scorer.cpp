#include "emd/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "emd/http_client.hpp"
#include "emd/text.hpp"

namespace emd {

double stub_mono_score(std::string const& query, std::string const& text)
{
    auto query_terms_list = tokenize(query);
    std::set<std::string> query_terms(query_terms_list.begin(), query_terms_list.end());
    if (query_terms.empty()) {
        return 0.0;
    }
    auto text_terms_list = tokenize(text);
    std::set<std::string> text_terms(text_terms_list.begin(), text_terms_list.end());
    std::size_t overlap = 0;
    for (auto const& term : query_terms) {
        overlap += text_terms.count(term);
    }
    return static_cast<double>(overlap) / static_cast<double>(query_terms.size());
}

double stub_duo_score(std::string const& query, std::string const& doc0, std::string const& doc1)
{
    double diff = stub_mono_score(query, doc0) - stub_mono_score(query, doc1);
    return 1.0 / (1.0 + std::exp(-4.0 * diff));
}

std::vector<std::string> stub_top_terms(std::string const& text, std::size_t k)
{
    std::map<std::string, std::size_t> counts;
    for (auto& term : tokenize(text)) {
        ++counts[std::move(term)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](auto const& a, auto const& b) { return a.second > b.second; });
    std::vector<std::string> top;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        top.push_back(ranked[i].first);
    }
    return top;
}

std::string truncate_whitespace_tokens(std::string const& text, std::size_t max_tokens)
{
    std::istringstream in(text);
    std::string token;
    std::string out;
    std::size_t count = 0;
    while (count < max_tokens && in >> token) {
        if (count > 0) {
            out += ' ';
        }
        out += token;
        ++count;
    }
    if (in >> token) {
        return out;
    }
    return text;
}

std::vector<double> StubScorer::score_mono(std::string const& query, std::span<std::string const> texts)
{
    std::vector<double> probs;
    probs.reserve(texts.size());
    for (auto const& text : texts) {
        probs.push_back(stub_mono_score(query, truncate_whitespace_tokens(text, kMonoTokenBudget)));
    }
    return probs;
}

std::vector<double> StubScorer::score_duo(std::string const& query, std::span<TextPair const> pairs)
{
    std::vector<double> probs;
    probs.reserve(pairs.size());
    for (auto const& [first, second] : pairs) {
        probs.push_back(stub_duo_score(query, truncate_whitespace_tokens(first, kDuoTokenBudget),
                                       truncate_whitespace_tokens(second, kDuoTokenBudget)));
    }
    return probs;
}

std::vector<std::vector<std::string>> StubGenerator::generate(std::span<std::string const> texts,
                                                              std::size_t num_queries)
{
    std::vector<std::vector<std::string>> out;
    out.reserve(texts.size());
    for (auto const& text : texts) {
        auto terms = stub_top_terms(text);
        out.emplace_back(num_queries, join(terms));
    }
    return out;
}

std::vector<double> CountingScorer::score_mono(std::string const& query, std::span<std::string const> texts)
{
    m_requests.fetch_add(1);
    m_mono.fetch_add(texts.size());
    return m_inner.score_mono(query, texts);
}

std::vector<double> CountingScorer::score_duo(std::string const& query, std::span<TextPair const> pairs)
{
    m_requests.fetch_add(1);
    m_duo.fetch_add(pairs.size());
    return m_inner.score_duo(query, pairs);
}

void CountingScorer::reset()
{
    m_mono.store(0);
    m_duo.store(0);
    m_requests.store(0);
}

void check_probabilities(std::span<double const> probs, std::size_t expected)
{
    if (probs.size() != expected) {
        throw protocol_error("scorer returned " + std::to_string(probs.size()) + " probabilities for " +
                             std::to_string(expected) + " inputs");
    }
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw protocol_error("scorer returned a probability outside [0, 1]");
        }
    }
}

std::unique_ptr<Scorer> make_scorer(std::string const& endpoint)
{
    if (endpoint == "stub") {
        return std::make_unique<StubScorer>();
    }
    return std::make_unique<HttpScorer>(endpoint);
}

std::unique_ptr<QueryGenerator> make_generator(std::string const& endpoint)
{
    if (endpoint == "stub") {
        return std::make_unique<StubGenerator>();
    }
    return std::make_unique<HttpGenerator>(endpoint);
}

}  // namespace emd
