#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "emd/error.hpp"

namespace emd {

using TextPair = std::pair<std::string, std::string>;

/// Relevance scorer behind the mono/duo rerankers. Implementations must be
/// safe to call from several threads at once.
class Scorer {
  public:
    virtual ~Scorer() = default;

    /// P(relevant | text, query) for each text, aligned with the input.
    virtual std::vector<double> score_mono(std::string const& query, std::span<std::string const> texts) = 0;

    /// P(first more relevant than second | query) for each ordered pair.
    virtual std::vector<double> score_duo(std::string const& query, std::span<TextPair const> pairs) = 0;
};

/// Predicts queries for a text (document expansion). Thread-safe.
class QueryGenerator {
  public:
    virtual ~QueryGenerator() = default;

    /// Exactly num_queries predictions per input text.
    virtual std::vector<std::vector<std::string>> generate(std::span<std::string const> texts,
                                                           std::size_t num_queries) = 0;
};

// Deterministic lexical stand-ins for the neural models.

/// |query terms ∩ text terms| / |query terms| over distinct tokens; 0 for an empty query.
double stub_mono_score(std::string const& query, std::string const& text);

/// sigmoid(4 * (mono(query, doc0) - mono(query, doc1))).
double stub_duo_score(std::string const& query, std::string const& doc0, std::string const& doc1);

/// Up to four most frequent terms of the text, ties broken lexicographically.
std::vector<std::string> stub_top_terms(std::string const& text, std::size_t k = 4);

/// Keeps the first max_tokens whitespace-separated tokens.
std::string truncate_whitespace_tokens(std::string const& text, std::size_t max_tokens);

inline constexpr std::size_t kMonoTokenBudget = 512;
inline constexpr std::size_t kDuoTokenBudget = 1024;

class StubScorer final : public Scorer {
  public:
    std::vector<double> score_mono(std::string const& query, std::span<std::string const> texts) override;
    std::vector<double> score_duo(std::string const& query, std::span<TextPair const> pairs) override;
};

/// Each predicted query is the text's top terms joined by spaces.
class StubGenerator final : public QueryGenerator {
  public:
    std::vector<std::vector<std::string>> generate(std::span<std::string const> texts,
                                                   std::size_t num_queries) override;
};

/// Counts every text and pair passed to the wrapped scorer.
class CountingScorer final : public Scorer {
  public:
    explicit CountingScorer(Scorer& inner) : m_inner(inner) {}

    std::vector<double> score_mono(std::string const& query, std::span<std::string const> texts) override;
    std::vector<double> score_duo(std::string const& query, std::span<TextPair const> pairs) override;

    [[nodiscard]] std::size_t mono_calls() const { return m_mono.load(); }
    [[nodiscard]] std::size_t duo_calls() const { return m_duo.load(); }
    [[nodiscard]] std::size_t requests() const { return m_requests.load(); }
    void reset();

  private:
    Scorer& m_inner;
    std::atomic<std::size_t> m_mono{0};
    std::atomic<std::size_t> m_duo{0};
    std::atomic<std::size_t> m_requests{0};
};

struct RetryPolicy {
    std::size_t max_retries = 2;
    std::chrono::milliseconds backoff{20};
};

/// Calls fn, retrying on transport_error up to policy.max_retries times.
template <typename Fn>
auto with_retry(RetryPolicy const& policy, Fn&& fn)
{
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (transport_error const&) {
            if (attempt >= policy.max_retries) {
                throw;
            }
            std::this_thread::sleep_for(policy.backoff * static_cast<int>(attempt + 1));
        }
    }
}

/// Throws protocol_error unless probs has `expected` entries, all in [0, 1].
void check_probabilities(std::span<double const> probs, std::size_t expected);

/// "stub" for the in-process stub, or an http://host:port endpoint.
std::unique_ptr<Scorer> make_scorer(std::string const& endpoint);
std::unique_ptr<QueryGenerator> make_generator(std::string const& endpoint);

}  // namespace emd
