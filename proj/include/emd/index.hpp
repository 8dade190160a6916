#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emd/ranked_list.hpp"

namespace emd {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    void validate() const;
};

/// Tuned values for expanded passage corpora.
inline constexpr Bm25Params kPassageBm25{0.82, 0.68};
/// Toolkit defaults, used for document corpora.
inline constexpr Bm25Params kDefaultBm25{0.9, 0.4};

struct Rm3Params {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double original_weight = 0.5;
    /// Feedback terms shorter than this are not candidates.
    std::size_t min_term_length = 2;
    /// Drop all-digit feedback terms.
    bool skip_numeric = true;

    void validate() const;
};

/// A unit to index: postings come from index_text, rerankers read original_text.
struct IndexUnit {
    std::string id;
    std::string index_text;
    std::string original_text;
};

struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;

    friend bool operator==(Posting const&, Posting const&) = default;
};

/// Term weights, in first-appearance order. Duplicate terms are allowed and
/// contribute independently.
using WeightedQuery = std::vector<std::pair<std::string, double>>;

/// Immutable inverted index. Safe for concurrent searches once built.
class InvertedIndex {
  public:
    class Builder {
      public:
        /// Throws emd::error on a duplicate id.
        void add(IndexUnit unit);
        void add(std::string id, std::string_view index_text, std::string original_text);
        /// Throws emd::error("empty corpus") when nothing was added.
        InvertedIndex finish() &&;

      private:
        std::unordered_map<std::string, std::uint32_t> m_term_ids;
        std::vector<std::string> m_terms;
        std::vector<std::vector<Posting>> m_postings;
        std::vector<std::uint32_t> m_lengths;
        std::vector<std::string> m_ids;
        std::unordered_map<std::string, std::uint32_t> m_ordinals;
        std::vector<std::string> m_texts;
    };

    static InvertedIndex build(std::span<IndexUnit const> units);

    [[nodiscard]] std::size_t doc_count() const { return m_ids.size(); }
    [[nodiscard]] double avg_doc_length() const { return m_avg_length; }
    [[nodiscard]] std::size_t term_count() const { return m_terms.size(); }
    [[nodiscard]] std::uint64_t total_length() const { return m_total_length; }

    /// Empty span for unknown terms.
    [[nodiscard]] std::span<Posting const> postings(std::string_view term) const;
    [[nodiscard]] std::size_t doc_freq(std::string_view term) const { return postings(term).size(); }
    /// Term frequency of term in the unit at `ordinal`, 0 if absent.
    [[nodiscard]] std::uint32_t term_freq(std::string_view term, std::uint32_t ordinal) const;

    [[nodiscard]] std::uint32_t doc_length(std::uint32_t ordinal) const { return m_lengths.at(ordinal); }
    [[nodiscard]] std::string const& unit_id(std::uint32_t ordinal) const { return m_ids.at(ordinal); }
    [[nodiscard]] std::optional<std::uint32_t> ordinal_of(std::string const& id) const;
    [[nodiscard]] std::string const& original_text(std::uint32_t ordinal) const { return m_texts.at(ordinal); }
    /// Throws emd::error for an unknown id.
    [[nodiscard]] std::string const& original_text(std::string const& id) const;

    /// (term id, tf) pairs of one unit, by term id.
    [[nodiscard]] std::span<Posting const> unit_terms(std::uint32_t ordinal) const { return m_forward.at(ordinal); }
    [[nodiscard]] std::string const& term(std::uint32_t term_id) const { return m_terms.at(term_id); }

    [[nodiscard]] std::span<std::string const> terms() const { return m_terms; }
    [[nodiscard]] std::span<std::uint32_t const> doc_lengths() const { return m_lengths; }

    /// Writes postings.bin, lengths.bin, ids.bin, texts.bin and manifest.json.
    /// `extra` (a JSON object) is merged into the manifest.
    void save(std::filesystem::path const& dir, std::string const& extra_manifest_json = "{}") const;
    static InvertedIndex load(std::filesystem::path const& dir);

  private:
    InvertedIndex() = default;
    void finalize();

    std::unordered_map<std::string, std::uint32_t> m_term_ids;
    std::vector<std::string> m_terms;
    std::vector<std::vector<Posting>> m_postings;
    std::vector<std::uint32_t> m_lengths;
    std::vector<std::string> m_ids;
    std::unordered_map<std::string, std::uint32_t> m_ordinals;
    std::vector<std::string> m_texts;
    // Forward index; Posting::doc holds the term id here.
    std::vector<std::vector<Posting>> m_forward;
    std::uint64_t m_total_length = 0;
    double m_avg_length = 0.0;
};

inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Per-term BM25 contribution for one unit.
double bm25_term_score(double idf, double tf, double doc_length, double avg_doc_length, Bm25Params const& params);

/// Top-k0 units by BM25. Ties broken by unit id ascending.
RankedList bm25_search(InvertedIndex const& index, std::span<std::string const> query_terms, std::size_t k0,
                       Bm25Params const& params);

/// BM25 with each term's contribution scaled by its weight. Terms with
/// weight 0 neither score nor make a unit retrievable.
RankedList bm25_weighted_search(InvertedIndex const& index, WeightedQuery const& query, std::size_t k0,
                                Bm25Params const& params);

/// Relevance-model feedback: P(t|R) = Σ_d w_d · tf(t,d)/|d| over the top
/// fb_docs units of `ranked`, where w_d is the unit's retrieval score
/// normalised over the feedback set (uniform if the scores sum to <= 0).
/// The top fb_terms terms are renormalised and interpolated with the
/// uniformly weighted original query. Output weights sum to 1, ordered by
/// weight descending then term.
WeightedQuery rm3_expand(InvertedIndex const& index, std::span<std::string const> query_terms,
                         RankedList const& ranked, Rm3Params const& params);

/// BM25, then RM3 feedback from the first pass, then a weighted second pass.
RankedList bm25_rm3_search(InvertedIndex const& index, std::span<std::string const> query_terms, std::size_t k0,
                           Bm25Params const& bm25, Rm3Params const& rm3);

/// Collapses a ranking over "docid#n" passages to one entry per docid
/// holding the best passage score. Throws emd::error on an id without '#'.
RankedList max_passage_collapse(RankedList const& passages);

}  // namespace emd
