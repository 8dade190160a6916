#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/scorer.hpp"

namespace emd {

struct ExpansionConfig {
    std::size_t queries_per_unit = 40;
    /// Texts per generator request.
    std::size_t batch_size = 8;
    std::size_t max_in_flight = 8;
    RetryPolicy retry;

    void validate() const;
};

struct ExpandedUnit {
    std::string id;
    std::string original_text;
    std::vector<std::string> predicted_queries;
    /// original_text + " " + queries joined by single spaces.
    std::string augmented_text;
};

std::string augment_text(std::string const& original, std::span<std::string const> queries);

ExpandedUnit expand_unit(std::string const& text, ExpansionConfig const& cfg, QueryGenerator& generator);

enum class ExpansionGranularity {
    /// One unit per document, expanded as a whole (passage-sized corpora).
    whole_document,
    /// Documents are segmented; predictions from every passage are appended
    /// to the full document.
    per_document,
    /// Every passage (docid#n) is its own unit.
    per_passage,
};

/// Sidecar store of predictions keyed by unit id, one JSON object per line:
/// {"id": "...", "queries": ["...", ...]}. Later lines win.
class ExpansionCache {
  public:
    ExpansionCache() = default;

    /// Reads an existing sidecar (if any) and appends new records to it.
    explicit ExpansionCache(std::filesystem::path path);

    [[nodiscard]] std::vector<std::string> const* find(std::string const& id) const;
    void record(ExpandedUnit const& unit);
    [[nodiscard]] std::size_t size() const { return m_entries.size(); }

  private:
    std::unordered_map<std::string, std::vector<std::string>> m_entries;
    std::optional<std::filesystem::path> m_path;
    std::ofstream m_out;
};

using DocumentSource = std::function<std::optional<Document>()>;
using UnitSink = std::function<void(ExpandedUnit&&)>;

/// Expands every document pulled from `source` and hands units to `sink` in
/// input order. Generator calls are batched and issued concurrently (bounded
/// by cfg.max_in_flight). Units already present in `cache` with the expected
/// query count are not regenerated; fresh units are recorded in it.
void expand_corpus(DocumentSource const& source, SegmentationConfig const& seg, ExpansionGranularity granularity,
                   ExpansionConfig const& cfg, QueryGenerator& generator, ExpansionCache* cache,
                   UnitSink const& sink);

std::vector<ExpandedUnit> expand_corpus(std::span<Document const> docs, SegmentationConfig const& seg,
                                        ExpansionGranularity granularity, ExpansionConfig const& cfg,
                                        QueryGenerator& generator, ExpansionCache* cache = nullptr);

DocumentSource source_from(std::span<Document const> docs);
DocumentSource source_from(CorpusReader& reader);

}  // namespace emd
