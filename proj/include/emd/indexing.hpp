#pragma once

#include "emd/corpus.hpp"
#include "emd/expansion.hpp"
#include "emd/index.hpp"

namespace emd {

struct IndexBuildOptions {
    /// Index "docid#n" passages instead of whole documents.
    bool per_passage = false;
    SegmentationConfig segmentation;
    /// Stored predictions keyed by unit id. When set, every unit must have
    /// an entry and its queries are appended to the indexed text.
    ExpansionCache const* expansions = nullptr;
};

/// Builds an index from a document stream. Rerankers later read the
/// unexpanded text of each unit.
InvertedIndex build_index(DocumentSource const& source, IndexBuildOptions const& opts);

/// Runs expansion and indexes the augmented units in one pass.
InvertedIndex build_expanded_index(DocumentSource const& source, ExpansionGranularity granularity,
                                   SegmentationConfig const& seg, ExpansionConfig const& cfg,
                                   QueryGenerator& generator, ExpansionCache* cache = nullptr);

}  // namespace emd
