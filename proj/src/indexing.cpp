#include "emd/indexing.hpp"

#include "emd/error.hpp"

namespace emd {

InvertedIndex build_index(DocumentSource const& source, IndexBuildOptions const& opts)
{
    InvertedIndex::Builder builder;
    auto add = [&](std::string id, std::string text) {
        if (opts.expansions == nullptr) {
            builder.add(IndexUnit{std::move(id), text, text});
            return;
        }
        auto const* queries = opts.expansions->find(id);
        if (queries == nullptr) {
            throw error("no stored expansion for unit " + id);
        }
        auto augmented = augment_text(text, *queries);
        builder.add(std::move(id), augmented, std::move(text));
    };
    while (auto doc = source()) {
        if (opts.per_passage) {
            for (auto& passage : segment(*doc, opts.segmentation)) {
                auto id = passage.id();
                add(std::move(id), std::move(passage.text));
            }
        } else {
            add(doc->docid, doc->full_text());
        }
    }
    return std::move(builder).finish();
}

InvertedIndex build_expanded_index(DocumentSource const& source, ExpansionGranularity granularity,
                                   SegmentationConfig const& seg, ExpansionConfig const& cfg,
                                   QueryGenerator& generator, ExpansionCache* cache)
{
    InvertedIndex::Builder builder;
    expand_corpus(source, seg, granularity, cfg, generator, cache, [&](ExpandedUnit&& unit) {
        builder.add(IndexUnit{std::move(unit.id), std::move(unit.augmented_text), std::move(unit.original_text)});
    });
    return std::move(builder).finish();
}

}  // namespace emd
