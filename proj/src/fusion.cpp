#include "emd/fusion.hpp"

#include <unordered_map>

#include "emd/error.hpp"
#include "emd/text.hpp"

namespace emd {

void FusionConfig::validate() const
{
    std::vector<std::string> problems;
    if (!(rrf_k > 0.0)) {
        problems.emplace_back("rrf_k must be positive");
    }
    if (depth < 1) {
        problems.emplace_back("fusion depth must be at least 1");
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

RankedList rrf_fuse(std::span<RankedList const> lists, FusionConfig const& cfg)
{
    cfg.validate();
    if (lists.empty()) {
        throw error("nothing to fuse");
    }
    RankedList out{lists.front().qid, {}, "rrf"};
    std::unordered_map<std::string, std::size_t> slot;
    for (auto const& list : lists) {
        if (list.qid != out.qid) {
            throw error("cannot fuse rankings for different queries (" + out.qid + ", " + list.qid + ")");
        }
        auto depth = std::min(cfg.depth, list.size());
        for (std::size_t r = 0; r < depth; ++r) {
            auto const& id = list.entries[r].id;
            double contribution = 1.0 / (cfg.rrf_k + static_cast<double>(r + 1));
            auto [it, inserted] = slot.try_emplace(id, out.entries.size());
            if (inserted) {
                out.entries.push_back({id, contribution});
            } else {
                out.entries[it->second].score += contribution;
            }
        }
    }
    sort_and_truncate(out.entries, out.entries.size());
    return out;
}

std::string_view to_string(QueryMode mode)
{
    switch (mode) {
        case QueryMode::query: return "query";
        case QueryMode::concat: return "concat";
        case QueryMode::keyword: return "keyword";
    }
    return "?";
}

QueryMode parse_query_mode(std::string_view name)
{
    for (auto mode : {QueryMode::query, QueryMode::concat, QueryMode::keyword}) {
        if (name == to_string(mode)) {
            return mode;
        }
    }
    throw error("unknown query mode: " + std::string(name));
}

FusionQuery build_fusion_query(Topic const& topic, QueryMode mode)
{
    FusionQuery out;
    switch (mode) {
        case QueryMode::query:
            out.terms = tokenize(topic.query);
            break;
        case QueryMode::concat:
            if (topic.question && !topic.question->empty()) {
                out.terms = tokenize(topic.query + " " + *topic.question);
            } else {
                out.terms = tokenize(topic.query);
                out.fell_back = true;
            }
            break;
        case QueryMode::keyword:
            for (auto& term : tokenize(topic.query)) {
                if (!is_stopword(term)) {
                    out.terms.push_back(std::move(term));
                }
            }
            break;
    }
    return out;
}

}  // namespace emd
