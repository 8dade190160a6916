#include "emd/ranked_list.hpp"

#include <algorithm>
#include <unordered_set>

#include "emd/error.hpp"

namespace emd {

void RankedList::validate() const
{
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].score > entries[i - 1].score) {
            throw error("ranked list for " + qid + " has increasing scores at rank " + std::to_string(i + 1));
        }
        if (!seen.insert(entries[i].id).second) {
            throw error("ranked list for " + qid + " repeats id " + entries[i].id);
        }
    }
}

RankedList RankedList::truncated(std::size_t n) const
{
    RankedList out{qid, {}, stage};
    auto count = std::min(n, entries.size());
    out.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(count));
    return out;
}

bool score_then_id(ScoredId const& a, ScoredId const& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.id < b.id;
}

void sort_and_truncate(std::vector<ScoredId>& entries, std::size_t k)
{
    if (k < entries.size()) {
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(),
                          score_then_id);
        entries.resize(k);
    } else {
        std::sort(entries.begin(), entries.end(), score_then_id);
    }
}

}  // namespace emd
