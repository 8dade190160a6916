#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace emd {

struct ScoredId {
    std::string id;
    double score = 0.0;

    friend bool operator==(ScoredId const&, ScoredId const&) = default;
};

/// Ranked output of one stage for one query. Entries are best-first.
struct RankedList {
    std::string qid;
    std::vector<ScoredId> entries;
    std::string stage;

    [[nodiscard]] std::size_t size() const { return entries.size(); }
    [[nodiscard]] bool empty() const { return entries.empty(); }

    /// Throws emd::error if scores increase anywhere or an id repeats.
    void validate() const;

    /// First n entries (all of them if n >= size()).
    [[nodiscard]] RankedList truncated(std::size_t n) const;
};

/// Score descending, then id ascending.
bool score_then_id(ScoredId const& a, ScoredId const& b);

/// Sorts by score_then_id and keeps the first k.
void sort_and_truncate(std::vector<ScoredId>& entries, std::size_t k);

}  // namespace emd
