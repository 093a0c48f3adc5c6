#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace hopir {

struct ScoredPassage {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredPassage&) const = default;
};

/// Descending by score; equal scores ordered by ascending passage id.
using RankedList = std::vector<ScoredPassage>;

inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.id < b.id;
}

/// Sorts into ranking order and keeps the first `k` entries.
inline RankedList top_k(RankedList items, std::size_t k)
{
    if (items.size() > k) {
        std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(), ranks_before);
        items.resize(k);
    } else {
        std::sort(items.begin(), items.end(), ranks_before);
    }
    return items;
}

inline std::vector<std::string> ids_of(const RankedList& ranked)
{
    std::vector<std::string> ids;
    ids.reserve(ranked.size());
    for (const auto& r : ranked) {
        ids.push_back(r.id);
    }
    return ids;
}

}  // namespace hopir
