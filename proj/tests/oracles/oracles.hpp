#pragma once

// Straightforward reference implementations used only by tests. They work on
// plain containers and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Exhaustive BM25 over pre-tokenised documents. Query terms are summed in
/// query order, duplicates included; units without any matching term are
/// left out. Result sorted by score desc, id asc, cut at k.
inline std::vector<std::pair<std::string, double>> bm25(
    std::vector<std::pair<std::string, std::vector<std::string>>> const& docs,
    std::vector<std::string> const& query, std::size_t k, double k1, double b,
    std::map<std::string, double> const& weights = {})
{
    double const n = static_cast<double>(docs.size());
    double total = 0;
    for (auto const& d : docs) {
        total += static_cast<double>(d.second.size());
    }
    double const avgdl = total / n;
    std::vector<std::pair<std::string, double>> out;
    for (auto const& [id, tokens] : docs) {
        double score = 0.0;
        bool matched = false;
        for (auto const& t : query) {
            double w = 1.0;
            if (!weights.empty()) {
                w = weights.at(t);
                if (w == 0.0) {
                    continue;
                }
            }
            double tf = static_cast<double>(std::count(tokens.begin(), tokens.end(), t));
            if (tf == 0) {
                continue;
            }
            double df = 0;
            for (auto const& other : docs) {
                if (std::find(other.second.begin(), other.second.end(), t) != other.second.end()) {
                    df += 1;
                }
            }
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            double dl = static_cast<double>(tokens.size());
            double s = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            score += weights.empty() ? s : w * s;
            matched = true;
        }
        if (matched) {
            out.emplace_back(id, score);
        }
    }
    std::sort(out.begin(), out.end(), [](auto const& x, auto const& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (out.size() > k) {
        out.resize(k);
    }
    return out;
}

/// p[i][j] for i != j. Method names: sum, sum-log, sym-sum, sym-sum-log.
inline std::vector<double> aggregate(std::vector<std::vector<double>> const& p, std::string const& method)
{
    auto clamp = [](double x) { return std::min(std::max(x, 1e-6), 1.0 - 1e-6); };
    std::size_t n = p.size();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            if (method == "sum") {
                s[i] += p[i][j];
            } else if (method == "sum-log") {
                s[i] += std::log(clamp(p[i][j]));
            } else if (method == "sym-sum") {
                s[i] += p[i][j] + (1.0 - p[j][i]);
            } else {
                s[i] += std::log(clamp(p[i][j])) + std::log(clamp(1.0 - p[j][i]));
            }
        }
    }
    return s;
}

/// Indices sorted by grade desc, stable on ties.
inline std::vector<std::size_t> sort_by_grade(std::vector<int> const& grades)
{
    std::vector<std::size_t> idx(grades.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
    return idx;
}

// Metrics over one query: `ranked` holds the grade of each retrieved doc in
// rank order (0 for unjudged), `judged` every judged grade for the query.

inline double rr(std::vector<int> const& ranked, std::size_t k, int threshold)
{
    for (std::size_t r = 1; r <= ranked.size() && r <= k; ++r) {
        if (ranked[r - 1] >= threshold) {
            return 1.0 / static_cast<double>(r);
        }
    }
    return 0.0;
}

inline double ndcg(std::vector<int> const& ranked, std::vector<int> judged, std::size_t k)
{
    auto dcg = [k](std::vector<int> const& g) {
        double sum = 0.0;
        for (std::size_t r = 1; r <= g.size() && r <= k; ++r) {
            if (g[r - 1] > 0) {
                sum += g[r - 1] / std::log2(static_cast<double>(r) + 1.0);
            }
        }
        return sum;
    };
    std::sort(judged.rbegin(), judged.rend());
    double ideal = dcg(judged);
    return ideal == 0.0 ? 0.0 : dcg(ranked) / ideal;
}

inline double ap(std::vector<int> const& ranked, std::vector<int> const& judged, std::size_t depth, int threshold)
{
    auto relevant = std::count_if(judged.begin(), judged.end(), [&](int g) { return g >= threshold; });
    if (relevant == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t r = 1; r <= ranked.size() && r <= depth; ++r) {
        if (ranked[r - 1] >= threshold) {
            auto hits = std::count_if(ranked.begin(), ranked.begin() + static_cast<long>(r),
                                      [&](int g) { return g >= threshold; });
            sum += static_cast<double>(hits) / static_cast<double>(r);
        }
    }
    return sum / static_cast<double>(relevant);
}

inline double recall(std::vector<int> const& ranked, std::vector<int> const& judged, std::size_t k, int threshold)
{
    auto relevant = std::count_if(judged.begin(), judged.end(), [&](int g) { return g >= threshold; });
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r) {
        hits += ranked[r] >= threshold ? 1 : 0;
    }
    return relevant == 0 ? -1.0 : static_cast<double>(hits) / static_cast<double>(relevant);
}

}  // namespace oracle
