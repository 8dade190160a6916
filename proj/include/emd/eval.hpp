#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emd/ranked_list.hpp"

namespace emd {

struct RunEntry {
    std::string docid;
    std::size_t rank = 0;
    double score = 0.0;
    std::string tag;

    friend bool operator==(RunEntry const&, RunEntry const&) = default;
};

/// Six-column TREC run: "qid Q0 docid rank score tag". Entries per qid are
/// kept in rank order.
struct Run {
    std::map<std::string, std::vector<RunEntry>> queries;

    friend bool operator==(Run const&, Run const&) = default;
};

/// Graded judgments: "qid 0 docid grade".
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;

    /// 0 for unjudged documents.
    [[nodiscard]] int grade(std::string const& qid, std::string const& docid) const;
    [[nodiscard]] bool contains(std::string const& qid, std::string const& docid) const;

    friend bool operator==(Qrels const&, Qrels const&) = default;
};

Run read_run(std::istream& in, std::string const& source = "<run>");
Run read_run(std::filesystem::path const& path);
/// Scores are written in shortest round-trip form, so reading a written
/// run and writing it again reproduces the same bytes.
void write_run(std::ostream& out, Run const& run);
void write_run(std::filesystem::path const& path, Run const& run);

Qrels read_qrels(std::istream& in, std::string const& source = "<qrels>");
Qrels read_qrels(std::filesystem::path const& path);
void write_qrels(std::ostream& out, Qrels const& qrels);

/// Ranks become 1..n in list order.
Run to_run(std::span<RankedList const> lists, std::string const& tag);
void append_to_run(Run& run, RankedList const& list, std::string const& tag);
RankedList to_ranked_list(Run const& run, std::string const& qid);

std::string format_score(double score);

struct EvalOptions {
    /// Minimum grade counted as relevant by the binary metrics (MRR, AP, recall).
    int rel_threshold = 1;
};

struct MetricReport {
    std::string name;
    /// Every qid in the qrels; nullopt where the metric is undefined.
    std::map<std::string, std::optional<double>> per_query;
    /// Mean over defined values.
    double mean = 0.0;
};

MetricReport mrr_at_k(Run const& run, Qrels const& qrels, std::size_t k, EvalOptions const& opts = {});
/// Linear gain, log2(rank + 1) discount, ideal ordering from the qrels.
MetricReport ndcg_at_k(Run const& run, Qrels const& qrels, std::size_t k);
MetricReport average_precision(Run const& run, Qrels const& qrels, std::size_t depth = 1000,
                               EvalOptions const& opts = {});
/// Undefined (and excluded from the mean) for queries without relevant documents.
MetricReport recall_at_k(Run const& run, Qrels const& qrels, std::size_t k, EvalOptions const& opts = {});

enum class MetricKind { mrr, ndcg, map, recall };

struct MetricSpec {
    MetricKind kind;
    std::size_t cutoff;

    [[nodiscard]] std::string name() const;
};

/// "mrr@10", "ndcg@20", "map" (depth 1000) or "map@N", "recall@1000".
/// MRR, nDCG and recall need an explicit cutoff.
MetricSpec parse_metric(std::string_view text);
std::vector<MetricSpec> parse_metrics(std::string_view comma_separated);
MetricReport evaluate(Run const& run, Qrels const& qrels, MetricSpec const& spec, EvalOptions const& opts = {});

/// Drops entries judged in `prior` and renumbers ranks from 1.
Run residual_filter(Run const& run, Qrels const& prior);

}  // namespace emd
