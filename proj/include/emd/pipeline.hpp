#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emd/config_file.hpp"
#include "emd/corpus.hpp"
#include "emd/duo.hpp"
#include "emd/eval.hpp"
#include "emd/expansion.hpp"
#include "emd/fusion.hpp"
#include "emd/index.hpp"
#include "emd/mono.hpp"

namespace emd {

struct ExpansionStage {
    /// The first-stage index holds expanded text (built here or beforehand).
    bool enabled = false;
    ExpansionGranularity granularity = ExpansionGranularity::whole_document;
    ExpansionConfig config;
    std::string generator = "stub";
    std::string cache;
};

struct RetrievalStage {
    /// Prebuilt index directories. Several indexes are fused with RRF.
    std::vector<std::string> indexes;
    /// Alternatively, a corpus indexed in memory at startup.
    std::string corpus;
    bool per_passage = false;
    /// One first-stage branch per mode; branches are reranked separately
    /// and fused at the end.
    std::vector<QueryMode> query_modes{QueryMode::query};
    std::size_t k0 = 1000;
    Bm25Params bm25 = kDefaultBm25;
    bool rm3 = false;
    Rm3Params rm3_params;
    /// Collapse "docid#n" hits to documents (best passage) after search.
    bool collapse_passages = false;
};

struct MonoStage {
    bool enabled = false;
    std::size_t k_out = 1000;
    bool maxp = false;
    /// Documents for MaxP segmentation; defaults to retrieval.corpus.
    std::string corpus;
    SegmentationConfig segmentation;
    RerankOptions options;
    /// Topic field sent to the rerankers: "query" or "question".
    std::string query_field = "query";
};

struct DuoStage {
    bool enabled = false;
    std::size_t k1 = 50;
    AggregationMethod method = AggregationMethod::sym_sum;
    RerankOptions options;
};

struct PipelineConfig {
    std::string tag;
    std::size_t threads = 1;
    std::string scorer = "stub";
    /// When set, per-stage runs (<tag>.h0/.h1/.h2) are written here.
    std::string stage_run_dir;
    SegmentationConfig segmentation;
    ExpansionStage expansion;
    RetrievalStage retrieval;
    MonoStage mono;
    DuoStage duo;
    FusionConfig fusion;

    /// Throws config_error with every problem found.
    void validate() const;

    /// The explicit tag, or the chain of enabled optional stages joined by
    /// '-' ("expando-mono-duo"); "bm25" when none is enabled.
    [[nodiscard]] std::string run_tag() const;

    /// Throws config_error listing unknown keys, type errors and violated
    /// constraints together.
    static PipelineConfig from_table(ConfigTable const& table);
};

PipelineConfig parse_pipeline_config(std::string_view text, std::span<std::string const> overrides = {},
                                     std::string const& source = "<config>");
PipelineConfig load_pipeline_config(std::filesystem::path const& path, std::span<std::string const> overrides = {});

using DocumentStore = std::unordered_map<std::string, Document>;

struct QueryResult {
    std::string qid;
    RankedList h0;
    std::optional<RankedList> h1;
    std::optional<RankedList> h2;

    [[nodiscard]] RankedList const& final_list() const;
};

struct PipelineResult {
    std::vector<QueryResult> queries;
    /// (qid, reason) for queries that were dropped.
    std::vector<std::pair<std::string, std::string>> failures;

    [[nodiscard]] bool ok() const { return failures.empty(); }
    [[nodiscard]] Run final_run(std::string const& tag) const;
    /// stage is 0, 1 or 2; queries without that stage are omitted.
    [[nodiscard]] Run stage_run(int stage, std::string const& tag) const;
};

/// First-stage and mono output for one topic, reusable across duo settings.
struct PreparedQuery {
    struct Branch {
        RankedList h0;
        std::optional<RankedList> h1;
        /// MaxP representative passages (empty when MaxP is off).
        std::unordered_map<std::string, std::string> representatives;
    };
    std::string qid;
    std::string rerank_query;
    std::vector<Branch> branches;
};

class Pipeline {
  public:
    Pipeline(PipelineConfig cfg, std::vector<std::shared_ptr<InvertedIndex const>> indexes, Scorer& scorer,
             std::shared_ptr<DocumentStore const> documents = nullptr);

    /// Loads or builds the indexes (running expansion when configured) and
    /// the MaxP document store.
    static std::unique_ptr<Pipeline> open(PipelineConfig cfg, Scorer& scorer);

    [[nodiscard]] PipelineConfig const& config() const { return m_cfg; }
    [[nodiscard]] Scorer& scorer() const { return m_scorer; }

    /// Runs every topic; queries whose scorer fails are reported in
    /// `failures` and left out of the runs.
    [[nodiscard]] PipelineResult run(std::span<Topic const> topics) const;
    [[nodiscard]] QueryResult run_query(Topic const& topic) const;

    [[nodiscard]] PreparedQuery prepare(Topic const& topic) const;
    [[nodiscard]] QueryResult finish(PreparedQuery const& prepared, DuoStage const& duo, Scorer& scorer) const;

  private:
    [[nodiscard]] std::string const& stored_text(std::string const& id) const;
    [[nodiscard]] RankedList first_stage(std::span<std::string const> terms, std::string const& qid) const;

    PipelineConfig m_cfg;
    std::vector<std::shared_ptr<InvertedIndex const>> m_indexes;
    Scorer& m_scorer;
    std::shared_ptr<DocumentStore const> m_documents;
};

/// Writes <dir>/<tag>.h0.run (and .h1/.h2 when those stages ran).
void write_stage_runs(PipelineResult const& result, std::filesystem::path const& dir, std::string const& tag);

struct SweepRow {
    std::size_t k1 = 0;
    AggregationMethod method = AggregationMethod::sym_sum;
    std::string metric;
    double value = 0.0;
    /// Pairwise inferences per query: k1·(k1−1).
    std::size_t inference_count = 0;
    /// Duo scorer evaluations actually issued, summed over queries.
    std::size_t measured_calls = 0;
};

/// One row per (k1, method). k1 < 2 rows are mono-only. First-stage and mono
/// work is done once per topic.
std::vector<SweepRow> sweep_k1(Pipeline const& pipeline, std::span<Topic const> topics, Qrels const& qrels,
                               std::span<std::size_t const> k1_values, std::span<AggregationMethod const> methods,
                               MetricSpec const& metric, EvalOptions const& opts = {});

void write_sweep_table(std::ostream& out, std::span<SweepRow const> rows);

}  // namespace emd
