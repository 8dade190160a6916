#include "emd/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "emd/detail/parallel.hpp"
#include "emd/error.hpp"
#include "emd/indexing.hpp"

namespace emd {

namespace {

/// Typed access to a ConfigTable that records every problem instead of
/// stopping at the first one.
class TableReader {
  public:
    TableReader(ConfigTable const& table, std::vector<std::string>& problems) : m_table(table), m_problems(problems)
    {}

    void string(std::string const& key, std::string& out)
    {
        if (auto const* e = lookup(key)) {
            if (auto const* s = std::get_if<std::string>(&e->value)) {
                out = *s;
            } else {
                wrong_type(key, *e, "a string");
            }
        }
    }

    void boolean(std::string const& key, bool& out)
    {
        if (auto const* e = lookup(key)) {
            if (auto const* b = std::get_if<bool>(&e->value)) {
                out = *b;
            } else {
                wrong_type(key, *e, "true or false");
            }
        }
    }

    void real(std::string const& key, double& out)
    {
        if (auto const* e = lookup(key)) {
            if (auto const* d = std::get_if<double>(&e->value)) {
                out = *d;
            } else {
                wrong_type(key, *e, "a number");
            }
        }
    }

    void count(std::string const& key, std::size_t& out)
    {
        if (auto const* e = lookup(key)) {
            auto const* d = std::get_if<double>(&e->value);
            if (d == nullptr || *d < 0 || std::floor(*d) != *d) {
                wrong_type(key, *e, "a non-negative integer");
            } else {
                out = static_cast<std::size_t>(*d);
            }
        }
    }

    void strings(std::string const& key, std::vector<std::string>& out)
    {
        if (auto const* e = lookup(key)) {
            if (auto const* list = std::get_if<std::vector<std::string>>(&e->value)) {
                out = *list;
            } else if (auto const* s = std::get_if<std::string>(&e->value)) {
                out = {*s};
            } else {
                wrong_type(key, *e, "a string or an array of strings");
            }
        }
    }

    template <typename T, typename Parse>
    void parsed(std::string const& key, T& out, Parse&& parse)
    {
        std::string text;
        bool present = lookup(key) != nullptr;
        string(key, text);
        if (!present || text.empty()) {
            return;
        }
        try {
            out = parse(text);
        } catch (error const& e) {
            m_problems.push_back(where(key) + e.what());
        }
    }

    void reject_unknown()
    {
        for (auto const& [key, entry] : m_table.entries()) {
            if (!m_used.contains(key)) {
                m_problems.push_back(where(key) + "unknown key \"" + key + "\"");
            }
        }
    }

  private:
    ConfigEntry const* lookup(std::string const& key)
    {
        m_used.insert(key);
        return m_table.find(key);
    }

    std::string where(std::string const& key) const
    {
        auto const* e = m_table.find(key);
        return e != nullptr && e->line > 0 ? "line " + std::to_string(e->line) + ": " : std::string();
    }

    void wrong_type(std::string const& key, ConfigEntry const&, char const* expected)
    {
        m_problems.push_back(where(key) + "\"" + key + "\" must be " + expected);
    }

    ConfigTable const& m_table;
    std::vector<std::string>& m_problems;
    std::set<std::string> m_used;
};

ExpansionGranularity parse_granularity(std::string const& text)
{
    if (text == "whole" || text == "whole-document") {
        return ExpansionGranularity::whole_document;
    }
    if (text == "per-document") {
        return ExpansionGranularity::per_document;
    }
    if (text == "per-passage") {
        return ExpansionGranularity::per_passage;
    }
    throw error("unknown expansion granularity \"" + text + "\" (whole, per-document, per-passage)");
}

void collect(std::vector<std::string>& problems, auto&& validate)
{
    try {
        validate();
    } catch (config_error const& e) {
        problems.insert(problems.end(), e.problems.begin(), e.problems.end());
    }
}

RankedList fuse_or_take(std::vector<RankedList> lists, FusionConfig const& fusion, std::string const& stage)
{
    if (lists.size() == 1) {
        auto out = std::move(lists.front());
        out.stage = stage;
        return out;
    }
    auto out = rrf_fuse(lists, fusion);
    out.stage = stage;
    return out;
}

}  // namespace

void PipelineConfig::validate() const
{
    std::vector<std::string> problems;
    if (threads < 1) {
        problems.emplace_back("threads must be at least 1");
    }
    if (scorer.empty()) {
        problems.emplace_back("scorer endpoint must not be empty");
    }
    collect(problems, [&] { segmentation.validate(); });
    collect(problems, [&] { fusion.validate(); });

    if (retrieval.indexes.empty() == retrieval.corpus.empty()) {
        problems.emplace_back("retrieval needs exactly one of \"indexes\" or \"corpus\"");
    }
    if (retrieval.per_passage && retrieval.corpus.empty()) {
        problems.emplace_back("retrieval.per_passage applies only to an in-memory corpus index");
    }
    if (retrieval.k0 < 1) {
        problems.emplace_back("retrieval.k0 must be at least 1");
    }
    if (retrieval.query_modes.empty()) {
        problems.emplace_back("retrieval.query_modes must not be empty");
    }
    collect(problems, [&] { retrieval.bm25.validate(); });
    if (retrieval.rm3) {
        collect(problems, [&] { retrieval.rm3_params.validate(); });
    }

    if (expansion.enabled) {
        collect(problems, [&] { expansion.config.validate(); });
        if (!retrieval.corpus.empty()) {
            bool passage_units = expansion.granularity == ExpansionGranularity::per_passage;
            if (passage_units != retrieval.per_passage) {
                problems.emplace_back("expansion.granularity must be per-passage exactly when retrieval.per_passage is set");
            }
        }
    }

    if (mono.enabled) {
        if (mono.k_out < 1) {
            problems.emplace_back("mono.k_out must be at least 1");
        }
        if (mono.k_out > retrieval.k0) {
            problems.emplace_back("mono.k_out (" + std::to_string(mono.k_out) + ") must not exceed retrieval.k0 (" +
                                  std::to_string(retrieval.k0) + ")");
        }
        if (mono.options.batch_size < 1 || mono.options.max_in_flight < 1) {
            problems.emplace_back("mono batch_size and max_in_flight must be at least 1");
        }
        if (mono.query_field != "query" && mono.query_field != "question") {
            problems.emplace_back("mono.query_field must be \"query\" or \"question\"");
        }
        if (mono.maxp) {
            if (mono.corpus.empty() && retrieval.corpus.empty()) {
                problems.emplace_back("mono.maxp needs a document corpus (mono.corpus or retrieval.corpus)");
            }
            collect(problems, [&] { mono.segmentation.validate(); });
        } else if (retrieval.collapse_passages) {
            problems.emplace_back("collapsed document ids have no stored text; enable mono.maxp");
        }
    }

    if (duo.enabled) {
        if (!mono.enabled) {
            problems.emplace_back("duo requires mono to be enabled");
        } else if (duo.k1 > mono.k_out) {
            problems.emplace_back("duo.k1 (" + std::to_string(duo.k1) + ") must not exceed mono.k_out (" +
                                  std::to_string(mono.k_out) + ")");
        }
        if (duo.options.batch_size < 1 || duo.options.max_in_flight < 1) {
            problems.emplace_back("duo batch_size and max_in_flight must be at least 1");
        }
    }

    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

std::string PipelineConfig::run_tag() const
{
    if (!tag.empty()) {
        return tag;
    }
    std::vector<std::string> parts;
    if (expansion.enabled) {
        parts.emplace_back("expando");
    }
    if (retrieval.rm3) {
        parts.emplace_back("rm3");
    }
    if (mono.enabled) {
        parts.emplace_back("mono");
    }
    if (duo.enabled) {
        parts.emplace_back("duo");
    }
    if (parts.empty()) {
        return "bm25";
    }
    std::string out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        out += "-" + parts[i];
    }
    return out;
}

PipelineConfig PipelineConfig::from_table(ConfigTable const& table)
{
    PipelineConfig cfg;
    std::vector<std::string> problems;
    TableReader r(table, problems);

    r.string("tag", cfg.tag);
    r.count("threads", cfg.threads);
    r.string("scorer", cfg.scorer);
    r.string("stage_run_dir", cfg.stage_run_dir);

    r.count("segmentation.window", cfg.segmentation.window_sentences);
    r.count("segmentation.stride", cfg.segmentation.stride_sentences);
    r.boolean("segmentation.prepend_title", cfg.segmentation.prepend_title);

    r.boolean("expansion.enabled", cfg.expansion.enabled);
    r.parsed("expansion.granularity", cfg.expansion.granularity, parse_granularity);
    r.count("expansion.queries_per_unit", cfg.expansion.config.queries_per_unit);
    r.count("expansion.batch_size", cfg.expansion.config.batch_size);
    r.count("expansion.max_in_flight", cfg.expansion.config.max_in_flight);
    r.string("expansion.generator", cfg.expansion.generator);
    r.string("expansion.cache", cfg.expansion.cache);

    std::string single_index;
    r.string("retrieval.index", single_index);
    r.strings("retrieval.indexes", cfg.retrieval.indexes);
    if (!single_index.empty()) {
        cfg.retrieval.indexes.insert(cfg.retrieval.indexes.begin(), single_index);
    }
    r.string("retrieval.corpus", cfg.retrieval.corpus);
    r.boolean("retrieval.per_passage", cfg.retrieval.per_passage);
    std::vector<std::string> modes;
    r.strings("retrieval.query_modes", modes);
    if (!modes.empty()) {
        cfg.retrieval.query_modes.clear();
        for (auto const& m : modes) {
            try {
                cfg.retrieval.query_modes.push_back(parse_query_mode(m));
            } catch (error const& e) {
                problems.emplace_back(e.what());
            }
        }
    }
    r.count("retrieval.k0", cfg.retrieval.k0);
    r.real("retrieval.bm25_k1", cfg.retrieval.bm25.k1);
    r.real("retrieval.bm25_b", cfg.retrieval.bm25.b);
    r.boolean("retrieval.rm3", cfg.retrieval.rm3);
    r.count("retrieval.rm3_fb_docs", cfg.retrieval.rm3_params.fb_docs);
    r.count("retrieval.rm3_fb_terms", cfg.retrieval.rm3_params.fb_terms);
    r.real("retrieval.rm3_original_weight", cfg.retrieval.rm3_params.original_weight);
    r.boolean("retrieval.collapse_passages", cfg.retrieval.collapse_passages);

    r.boolean("mono.enabled", cfg.mono.enabled);
    r.count("mono.k_out", cfg.mono.k_out);
    r.boolean("mono.maxp", cfg.mono.maxp);
    r.string("mono.corpus", cfg.mono.corpus);
    cfg.mono.segmentation = cfg.segmentation;
    r.count("mono.window", cfg.mono.segmentation.window_sentences);
    r.count("mono.stride", cfg.mono.segmentation.stride_sentences);
    r.boolean("mono.prepend_title", cfg.mono.segmentation.prepend_title);
    r.count("mono.batch_size", cfg.mono.options.batch_size);
    r.count("mono.max_in_flight", cfg.mono.options.max_in_flight);
    r.count("mono.max_retries", cfg.mono.options.retry.max_retries);
    r.string("mono.query_field", cfg.mono.query_field);

    r.boolean("duo.enabled", cfg.duo.enabled);
    r.count("duo.k1", cfg.duo.k1);
    r.parsed("duo.method", cfg.duo.method, parse_aggregation);
    r.count("duo.batch_size", cfg.duo.options.batch_size);
    r.count("duo.max_in_flight", cfg.duo.options.max_in_flight);
    r.count("duo.max_retries", cfg.duo.options.retry.max_retries);

    r.real("fusion.rrf_k", cfg.fusion.rrf_k);
    r.count("fusion.depth", cfg.fusion.depth);

    r.reject_unknown();
    collect(problems, [&] { cfg.validate(); });
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
    return cfg;
}

PipelineConfig parse_pipeline_config(std::string_view text, std::span<std::string const> overrides,
                                     std::string const& source)
{
    auto table = ConfigTable::parse(text, source);
    for (auto const& o : overrides) {
        table.apply_override(o);
    }
    return PipelineConfig::from_table(table);
}

PipelineConfig load_pipeline_config(std::filesystem::path const& path, std::span<std::string const> overrides)
{
    std::ifstream in(path);
    if (!in) {
        throw error("cannot open config " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_pipeline_config(buffer.str(), overrides, path.string());
}

RankedList const& QueryResult::final_list() const
{
    if (h2) {
        return *h2;
    }
    if (h1) {
        return *h1;
    }
    return h0;
}

Run PipelineResult::final_run(std::string const& tag) const
{
    Run run;
    for (auto const& q : queries) {
        append_to_run(run, q.final_list(), tag);
    }
    return run;
}

Run PipelineResult::stage_run(int stage, std::string const& tag) const
{
    Run run;
    for (auto const& q : queries) {
        if (stage == 0) {
            append_to_run(run, q.h0, tag);
        } else if (stage == 1 && q.h1) {
            append_to_run(run, *q.h1, tag);
        } else if (stage == 2 && q.h2) {
            append_to_run(run, *q.h2, tag);
        }
    }
    return run;
}

Pipeline::Pipeline(PipelineConfig cfg, std::vector<std::shared_ptr<InvertedIndex const>> indexes, Scorer& scorer,
                   std::shared_ptr<DocumentStore const> documents)
    : m_cfg(std::move(cfg)), m_indexes(std::move(indexes)), m_scorer(scorer), m_documents(std::move(documents))
{
    m_cfg.validate();
    if (m_indexes.empty()) {
        throw error("pipeline needs at least one index");
    }
    if (m_cfg.mono.enabled && m_cfg.mono.maxp && !m_documents) {
        throw error("MaxP reranking needs a document store");
    }
}

std::unique_ptr<Pipeline> Pipeline::open(PipelineConfig cfg, Scorer& scorer)
{
    cfg.validate();
    std::vector<std::shared_ptr<InvertedIndex const>> indexes;
    if (!cfg.retrieval.corpus.empty()) {
        CorpusReader reader(cfg.retrieval.corpus);
        if (cfg.expansion.enabled) {
            auto generator = make_generator(cfg.expansion.generator);
            std::optional<ExpansionCache> cache;
            if (!cfg.expansion.cache.empty()) {
                cache.emplace(cfg.expansion.cache);
            }
            indexes.push_back(std::make_shared<InvertedIndex const>(
                build_expanded_index(source_from(reader), cfg.expansion.granularity, cfg.segmentation,
                                     cfg.expansion.config, *generator, cache ? &*cache : nullptr)));
        } else {
            indexes.push_back(std::make_shared<InvertedIndex const>(
                build_index(source_from(reader), {cfg.retrieval.per_passage, cfg.segmentation, nullptr})));
        }
    } else {
        for (auto const& dir : cfg.retrieval.indexes) {
            indexes.push_back(std::make_shared<InvertedIndex const>(InvertedIndex::load(dir)));
        }
    }

    std::shared_ptr<DocumentStore const> documents;
    if (cfg.mono.enabled && cfg.mono.maxp) {
        auto store = std::make_shared<DocumentStore>();
        auto path = cfg.mono.corpus.empty() ? cfg.retrieval.corpus : cfg.mono.corpus;
        CorpusReader reader(path);
        while (auto doc = reader.next()) {
            auto id = doc->docid;
            store->emplace(std::move(id), std::move(*doc));
        }
        documents = std::move(store);
    }
    return std::make_unique<Pipeline>(std::move(cfg), std::move(indexes), scorer, std::move(documents));
}

std::string const& Pipeline::stored_text(std::string const& id) const
{
    for (auto const& index : m_indexes) {
        if (auto ordinal = index->ordinal_of(id)) {
            return index->original_text(*ordinal);
        }
    }
    throw error("no stored text for " + id);
}

RankedList Pipeline::first_stage(std::span<std::string const> terms, std::string const& qid) const
{
    auto const& r = m_cfg.retrieval;
    std::vector<RankedList> lists;
    lists.reserve(m_indexes.size());
    for (auto const& index : m_indexes) {
        auto list = r.rm3 ? bm25_rm3_search(*index, terms, r.k0, r.bm25, r.rm3_params)
                          : bm25_search(*index, terms, r.k0, r.bm25);
        list.qid = qid;
        if (r.collapse_passages) {
            list = max_passage_collapse(list);
        }
        lists.push_back(std::move(list));
    }
    if (lists.size() == 1) {
        return std::move(lists.front());
    }
    auto fused = rrf_fuse(lists, m_cfg.fusion);
    return fused.truncated(r.k0);
}

PreparedQuery Pipeline::prepare(Topic const& topic) const
{
    PreparedQuery prepared;
    prepared.qid = topic.qid;
    prepared.rerank_query = topic.query;
    if (m_cfg.mono.query_field == "question" && topic.question && !topic.question->empty()) {
        prepared.rerank_query = *topic.question;
    }
    auto lookup_text = [this](std::string const& id) -> std::string const& { return stored_text(id); };
    auto lookup_doc = [this](std::string const& id) -> Document const& {
        auto it = m_documents->find(id);
        if (it == m_documents->end()) {
            throw error("document " + id + " is not in the MaxP corpus");
        }
        return it->second;
    };

    for (auto mode : m_cfg.retrieval.query_modes) {
        auto& branch = prepared.branches.emplace_back();
        auto query = build_fusion_query(topic, mode);
        branch.h0 = first_stage(query.terms, topic.qid);
        if (!m_cfg.mono.enabled) {
            continue;
        }
        auto const& mono = m_cfg.mono;
        if (mono.maxp) {
            auto result = mono_rerank_maxp(prepared.rerank_query, branch.h0, lookup_doc, mono.segmentation,
                                           mono.k_out, m_scorer, mono.options);
            branch.h1 = std::move(result.ranking);
            branch.representatives = std::move(result.representative);
        } else {
            branch.h1 = mono_rerank(prepared.rerank_query, branch.h0, lookup_text, mono.k_out, m_scorer,
                                    mono.options);
        }
    }
    return prepared;
}

QueryResult Pipeline::finish(PreparedQuery const& prepared, DuoStage const& duo, Scorer& scorer) const
{
    QueryResult result;
    result.qid = prepared.qid;
    std::vector<RankedList> h0;
    std::vector<RankedList> h1;
    std::vector<RankedList> h2;
    for (auto const& branch : prepared.branches) {
        h0.push_back(branch.h0);
        if (!branch.h1) {
            continue;
        }
        h1.push_back(*branch.h1);
        if (!duo.enabled) {
            continue;
        }
        auto const& reps = branch.representatives;
        auto texts = [&](std::string const& id) -> std::string const& {
            if (auto it = reps.find(id); it != reps.end()) {
                return it->second;
            }
            return stored_text(id);
        };
        h2.push_back(duo_rerank(prepared.rerank_query, *branch.h1, duo.k1, duo.method, scorer, texts, duo.options));
    }
    result.h0 = fuse_or_take(std::move(h0), m_cfg.fusion, "h0");
    if (!h1.empty()) {
        result.h1 = fuse_or_take(std::move(h1), m_cfg.fusion, "h1");
    }
    if (!h2.empty()) {
        result.h2 = fuse_or_take(std::move(h2), m_cfg.fusion, "h2");
    }
    return result;
}

QueryResult Pipeline::run_query(Topic const& topic) const { return finish(prepare(topic), m_cfg.duo, m_scorer); }

PipelineResult Pipeline::run(std::span<Topic const> topics) const
{
    std::vector<std::optional<QueryResult>> results(topics.size());
    std::vector<std::string> failures(topics.size());
    detail::parallel_for(topics.size(), m_cfg.threads, [&](std::size_t i) {
        try {
            results[i] = run_query(topics[i]);
        } catch (error const& e) {
            failures[i] = e.what();
        }
    });
    PipelineResult out;
    for (std::size_t i = 0; i < topics.size(); ++i) {
        if (results[i]) {
            out.queries.push_back(std::move(*results[i]));
        } else {
            out.failures.emplace_back(topics[i].qid, failures[i]);
        }
    }
    return out;
}

void write_stage_runs(PipelineResult const& result, std::filesystem::path const& dir, std::string const& tag)
{
    std::filesystem::create_directories(dir);
    for (int stage = 0; stage <= 2; ++stage) {
        auto stage_tag = tag + ".h" + std::to_string(stage);
        auto run = result.stage_run(stage, stage_tag);
        if (stage > 0 && run.queries.empty()) {
            continue;
        }
        write_run(dir / (stage_tag + ".run"), run);
    }
}

std::vector<SweepRow> sweep_k1(Pipeline const& pipeline, std::span<Topic const> topics, Qrels const& qrels,
                               std::span<std::size_t const> k1_values, std::span<AggregationMethod const> methods,
                               MetricSpec const& metric, EvalOptions const& opts)
{
    auto const& cfg = pipeline.config();
    if (!cfg.mono.enabled) {
        throw error("the k1 sweep needs mono reranking enabled");
    }
    std::vector<PreparedQuery> prepared(topics.size());
    detail::parallel_for(topics.size(), cfg.threads,
                         [&](std::size_t i) { prepared[i] = pipeline.prepare(topics[i]); });

    std::vector<SweepRow> rows;
    for (auto k1 : k1_values) {
        for (auto method : methods) {
            DuoStage duo = cfg.duo;
            duo.enabled = k1 >= 2;
            duo.k1 = k1;
            duo.method = method;
            CountingScorer counting(pipeline.scorer());

            std::vector<QueryResult> results(prepared.size());
            detail::parallel_for(prepared.size(), cfg.threads,
                                 [&](std::size_t i) { results[i] = pipeline.finish(prepared[i], duo, counting); });
            Run run;
            for (auto const& r : results) {
                append_to_run(run, r.final_list(), "sweep");
            }
            SweepRow row;
            row.k1 = k1;
            row.method = method;
            row.metric = metric.name();
            row.value = evaluate(run, qrels, metric, opts).mean;
            row.inference_count = k1 >= 2 ? k1 * (k1 - 1) : 0;
            row.measured_calls = counting.duo_calls();
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_table(std::ostream& out, std::span<SweepRow const> rows)
{
    out << "k1\tmethod\tmetric\tvalue\tinferences\tmeasured_calls\n";
    for (auto const& row : rows) {
        out << row.k1 << '\t' << to_string(row.method) << '\t' << row.metric << '\t' << std::fixed
            << std::setprecision(4) << row.value << std::defaultfloat << '\t' << row.inference_count << '\t'
            << row.measured_calls << '\n';
    }
}

}  // namespace emd
