#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "emd/error.hpp"
#include "emd/eval.hpp"
#include "emd/fusion.hpp"
#include "emd/index.hpp"
#include "emd/indexing.hpp"
#include "emd/pipeline.hpp"
#include "emd/text.hpp"

using namespace emd;

namespace {

struct SegmentationArgs {
    std::size_t window = SegmentationConfig{}.window_sentences;
    std::size_t stride = SegmentationConfig{}.stride_sentences;
    bool no_title = false;

    void add_to(CLI::App& app)
    {
        app.add_option("--window", window, "Sentences per passage")->capture_default_str();
        app.add_option("--stride", stride, "Sentences between passage starts")->capture_default_str();
        app.add_flag("--no-title", no_title, "Do not prepend the title to each passage");
    }

    [[nodiscard]] SegmentationConfig config() const
    {
        SegmentationConfig seg{window, stride, !no_title};
        seg.validate();
        return seg;
    }
};

ExpansionGranularity parse_granularity(std::string const& name)
{
    if (name == "whole") {
        return ExpansionGranularity::whole_document;
    }
    if (name == "per-document") {
        return ExpansionGranularity::per_document;
    }
    if (name == "per-passage") {
        return ExpansionGranularity::per_passage;
    }
    throw error("unknown granularity " + name + " (whole, per-document, per-passage)");
}

/// Writes to `path`, or stdout for "-".
template <typename Fn>
void with_output(std::string const& path, Fn&& fn)
{
    if (path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw error("cannot write " + path);
    }
    fn(out);
    if (!out) {
        throw error("failed writing " + path);
    }
}

std::vector<std::size_t> parse_sizes(std::string const& text)
{
    std::vector<std::size_t> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        std::size_t pos = 0;
        unsigned long value = 0;
        try {
            value = std::stoul(item, &pos);
        } catch (std::exception const&) {
            pos = 0;
        }
        if (pos == 0 || pos != item.size()) {
            throw error("not a number: \"" + item + "\"");
        }
        out.push_back(value);
    }
    return out;
}

std::vector<AggregationMethod> parse_methods(std::string const& text)
{
    std::vector<AggregationMethod> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        out.push_back(parse_aggregation(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-stage text ranking: expansion, BM25, pointwise and pairwise reranking, fusion, evaluation"};
    app.require_subcommand(1);

    // index build / index search
    auto* index = app.add_subcommand("index", "Build or query an inverted index");
    index->require_subcommand(1);

    auto* build = index->add_subcommand("build", "Index a JSON-lines corpus");
    std::string build_input;
    std::string build_output;
    std::string build_cache;
    bool build_per_passage = false;
    bool build_expand = false;
    std::string build_generator = "stub";
    std::size_t build_queries = ExpansionConfig{}.queries_per_unit;
    std::string build_granularity = "whole";
    SegmentationArgs build_seg;
    build->add_option("--input", build_input, "Corpus file")->required();
    build->add_option("--output", build_output, "Index directory")->required();
    build->add_option("--expanded-cache", build_cache, "Stored predictions to append to each unit");
    build->add_flag("--per-passage", build_per_passage, "Index docid#n passages instead of documents");
    build->add_flag("--expand", build_expand, "Generate predictions while indexing");
    build->add_option("--generator", build_generator, "\"stub\" or http://host:port")->capture_default_str();
    build->add_option("--queries", build_queries, "Predicted queries per unit")->capture_default_str();
    build->add_option("--granularity", build_granularity, "whole, per-document or per-passage")
        ->capture_default_str();
    build_seg.add_to(*build);

    auto* search = index->add_subcommand("search", "Run BM25 (optionally with RM3) over topics");
    std::string search_index;
    std::string search_topics;
    std::string search_output = "-";
    std::string search_tag = "bm25";
    std::string search_mode = "query";
    std::size_t search_k = 1000;
    Bm25Params search_bm25;
    bool search_rm3 = false;
    bool search_collapse = false;
    Rm3Params search_rm3_params;
    search->add_option("--index", search_index, "Index directory")->required();
    search->add_option("--topics", search_topics, "Topics file")->required();
    search->add_option("--output", search_output, "Run file (- for stdout)")->capture_default_str();
    search->add_option("--k", search_k, "Hits per topic")->capture_default_str();
    search->add_option("--bm25-k1", search_bm25.k1)->capture_default_str();
    search->add_option("--bm25-b", search_bm25.b)->capture_default_str();
    search->add_flag("--rm3", search_rm3, "Second pass with RM3 feedback");
    search->add_option("--fb-docs", search_rm3_params.fb_docs)->capture_default_str();
    search->add_option("--fb-terms", search_rm3_params.fb_terms)->capture_default_str();
    search->add_option("--original-weight", search_rm3_params.original_weight)->capture_default_str();
    search->add_option("--query-mode", search_mode, "query, concat or keyword")->capture_default_str();
    search->add_flag("--collapse", search_collapse, "Collapse docid#n hits to documents (best passage)");
    search->add_option("--tag", search_tag)->capture_default_str();

    // expand
    auto* expand = app.add_subcommand("expand", "Predict queries for every unit and store them");
    std::string expand_input;
    std::string expand_output;
    std::string expand_generator = "stub";
    std::string expand_granularity = "whole";
    ExpansionConfig expand_cfg;
    SegmentationArgs expand_seg;
    expand->add_option("--input", expand_input, "Corpus file")->required();
    expand->add_option("--output", expand_output, "Predictions file (JSON lines; existing entries are reused)")
        ->required();
    expand->add_option("--generator", expand_generator, "\"stub\" or http://host:port")->capture_default_str();
    expand->add_option("--queries", expand_cfg.queries_per_unit)->capture_default_str();
    expand->add_option("--batch-size", expand_cfg.batch_size)->capture_default_str();
    expand->add_option("--max-in-flight", expand_cfg.max_in_flight)->capture_default_str();
    expand->add_option("--granularity", expand_granularity, "whole, per-document or per-passage")
        ->capture_default_str();
    expand_seg.add_to(*expand);

    // run
    auto* run = app.add_subcommand("run", "Run the configured pipeline over topics");
    std::string run_config;
    std::string run_topics;
    std::string run_output = "-";
    std::vector<std::string> run_overrides;
    run->add_option("--config", run_config, "Pipeline config file")->required();
    run->add_option("--topics", run_topics, "Topics file")->required();
    run->add_option("--output", run_output, "Final run file (- for stdout)")->capture_default_str();
    run->add_option("--set", run_overrides, "Override a config value, e.g. duo.k1=10");

    // sweep-k1
    auto* sweep = app.add_subcommand("sweep-k1", "Evaluate duo over a grid of k1 values and aggregation methods");
    std::string sweep_config;
    std::string sweep_topics;
    std::string sweep_qrels;
    std::string sweep_output = "-";
    std::string sweep_k1 = "0,10,20,30,40,50";
    std::string sweep_methods = "sum,sum-log,sym-sum,sym-sum-log";
    std::string sweep_metric = "mrr@10";
    int sweep_threshold = 1;
    std::vector<std::string> sweep_overrides;
    sweep->add_option("--config", sweep_config)->required();
    sweep->add_option("--topics", sweep_topics)->required();
    sweep->add_option("--qrels", sweep_qrels)->required();
    sweep->add_option("--output", sweep_output, "Table (TSV, - for stdout)")->capture_default_str();
    sweep->add_option("--k1", sweep_k1, "Comma-separated k1 values")->capture_default_str();
    sweep->add_option("--methods", sweep_methods)->capture_default_str();
    sweep->add_option("--metric", sweep_metric)->capture_default_str();
    sweep->add_option("--rel-threshold", sweep_threshold)->capture_default_str();
    sweep->add_option("--set", sweep_overrides, "Override a config value");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Reciprocal rank fusion of run files");
    std::vector<std::string> fuse_runs;
    std::string fuse_output = "-";
    std::string fuse_tag = "rrf";
    FusionConfig fuse_cfg;
    fuse->add_option("--runs", fuse_runs, "Input run files")->required();
    fuse->add_option("--k", fuse_cfg.rrf_k, "RRF constant")->capture_default_str();
    fuse->add_option("--depth", fuse_cfg.depth, "Entries read from each run")->capture_default_str();
    fuse->add_option("--out,--output", fuse_output)->capture_default_str();
    fuse->add_option("--tag", fuse_tag)->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Score a run against qrels");
    std::string eval_run;
    std::string eval_qrels;
    std::string eval_metrics = "mrr@10,ndcg@10,map,recall@1000";
    int eval_threshold = 1;
    bool eval_per_query = false;
    eval->add_option("--run", eval_run)->required();
    eval->add_option("--qrels", eval_qrels)->required();
    eval->add_option("--metrics", eval_metrics)->capture_default_str();
    eval->add_option("--rel-threshold", eval_threshold, "Minimum relevant grade for MRR, MAP and recall")
        ->capture_default_str();
    eval->add_flag("--per-query", eval_per_query, "Also print per-query values");

    // residual-filter
    auto* residual = app.add_subcommand("residual-filter", "Drop previously judged documents from a run");
    std::string residual_run;
    std::string residual_qrels;
    std::string residual_output = "-";
    residual->add_option("--run", residual_run)->required();
    residual->add_option("--qrels", residual_qrels, "Judgments from earlier rounds")->required();
    residual->add_option("--out,--output", residual_output)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            IndexBuildOptions opts{build_per_passage, build_seg.config(), nullptr};
            std::optional<InvertedIndex> built;
            nlohmann::json manifest = {{"per_passage", build_per_passage}};
            if (build_expand) {
                ExpansionConfig cfg;
                cfg.queries_per_unit = build_queries;
                auto granularity = parse_granularity(build_granularity);
                if ((granularity == ExpansionGranularity::per_passage) != build_per_passage) {
                    throw error("--granularity per-passage goes with --per-passage and only with it");
                }
                auto generator = make_generator(build_generator);
                std::optional<ExpansionCache> cache;
                if (!build_cache.empty()) {
                    cache.emplace(build_cache);
                }
                CorpusReader reader(build_input);
                built = build_expanded_index(source_from(reader), granularity, opts.segmentation, cfg, *generator,
                                             cache ? &*cache : nullptr);
                manifest["expanded"] = true;
                manifest["queries_per_unit"] = build_queries;
            } else {
                std::optional<ExpansionCache> cache;
                if (!build_cache.empty()) {
                    if (!std::filesystem::exists(build_cache)) {
                        throw error("expansion cache not found: " + build_cache);
                    }
                    cache.emplace(build_cache);
                    opts.expansions = &*cache;
                }
                CorpusReader reader(build_input);
                built = build_index(source_from(reader), opts);
                manifest["expanded"] = cache.has_value();
            }
            built->save(build_output, manifest.dump());
            std::cerr << "indexed " << built->doc_count() << " units, " << built->term_count() << " terms into "
                      << build_output << '\n';
            return 0;
        }

        if (*search) {
            search_bm25.validate();
            auto idx = InvertedIndex::load(search_index);
            auto topics = load_topics(search_topics);
            auto mode = parse_query_mode(search_mode);
            Run out;
            for (auto const& topic : topics) {
                auto query = build_fusion_query(topic, mode);
                auto hits = search_rm3 ? bm25_rm3_search(idx, query.terms, search_k, search_bm25, search_rm3_params)
                                       : bm25_search(idx, query.terms, search_k, search_bm25);
                hits.qid = topic.qid;
                if (search_collapse) {
                    hits = max_passage_collapse(hits);
                }
                append_to_run(out, hits, search_tag);
            }
            with_output(search_output, [&](std::ostream& os) { write_run(os, out); });
            return 0;
        }

        if (*expand) {
            expand_cfg.validate();
            auto generator = make_generator(expand_generator);
            ExpansionCache cache(expand_output);
            auto before = cache.size();
            CorpusReader reader(expand_input);
            std::size_t units = 0;
            expand_corpus(source_from(reader), expand_seg.config(), parse_granularity(expand_granularity),
                          expand_cfg, *generator, &cache, [&](ExpandedUnit&&) { ++units; });
            std::cerr << "expanded " << units << " units (" << cache.size() - before << " new) into "
                      << expand_output << '\n';
            return 0;
        }

        if (*run) {
            auto cfg = load_pipeline_config(run_config, run_overrides);
            auto scorer = make_scorer(cfg.scorer);
            auto pipeline = Pipeline::open(cfg, *scorer);
            auto topics = load_topics(run_topics);
            auto result = pipeline->run(topics);
            auto tag = cfg.run_tag();
            with_output(run_output, [&](std::ostream& os) { write_run(os, result.final_run(tag)); });
            if (!cfg.stage_run_dir.empty()) {
                write_stage_runs(result, cfg.stage_run_dir, tag);
            }
            for (auto const& [qid, reason] : result.failures) {
                std::cerr << "query " << qid << " failed: " << reason << '\n';
            }
            return result.ok() ? 0 : 1;
        }

        if (*sweep) {
            auto cfg = load_pipeline_config(sweep_config, sweep_overrides);
            auto scorer = make_scorer(cfg.scorer);
            auto pipeline = Pipeline::open(cfg, *scorer);
            auto topics = load_topics(sweep_topics);
            auto qrels = read_qrels(std::filesystem::path(sweep_qrels));
            auto k1_values = parse_sizes(sweep_k1);
            auto methods = parse_methods(sweep_methods);
            auto rows = emd::sweep_k1(*pipeline, topics, qrels, k1_values, methods, parse_metric(sweep_metric),
                                 {sweep_threshold});
            with_output(sweep_output, [&](std::ostream& os) { write_sweep_table(os, rows); });
            return 0;
        }

        if (*fuse) {
            std::vector<Run> runs;
            std::set<std::string> qids;
            for (auto const& path : fuse_runs) {
                runs.push_back(read_run(std::filesystem::path(path)));
                for (auto const& [qid, entries] : runs.back().queries) {
                    qids.insert(qid);
                }
            }
            Run out;
            for (auto const& qid : qids) {
                std::vector<RankedList> lists;
                for (auto const& r : runs) {
                    if (r.queries.contains(qid)) {
                        lists.push_back(to_ranked_list(r, qid));
                    }
                }
                append_to_run(out, rrf_fuse(lists, fuse_cfg), fuse_tag);
            }
            with_output(fuse_output, [&](std::ostream& os) { write_run(os, out); });
            return 0;
        }

        if (*eval) {
            auto r = read_run(std::filesystem::path(eval_run));
            auto qrels = read_qrels(std::filesystem::path(eval_qrels));
            EvalOptions opts{eval_threshold};
            for (auto const& spec : parse_metrics(eval_metrics)) {
                auto report = evaluate(r, qrels, spec, opts);
                if (eval_per_query) {
                    for (auto const& [qid, value] : report.per_query) {
                        std::cout << report.name << '\t' << qid << '\t';
                        if (value) {
                            std::cout << std::fixed << std::setprecision(4) << *value;
                        } else {
                            std::cout << "undefined";
                        }
                        std::cout << '\n';
                    }
                }
                std::cout << report.name << "\tall\t" << std::fixed << std::setprecision(4) << report.mean << '\n';
            }
            return 0;
        }

        if (*residual) {
            auto r = read_run(std::filesystem::path(residual_run));
            auto prior = read_qrels(std::filesystem::path(residual_qrels));
            auto filtered = residual_filter(r, prior);
            with_output(residual_output, [&](std::ostream& os) { write_run(os, filtered); });
            return 0;
        }
    } catch (config_error const& e) {
        std::cerr << "invalid configuration:\n";
        for (auto const& problem : e.problems) {
            std::cerr << "  " << problem << '\n';
        }
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
