#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "emd/error.hpp"
#include "emd/pipeline.hpp"
#include "emd/text.hpp"
#include "support.hpp"

using namespace emd;
using Strings = std::vector<std::string>;

namespace {

/// Document i contains "key<i>" once plus shared filler; query i asks for key<i>.
struct Synthetic {
    std::vector<Document> docs;
    std::vector<Topic> topics;
    Qrels qrels;
};

Synthetic synthetic(std::size_t docs, std::size_t queries)
{
    Synthetic s;
    for (std::size_t i = 0; i < docs; ++i) {
        auto id = "doc" + std::to_string(i);
        s.docs.push_back({id, "Title " + std::to_string(i % 7),
                          "Common filler words about topic. Key" + std::to_string(i) + " appears here. Shared " +
                              std::to_string(i % 13) + " tail sentence."});
    }
    for (std::size_t q = 0; q < queries; ++q) {
        auto qid = std::to_string(q);
        s.topics.push_back({qid, "key" + std::to_string(q) + " filler topic", std::nullopt, std::nullopt});
        s.qrels.judgments[qid]["doc" + std::to_string(q)] = 2;
    }
    return s;
}

std::shared_ptr<InvertedIndex const> index_of(std::vector<Document> const& docs)
{
    std::vector<IndexUnit> units;
    for (auto const& d : docs) {
        units.push_back({d.docid, d.full_text(), d.full_text()});
    }
    return std::make_shared<InvertedIndex const>(InvertedIndex::build(units));
}

/// Grade 2 for the relevant document of every topic, keyed by stored text.
testing::OracleScorer oracle_for(Synthetic const& s)
{
    std::unordered_map<std::string, int> grades;
    for (auto const& [qid, judged] : s.qrels.judgments) {
        for (auto const& [docid, grade] : judged) {
            auto i = std::stoul(docid.substr(3));
            grades[s.docs[i].full_text()] = grade;
        }
    }
    return testing::OracleScorer(grades, 2);
}

PipelineConfig in_memory(bool mono, bool duo, std::size_t k0 = 100, std::size_t k_out = 100, std::size_t k1 = 10)
{
    PipelineConfig cfg;
    cfg.retrieval.indexes = {"<memory>"};
    cfg.retrieval.k0 = k0;
    cfg.mono.enabled = mono;
    cfg.mono.k_out = k_out;
    cfg.duo.enabled = duo;
    cfg.duo.k1 = k1;
    cfg.threads = 2;
    return cfg;
}

void write_corpus(std::filesystem::path const& path, std::vector<Document> const& docs)
{
    std::ofstream out(path);
    for (auto const& d : docs) {
        out << nlohmann::json{{"docid", d.docid}, {"title", d.title}, {"body", d.body}}.dump() << '\n';
    }
}

std::string run_text(Run const& run)
{
    std::ostringstream out;
    write_run(out, run);
    return out.str();
}

std::vector<std::string> lines_of(std::string const& text)
{
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

TEST_CASE("config file parsing")
{
    auto cfg = parse_pipeline_config(R"(
# passage ranking
threads = 4

[retrieval]
index = "idx/passages"
k0 = 1000
bm25_k1 = 0.82
bm25_b = 0.68
rm3 = true

[mono]
enabled = true
k_out = 1000

[duo]
enabled = true
k1 = 50
method = "sym-sum"
)");
    CHECK(cfg.threads == 4);
    CHECK(cfg.retrieval.indexes == Strings{"idx/passages"});
    CHECK(cfg.retrieval.bm25.k1 == 0.82);
    CHECK(cfg.retrieval.bm25.b == 0.68);
    CHECK(cfg.duo.method == AggregationMethod::sym_sum);
    CHECK(cfg.run_tag() == "rm3-mono-duo");

    Strings overrides{"duo.k1=10", "duo.method=sum-log", "tag=\"ablation\""};
    auto overridden = parse_pipeline_config("[retrieval]\nindex = \"x\"\n[mono]\nenabled = true\n[duo]\nenabled = true\n",
                                            overrides);
    CHECK(overridden.duo.k1 == 10);
    CHECK(overridden.duo.method == AggregationMethod::sum_log);
    CHECK(overridden.run_tag() == "ablation");

    CHECK(parse_pipeline_config("[retrieval]\nindex = \"x\"\n").run_tag() == "bm25");
    auto expando = parse_pipeline_config(
        "[retrieval]\ncorpus = \"c.jsonl\"\n[expansion]\nenabled = true\n[mono]\nenabled = true\n");
    CHECK(expando.run_tag() == "expando-mono");
}

TEST_CASE("config errors are reported together")
{
    try {
        parse_pipeline_config(R"(
colour = "blue"
[retrieval]
index = "x"
k0 = 100
bm25_b = "high"
[mono]
enabled = true
k_out = 200
[duo]
enabled = true
k1 = 300
method = "median"
)");
        FAIL("expected config_error");
    } catch (config_error const& e) {
        std::string all;
        for (auto const& p : e.problems) {
            all += p + "\n";
        }
        CHECK(e.problems.size() >= 5);
        CHECK(all.find("unknown key \"colour\"") != std::string::npos);
        CHECK(all.find("bm25_b") != std::string::npos);
        CHECK(all.find("median") != std::string::npos);
        CHECK(all.find("mono.k_out (200) must not exceed retrieval.k0 (100)") != std::string::npos);
        CHECK(all.find("duo.k1 (300) must not exceed mono.k_out (200)") != std::string::npos);
        CHECK(all.find("line 2") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_pipeline_config("[retrieval]\nindex = \"x\"\n[duo]\nenabled = true\n"), config_error);
    CHECK_THROWS_AS(parse_pipeline_config("[mono]\nenabled = true\n"), config_error);
    CHECK_THROWS_AS(parse_pipeline_config("[retrieval\nindex = \"x\"\n"), config_error);
    CHECK_THROWS_AS(parse_pipeline_config("[retrieval]\nindex = \"x\"\nk0 = -5\n"), config_error);
}

TEST_CASE("a first-stage-only pipeline equals bm25 search")
{
    auto s = synthetic(200, 20);
    auto index = index_of(s.docs);
    StubScorer stub;
    Pipeline pipeline(in_memory(false, false), {index}, stub);
    auto result = pipeline.run(s.topics);
    REQUIRE(result.ok());
    REQUIRE(result.queries.size() == s.topics.size());
    for (std::size_t q = 0; q < s.topics.size(); ++q) {
        auto expected = bm25_search(*index, tokenize(s.topics[q].query), 100, kDefaultBm25);
        CHECK(result.queries[q].final_list().entries == expected.entries);
        CHECK_FALSE(result.queries[q].h1.has_value());
    }
}

TEST_CASE("oracle scorers put every relevant document first")
{
    auto s = synthetic(300, 25);
    auto index = index_of(s.docs);
    auto oracle = oracle_for(s);
    Pipeline pipeline(in_memory(true, true, 100, 50, 10), {index}, oracle);
    auto result = pipeline.run(s.topics);
    REQUIRE(result.ok());
    auto run = result.final_run("t");
    CHECK(mrr_at_k(run, s.qrels, 10).mean == 1.0);
    for (auto const& q : result.queries) {
        CHECK(q.h0.size() == 100);
        CHECK(q.h1->size() == 50);
        CHECK(q.h2->size() == 50);
        CHECK(q.h2->entries.front().id == "doc" + q.qid);
    }
}

TEST_CASE("duo leaves the mono tail in place and mono ablation matches")
{
    auto s = synthetic(1200, 3);
    // Every document shares "filler", so each query retrieves all of them.
    auto index = index_of(s.docs);
    StubScorer stub;
    Pipeline full(in_memory(true, true, 1000, 1000, 50), {index}, stub);
    Pipeline mono_only(in_memory(true, false, 1000, 1000), {index}, stub);
    auto result = full.run(s.topics);
    auto ablation = mono_only.run(s.topics);
    REQUIRE(result.ok());
    for (std::size_t q = 0; q < s.topics.size(); ++q) {
        auto const& h1 = *result.queries[q].h1;
        auto const& h2 = *result.queries[q].h2;
        REQUIRE(h1.size() == 1000);
        REQUIRE(h2.size() == 1000);
        CHECK(std::equal(h2.entries.begin() + 50, h2.entries.end(), h1.entries.begin() + 50));
        CHECK(ablation.queries[q].final_list().entries == h1.entries);
    }
    auto mono_lines = lines_of(run_text(result.stage_run(1, "x")));
    auto duo_lines = lines_of(run_text(result.stage_run(2, "x")));
    REQUIRE(mono_lines.size() == duo_lines.size());
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t r = 50; r < 1000; ++r) {
            CHECK(mono_lines[q * 1000 + r] == duo_lines[q * 1000 + r]);
        }
    }
}

TEST_CASE("runs from a config file are byte-identical across executions")
{
    testing::TempDir dir;
    auto s = synthetic(150, 10);
    write_corpus(dir / "corpus.jsonl", s.docs);
    auto text = "[retrieval]\ncorpus = \"" + (dir / "corpus.jsonl").string() +
                "\"\nk0 = 50\n[mono]\nenabled = true\nk_out = 30\n[duo]\nenabled = true\nk1 = 8\n"
                "[expansion]\nenabled = true\nqueries_per_unit = 2\n";
    auto cfg = parse_pipeline_config(text);
    StubScorer stub;
    std::string first;
    for (int round = 0; round < 2; ++round) {
        auto pipeline = Pipeline::open(cfg, stub);
        auto result = pipeline->run(s.topics);
        REQUIRE(result.ok());
        write_stage_runs(result, dir / ("stages" + std::to_string(round)), cfg.run_tag());
        auto out = run_text(result.final_run(cfg.run_tag()));
        if (round == 0) {
            first = out;
        } else {
            CHECK(out == first);
        }
    }
    CHECK(first.find(" expando-mono-duo\n") != std::string::npos);
    for (auto stage : {".h0.run", ".h1.run", ".h2.run"}) {
        auto a = testing::read_file(dir / ("stages0/expando-mono-duo" + std::string(stage)));
        auto b = testing::read_file(dir / ("stages1/expando-mono-duo" + std::string(stage)));
        CHECK_FALSE(a.empty());
        CHECK(a == b);
    }
}

TEST_CASE("failing queries are reported and left out")
{
    auto s = synthetic(50, 4);
    auto index = index_of(s.docs);
    StubScorer stub;
    testing::FlakyScorer down(stub, 1 << 30);
    auto cfg = in_memory(true, false, 20, 20);
    cfg.mono.options.retry.backoff = std::chrono::milliseconds(0);
    Pipeline pipeline(cfg, {index}, down);
    auto result = pipeline.run(s.topics);
    CHECK_FALSE(result.ok());
    CHECK(result.failures.size() == 4);
    CHECK(result.queries.empty());
    CHECK(result.failures[0].second.find("simulated outage") != std::string::npos);
}

TEST_CASE("query-mode branches and several indexes are fused")
{
    auto s = synthetic(100, 5);
    for (auto& t : s.topics) {
        t.question = "which document mentions " + t.query + "?";
    }
    auto index = index_of(s.docs);
    auto half = index_of(std::vector<Document>(s.docs.begin(), s.docs.begin() + 50));
    StubScorer stub;
    auto cfg = in_memory(true, false, 40, 40);
    cfg.retrieval.query_modes = {QueryMode::concat, QueryMode::keyword};
    Pipeline pipeline(cfg, {index, half}, stub);
    for (auto const& topic : s.topics) {
        auto prepared = pipeline.prepare(topic);
        REQUIRE(prepared.branches.size() == 2);
        auto result = pipeline.finish(prepared, cfg.duo, stub);
        std::vector<RankedList> h0{prepared.branches[0].h0, prepared.branches[1].h0};
        CHECK(result.h0.entries == rrf_fuse(h0).entries);
        CHECK(result.h0.stage == "h0");
        std::vector<RankedList> h1{*prepared.branches[0].h1, *prepared.branches[1].h1};
        CHECK(result.h1->entries == rrf_fuse(h1).entries);
    }
}

TEST_CASE("document ranking with MaxP reranking and collapsed passages")
{
    testing::TempDir dir;
    std::vector<Document> docs;
    for (int i = 0; i < 30; ++i) {
        std::string body;
        for (int sentence = 0; sentence < 12; ++sentence) {
            body += "Sentence " + std::to_string(sentence) + " of doc. ";
        }
        body += "Needle" + std::to_string(i) + " sits late. ";
        docs.push_back({"d" + std::to_string(i), "Doc", body});
    }
    write_corpus(dir / "docs.jsonl", docs);
    auto cfg = parse_pipeline_config("[segmentation]\nwindow = 4\nstride = 2\n[retrieval]\ncorpus = \"" +
                                     (dir / "docs.jsonl").string() +
                                     "\"\nper_passage = true\ncollapse_passages = true\nk0 = 1000\n"
                                     "[mono]\nenabled = true\nk_out = 10\nmaxp = true\n"
                                     "[duo]\nenabled = true\nk1 = 5\n");
    StubScorer stub;
    auto pipeline = Pipeline::open(cfg, stub);
    Topic topic{"q", "needle7 sentence", std::nullopt, std::nullopt};
    auto prepared = pipeline->prepare(topic);
    auto const& branch = prepared.branches.front();
    REQUIRE(branch.h0.size() == 30);
    REQUIRE(branch.h1->size() == 10);
    CHECK(branch.h0.entries.front().id == "d7");
    CHECK(branch.h1->entries.front().id == "d7");
    CHECK(branch.h1->entries.front().score == 1.0);
    // The representative is the passage holding the needle, not the title passage.
    CHECK(branch.representatives.at("d7").find("Needle7") != std::string::npos);
    auto result = pipeline->finish(prepared, cfg.duo, stub);
    CHECK(result.h2->entries.front().id == "d7");
    CHECK(result.h2->size() == 10);
}

TEST_CASE("k1 sweep reports inference counts and reuses mono output")
{
    auto s = synthetic(200, 4);
    auto index = index_of(s.docs);
    auto oracle = oracle_for(s);
    CountingScorer counting(oracle);
    Pipeline pipeline(in_memory(true, true, 100, 60, 50), {index}, counting);
    std::vector<std::size_t> k1s{0, 10, 20, 30, 40, 50};
    std::vector<AggregationMethod> methods(std::begin(kAllAggregationMethods), std::end(kAllAggregationMethods));
    auto rows = sweep_k1(pipeline, s.topics, s.qrels, k1s, methods, parse_metric("mrr@10"));
    REQUIRE(rows.size() == 24);
    std::vector<std::size_t> expected{0, 90, 380, 870, 1560, 2450};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto k = i / methods.size();
        CHECK(rows[i].k1 == k1s[k]);
        CHECK(rows[i].method == methods[i % methods.size()]);
        CHECK(rows[i].inference_count == expected[k]);
        CHECK(rows[i].measured_calls == expected[k] * s.topics.size());
        CHECK(rows[i].value == 1.0);
    }
    // Mono ran once per topic over the 100 first-stage candidates.
    CHECK(counting.mono_calls() == 100 * s.topics.size());

    std::ostringstream table;
    write_sweep_table(table, rows);
    auto lines = lines_of(table.str());
    CHECK(lines.size() == 25);
    CHECK(lines[0].starts_with("k1\tmethod\t"));

    std::vector<std::size_t> one{10};
    std::vector<AggregationMethod> single{AggregationMethod::sym_sum};
    CHECK(sweep_k1(pipeline, s.topics, s.qrels, one, single, parse_metric("ndcg@10")).size() == 1);
}
