#include <doctest.h>

#include <random>

#include "emd/duo.hpp"
#include "emd/error.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace emd;
using doctest::Approx;

namespace {

PairwiseMatrix paper_matrix()
{
    PairwiseMatrix m({"d1", "d2", "d3"});
    m.set(0, 1, 0.9);
    m.set(0, 2, 0.8);
    m.set(1, 0, 0.2);
    m.set(1, 2, 0.6);
    m.set(2, 0, 0.1);
    m.set(2, 1, 0.3);
    return m;
}

std::vector<std::vector<double>> as_rows(PairwiseMatrix const& m)
{
    std::vector<std::vector<double>> rows(m.size(), std::vector<double>(m.size(), 0.0));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (i != j) {
                rows[i][j] = m(i, j);
            }
        }
    }
    return rows;
}

/// Serves the matrix of paper_matrix() keyed by text.
class MatrixScorer final : public Scorer {
  public:
    explicit MatrixScorer(PairwiseMatrix m) : m_matrix(std::move(m)) {}
    std::vector<double> score_mono(std::string const&, std::span<std::string const> texts) override
    {
        return std::vector<double>(texts.size(), 0.5);
    }
    std::vector<double> score_duo(std::string const&, std::span<TextPair const> pairs) override
    {
        std::vector<double> out;
        for (auto const& [a, b] : pairs) {
            out.push_back(m_matrix(index(a), index(b)));
        }
        return out;
    }

  private:
    std::size_t index(std::string const& text) const
    {
        auto const& ids = m_matrix.ids();
        return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), text) - ids.begin());
    }
    PairwiseMatrix m_matrix;
};

std::string const& identity(std::string const& id) { return id; }

RankedList mono_list(std::size_t n)
{
    RankedList list{"q", {}, "mono"};
    for (std::size_t i = 0; i < n; ++i) {
        list.entries.push_back({"d" + std::to_string(i), 1.0 - static_cast<double>(i) / static_cast<double>(n)});
    }
    return list;
}

}  // namespace

TEST_CASE("duo prompt template")
{
    CHECK(render_duo_prompt("q", "a", "b").rendered == "Query: q Document0: a Document1: b Relevant:");
    CHECK(render_duo_prompt("q", "b", "a").rendered != render_duo_prompt("q", "a", "b").rendered);
    CHECK_THROWS_AS(render_duo_prompt("q", "a", ""), error);
    CHECK_THROWS_AS(render_duo_prompt("", "a", "b"), error);
}

TEST_CASE("aggregation method names")
{
    for (auto method : kAllAggregationMethods) {
        CHECK(parse_aggregation(to_string(method)) == method);
    }
    CHECK(parse_aggregation("Sym_Sum") == AggregationMethod::sym_sum);
    CHECK_THROWS_AS(parse_aggregation("max"), error);
}

TEST_CASE("aggregation on the three-candidate example")
{
    auto m = paper_matrix();
    auto sum = aggregate(m, AggregationMethod::sum);
    CHECK(sum[0] == Approx(1.7).epsilon(1e-12));
    CHECK(sum[1] == Approx(0.8).epsilon(1e-12));
    CHECK(sum[2] == Approx(0.4).epsilon(1e-12));
    auto sym = aggregate(m, AggregationMethod::sym_sum);
    CHECK(sym[0] == Approx(3.4).epsilon(1e-12));
    CHECK(sym[1] == Approx(1.6).epsilon(1e-12));
    CHECK(sym[2] == Approx(1.0).epsilon(1e-12));

    auto rows = as_rows(m);
    for (auto method : kAllAggregationMethods) {
        auto got = aggregate(m, method);
        auto want = oracle::aggregate(rows, std::string(to_string(method)));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(got[i] == Approx(want[i]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(aggregate(PairwiseMatrix({"solo"}), AggregationMethod::sum), error);
}

TEST_CASE("uniform and saturated matrices")
{
    for (std::size_t k = 2; k <= 8; ++k) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < k; ++i) {
            ids.push_back("d" + std::to_string(i));
        }
        PairwiseMatrix half(ids);
        PairwiseMatrix ones(ids);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (i != j) {
                    half.set(i, j, 0.5);
                    ones.set(i, j, 1.0);
                }
            }
        }
        auto const k_minus_1 = static_cast<double>(k - 1);
        for (double s : aggregate(half, AggregationMethod::sum)) {
            CHECK(s == Approx(k_minus_1 * 0.5));
        }
        for (double s : aggregate(half, AggregationMethod::sym_sum)) {
            CHECK(s == Approx(k_minus_1));
        }
        for (double s : aggregate(ones, AggregationMethod::sum_log)) {
            CHECK(s == Approx(k_minus_1 * std::log(1.0 - 1e-6)).epsilon(1e-12));
            CHECK(s <= 0.0);
        }
    }
    PairwiseMatrix m({"a", "b"});
    CHECK_THROWS_AS(m.set(0, 0, 0.5), error);
    CHECK_THROWS_AS(m.set(0, 1, 1.1), error);
}

TEST_CASE("aggregation matches the brute-force oracle on random matrices")
{
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(2, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        auto n = size(rng);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(std::to_string(i));
        }
        PairwiseMatrix m(ids);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    // Occasionally hit the exact endpoints.
                    double p = unit(rng);
                    m.set(i, j, p < 0.05 ? 0.0 : p > 0.95 ? 1.0 : p);
                }
            }
        }
        auto rows = as_rows(m);
        for (auto method : kAllAggregationMethods) {
            auto got = aggregate(m, method);
            auto want = oracle::aggregate(rows, std::string(to_string(method)));
            for (std::size_t i = 0; i < n; ++i) {
                REQUIRE(std::abs(got[i] - want[i]) <= 1e-9);
            }
        }
    }
}

TEST_CASE("complementary matrices make sym-sum twice sum")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
        std::vector<std::string> ids(n);
        PairwiseMatrix m(ids);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double p = unit(rng);
                m.set(i, j, p);
                m.set(j, i, 1.0 - p);
            }
        }
        auto sum = aggregate(m, AggregationMethod::sum);
        auto sym = aggregate(m, AggregationMethod::sym_sum);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(sym[i] == Approx(2.0 * sum[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("pair scoring issues one evaluation per ordered pair")
{
    StubScorer stub;
    for (std::size_t k : {2U, 10U, 50U}) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < k; ++i) {
            ids.push_back("text " + std::to_string(i));
        }
        CountingScorer counting(stub);
        RerankOptions opts;
        opts.max_in_flight = 4;
        auto m = score_pairs("text", ids, ids, counting, opts);
        CHECK(counting.duo_calls() == k * (k - 1));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (i != j) {
                    CHECK(m(i, j) == stub_duo_score("text", ids[i], ids[j]));
                }
            }
        }
    }
    std::vector<std::string> one{"x"};
    CHECK_THROWS_AS(score_pairs("q", one, one, stub), error);
}

TEST_CASE("duo rerank with the example matrix")
{
    MatrixScorer scorer(paper_matrix());
    RankedList mono{"q", {{"d3", 0.9}, {"d2", 0.8}, {"d1", 0.7}}, "mono"};
    auto out = duo_rerank("q", mono, 3, AggregationMethod::sym_sum, scorer, identity);
    REQUIRE(out.size() == 3);
    CHECK(out.entries[0].id == "d1");
    CHECK(out.entries[1].id == "d2");
    CHECK(out.entries[2].id == "d3");
    CHECK(out.entries[0].score == Approx(3.4));
    CHECK(out.stage == "duo");
}

TEST_CASE("k1 of zero or one leaves the mono list untouched")
{
    auto mono = mono_list(10);
    StubScorer stub;
    CountingScorer counting(stub);
    for (std::size_t k1 : {0U, 1U}) {
        auto out = duo_rerank("q", mono, k1, AggregationMethod::sym_sum, counting, identity);
        CHECK(out.entries == mono.entries);
    }
    CHECK(counting.duo_calls() == 0);
}

TEST_CASE("residual merge keeps the tail and stays sorted")
{
    auto mono = mono_list(1000);
    testing::ConstantScorer constant(0.5);
    StubScorer stub;
    for (Scorer* scorer : {static_cast<Scorer*>(&constant), static_cast<Scorer*>(&stub)}) {
        for (auto method : kAllAggregationMethods) {
            auto out = duo_rerank("d1 d7", mono, 50, method, *scorer, identity);
            REQUIRE(out.size() == 1000);
            CHECK(std::equal(out.entries.begin() + 50, out.entries.end(), mono.entries.begin() + 50));
            for (std::size_t r = 1; r < out.size(); ++r) {
                CHECK(out.entries[r - 1].score >= out.entries[r].score);
            }
            std::multiset<std::string> before;
            std::multiset<std::string> after;
            for (std::size_t r = 0; r < 1000; ++r) {
                before.insert(mono.entries[r].id);
                after.insert(out.entries[r].id);
            }
            CHECK(before == after);
        }
    }
    // Uniform probabilities tie everywhere, so the head keeps mono order.
    auto tied = duo_rerank("q", mono, 50, AggregationMethod::sym_sum, constant, identity);
    for (std::size_t r = 0; r < 50; ++r) {
        CHECK(tied.entries[r].id == mono.entries[r].id);
    }
    // k1 larger than the list clamps to the list.
    auto small = mono_list(4);
    CountingScorer counting(stub);
    CHECK(duo_rerank("q", small, 50, AggregationMethod::sum, counting, identity).size() == 4);
    CHECK(counting.duo_calls() == 12);
}

TEST_CASE("perfect pairwise oracle sorts by grade under sym-sum")
{
    std::mt19937 rng(13);
    std::uniform_int_distribution<int> grade(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t k = 2 + static_cast<std::size_t>(trial % 6);
        auto mono = mono_list(k);
        std::unordered_map<std::string, int> grades;
        std::vector<int> by_position;
        for (auto const& e : mono.entries) {
            by_position.push_back(grade(rng));
            grades[e.id] = by_position.back();
        }
        testing::OracleScorer scorer(grades, 3);
        auto out = duo_rerank("q", mono, k, AggregationMethod::sym_sum, scorer, identity);
        auto expected = oracle::sort_by_grade(by_position);
        for (std::size_t r = 0; r < k; ++r) {
            CHECK(out.entries[r].id == mono.entries[expected[r]].id);
        }
    }
}
