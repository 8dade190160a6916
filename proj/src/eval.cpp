#include "emd/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emd/error.hpp"

namespace emd {

namespace {

std::vector<std::string_view> fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) != 0) {
            ++i;
        }
        auto start = i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) == 0) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value)
{
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<RunEntry> const& entries_for(Run const& run, std::string const& qid)
{
    static std::vector<RunEntry> const none;
    auto it = run.queries.find(qid);
    return it == run.queries.end() ? none : it->second;
}

std::size_t count_relevant(std::map<std::string, int> const& judged, int threshold)
{
    return static_cast<std::size_t>(
        std::count_if(judged.begin(), judged.end(), [&](auto const& j) { return j.second >= threshold; }));
}

template <typename PerQuery>
MetricReport evaluate_each(std::string name, Qrels const& qrels, PerQuery&& per_query)
{
    MetricReport report;
    report.name = std::move(name);
    double sum = 0.0;
    std::size_t defined = 0;
    for (auto const& [qid, judged] : qrels.judgments) {
        std::optional<double> value = per_query(qid, judged);
        report.per_query[qid] = value;
        if (value) {
            sum += *value;
            ++defined;
        }
    }
    report.mean = defined > 0 ? sum / static_cast<double>(defined) : 0.0;
    return report;
}

int grade_in(std::map<std::string, int> const& judged, std::string const& docid)
{
    auto it = judged.find(docid);
    return it == judged.end() ? 0 : it->second;
}

}  // namespace

int Qrels::grade(std::string const& qid, std::string const& docid) const
{
    auto q = judgments.find(qid);
    return q == judgments.end() ? 0 : grade_in(q->second, docid);
}

bool Qrels::contains(std::string const& qid, std::string const& docid) const
{
    auto q = judgments.find(qid);
    return q != judgments.end() && q->second.contains(docid);
}

std::string format_score(double score)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, score);
    if (ec != std::errc()) {
        throw error("cannot format score");
    }
    return {buf, ptr};
}

Run read_run(std::istream& in, std::string const& source)
{
    Run run;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto cols = fields(line);
        if (cols.empty()) {
            continue;
        }
        if (cols.size() != 6) {
            throw parse_error(source, lineno, "expected 6 columns, found " + std::to_string(cols.size()));
        }
        RunEntry entry;
        entry.docid = std::string(cols[2]);
        if (!parse_number(cols[3], entry.rank)) {
            throw parse_error(source, lineno, "non-numeric rank \"" + std::string(cols[3]) + "\"");
        }
        if (!parse_number(cols[4], entry.score)) {
            throw parse_error(source, lineno, "non-numeric score \"" + std::string(cols[4]) + "\"");
        }
        entry.tag = std::string(cols[5]);
        run.queries[std::string(cols[0])].push_back(std::move(entry));
    }
    for (auto& [qid, entries] : run.queries) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](RunEntry const& a, RunEntry const& b) { return a.rank < b.rank; });
    }
    return run;
}

Run read_run(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error("cannot open run " + path.string());
    }
    return read_run(in, path.string());
}

void write_run(std::ostream& out, Run const& run)
{
    for (auto const& [qid, entries] : run.queries) {
        for (auto const& e : entries) {
            out << qid << " Q0 " << e.docid << ' ' << e.rank << ' ' << format_score(e.score) << ' ' << e.tag << '\n';
        }
    }
}

void write_run(std::filesystem::path const& path, Run const& run)
{
    std::ofstream out(path);
    if (!out) {
        throw error("cannot write run " + path.string());
    }
    write_run(out, run);
    if (!out) {
        throw error("failed writing run " + path.string());
    }
}

Qrels read_qrels(std::istream& in, std::string const& source)
{
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto cols = fields(line);
        if (cols.empty()) {
            continue;
        }
        if (cols.size() != 4) {
            throw parse_error(source, lineno, "expected 4 columns, found " + std::to_string(cols.size()));
        }
        int grade = 0;
        if (!parse_number(cols[3], grade)) {
            throw parse_error(source, lineno, "non-numeric grade \"" + std::string(cols[3]) + "\"");
        }
        if (grade < 0) {
            throw parse_error(source, lineno, "negative grade");
        }
        qrels.judgments[std::string(cols[0])][std::string(cols[2])] = grade;
    }
    return qrels;
}

Qrels read_qrels(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error("cannot open qrels " + path.string());
    }
    return read_qrels(in, path.string());
}

void write_qrels(std::ostream& out, Qrels const& qrels)
{
    for (auto const& [qid, judged] : qrels.judgments) {
        for (auto const& [docid, grade] : judged) {
            out << qid << " 0 " << docid << ' ' << grade << '\n';
        }
    }
}

void append_to_run(Run& run, RankedList const& list, std::string const& tag)
{
    auto& entries = run.queries[list.qid];
    entries.clear();
    entries.reserve(list.size());
    for (std::size_t r = 0; r < list.size(); ++r) {
        entries.push_back({list.entries[r].id, r + 1, list.entries[r].score, tag});
    }
}

Run to_run(std::span<RankedList const> lists, std::string const& tag)
{
    Run run;
    for (auto const& list : lists) {
        append_to_run(run, list, tag);
    }
    return run;
}

RankedList to_ranked_list(Run const& run, std::string const& qid)
{
    RankedList list{qid, {}, "run"};
    for (auto const& e : entries_for(run, qid)) {
        list.entries.push_back({e.docid, e.score});
    }
    return list;
}

MetricReport mrr_at_k(Run const& run, Qrels const& qrels, std::size_t k, EvalOptions const& opts)
{
    return evaluate_each("mrr@" + std::to_string(k), qrels, [&](std::string const& qid, auto const& judged) {
        auto const& entries = entries_for(run, qid);
        for (std::size_t r = 0; r < std::min(k, entries.size()); ++r) {
            if (grade_in(judged, entries[r].docid) >= opts.rel_threshold) {
                return std::optional<double>(1.0 / static_cast<double>(r + 1));
            }
        }
        return std::optional<double>(0.0);
    });
}

MetricReport ndcg_at_k(Run const& run, Qrels const& qrels, std::size_t k)
{
    return evaluate_each("ndcg@" + std::to_string(k), qrels, [&](std::string const& qid, auto const& judged) {
        std::vector<int> ideal;
        for (auto const& [docid, grade] : judged) {
            if (grade > 0) {
                ideal.push_back(grade);
            }
        }
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) {
            idcg += ideal[r] / std::log2(static_cast<double>(r + 2));
        }
        if (idcg == 0.0) {
            return std::optional<double>(0.0);
        }
        auto const& entries = entries_for(run, qid);
        double dcg = 0.0;
        for (std::size_t r = 0; r < std::min(k, entries.size()); ++r) {
            int grade = grade_in(judged, entries[r].docid);
            if (grade > 0) {
                dcg += grade / std::log2(static_cast<double>(r + 2));
            }
        }
        return std::optional<double>(dcg / idcg);
    });
}

MetricReport average_precision(Run const& run, Qrels const& qrels, std::size_t depth, EvalOptions const& opts)
{
    std::string name = depth == 1000 ? "map" : "map@" + std::to_string(depth);
    return evaluate_each(std::move(name), qrels, [&](std::string const& qid, auto const& judged) {
        auto relevant = count_relevant(judged, opts.rel_threshold);
        if (relevant == 0) {
            return std::optional<double>(0.0);
        }
        auto const& entries = entries_for(run, qid);
        std::size_t hits = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < std::min(depth, entries.size()); ++r) {
            if (grade_in(judged, entries[r].docid) >= opts.rel_threshold) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        return std::optional<double>(sum / static_cast<double>(relevant));
    });
}

MetricReport recall_at_k(Run const& run, Qrels const& qrels, std::size_t k, EvalOptions const& opts)
{
    return evaluate_each("recall@" + std::to_string(k), qrels, [&](std::string const& qid, auto const& judged) {
        auto relevant = count_relevant(judged, opts.rel_threshold);
        if (relevant == 0) {
            return std::optional<double>();
        }
        auto const& entries = entries_for(run, qid);
        std::size_t hits = 0;
        for (std::size_t r = 0; r < std::min(k, entries.size()); ++r) {
            if (grade_in(judged, entries[r].docid) >= opts.rel_threshold) {
                ++hits;
            }
        }
        return std::optional<double>(static_cast<double>(hits) / static_cast<double>(relevant));
    });
}

std::string MetricSpec::name() const
{
    switch (kind) {
        case MetricKind::mrr: return "mrr@" + std::to_string(cutoff);
        case MetricKind::ndcg: return "ndcg@" + std::to_string(cutoff);
        case MetricKind::map: return cutoff == 1000 ? "map" : "map@" + std::to_string(cutoff);
        case MetricKind::recall: return "recall@" + std::to_string(cutoff);
    }
    return "?";
}

MetricSpec parse_metric(std::string_view text)
{
    auto at = text.find('@');
    auto base = text.substr(0, at);
    std::optional<std::size_t> cutoff;
    if (at != std::string_view::npos) {
        std::size_t value = 0;
        if (!parse_number(text.substr(at + 1), value) || value == 0) {
            throw error("bad metric cutoff in \"" + std::string(text) + "\"");
        }
        cutoff = value;
    }
    MetricKind kind;
    if (base == "mrr" || base == "recip_rank") {
        kind = MetricKind::mrr;
    } else if (base == "ndcg" || base == "ndcg_cut") {
        kind = MetricKind::ndcg;
    } else if (base == "map") {
        kind = MetricKind::map;
        cutoff = cutoff.value_or(1000);
    } else if (base == "recall" || base == "r") {
        kind = MetricKind::recall;
    } else {
        throw error("unknown metric \"" + std::string(text) + "\"");
    }
    if (!cutoff) {
        throw error("metric \"" + std::string(text) + "\" needs an explicit cutoff, e.g. " + std::string(base) +
                    "@10");
    }
    return {kind, *cutoff};
}

std::vector<MetricSpec> parse_metrics(std::string_view comma_separated)
{
    std::vector<MetricSpec> specs;
    std::size_t start = 0;
    while (start <= comma_separated.size()) {
        auto comma = comma_separated.find(',', start);
        auto item = comma_separated.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                    : comma - start);
        if (!item.empty()) {
            specs.push_back(parse_metric(item));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    if (specs.empty()) {
        throw error("no metrics requested");
    }
    return specs;
}

MetricReport evaluate(Run const& run, Qrels const& qrels, MetricSpec const& spec, EvalOptions const& opts)
{
    switch (spec.kind) {
        case MetricKind::mrr: return mrr_at_k(run, qrels, spec.cutoff, opts);
        case MetricKind::ndcg: return ndcg_at_k(run, qrels, spec.cutoff);
        case MetricKind::map: return average_precision(run, qrels, spec.cutoff, opts);
        case MetricKind::recall: return recall_at_k(run, qrels, spec.cutoff, opts);
    }
    throw error("unknown metric kind");
}

Run residual_filter(Run const& run, Qrels const& prior)
{
    Run out;
    for (auto const& [qid, entries] : run.queries) {
        auto& kept = out.queries[qid];
        for (auto const& e : entries) {
            if (!prior.contains(qid, e.docid)) {
                kept.push_back(e);
                kept.back().rank = kept.size();
            }
        }
    }
    return out;
}

}  // namespace emd
