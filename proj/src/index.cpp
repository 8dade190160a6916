#include "emd/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>

#include "emd/corpus.hpp"
#include "emd/error.hpp"
#include "emd/text.hpp"

namespace emd {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'D', 'X'};

// Host byte order; indexes are not portable across endianness.
class BinaryWriter {
  public:
    explicit BinaryWriter(std::filesystem::path const& path) : m_path(path), m_out(path, std::ios::binary)
    {
        if (!m_out) {
            throw error("cannot write " + path.string());
        }
        m_out.write(kMagic, sizeof kMagic);
        u32(kIndexFormatVersion);
    }

    void u32(std::uint32_t v) { m_out.write(reinterpret_cast<char const*>(&v), sizeof v); }
    void u64(std::uint64_t v) { m_out.write(reinterpret_cast<char const*>(&v), sizeof v); }
    void str(std::string const& s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        m_out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void close()
    {
        m_out.close();
        if (!m_out) {
            throw error("failed writing " + m_path.string());
        }
    }

  private:
    std::filesystem::path m_path;
    std::ofstream m_out;
};

class BinaryReader {
  public:
    explicit BinaryReader(std::filesystem::path const& path) : m_path(path), m_in(path, std::ios::binary)
    {
        if (!m_in) {
            throw error("cannot read " + path.string());
        }
        char magic[4];
        m_in.read(magic, sizeof magic);
        if (!m_in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
            throw error(path.string() + " is not an index file");
        }
        if (auto version = u32(); version != kIndexFormatVersion) {
            throw error(path.string() + " has unsupported format version " + std::to_string(version));
        }
    }

    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        read(&v, sizeof v);
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v = 0;
        read(&v, sizeof v);
        return v;
    }
    std::string str()
    {
        std::string s(u32(), '\0');
        read(s.data(), s.size());
        return s;
    }

  private:
    void read(void* dst, std::size_t n)
    {
        m_in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!m_in) {
            throw error("truncated index file " + m_path.string());
        }
    }

    std::filesystem::path m_path;
    std::ifstream m_in;
};

bool all_digits(std::string const& term)
{
    return std::all_of(term.begin(), term.end(), [](char c) { return c >= '0' && c <= '9'; });
}

RankedList search_impl(InvertedIndex const& index, WeightedQuery const& query, std::size_t k0,
                       Bm25Params const& params, bool weighted)
{
    params.validate();
    if (k0 < 1) {
        throw error("k0 must be at least 1");
    }
    RankedList out;
    out.stage = "bm25";
    std::vector<double> scores(index.doc_count(), 0.0);
    std::vector<char> touched(index.doc_count(), 0);
    std::vector<std::uint32_t> hits;
    double const avgdl = index.avg_doc_length();
    for (auto const& [term, weight] : query) {
        if (weighted && weight == 0.0) {
            continue;
        }
        auto postings = index.postings(term);
        if (postings.empty()) {
            continue;
        }
        double idf = bm25_idf(index.doc_count(), postings.size());
        for (auto const& p : postings) {
            double s = bm25_term_score(idf, p.tf, index.doc_length(p.doc), avgdl, params);
            scores[p.doc] += weighted ? weight * s : s;
            if (touched[p.doc] == 0) {
                touched[p.doc] = 1;
                hits.push_back(p.doc);
            }
        }
    }
    out.entries.reserve(hits.size());
    for (auto doc : hits) {
        out.entries.push_back({index.unit_id(doc), scores[doc]});
    }
    sort_and_truncate(out.entries, k0);
    return out;
}

}  // namespace

void Bm25Params::validate() const
{
    std::vector<std::string> problems;
    if (!(k1 > 0.0)) {
        problems.emplace_back("bm25 k1 must be positive");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        problems.emplace_back("bm25 b must be in [0, 1]");
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

void Rm3Params::validate() const
{
    std::vector<std::string> problems;
    if (fb_docs < 1) {
        problems.emplace_back("rm3 fb_docs must be positive");
    }
    if (fb_terms < 1) {
        problems.emplace_back("rm3 fb_terms must be positive");
    }
    if (!(original_weight >= 0.0 && original_weight <= 1.0)) {
        problems.emplace_back("rm3 original_weight must be in [0, 1]");
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

void InvertedIndex::Builder::add(IndexUnit unit) { add(std::move(unit.id), unit.index_text, std::move(unit.original_text)); }

void InvertedIndex::Builder::add(std::string id, std::string_view index_text, std::string original_text)
{
    if (id.empty()) {
        throw error("empty unit id");
    }
    auto ordinal = static_cast<std::uint32_t>(m_ids.size());
    if (!m_ordinals.emplace(id, ordinal).second) {
        throw error("duplicate unit id " + id);
    }
    std::map<std::uint32_t, std::uint32_t> counts;
    std::uint32_t length = 0;
    for (auto& token : tokenize(index_text)) {
        auto [it, inserted] = m_term_ids.try_emplace(token, static_cast<std::uint32_t>(m_terms.size()));
        if (inserted) {
            m_terms.push_back(std::move(token));
            m_postings.emplace_back();
        }
        ++counts[it->second];
        ++length;
    }
    for (auto [term, tf] : counts) {
        m_postings[term].push_back({ordinal, tf});
    }
    m_lengths.push_back(length);
    m_ids.push_back(std::move(id));
    m_texts.push_back(std::move(original_text));
}

InvertedIndex InvertedIndex::Builder::finish() &&
{
    if (m_ids.empty()) {
        throw error("empty corpus");
    }
    InvertedIndex index;
    index.m_term_ids = std::move(m_term_ids);
    index.m_terms = std::move(m_terms);
    index.m_postings = std::move(m_postings);
    index.m_lengths = std::move(m_lengths);
    index.m_ids = std::move(m_ids);
    index.m_ordinals = std::move(m_ordinals);
    index.m_texts = std::move(m_texts);
    index.finalize();
    return index;
}

void InvertedIndex::finalize()
{
    m_total_length = 0;
    for (auto len : m_lengths) {
        m_total_length += len;
    }
    m_avg_length = static_cast<double>(m_total_length) / static_cast<double>(m_lengths.size());
    m_forward.assign(m_ids.size(), {});
    for (std::uint32_t term = 0; term < m_postings.size(); ++term) {
        for (auto const& p : m_postings[term]) {
            m_forward[p.doc].push_back({term, p.tf});
        }
    }
}

InvertedIndex InvertedIndex::build(std::span<IndexUnit const> units)
{
    Builder builder;
    for (auto const& unit : units) {
        builder.add(unit);
    }
    return std::move(builder).finish();
}

std::span<Posting const> InvertedIndex::postings(std::string_view term) const
{
    auto it = m_term_ids.find(std::string(term));
    if (it == m_term_ids.end()) {
        return {};
    }
    return m_postings[it->second];
}

std::uint32_t InvertedIndex::term_freq(std::string_view term, std::uint32_t ordinal) const
{
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), ordinal,
                               [](Posting const& p, std::uint32_t doc) { return p.doc < doc; });
    return it != list.end() && it->doc == ordinal ? it->tf : 0;
}

std::optional<std::uint32_t> InvertedIndex::ordinal_of(std::string const& id) const
{
    auto it = m_ordinals.find(id);
    if (it == m_ordinals.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string const& InvertedIndex::original_text(std::string const& id) const
{
    auto ordinal = ordinal_of(id);
    if (!ordinal) {
        throw error("unknown unit id " + id);
    }
    return m_texts[*ordinal];
}

void InvertedIndex::save(std::filesystem::path const& dir, std::string const& extra_manifest_json) const
{
    std::filesystem::create_directories(dir);
    {
        BinaryWriter w(dir / "postings.bin");
        w.u64(m_terms.size());
        for (std::size_t t = 0; t < m_terms.size(); ++t) {
            w.str(m_terms[t]);
            w.u32(static_cast<std::uint32_t>(m_postings[t].size()));
            for (auto const& p : m_postings[t]) {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        w.close();
    }
    {
        BinaryWriter w(dir / "lengths.bin");
        w.u64(m_lengths.size());
        for (auto len : m_lengths) {
            w.u32(len);
        }
        w.close();
    }
    for (auto const& [name, strings] : {std::pair{"ids.bin", &m_ids}, std::pair{"texts.bin", &m_texts}}) {
        BinaryWriter w(dir / name);
        w.u64(strings->size());
        for (auto const& s : *strings) {
            w.str(s);
        }
        w.close();
    }
    auto manifest = nlohmann::json::parse(extra_manifest_json);
    if (!manifest.is_object()) {
        throw error("manifest extras must be a JSON object");
    }
    manifest["format_version"] = kIndexFormatVersion;
    manifest["doc_count"] = doc_count();
    manifest["avg_doc_length"] = m_avg_length;
    manifest["total_length"] = m_total_length;
    manifest["term_count"] = m_terms.size();
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw error("cannot write manifest in " + dir.string());
    }
}

InvertedIndex InvertedIndex::load(std::filesystem::path const& dir)
{
    std::ifstream manifest_in(dir / "manifest.json");
    if (!manifest_in) {
        throw error("no index manifest in " + dir.string());
    }
    auto manifest = nlohmann::json::parse(manifest_in, nullptr, false);
    if (manifest.is_discarded() || manifest.value("format_version", 0u) != kIndexFormatVersion) {
        throw error("unreadable or incompatible index manifest in " + dir.string());
    }

    InvertedIndex index;
    {
        BinaryReader r(dir / "lengths.bin");
        index.m_lengths.resize(r.u64());
        for (auto& len : index.m_lengths) {
            len = r.u32();
        }
    }
    {
        BinaryReader r(dir / "ids.bin");
        index.m_ids.resize(r.u64());
        for (std::uint32_t i = 0; i < index.m_ids.size(); ++i) {
            index.m_ids[i] = r.str();
            index.m_ordinals.emplace(index.m_ids[i], i);
        }
    }
    {
        BinaryReader r(dir / "texts.bin");
        index.m_texts.resize(r.u64());
        for (auto& text : index.m_texts) {
            text = r.str();
        }
    }
    {
        BinaryReader r(dir / "postings.bin");
        auto terms = r.u64();
        index.m_terms.reserve(terms);
        index.m_postings.reserve(terms);
        for (std::uint64_t t = 0; t < terms; ++t) {
            index.m_terms.push_back(r.str());
            index.m_term_ids.emplace(index.m_terms.back(), static_cast<std::uint32_t>(t));
            auto& list = index.m_postings.emplace_back(r.u32());
            for (auto& p : list) {
                p.doc = r.u32();
                p.tf = r.u32();
                if (p.doc >= index.m_lengths.size()) {
                    throw error("corrupt postings in " + dir.string());
                }
            }
        }
    }
    auto const n = index.m_lengths.size();
    if (n == 0 || index.m_ids.size() != n || index.m_texts.size() != n ||
        manifest.value("doc_count", std::size_t{0}) != n) {
        throw error("inconsistent index files in " + dir.string());
    }
    index.finalize();
    return index;
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq)
{
    auto n = static_cast<double>(doc_count);
    auto df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term_score(double idf, double tf, double doc_length, double avg_doc_length, Bm25Params const& params)
{
    double norm = params.k1 * (1.0 - params.b + params.b * doc_length / avg_doc_length);
    return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

RankedList bm25_search(InvertedIndex const& index, std::span<std::string const> query_terms, std::size_t k0,
                       Bm25Params const& params)
{
    WeightedQuery query;
    query.reserve(query_terms.size());
    for (auto const& term : query_terms) {
        query.emplace_back(term, 1.0);
    }
    return search_impl(index, query, k0, params, false);
}

RankedList bm25_weighted_search(InvertedIndex const& index, WeightedQuery const& query, std::size_t k0,
                                Bm25Params const& params)
{
    return search_impl(index, query, k0, params, true);
}

WeightedQuery rm3_expand(InvertedIndex const& index, std::span<std::string const> query_terms,
                         RankedList const& ranked, Rm3Params const& params)
{
    params.validate();
    if (ranked.empty()) {
        throw error("no feedback documents");
    }
    auto const fb_count = std::min(params.fb_docs, ranked.size());

    double score_sum = 0.0;
    for (std::size_t i = 0; i < fb_count; ++i) {
        score_sum += ranked.entries[i].score;
    }

    std::map<std::uint32_t, double> relevance;
    for (std::size_t i = 0; i < fb_count; ++i) {
        auto const& entry = ranked.entries[i];
        auto ordinal = index.ordinal_of(entry.id);
        if (!ordinal) {
            throw error("feedback document " + entry.id + " is not in the index");
        }
        double doc_weight = score_sum > 0.0 ? entry.score / score_sum : 1.0 / static_cast<double>(fb_count);
        double length = index.doc_length(*ordinal);
        if (length == 0.0) {
            continue;
        }
        for (auto const& [term, tf] : index.unit_terms(*ordinal)) {
            relevance[term] += doc_weight * tf / length;
        }
    }

    std::vector<std::pair<std::string, double>> feedback;
    for (auto const& [term_id, weight] : relevance) {
        auto const& term = index.term(term_id);
        if (term.size() < params.min_term_length || (params.skip_numeric && all_digits(term))) {
            continue;
        }
        feedback.emplace_back(term, weight);
    }
    std::sort(feedback.begin(), feedback.end(), [](auto const& a, auto const& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (feedback.size() > params.fb_terms) {
        feedback.resize(params.fb_terms);
    }
    double feedback_mass = 0.0;
    for (auto const& f : feedback) {
        feedback_mass += f.second;
    }

    std::map<std::string, double> combined;
    if (!query_terms.empty()) {
        double each = params.original_weight / static_cast<double>(query_terms.size());
        for (auto const& term : query_terms) {
            combined[term] += each;
        }
    }
    if (feedback_mass > 0.0) {
        for (auto const& [term, weight] : feedback) {
            combined[term] += (1.0 - params.original_weight) * weight / feedback_mass;
        }
    }

    WeightedQuery out;
    double total = 0.0;
    for (auto const& [term, weight] : combined) {
        if (weight > 0.0) {
            out.emplace_back(term, weight);
            total += weight;
        }
    }
    if (total <= 0.0) {
        // Nothing survived (e.g. weight 0 on the query and no usable feedback terms).
        return out;
    }
    for (auto& entry : out) {
        entry.second /= total;
    }
    std::sort(out.begin(), out.end(), [](auto const& a, auto const& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

RankedList bm25_rm3_search(InvertedIndex const& index, std::span<std::string const> query_terms, std::size_t k0,
                           Bm25Params const& bm25, Rm3Params const& rm3)
{
    auto first_pass = bm25_search(index, query_terms, std::max(rm3.fb_docs, std::size_t{1}), bm25);
    if (first_pass.empty()) {
        return first_pass;
    }
    auto expanded = rm3_expand(index, query_terms, first_pass, rm3);
    auto out = bm25_weighted_search(index, expanded, k0, bm25);
    out.stage = "bm25+rm3";
    return out;
}

RankedList max_passage_collapse(RankedList const& passages)
{
    std::unordered_map<std::string, std::size_t> slot;
    RankedList out{passages.qid, {}, passages.stage};
    for (auto const& entry : passages.entries) {
        auto docid = std::string(parse_passage_id(entry.id).docid);
        auto [it, inserted] = slot.try_emplace(docid, out.entries.size());
        if (inserted) {
            out.entries.push_back({std::move(docid), entry.score});
        } else {
            auto& best = out.entries[it->second].score;
            best = std::max(best, entry.score);
        }
    }
    std::sort(out.entries.begin(), out.entries.end(), score_then_id);
    return out;
}

}  // namespace emd
