#include "emd/expansion.hpp"

#include <json.hpp>

#include "emd/detail/parallel.hpp"
#include "emd/error.hpp"
#include "emd/text.hpp"

namespace emd {

namespace {

constexpr std::size_t kDocumentsPerChunk = 256;

/// One generator input: a text whose predictions land in unit `unit` at
/// offset `slot * queries_per_unit`.
struct Job {
    std::size_t unit;
    std::size_t slot;
    std::string text;
};

struct PendingUnit {
    ExpandedUnit unit;
    std::size_t expected_queries = 0;
    bool cached = false;
};

template <typename E>
[[noreturn]] void rethrow_with_unit(E const& e, std::string const& id)
{
    throw E("expansion of unit " + id + " failed: " + e.what());
}

void expand_chunk(std::vector<Document> const& docs, SegmentationConfig const& seg,
                  ExpansionGranularity granularity, ExpansionConfig const& cfg, QueryGenerator& generator,
                  ExpansionCache* cache, UnitSink const& sink)
{
    std::vector<PendingUnit> units;
    std::vector<Job> jobs;

    auto add_unit = [&](std::string id, std::string original, std::vector<std::string> sources) {
        PendingUnit pending;
        pending.unit.id = std::move(id);
        pending.unit.original_text = std::move(original);
        pending.expected_queries = sources.size() * cfg.queries_per_unit;
        if (cache != nullptr) {
            if (auto const* hit = cache->find(pending.unit.id);
                hit != nullptr && hit->size() == pending.expected_queries) {
                pending.unit.predicted_queries = *hit;
                pending.cached = true;
            }
        }
        if (!pending.cached) {
            pending.unit.predicted_queries.resize(pending.expected_queries);
            for (std::size_t slot = 0; slot < sources.size(); ++slot) {
                jobs.push_back({units.size(), slot, std::move(sources[slot])});
            }
        }
        units.push_back(std::move(pending));
    };

    for (auto const& doc : docs) {
        switch (granularity) {
            case ExpansionGranularity::whole_document: {
                auto text = doc.full_text();
                add_unit(doc.docid, text, {text});
                break;
            }
            case ExpansionGranularity::per_document: {
                std::vector<std::string> sources;
                for (auto& passage : segment(doc, seg)) {
                    sources.push_back(std::move(passage.text));
                }
                add_unit(doc.docid, doc.full_text(), std::move(sources));
                break;
            }
            case ExpansionGranularity::per_passage:
                for (auto& passage : segment(doc, seg)) {
                    auto id = passage.id();
                    auto text = passage.text;
                    add_unit(std::move(id), std::move(text), {std::move(passage.text)});
                }
                break;
        }
    }

    std::size_t const batch = cfg.batch_size;
    std::size_t const batches = (jobs.size() + batch - 1) / batch;
    detail::parallel_for(batches, cfg.max_in_flight, [&](std::size_t b) {
        auto first = b * batch;
        auto last = std::min(first + batch, jobs.size());
        std::vector<std::string> texts;
        for (auto i = first; i < last; ++i) {
            texts.push_back(jobs[i].text);
        }
        std::string const& blame = units[jobs[first].unit].unit.id;
        std::vector<std::vector<std::string>> predicted;
        try {
            predicted = with_retry(cfg.retry, [&] { return generator.generate(texts, cfg.queries_per_unit); });
            if (predicted.size() != texts.size()) {
                throw protocol_error("generator returned " + std::to_string(predicted.size()) +
                                     " query lists for " + std::to_string(texts.size()) + " texts");
            }
            for (std::size_t i = 0; i < predicted.size(); ++i) {
                if (predicted[i].size() != cfg.queries_per_unit) {
                    throw protocol_error("generator returned " + std::to_string(predicted[i].size()) +
                                         " queries, expected " + std::to_string(cfg.queries_per_unit));
                }
            }
        } catch (transport_error const& e) {
            rethrow_with_unit(e, blame);
        } catch (protocol_error const& e) {
            rethrow_with_unit(e, blame);
        }
        // Distinct jobs write disjoint slots.
        for (auto i = first; i < last; ++i) {
            auto& target = units[jobs[i].unit].unit.predicted_queries;
            auto& source = predicted[i - first];
            std::move(source.begin(), source.end(),
                      target.begin() + static_cast<std::ptrdiff_t>(jobs[i].slot * cfg.queries_per_unit));
        }
    });

    for (auto& pending : units) {
        pending.unit.augmented_text = augment_text(pending.unit.original_text, pending.unit.predicted_queries);
        if (cache != nullptr && !pending.cached) {
            cache->record(pending.unit);
        }
        sink(std::move(pending.unit));
    }
}

}  // namespace

void ExpansionConfig::validate() const
{
    std::vector<std::string> problems;
    if (queries_per_unit < 1) {
        problems.emplace_back("queries_per_unit must be at least 1");
    }
    if (batch_size < 1) {
        problems.emplace_back("expansion batch_size must be at least 1");
    }
    if (max_in_flight < 1) {
        problems.emplace_back("expansion max_in_flight must be at least 1");
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

std::string augment_text(std::string const& original, std::span<std::string const> queries)
{
    std::string out = original;
    for (auto const& q : queries) {
        out += ' ';
        out += q;
    }
    return out;
}

ExpandedUnit expand_unit(std::string const& text, ExpansionConfig const& cfg, QueryGenerator& generator)
{
    cfg.validate();
    if (text.empty()) {
        throw error("cannot expand empty text");
    }
    std::vector<std::string> input{text};
    auto predicted = with_retry(cfg.retry, [&] { return generator.generate(input, cfg.queries_per_unit); });
    if (predicted.size() != 1 || predicted.front().size() != cfg.queries_per_unit) {
        throw protocol_error("generator returned the wrong number of queries");
    }
    ExpandedUnit unit;
    unit.original_text = text;
    unit.predicted_queries = std::move(predicted.front());
    unit.augmented_text = augment_text(unit.original_text, unit.predicted_queries);
    return unit;
}

ExpansionCache::ExpansionCache(std::filesystem::path path) : m_path(std::move(path))
{
    if (std::filesystem::exists(*m_path)) {
        std::ifstream in(*m_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            auto obj = nlohmann::json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
                !obj.contains("queries") || !obj["queries"].is_array()) {
                throw parse_error(m_path->string(), lineno, "malformed expansion record");
            }
            std::vector<std::string> queries;
            for (auto const& q : obj["queries"]) {
                if (!q.is_string()) {
                    throw parse_error(m_path->string(), lineno, "non-string predicted query");
                }
                queries.push_back(q.get<std::string>());
            }
            m_entries[obj["id"].get<std::string>()] = std::move(queries);
        }
    }
    m_out.open(*m_path, std::ios::app);
    if (!m_out) {
        throw error("cannot write expansion cache " + m_path->string());
    }
}

std::vector<std::string> const* ExpansionCache::find(std::string const& id) const
{
    auto it = m_entries.find(id);
    return it == m_entries.end() ? nullptr : &it->second;
}

void ExpansionCache::record(ExpandedUnit const& unit)
{
    m_entries[unit.id] = unit.predicted_queries;
    if (m_out.is_open()) {
        nlohmann::json line = {{"id", unit.id}, {"queries", unit.predicted_queries}};
        m_out << line.dump() << '\n';
        m_out.flush();
    }
}

void expand_corpus(DocumentSource const& source, SegmentationConfig const& seg, ExpansionGranularity granularity,
                   ExpansionConfig const& cfg, QueryGenerator& generator, ExpansionCache* cache,
                   UnitSink const& sink)
{
    cfg.validate();
    seg.validate();
    std::vector<Document> chunk;
    while (auto doc = source()) {
        chunk.push_back(std::move(*doc));
        if (chunk.size() == kDocumentsPerChunk) {
            expand_chunk(chunk, seg, granularity, cfg, generator, cache, sink);
            chunk.clear();
        }
    }
    if (!chunk.empty()) {
        expand_chunk(chunk, seg, granularity, cfg, generator, cache, sink);
    }
}

std::vector<ExpandedUnit> expand_corpus(std::span<Document const> docs, SegmentationConfig const& seg,
                                        ExpansionGranularity granularity, ExpansionConfig const& cfg,
                                        QueryGenerator& generator, ExpansionCache* cache)
{
    std::vector<ExpandedUnit> units;
    expand_corpus(source_from(docs), seg, granularity, cfg, generator, cache,
                  [&](ExpandedUnit&& unit) { units.push_back(std::move(unit)); });
    return units;
}

DocumentSource source_from(std::span<Document const> docs)
{
    return [docs, i = std::size_t{0}]() mutable -> std::optional<Document> {
        if (i == docs.size()) {
            return std::nullopt;
        }
        return docs[i++];
    };
}

DocumentSource source_from(CorpusReader& reader)
{
    return [&reader] { return reader.next(); };
}

}  // namespace emd
