#include "emd/corpus.hpp"

#include <charconv>
#include <json.hpp>

#include "emd/error.hpp"
#include "emd/text.hpp"

namespace emd {

namespace {

std::string required_string(nlohmann::json const& obj, char const* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw error(std::string("missing field \"") + key + "\"");
    }
    if (!it->is_string()) {
        throw error(std::string("field \"") + key + "\" is not a string");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(nlohmann::json const& obj, char const* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw error(std::string("field \"") + key + "\" is not a string");
    }
    return it->get<std::string>();
}

nlohmann::json parse_object(std::string_view line)
{
    auto obj = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (obj.is_discarded()) {
        throw error("invalid JSON");
    }
    if (!obj.is_object()) {
        throw error("expected a JSON object");
    }
    return obj;
}

bool blank(std::string_view line)
{
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string Document::full_text() const
{
    if (title.empty()) {
        return body;
    }
    if (body.empty()) {
        return title;
    }
    return title + " " + body;
}

std::string Passage::id() const { return passage_id(parent_docid, ordinal); }

void SegmentationConfig::validate() const
{
    std::vector<std::string> problems;
    if (window_sentences == 0) {
        problems.emplace_back("segmentation window must be positive");
    }
    if (stride_sentences == 0) {
        problems.emplace_back("segmentation stride must be positive");
    }
    if (stride_sentences > window_sentences) {
        problems.emplace_back("segmentation stride must not exceed the window");
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
}

std::string passage_id(std::string_view docid, std::size_t ordinal)
{
    std::string id(docid);
    id += '#';
    id += std::to_string(ordinal);
    return id;
}

PassageRef parse_passage_id(std::string_view id)
{
    auto hash = id.rfind('#');
    if (hash == std::string_view::npos) {
        throw error("not a passage id (no '#'): " + std::string(id));
    }
    auto digits = id.substr(hash + 1);
    std::size_t ordinal = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ordinal);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw error("malformed passage ordinal: " + std::string(id));
    }
    if (hash == 0) {
        throw error("passage id has an empty docid: " + std::string(id));
    }
    return {id.substr(0, hash), ordinal};
}

void validate_docid(std::string_view docid)
{
    if (docid.empty()) {
        throw error("empty docid");
    }
    if (docid.find('#') != std::string_view::npos) {
        throw error("docid contains '#': " + std::string(docid));
    }
}

std::vector<Passage> segment(Document const& doc, SegmentationConfig const& cfg)
{
    cfg.validate();
    if (doc.body.empty() && doc.title.empty()) {
        throw error("document " + doc.docid + " has neither title nor body");
    }
    auto sentences = split_sentences(doc.body);

    auto make_text = [&](std::span<std::string const> window) {
        std::string text;
        if (cfg.prepend_title && !doc.title.empty()) {
            text = doc.title;
            if (!window.empty()) {
                text += ' ';
            }
        }
        text += join(window);
        return text;
    };

    std::vector<Passage> passages;
    if (sentences.empty()) {
        // Whitespace-only body: index the title on its own.
        auto text = make_text({});
        if (text.empty()) {
            throw error("document " + doc.docid + " has no indexable text");
        }
        passages.push_back({doc.docid, 0, std::move(text), 0, 0});
        return passages;
    }

    std::size_t const n = sentences.size();
    for (std::size_t start = 0;; start += cfg.stride_sentences) {
        std::size_t end = std::min(start + cfg.window_sentences, n);
        std::span<std::string const> window(sentences.data() + start, end - start);
        passages.push_back({doc.docid, passages.size(), make_text(window), start, end - 1});
        if (end == n) {
            break;
        }
    }
    return passages;
}

Document parse_document(std::string_view json_line)
{
    auto obj = parse_object(json_line);
    Document doc;
    doc.docid = required_string(obj, "docid");
    validate_docid(doc.docid);
    doc.title = optional_string(obj, "title").value_or("");
    doc.body = required_string(obj, "body");
    return doc;
}

Topic parse_topic(std::string_view json_line)
{
    auto obj = parse_object(json_line);
    Topic topic;
    topic.qid = required_string(obj, "qid");
    topic.query = required_string(obj, "query");
    topic.question = optional_string(obj, "question");
    topic.narrative = optional_string(obj, "narrative");
    if (topic.qid.empty()) {
        throw error("empty qid");
    }
    if (topic.query.empty()) {
        throw error("empty query");
    }
    return topic;
}

CorpusReader::CorpusReader(std::filesystem::path path) : m_path(std::move(path)), m_in(m_path)
{
    if (!m_in) {
        throw error("cannot open corpus " + m_path.string());
    }
}

std::optional<Document> CorpusReader::next()
{
    std::string line;
    while (std::getline(m_in, line)) {
        ++m_line;
        if (blank(line)) {
            continue;
        }
        Document doc;
        try {
            doc = parse_document(line);
        } catch (error const& e) {
            throw parse_error(m_path.string(), m_line, e.what());
        }
        if (!m_seen.insert(doc.docid).second) {
            throw parse_error(m_path.string(), m_line, "duplicate docid " + doc.docid);
        }
        return doc;
    }
    return std::nullopt;
}

std::vector<Document> load_corpus(std::filesystem::path const& path)
{
    CorpusReader reader(path);
    std::vector<Document> docs;
    while (auto doc = reader.next()) {
        docs.push_back(std::move(*doc));
    }
    return docs;
}

std::vector<Topic> load_topics(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error("cannot open topics " + path.string());
    }
    std::vector<Topic> topics;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) {
            continue;
        }
        try {
            topics.push_back(parse_topic(line));
        } catch (error const& e) {
            throw parse_error(path.string(), lineno, e.what());
        }
        if (!seen.insert(topics.back().qid).second) {
            throw parse_error(path.string(), lineno, "duplicate qid " + topics.back().qid);
        }
    }
    return topics;
}

}  // namespace emd
