#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace emd {

struct Document {
    std::string docid;
    std::string title;
    std::string body;

    /// Title and body joined by a single space (either may be empty).
    [[nodiscard]] std::string full_text() const;
};

struct Passage {
    std::string parent_docid;
    std::size_t ordinal = 0;
    std::string text;
    /// Inclusive sentence range [first_sentence, last_sentence] of the parent body.
    std::size_t first_sentence = 0;
    std::size_t last_sentence = 0;

    [[nodiscard]] std::string id() const;
};

struct Topic {
    std::string qid;
    std::string query;
    std::optional<std::string> question;
    std::optional<std::string> narrative;
};

struct SegmentationConfig {
    std::size_t window_sentences = 10;
    std::size_t stride_sentences = 5;
    bool prepend_title = true;

    /// Throws config_error listing every violated constraint.
    void validate() const;
};

/// "docid#n".
std::string passage_id(std::string_view docid, std::size_t ordinal);

struct PassageRef {
    std::string_view docid;
    std::size_t ordinal;
};

/// Splits "docid#n" into its parts. Throws emd::error when there is no '#'
/// or the ordinal is not a non-negative integer.
PassageRef parse_passage_id(std::string_view id);

/// Throws emd::error if the docid is empty or contains '#'.
void validate_docid(std::string_view docid);

/// Sliding-window segmentation over the body's sentences. Windows start at
/// 0, stride, 2*stride, ... and stop after the first window that reaches the
/// last sentence. A document with no sentences but a title yields one
/// title-only passage.
std::vector<Passage> segment(Document const& doc, SegmentationConfig const& cfg);

/// Streams documents from a JSON-lines file with keys "docid", "title", "body".
/// Only docids are retained in memory (for the duplicate check).
class CorpusReader {
  public:
    explicit CorpusReader(std::filesystem::path path);

    /// Next document, or nullopt at end of file. Throws parse_error on a
    /// malformed line or a duplicate docid.
    std::optional<Document> next();

    [[nodiscard]] std::size_t line() const { return m_line; }

  private:
    std::filesystem::path m_path;
    std::ifstream m_in;
    std::size_t m_line = 0;
    std::unordered_set<std::string> m_seen;
};

std::vector<Document> load_corpus(std::filesystem::path const& path);

/// JSON-lines topics: "qid", "query", optional "question" and "narrative".
std::vector<Topic> load_topics(std::filesystem::path const& path);

Document parse_document(std::string_view json_line);
Topic parse_topic(std::string_view json_line);

}  // namespace emd
