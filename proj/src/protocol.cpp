#include "emd/protocol.hpp"

#include <json.hpp>

#include "emd/error.hpp"

namespace emd::protocol {

using nlohmann::json;

namespace {

json parse_response(std::string const& body)
{
    auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw protocol_error("scorer response is not a JSON object");
    }
    return doc;
}

}  // namespace

std::string encode_mono_request(std::string const& query, std::span<std::string const> texts)
{
    json req = {{"mode", "mono"}, {"query", query}, {"texts", json::array()}};
    for (auto const& text : texts) {
        req["texts"].push_back(text);
    }
    return req.dump();
}

std::string encode_duo_request(std::string const& query, std::span<TextPair const> pairs)
{
    json req = {{"mode", "duo"}, {"query", query}, {"pairs", json::array()}};
    for (auto const& [first, second] : pairs) {
        req["pairs"].push_back(json::array({first, second}));
    }
    return req.dump();
}

std::string encode_expand_request(std::span<std::string const> texts, std::size_t num_queries)
{
    json req = {{"mode", "expand"}, {"texts", json::array()}, {"num_queries", num_queries}};
    for (auto const& text : texts) {
        req["texts"].push_back(text);
    }
    return req.dump();
}

std::vector<double> decode_probs(std::string const& body, std::size_t expected)
{
    auto doc = parse_response(body);
    auto it = doc.find("probs");
    if (it == doc.end() || !it->is_array()) {
        throw protocol_error("scorer response has no \"probs\" array");
    }
    std::vector<double> probs;
    probs.reserve(it->size());
    for (auto const& value : *it) {
        if (!value.is_number()) {
            throw protocol_error("non-numeric probability in scorer response");
        }
        probs.push_back(value.get<double>());
    }
    check_probabilities(probs, expected);
    return probs;
}

std::vector<std::vector<std::string>> decode_queries(std::string const& body, std::size_t expected_texts,
                                                     std::size_t num_queries)
{
    auto doc = parse_response(body);
    auto it = doc.find("queries");
    if (it == doc.end() || !it->is_array()) {
        throw protocol_error("generator response has no \"queries\" array");
    }
    if (it->size() != expected_texts) {
        throw protocol_error("generator returned " + std::to_string(it->size()) + " query lists for " +
                             std::to_string(expected_texts) + " texts");
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(expected_texts);
    for (auto const& list : *it) {
        if (!list.is_array() || list.size() != num_queries) {
            throw protocol_error("generator returned the wrong number of queries for a text");
        }
        auto& queries = out.emplace_back();
        for (auto const& q : list) {
            if (!q.is_string()) {
                throw protocol_error("non-string query in generator response");
            }
            queries.push_back(q.get<std::string>());
        }
    }
    return out;
}

}  // namespace emd::protocol
