#include "emd/http_client.hpp"

#include <charconv>
#include <httplib.h>

#include "emd/error.hpp"
#include "emd/protocol.hpp"

namespace emd {

Endpoint Endpoint::parse(std::string const& url)
{
    std::string_view rest = url;
    constexpr std::string_view scheme = "http://";
    if (rest.substr(0, scheme.size()) != scheme) {
        throw error("unsupported scorer endpoint (expected http://host:port): " + url);
    }
    rest.remove_prefix(scheme.size());
    rest = rest.substr(0, rest.find('/'));
    Endpoint ep;
    auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
        ep.host = std::string(rest);
    } else {
        ep.host = std::string(rest.substr(0, colon));
        auto digits = rest.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ep.port);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || ep.port <= 0 || ep.port > 65535) {
            throw error("bad port in scorer endpoint: " + url);
        }
    }
    if (ep.host.empty()) {
        throw error("missing host in scorer endpoint: " + url);
    }
    return ep;
}

std::string post_score(Endpoint const& endpoint, std::string const& body, std::chrono::seconds timeout)
{
    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post("/score", body, "application/json");
    if (!res) {
        throw transport_error("scorer at " + endpoint.host + ":" + std::to_string(endpoint.port) +
                              " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status >= 500) {
        throw transport_error("scorer answered HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw protocol_error("scorer rejected request with HTTP " + std::to_string(res->status) + ": " +
                             res->body);
    }
    return res->body;
}

HttpScorer::HttpScorer(std::string const& url, std::chrono::seconds timeout)
    : m_endpoint(Endpoint::parse(url)), m_timeout(timeout)
{}

std::vector<double> HttpScorer::score_mono(std::string const& query, std::span<std::string const> texts)
{
    auto body = post_score(m_endpoint, protocol::encode_mono_request(query, texts), m_timeout);
    return protocol::decode_probs(body, texts.size());
}

std::vector<double> HttpScorer::score_duo(std::string const& query, std::span<TextPair const> pairs)
{
    auto body = post_score(m_endpoint, protocol::encode_duo_request(query, pairs), m_timeout);
    return protocol::decode_probs(body, pairs.size());
}

HttpGenerator::HttpGenerator(std::string const& url, std::chrono::seconds timeout)
    : m_endpoint(Endpoint::parse(url)), m_timeout(timeout)
{}

std::vector<std::vector<std::string>> HttpGenerator::generate(std::span<std::string const> texts,
                                                              std::size_t num_queries)
{
    auto body = post_score(m_endpoint, protocol::encode_expand_request(texts, num_queries), m_timeout);
    return protocol::decode_queries(body, texts.size(), num_queries);
}

}  // namespace emd
