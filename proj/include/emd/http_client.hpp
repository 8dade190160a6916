#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "emd/scorer.hpp"

namespace emd {

struct Endpoint {
    std::string host;
    int port = 80;

    /// Accepts "http://host:port" (path, if any, is ignored).
    static Endpoint parse(std::string const& url);
};

/// POSTs protocol bodies to <endpoint>/score. Connection failures and 5xx
/// answers raise transport_error; 4xx answers and malformed bodies raise
/// protocol_error.
class HttpScorer final : public Scorer {
  public:
    explicit HttpScorer(std::string const& url, std::chrono::seconds timeout = std::chrono::seconds(60));

    std::vector<double> score_mono(std::string const& query, std::span<std::string const> texts) override;
    std::vector<double> score_duo(std::string const& query, std::span<TextPair const> pairs) override;

  private:
    Endpoint m_endpoint;
    std::chrono::seconds m_timeout;
};

class HttpGenerator final : public QueryGenerator {
  public:
    explicit HttpGenerator(std::string const& url, std::chrono::seconds timeout = std::chrono::seconds(600));

    std::vector<std::vector<std::string>> generate(std::span<std::string const> texts,
                                                   std::size_t num_queries) override;

  private:
    Endpoint m_endpoint;
    std::chrono::seconds m_timeout;
};

/// One POST /score round trip; exposed for tests.
std::string post_score(Endpoint const& endpoint, std::string const& body, std::chrono::seconds timeout);

}  // namespace emd
