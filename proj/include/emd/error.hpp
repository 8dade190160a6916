#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace emd {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input at a known line of a text file (1-based).
struct parse_error : error {
    parse_error(std::string const& source, std::size_t line, std::string const& what)
        : error(source + ":" + std::to_string(line) + ": " + what), line(line)
    {}
    std::size_t line;
};

/// The remote end could not be reached or answered with a server-side failure.
/// Callers may retry.
struct transport_error : error {
    using error::error;
};

/// The remote end answered, but the answer violates the wire protocol.
struct protocol_error : error {
    using error::error;
};

/// Configuration rejected. Carries every problem found, not just the first.
struct config_error : error {
    explicit config_error(std::vector<std::string> problems)
        : error(join(problems)), problems(std::move(problems))
    {}
    std::vector<std::string> problems;

  private:
    static std::string join(std::vector<std::string> const& items)
    {
        std::string out = "invalid configuration";
        for (auto const& item : items) {
            out += "\n  - ";
            out += item;
        }
        return out;
    }
};

}  // namespace emd
