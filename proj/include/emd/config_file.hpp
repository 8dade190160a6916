#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace emd {

/// A value from a TOML-style config file.
using ConfigValue = std::variant<bool, double, std::string, std::vector<std::string>>;

struct ConfigEntry {
    ConfigValue value;
    std::size_t line = 0;
};

/// Flat view of a TOML subset: `[section]` headers, `key = value` pairs with
/// strings ("..."), numbers, booleans or arrays of strings, and `#` comments.
/// Keys are stored as "section.key".
class ConfigTable {
  public:
    /// Throws config_error listing every syntax error.
    static ConfigTable parse(std::string_view text, std::string const& source = "<config>");

    /// `section.key=value`, value in the same syntax as the file.
    void apply_override(std::string_view assignment);

    [[nodiscard]] std::map<std::string, ConfigEntry> const& entries() const { return m_entries; }
    [[nodiscard]] ConfigEntry const* find(std::string const& key) const;

  private:
    std::map<std::string, ConfigEntry> m_entries;
};

/// Parses a single value. Returns nullopt on a syntax error.
std::optional<ConfigValue> parse_config_value(std::string_view text);

}  // namespace emd
