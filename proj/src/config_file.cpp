#include "emd/config_file.hpp"

#include <cctype>
#include <charconv>

#include "emd/error.hpp"

namespace emd {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
        s.remove_suffix(1);
    }
    return s;
}

/// Parses a double-quoted string at the start of s; advances s past it.
std::optional<std::string> take_string(std::string_view& s)
{
    if (s.empty() || s.front() != '"') {
        return std::nullopt;
    }
    std::string out;
    std::size_t i = 1;
    for (; i < s.size() && s[i] != '"'; ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            ++i;
            switch (s[i]) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                default: out.push_back(s[i]); break;
            }
        } else {
            out.push_back(s[i]);
        }
    }
    if (i == s.size()) {
        return std::nullopt;
    }
    s.remove_prefix(i + 1);
    return out;
}

/// Removes a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line)
{
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && in_string) {
            ++i;
        } else if (line[i] == '"') {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

bool valid_key(std::string_view key)
{
    if (key.empty()) {
        return false;
    }
    for (char c : key) {
        if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_' && c != '-' && c != '.') {
            return false;
        }
    }
    return true;
}

}  // namespace

std::optional<ConfigValue> parse_config_value(std::string_view text)
{
    text = trim(text);
    if (text.empty()) {
        return std::nullopt;
    }
    if (text == "true") {
        return ConfigValue(true);
    }
    if (text == "false") {
        return ConfigValue(false);
    }
    if (text.front() == '"') {
        auto rest = text;
        auto s = take_string(rest);
        if (!s || !trim(rest).empty()) {
            return std::nullopt;
        }
        return ConfigValue(std::move(*s));
    }
    if (text.front() == '[') {
        if (text.back() != ']') {
            return std::nullopt;
        }
        auto body = trim(text.substr(1, text.size() - 2));
        std::vector<std::string> items;
        while (!body.empty()) {
            auto item = take_string(body);
            if (!item) {
                return std::nullopt;
            }
            items.push_back(std::move(*item));
            body = trim(body);
            if (!body.empty()) {
                if (body.front() != ',') {
                    return std::nullopt;
                }
                body = trim(body.substr(1));
            }
        }
        return ConfigValue(std::move(items));
    }
    double number = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), number);
    if (ec == std::errc() && ptr == text.data() + text.size()) {
        return ConfigValue(number);
    }
    return std::nullopt;
}

ConfigTable ConfigTable::parse(std::string_view text, std::string const& source)
{
    ConfigTable table;
    std::vector<std::string> problems;
    std::string section;
    std::size_t lineno = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++lineno;
        auto line = trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        auto where = source + ":" + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']' || !valid_key(trim(line.substr(1, line.size() - 2)))) {
                problems.push_back(where + "malformed section header");
                continue;
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            problems.push_back(where + "expected key = value");
            continue;
        }
        auto key = trim(line.substr(0, eq));
        if (!valid_key(key)) {
            problems.push_back(where + "invalid key \"" + std::string(key) + "\"");
            continue;
        }
        auto value = parse_config_value(line.substr(eq + 1));
        if (!value) {
            problems.push_back(where + "cannot parse value for \"" + std::string(key) + "\"");
            continue;
        }
        auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (table.m_entries.contains(full)) {
            problems.push_back(where + "duplicate key \"" + full + "\"");
            continue;
        }
        table.m_entries[full] = {std::move(*value), lineno};
    }
    if (!problems.empty()) {
        throw config_error(std::move(problems));
    }
    return table;
}

void ConfigTable::apply_override(std::string_view assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw config_error({"override \"" + std::string(assignment) + "\" is not key=value"});
    }
    auto key = trim(assignment.substr(0, eq));
    auto raw = trim(assignment.substr(eq + 1));
    if (!valid_key(key)) {
        throw config_error({"invalid override key \"" + std::string(key) + "\""});
    }
    auto value = parse_config_value(raw);
    if (!value) {
        // Bare words are taken as strings on the command line.
        value = ConfigValue(std::string(raw));
    }
    m_entries[std::string(key)] = {std::move(*value), 0};
}

ConfigEntry const* ConfigTable::find(std::string const& key) const
{
    auto it = m_entries.find(key);
    return it == m_entries.end() ? nullptr : &it->second;
}

}  // namespace emd
