#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace davide::ini {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;  // full header text, e.g. "system" or "node n01"
    int line = 0;
    std::vector<Entry> entries;
    // Lines without '=' (used by list-style sections such as [racks]).
    std::vector<std::pair<std::string, int>> bare;

    const Entry* find(std::string_view key) const;
};

struct Doc {
    std::vector<Section> sections;

    const Section* find(std::string_view name) const;
    bool has(std::string_view name) const { return find(name) != nullptr; }
};

/* Line-oriented INI. '#' starts a comment, keys are case-sensitive,
 * duplicate section headers are rejected. */
Doc parse(std::string_view text);

// Typed value parsing; errors carry the entry's line number.
long long to_int(const Entry& e);
double to_double(const Entry& e);
bool to_bool(const Entry& e);

}  // namespace davide::ini
