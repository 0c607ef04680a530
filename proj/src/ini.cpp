#include "davide/ini.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>

#include "davide/errors.hpp"

namespace davide::ini {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

const Entry* Section::find(std::string_view key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

const Section* Doc::find(std::string_view name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

Doc parse(std::string_view text) {
    Doc doc;
    Section* cur = nullptr;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (size_t h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
        std::string_view s = trim(raw);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError("unterminated section header", line_no);
            std::string name{trim(s.substr(1, s.size() - 2))};
            if (name.empty()) throw ParseError("empty section name", line_no);
            for (const auto& prev : doc.sections)
                if (prev.name == name) throw ParseError("duplicate section [" + name + "]", line_no);
            doc.sections.push_back(Section{name, line_no, {}, {}});
            cur = &doc.sections.back();
            continue;
        }
        if (!cur) throw ParseError("content before first section", line_no);

        size_t eq = s.find('=');
        if (eq == std::string_view::npos) {
            cur->bare.emplace_back(std::string{s}, line_no);
        } else {
            std::string key{trim(s.substr(0, eq))};
            std::string value{trim(s.substr(eq + 1))};
            if (key.empty()) throw ParseError("empty key", line_no);
            cur->entries.push_back(Entry{std::move(key), std::move(value), line_no});
        }
    }
    return doc;
}

long long to_int(const Entry& e) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(e.value.c_str(), &end, 10);
    if (errno != 0 || end == e.value.c_str() || *end != '\0')
        throw ParseError("expected integer for key '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

double to_double(const Entry& e) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(e.value.c_str(), &end);
    if (errno != 0 || end == e.value.c_str() || *end != '\0')
        throw ParseError("expected number for key '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

bool to_bool(const Entry& e) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ParseError("expected true/false for key '" + e.key + "', got '" + e.value + "'", e.line);
}

}  // namespace davide::ini
