#pragma once

#include <stdexcept>
#include <string>

namespace davide {

/* Raised for malformed input text (config, traces, wire payloads).
 * `where` is a 1-based line number, or a byte offset for wire data. */
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, long where = 0)
        : std::runtime_error(where > 0 ? msg + " (line " + std::to_string(where) + ")" : msg),
          where_(where) {}

    long where() const { return where_; }

private:
    long where_;
};

/* Raised when an operation is called outside its contract
 * (bad argument ranges, inconsistent state). */
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace davide
