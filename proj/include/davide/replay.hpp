#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace davide::replay {

/* Line-delimited TCP front for recorded bus traffic. A log line is
 * "<topic> <payload-without-newline>"; the server replays the file verbatim,
 * one line per message, to a single client and exits. */

struct LogLine {
    std::string topic;
    std::string payload;
};

/* Validates as it parses: topic syntax, sample payloads on power topics,
 * a non-negative joule figure on energy topics. Errors carry line numbers. */
std::vector<LogLine> parse_bus_log(std::string_view text);
std::vector<LogLine> load_bus_log(const std::filesystem::path& file);

/* Binds 127.0.0.1:<port> (0 picks a free port), reports the bound port via
 * on_listen, then serves the whole log to the first client that connects.
 * Returns the number of lines written. */
std::size_t serve_once(const std::vector<LogLine>& lines, std::uint16_t port,
                       const std::function<void(std::uint16_t)>& on_listen = {});

}  // namespace davide::replay
