#include "davide/replay.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "davide/bus.hpp"
#include "davide/errors.hpp"

namespace davide::replay {

namespace {

void validate_payload(const bus::Topic& topic, const std::string& payload, int line) {
    const auto& seg = topic.segments;
    if (seg.size() == 5 && seg[0] == "davide" && seg[4] == "power") {
        try {
            bus::decode_sample(payload + "\n");
        } catch (const ParseError& e) {
            throw ParseError(std::string("sample payload: ") + e.what(), line);
        }
        return;
    }
    if (seg.size() == 4 && seg[0] == "davide" && seg[1] == "jobs" && seg[3] == "energy") {
        errno = 0;
        char* endp = nullptr;
        const double v = std::strtod(payload.c_str(), &endp);
        if (errno != 0 || endp == payload.c_str() || *endp != '\0' || !(v >= 0))
            throw ParseError("energy payload must be a non-negative number", line);
        return;
    }
    throw ParseError("topic '" + topic.str() + "' is not a recorded stream", line);
}

[[noreturn]] void sys_fail(const char* what) {
    throw DomainError(std::string("replay: ") + what + ": " + std::strerror(errno));
}

}  // namespace

std::vector<LogLine> parse_bus_log(std::string_view text) {
    std::vector<LogLine> lines;
    int line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (raw.empty()) throw ParseError("empty log line", line_no);
        const size_t sp = raw.find(' ');
        if (sp == std::string_view::npos || sp == 0 || sp + 1 >= raw.size())
            throw ParseError("expected '<topic> <payload>'", line_no);
        bus::Topic topic;
        try {
            topic = bus::Topic::parse(raw.substr(0, sp));
        } catch (const ParseError& e) {
            throw ParseError(std::string("topic: ") + e.what(), line_no);
        }
        LogLine entry{std::string(raw.substr(0, sp)), std::string(raw.substr(sp + 1))};
        validate_payload(topic, entry.payload, line_no);
        lines.push_back(std::move(entry));
    }
    return lines;
}

std::vector<LogLine> load_bus_log(const std::filesystem::path& file) {
    std::ifstream f(file, std::ios::binary);
    if (!f) throw ParseError("cannot open bus log " + file.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_bus_log(ss.str());
}

std::size_t serve_once(const std::vector<LogLine>& lines, std::uint16_t port,
                       const std::function<void(std::uint16_t)>& on_listen) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) sys_fail("socket");
    const int yes = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(listener);
        sys_fail("bind");
    }
    if (::listen(listener, 1) < 0) {
        ::close(listener);
        sys_fail("listen");
    }
    socklen_t len = sizeof addr;
    if (::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
        ::close(listener);
        sys_fail("getsockname");
    }
    if (on_listen) on_listen(ntohs(addr.sin_port));

    const int client = ::accept(listener, nullptr, nullptr);
    if (client < 0) {
        ::close(listener);
        sys_fail("accept");
    }

    std::string all;
    for (const auto& l : lines) all += l.topic + " " + l.payload + "\n";
    size_t sent = 0;
    while (sent < all.size()) {
        const ssize_t n = ::send(client, all.data() + sent, all.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            ::close(client);
            ::close(listener);
            sys_fail("send");
        }
        sent += static_cast<size_t>(n);
    }
    ::close(client);
    ::close(listener);
    return lines.size();
}

}  // namespace davide::replay
