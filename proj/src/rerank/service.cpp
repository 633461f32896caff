#include "rerank/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include <json.hpp>

#include "rerank/error.hpp"
#include "rerank/model.hpp"

namespace rerank {

namespace {

using nlohmann::json;

constexpr int kPollMs = 100;

std::string json_string(std::string_view s) {
    return json(std::string(s)).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

// Reads exactly n bytes. Returns the number read before EOF (< n only on EOF).
// With a stop flag, polls so a stop request interrupts the wait.
std::size_t read_exact(int fd, char* buf, std::size_t n, const std::atomic<bool>* stop) {
    std::size_t got = 0;
    while (got < n) {
        if (stop) {
            pollfd p{fd, POLLIN, 0};
            int r = ::poll(&p, 1, kPollMs);
            if (r < 0 && errno != EINTR) fail(ErrorCode::kTransport, errno_text("poll"));
            if (stop->load()) fail(ErrorCode::kTransport, "server stopping");
            if (r <= 0) continue;
        }
        ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) return got;
        if (r < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::kTransport, errno_text("recv"));
        }
        got += static_cast<std::size_t>(r);
    }
    return got;
}

std::uint32_t decode_length(const unsigned char* h) {
    return (std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) | (std::uint32_t{h[2]} << 8) |
           std::uint32_t{h[3]};
}

}  // namespace

std::string serialize_request(const Request& req) {
    try {
        std::string out = "{\"id\":" + std::to_string(req.id) + ",\"method\":" +
                          json(req.method).dump() + ",\"params\":{\"question\":" +
                          json(req.question).dump() + ",\"answer\":" + json(req.answer).dump() + "}}";
        return out;
    } catch (const json::exception& e) {
        fail(ErrorCode::kArgument, std::string("request is not valid UTF-8: ") + e.what());
    }
}

std::string serialize_response(const Response& resp) {
    std::string out = "{\"id\":";
    out += resp.id ? std::to_string(*resp.id) : "null";
    if (resp.result && !resp.error) {
        out += ",\"result\":" + shortest_repr(*resp.result);
    } else {
        out += ",\"error\":" + json_string(resp.error.value_or("unknown error"));
    }
    return out + "}";
}

Response parse_response(std::string_view payload) {
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::exception& e) {
        fail(ErrorCode::kProtocol, std::string("malformed response: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("id")) fail(ErrorCode::kProtocol, "response has no id");
    Response r;
    const json& id = doc["id"];
    if (id.is_number_unsigned()) {
        r.id = id.get<std::uint64_t>();
    } else if (!id.is_null()) {
        fail(ErrorCode::kProtocol, "response id must be a non-negative integer or null");
    }
    const bool has_result = doc.contains("result"), has_error = doc.contains("error");
    if (has_result == has_error) fail(ErrorCode::kProtocol, "response must carry exactly one of result/error");
    if (has_result) {
        if (!doc["result"].is_number()) fail(ErrorCode::kProtocol, "response result must be a number");
        r.result = doc["result"].get<double>();
    } else {
        if (!doc["error"].is_string()) fail(ErrorCode::kProtocol, "response error must be a string");
        r.error = doc["error"].get<std::string>();
    }
    return r;
}

ParsedRequest parse_request(std::string_view payload) {
    ParsedRequest out;
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::exception&) {
        out.error = "malformed payload";
        return out;
    }
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_number_unsigned()) {
        out.error = "missing request id";
        return out;
    }
    out.id = doc["id"].get<std::uint64_t>();
    if (!doc.contains("method") || !doc["method"].is_string()) {
        out.error = "missing method";
        return out;
    }
    Request req;
    req.id = *out.id;
    req.method = doc["method"].get<std::string>();
    if (req.method != "getScore") {
        out.error = "unknown method";
        return out;
    }
    if (!doc.contains("params") || !doc["params"].is_object()) {
        out.error = "missing params";
        return out;
    }
    const json& params = doc["params"];
    if (!params.contains("question") || !params["question"].is_string() ||
        !params.contains("answer") || !params["answer"].is_string()) {
        out.error = "params must hold string question and answer";
        return out;
    }
    req.question = params["question"].get<std::string>();
    req.answer = params["answer"].get<std::string>();
    out.request = std::move(req);
    return out;
}

std::string encode_frame(std::string_view payload) {
    if (payload.size() > kMaxFrameBytes) fail(ErrorCode::kArgument, "frame too large");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out += static_cast<char>((n >> 24) & 0xFF);
    out += static_cast<char>((n >> 16) & 0xFF);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>(n & 0xFF);
    out += payload;
    return out;
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.release();
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        fail(ErrorCode::kTransport, "cannot resolve " + host + ": " + gai_strerror(rc));
    }
    std::string last = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.valid()) continue;
        if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            ::freeaddrinfo(res);
            return s;
        }
        last = std::strerror(errno);
    }
    ::freeaddrinfo(res);
    fail(ErrorCode::kTransport, "cannot connect to " + host + ":" + service + ": " + last);
}

void send_all(const Socket& s, std::string_view bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        ssize_t r = ::send(s.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::kTransport, errno_text("send"));
        }
        sent += static_cast<std::size_t>(r);
    }
}

void write_frame(const Socket& s, std::string_view payload) { send_all(s, encode_frame(payload)); }

std::optional<std::string> read_frame(const Socket& s) {
    unsigned char header[4];
    const std::size_t got = read_exact(s.fd(), reinterpret_cast<char*>(header), 4, nullptr);
    if (got == 0) return std::nullopt;
    if (got < 4) fail(ErrorCode::kTransport, "connection closed mid-frame");
    const std::uint32_t n = decode_length(header);
    if (n > kMaxFrameBytes) fail(ErrorCode::kProtocol, "frame too large");
    std::string payload(n, '\0');
    if (read_exact(s.fd(), payload.data(), n, nullptr) < n) {
        fail(ErrorCode::kTransport, "connection closed mid-frame");
    }
    return payload;
}

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint) {
    std::string host = "127.0.0.1";
    std::string_view port_text = endpoint;
    if (auto colon = endpoint.rfind(':'); colon != std::string_view::npos) {
        host = std::string(endpoint.substr(0, colon));
        port_text = endpoint.substr(colon + 1);
    }
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535 ||
        port_text.empty() || host.empty()) {
        fail(ErrorCode::kArgument, "bad endpoint '" + std::string(endpoint) + "' (want host:port)");
    }
    return {host, static_cast<std::uint16_t>(value)};
}

std::uint16_t default_port() {
    if (const char* env = std::getenv(kPortEnvVar); env && *env) {
        return parse_endpoint(std::string("127.0.0.1:") + env).second;
    }
    return kDefaultPort;
}

Server::Server(Scorer scorer, const std::string& host, std::uint16_t port)
    : scorer_(std::move(scorer)) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        fail(ErrorCode::kTransport, "cannot resolve " + host + ": " + gai_strerror(rc));
    }
    std::string last = "no addresses";
    for (addrinfo* ai = res; ai && !listener_.valid(); ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.valid()) continue;
        int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), 16) != 0) {
            last = std::strerror(errno);
            continue;
        }
        listener_ = std::move(s);
    }
    ::freeaddrinfo(res);
    if (!listener_.valid()) {
        fail(ErrorCode::kTransport, "cannot bind " + host + ":" + service + ": " + last);
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6
                ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

bool Server::wait_readable(int fd) const {
    while (!stopping_.load()) {
        pollfd p{fd, POLLIN, 0};
        int r = ::poll(&p, 1, kPollMs);
        if (r > 0) return true;
        if (r < 0 && errno != EINTR) return false;
    }
    return false;
}

void Server::run() {
    while (wait_readable(listener_.fd())) {
        Socket conn(::accept(listener_.fd(), nullptr, nullptr));
        if (!conn.valid()) continue;
        int one = 1;
        ::setsockopt(conn.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        try {
            serve_connection(conn);
        } catch (const std::exception&) {
            // transport failure on this connection only; back to accept
        }
    }
}

void Server::serve_connection(const Socket& conn) {
    while (!stopping_.load()) {
        unsigned char header[4];
        const std::size_t got = read_exact(conn.fd(), reinterpret_cast<char*>(header), 4, &stopping_);
        if (got < 4) return;
        const std::uint32_t n = decode_length(header);
        if (n > kMaxFrameBytes) {
            write_frame(conn, serialize_response({std::nullopt, std::nullopt, "frame too large"}));
            return;
        }
        std::string payload(n, '\0');
        if (read_exact(conn.fd(), payload.data(), n, &stopping_) < n) return;

        ParsedRequest parsed = parse_request(payload);
        if (!parsed.id) return;  // nothing to address a reply to
        Response resp;
        resp.id = parsed.id;
        if (!parsed.request) {
            resp.error = parsed.error;
        } else {
            try {
                const double score = scorer_(parsed.request->question, parsed.request->answer);
                if (std::isfinite(score)) {
                    resp.result = score;
                } else {
                    resp.error = "non-finite score";
                }
            } catch (const std::exception& e) {
                resp.error = e.what();
            }
        }
        served_.fetch_add(1);
        write_frame(conn, serialize_response(resp));
    }
}

Client::Client(const std::string& host, std::uint16_t port) : sock_(connect_tcp(host, port)) {}

double Client::get_score(std::string_view question, std::string_view answer) {
    const std::uint64_t id = next_id_++;
    write_frame(sock_, serialize_request({id, "getScore", std::string(question), std::string(answer)}));
    auto payload = read_frame(sock_);
    if (!payload) fail(ErrorCode::kTransport, "connection closed by server");
    Response resp = parse_response(*payload);
    if (resp.error) fail(ErrorCode::kRemote, *resp.error);
    if (resp.id != id) {
        fail(ErrorCode::kProtocol, "response id " + (resp.id ? std::to_string(*resp.id) : "null") +
                                       " does not match request id " + std::to_string(id));
    }
    return *resp.result;
}

}  // namespace rerank
