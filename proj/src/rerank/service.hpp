#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace rerank {

/// Payload cap for one frame (4-byte big-endian length + UTF-8 object).
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;
inline constexpr std::uint16_t kDefaultPort = 9090;
inline constexpr const char* kPortEnvVar = "RERANKD_PORT";

struct Request {
    std::uint64_t id = 0;
    std::string method = "getScore";
    std::string question;
    std::string answer;
};

struct Response {
    std::optional<std::uint64_t> id;  // empty only when the request id was unrecoverable
    std::optional<double> result;
    std::optional<std::string> error;
};

/// Canonical encodings: no whitespace, fields in declaration order.
std::string serialize_request(const Request& req);
std::string serialize_response(const Response& resp);
Response parse_response(std::string_view payload);

struct ParsedRequest {
    std::optional<std::uint64_t> id;  // set whenever an id could be recovered
    std::optional<Request> request;   // set when the request is well-formed
    std::string error;
};
ParsedRequest parse_request(std::string_view payload);

std::string encode_frame(std::string_view payload);

/// Owned file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.release()) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept { int f = fd_; fd_ = -1; return f; }
    void close() noexcept;

private:
    int fd_ = -1;
};

Socket connect_tcp(const std::string& host, std::uint16_t port);
void send_all(const Socket& s, std::string_view bytes);
void write_frame(const Socket& s, std::string_view payload);
/// Empty optional on orderly EOF before any header byte; throws on a
/// truncated frame or an oversized length.
std::optional<std::string> read_frame(const Socket& s);

/// Parses "host:port"; a bare port means 127.0.0.1.
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint);

/// Port from RERANKD_PORT when set, else the default.
std::uint16_t default_port();

using Scorer = std::function<double(std::string_view question, std::string_view answer)>;

/// Single-threaded getScore server: one connection at a time, requests on a
/// connection handled strictly in order. The socket is bound at construction
/// (port 0 picks an ephemeral port).
class Server {
public:
    Server(Scorer scorer, const std::string& host, std::uint16_t port);

    std::uint16_t port() const noexcept { return port_; }

    /// Blocks until stop() is called.
    void run();
    /// Safe from another thread or a signal handler.
    void stop() noexcept { stopping_.store(true); }

    std::uint64_t requests_served() const noexcept { return served_.load(); }

private:
    void serve_connection(const Socket& conn);
    bool wait_readable(int fd) const;

    Scorer scorer_;
    Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> served_{0};
};

/// Persistent connection with one outstanding request at a time.
class Client {
public:
    Client(const std::string& host, std::uint16_t port);

    double get_score(std::string_view question, std::string_view answer);

private:
    Socket sock_;
    std::uint64_t next_id_ = 1;
};

}  // namespace rerank
