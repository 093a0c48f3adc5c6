#pragma once

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "encoder.hpp"
#include "error.hpp"

namespace hopir {

namespace net {

/// Owning socket descriptor.
class Socket {
  public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept
    {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    [[nodiscard]] int fd() const noexcept { return fd_; }
    [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
    void reset()
    {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

  private:
    int fd_ = -1;
};

inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint)
{
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
        throw RemoteError(endpoint, "endpoint must be host:port");
    }
    return {endpoint.substr(0, colon), endpoint.substr(colon + 1)};
}

inline Socket connect_tcp(const std::string& endpoint, int timeout_ms)
{
    auto [host, port] = split_endpoint(endpoint);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw RemoteError(endpoint, std::string("resolve failed: ") + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    Socket sock;
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
        Socket candidate(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!candidate.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
        ::setsockopt(candidate.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        ::setsockopt(candidate.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
        if (::connect(candidate.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            sock = std::move(candidate);
            break;
        }
        last_error = std::strerror(errno);
    }
    ::freeaddrinfo(res);
    if (!sock.valid()) {
        throw RemoteError(endpoint, "connect failed: " + last_error);
    }
    return sock;
}

/// Newline-delimited message stream over a connected socket.
class LineChannel {
  public:
    LineChannel(Socket sock, std::string endpoint) : sock_(std::move(sock)), endpoint_(std::move(endpoint)) {}

    void send_line(std::string line)
    {
        line.push_back('\n');
        std::size_t off = 0;
        while (off < line.size()) {
            auto n = ::send(sock_.fd(), line.data() + off, line.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw RemoteError(endpoint_, std::string("send failed: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::string recv_line()
    {
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            char chunk[4096];
            auto n = ::recv(sock_.fd(), chunk, sizeof chunk, 0);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw RemoteError(endpoint_, std::string("receive failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                throw RemoteError(endpoint_, "connection closed by peer");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

  private:
    Socket sock_;
    std::string endpoint_;
    std::string buffer_;
};

}  // namespace net

/// Client for the embedding service. One request is in flight per connection;
/// calls from several threads are serialized.
class RemoteEncoder final : public Encoder {
  public:
    explicit RemoteEncoder(EncoderConfig config, int timeout_ms = 30000)
        : config_(std::move(config)), timeout_ms_(timeout_ms)
    {
        config_.validate();
    }

    [[nodiscard]] std::size_t dim() const override { return config_.dim; }

    /// Connects and performs the handshake if not yet done. Returns the
    /// service's declared dimension.
    std::size_t connect()
    {
        std::lock_guard lock(mutex_);
        ensure_connected();
        return config_.dim;
    }

    QueryAwareRepr encode(std::string_view query, const Passage& passage) override
    {
        std::lock_guard lock(mutex_);
        ensure_connected();
        auto reply = round_trip({{"op", "encode"}, {"query", query}, {"text", passage.text}});
        expect_op(reply, "vec");
        return {parse_vector(reply.at("v")), EncoderProvider::remote};
    }

    std::vector<QueryAwareRepr> encode_batch(std::string_view query, const std::vector<const Passage*>& passages) override
    {
        if (passages.empty()) {
            return {};
        }
        std::lock_guard lock(mutex_);
        ensure_connected();
        nlohmann::json texts = nlohmann::json::array();
        for (const auto* p : passages) {
            texts.push_back(p->text);
        }
        auto reply = round_trip({{"op", "encode_batch"}, {"query", query}, {"texts", texts}});
        expect_op(reply, "vecs");
        const auto& vs = reply.at("vs");
        if (!vs.is_array() || vs.size() != passages.size()) {
            fail("batch reply has " + std::to_string(vs.is_array() ? vs.size() : 0) + " vectors, expected "
                 + std::to_string(passages.size()));
        }
        std::vector<QueryAwareRepr> out;
        out.reserve(vs.size());
        for (std::size_t i = 0; i < vs.size(); ++i) {
            try {
                out.push_back({parse_vector(vs[i]), EncoderProvider::remote});
            } catch (const RemoteError& e) {
                fail("batch element " + std::to_string(i) + ": " + e.what());
            }
        }
        return out;
    }

  private:
    [[noreturn]] void fail(const std::string& cause) const { throw RemoteError(config_.endpoint, cause); }

    void ensure_connected()
    {
        if (channel_) {
            return;
        }
        channel_ = std::make_unique<net::LineChannel>(net::connect_tcp(config_.endpoint, timeout_ms_), config_.endpoint);
        try {
            auto reply = round_trip({{"op", "hello"}});
            expect_op(reply, "hello");
            auto dim = reply.at("dim").get<std::int64_t>();
            if (dim < 1 || static_cast<std::size_t>(dim) != config_.dim) {
                fail("service dimension " + std::to_string(dim) + " does not match configured "
                     + std::to_string(config_.dim));
            }
        } catch (...) {
            channel_.reset();
            throw;
        }
    }

    nlohmann::json round_trip(const nlohmann::json& request)
    {
        try {
            channel_->send_line(request.dump());
            auto line = channel_->recv_line();
            auto reply = nlohmann::json::parse(line);
            if (!reply.is_object()) {
                fail("reply is not a JSON object");
            }
            if (reply.value("op", "") == "err") {
                fail("service error: " + reply.value("msg", std::string("(no message)")));
            }
            return reply;
        } catch (const nlohmann::json::exception& e) {
            channel_.reset();
            fail(std::string("protocol error: ") + e.what());
        } catch (const RemoteError&) {
            channel_.reset();
            throw;
        }
    }

    void expect_op(const nlohmann::json& reply, std::string_view op) const
    {
        if (reply.value("op", "") != op) {
            fail("unexpected reply op '" + reply.value("op", std::string()) + "', expected '" + std::string(op) + "'");
        }
    }

    std::vector<double> parse_vector(const nlohmann::json& v) const
    {
        if (!v.is_array() || v.size() != config_.dim) {
            fail("vector length " + std::to_string(v.is_array() ? v.size() : 0) + " does not match dimension "
                 + std::to_string(config_.dim));
        }
        std::vector<double> out;
        out.reserve(v.size());
        for (const auto& x : v) {
            if (!x.is_number()) {
                fail("non-numeric vector entry");
            }
            double d = x.get<double>();
            if (!std::isfinite(d)) {
                fail("non-finite vector entry");
            }
            out.push_back(d);
        }
        return out;
    }

    EncoderConfig config_;
    int timeout_ms_;
    std::mutex mutex_;
    std::unique_ptr<net::LineChannel> channel_;
};

inline std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config, const InvertedIndex& index)
{
    if (config.provider == EncoderProvider::remote) {
        return std::make_unique<RemoteEncoder>(config);
    }
    return std::make_unique<LexicalEncoder>(index, config);
}

}  // namespace hopir
