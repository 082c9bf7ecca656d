#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "transcript.hpp"

namespace osp {

constexpr std::size_t kMaxFrame = std::size_t{16} << 20;

struct FrameError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TimeoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DisconnectError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string length_prefix(std::size_t n) {
    if (n > kMaxFrame) throw FrameError("frame: payload exceeds 16 MiB");
    std::string p(4, '\0');
    for (int i = 0; i < 4; ++i) p[std::size_t(i)] = static_cast<char>((n >> (8 * (3 - i))) & 0xff);
    return p;
}

inline std::size_t read_length(const std::string& b) {
    if (b.size() < 4) throw FrameError("frame: truncated length prefix");
    std::size_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(b[std::size_t(i)]);
    if (n > kMaxFrame) throw FrameError("frame: declared length exceeds 16 MiB");
    return n;
}

inline std::string frame_encode(const Message& m) {
    std::string body = canonical(to_json(m));
    return length_prefix(body.size()) + body;
}

inline Message frame_decode(const std::string& bytes) {
    std::size_t n = read_length(bytes);
    if (bytes.size() < 4 + n) throw FrameError("frame: truncated body");
    if (bytes.size() > 4 + n) throw FrameError("frame: trailing bytes");
    json j = json::parse(bytes.begin() + 4, bytes.end(), nullptr, false);
    if (j.is_discarded()) throw FrameError("frame: malformed JSON");
    try {
        return message_from_json(j);
    } catch (const std::exception& e) {
        throw FrameError(std::string("frame: bad message: ") + e.what());
    }
}

// One full frame per send/recv.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(const std::string& frame) = 0;
    virtual std::string recv(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;
};

class MemoryChannel : public Channel {
    struct Pipe {
        std::mutex mu;
        std::condition_variable cv;
        std::deque<std::string> q;
        bool closed = false;
    };

public:
    static std::pair<std::shared_ptr<MemoryChannel>, std::shared_ptr<MemoryChannel>> pair() {
        auto ab = std::make_shared<Pipe>(), ba = std::make_shared<Pipe>();
        return {std::shared_ptr<MemoryChannel>(new MemoryChannel(ab, ba)), std::shared_ptr<MemoryChannel>(new MemoryChannel(ba, ab))};
    }

    void send(const std::string& frame) override {
        std::lock_guard lk(out_->mu);
        if (out_->closed) throw DisconnectError("channel closed");
        out_->q.push_back(frame);
        out_->cv.notify_all();
    }

    std::string recv(std::chrono::milliseconds timeout) override {
        std::unique_lock lk(in_->mu);
        if (!in_->cv.wait_for(lk, timeout, [&] { return !in_->q.empty() || in_->closed; }))
            throw TimeoutError("receive timed out");
        if (in_->q.empty()) throw DisconnectError("peer disconnected");
        auto f = std::move(in_->q.front());
        in_->q.pop_front();
        return f;
    }

    void close() override {
        for (auto* p : {in_.get(), out_.get()}) {
            std::lock_guard lk(p->mu);
            p->closed = true;
            p->cv.notify_all();
        }
    }

private:
    MemoryChannel(std::shared_ptr<Pipe> out, std::shared_ptr<Pipe> in) : out_(std::move(out)), in_(std::move(in)) {}
    std::shared_ptr<Pipe> out_;
    std::shared_ptr<Pipe> in_;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

inline Endpoint parse_endpoint(const std::string& s) {
    auto c = s.rfind(':');
    if (c == std::string::npos) throw std::invalid_argument("endpoint must be host:port");
    Endpoint e;
    e.host = s.substr(0, c);
    int p = 0;
    try {
        p = std::stoi(s.substr(c + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("endpoint port is not a number");
    }
    if (p < 0 || p > 65535) throw std::invalid_argument("endpoint port out of range");
    e.port = static_cast<std::uint16_t>(p);
    if (e.host.empty()) e.host = "127.0.0.1";
    return e;
}

class TcpChannel : public Channel {
public:
    explicit TcpChannel(int fd) : fd_(fd) {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    ~TcpChannel() override { close(); }
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void send(const std::string& frame) override {
        std::size_t off = 0;
        while (off < frame.size()) {
            ssize_t k = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
            if (k <= 0) throw DisconnectError("send failed: peer disconnected");
            off += std::size_t(k);
        }
    }

    std::string recv(std::chrono::milliseconds timeout) override {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        std::string head = read_exact(4, deadline);
        std::size_t n = read_length(head);
        return head + read_exact(n, deadline);
    }

    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    std::string read_exact(std::size_t n, std::chrono::steady_clock::time_point deadline) {
        std::string out(n, '\0');
        std::size_t off = 0;
        while (off < n) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw TimeoutError("receive timed out");
            pollfd p{fd_, POLLIN, 0};
            int r = ::poll(&p, 1, static_cast<int>(left.count()));
            if (r == 0) throw TimeoutError("receive timed out");
            if (r < 0) throw DisconnectError("poll failed");
            ssize_t k = ::recv(fd_, out.data() + off, n - off, 0);
            if (k <= 0) throw DisconnectError("peer disconnected");
            off += std::size_t(k);
        }
        return out;
    }

    int fd_ = -1;
};

inline addrinfo* resolve(const Endpoint& e, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(e.host.c_str(), std::to_string(e.port).c_str(), &hints, &res) != 0 || !res)
        throw std::runtime_error("cannot resolve " + e.host);
    return res;
}

// Bound listening socket; port 0 picks an ephemeral port, reported by port().
class TcpListener {
public:
    explicit TcpListener(const Endpoint& e) {
        addrinfo* ai = resolve(e, true);
        fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (fd_ < 0 || ::bind(fd_, ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(fd_, 1) != 0) {
            ::freeaddrinfo(ai);
            if (fd_ >= 0) ::close(fd_);
            throw std::runtime_error("cannot listen on " + e.host + ":" + std::to_string(e.port) + ": " + std::strerror(errno));
        }
        ::freeaddrinfo(ai);
        sockaddr_in sa{};
        socklen_t len = sizeof sa;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
        port_ = ntohs(sa.sin_port);
    }
    ~TcpListener() {
        if (fd_ >= 0) ::close(fd_);
    }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }

    std::unique_ptr<TcpChannel> accept(std::chrono::milliseconds timeout) {
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) throw TimeoutError("accept timed out");
        int c = ::accept(fd_, nullptr, nullptr);
        if (c < 0) throw DisconnectError("accept failed");
        return std::make_unique<TcpChannel>(c);
    }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// Retries until the listener is up or the timeout passes.
inline std::unique_ptr<TcpChannel> tcp_connect(const Endpoint& e, std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        addrinfo* ai = resolve(e, false);
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        int rc = fd >= 0 ? ::connect(fd, ai->ai_addr, ai->ai_addrlen) : -1;
        ::freeaddrinfo(ai);
        if (rc == 0) return std::make_unique<TcpChannel>(fd);
        if (fd >= 0) ::close(fd);
        if (std::chrono::steady_clock::now() >= deadline) throw TimeoutError("connect timed out");
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

} // namespace osp
