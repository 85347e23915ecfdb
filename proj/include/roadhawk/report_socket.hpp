#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "roadhawk/simnet.hpp"

namespace roadhawk {

// Socket flavor of the report server link: each record is sent as a 4-byte
// big-endian length prefix followed by the record text. A failed connection
// or send returns false, which makes the DefectReporter buffer the record.
class SocketReportSink final : public ReportSink {
public:
    SocketReportSink(const std::string& host, uint16_t port) { connect_to(host, port); }

    ~SocketReportSink() override {
        if (fd_ >= 0) ::close(fd_);
    }

    SocketReportSink(const SocketReportSink&) = delete;
    SocketReportSink& operator=(const SocketReportSink&) = delete;

    bool connected() const { return fd_ >= 0; }

    bool write_record(const std::string& record) override {
        if (fd_ < 0) return false;
        const uint32_t len = htonl(static_cast<uint32_t>(record.size()));
        if (!send_all(reinterpret_cast<const char*>(&len), 4)) return false;
        return send_all(record.data(), record.size());
    }

private:
    void connect_to(const std::string& host, uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) return;
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
            ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    bool send_all(const char* data, size_t n) {
        size_t sent = 0;
        while (sent < n) {
            const ssize_t k = ::send(fd_, data + sent, n - sent, MSG_NOSIGNAL);
            if (k <= 0) {
                ::close(fd_);
                fd_ = -1;
                return false;
            }
            sent += static_cast<size_t>(k);
        }
        return true;
    }

    int fd_ = -1;
};

// Minimal single-connection collector for tests and the CLI's socket mode.
class ReportSocketServer {
public:
    ReportSocketServer() {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw IoError("cannot create server socket");
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;  // ephemeral
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
            ::listen(listen_fd_, 1) != 0)
            throw IoError("cannot bind/listen report server");
        socklen_t len = sizeof(addr);
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        worker_ = std::thread([this] { serve(); });
    }

    ~ReportSocketServer() { stop(); }

    uint16_t port() const { return port_; }

    void stop() {
        if (listen_fd_ >= 0) {
            stopping_ = true;
            // Wake a blocked accept; queued client connections are served
            // first (accept is FIFO), so nothing already sent is lost.
            const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd >= 0) {
                sockaddr_in addr{};
                addr.sin_family = AF_INET;
                addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
                addr.sin_port = htons(port_);
                ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
                ::close(fd);
            }
            if (worker_.joinable()) worker_.join();
            ::close(listen_fd_);
            listen_fd_ = -1;
        } else if (worker_.joinable()) {
            worker_.join();
        }
    }

    // Safe to read after stop().
    const std::vector<std::string>& records() const { return records_; }

private:
    void serve() {
        for (;;) {
            const int conn = ::accept(listen_fd_, nullptr, nullptr);
            if (conn < 0) return;
            for (;;) {
                uint32_t len_be = 0;
                if (!recv_all(conn, reinterpret_cast<char*>(&len_be), 4)) break;
                const uint32_t len = ntohl(len_be);
                if (len > (1u << 20)) break;
                std::string rec(len, '\0');
                if (!recv_all(conn, rec.data(), len)) break;
                records_.push_back(std::move(rec));
            }
            ::close(conn);
            if (stopping_) return;
        }
    }

    static bool recv_all(int fd, char* data, size_t n) {
        size_t got = 0;
        while (got < n) {
            const ssize_t k = ::recv(fd, data + got, n - got, 0);
            if (k <= 0) return false;
            got += static_cast<size_t>(k);
        }
        return true;
    }

    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread worker_;
    std::vector<std::string> records_;
};

}  // namespace roadhawk
