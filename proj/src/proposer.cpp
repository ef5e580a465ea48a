#include "psk/repair.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include "httplib.h"

namespace psk {
namespace repair {

// ---------------------------------------------------------------------------
// Subprocess proposer

SubprocessProposer::SubprocessProposer(std::string command) : command_(std::move(command)) {}

SubprocessProposer::~SubprocessProposer() { stop(); }

bool SubprocessProposer::start() {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) return false;
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        return false;
    }
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        return false;
    }
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), (char*)nullptr);
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    pid_ = pid;
    return true;
}

void SubprocessProposer::stop() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
        ::kill(pid_t(pid_), SIGTERM);
        int status = 0;
        ::waitpid(pid_t(pid_), &status, 0);
        pid_ = -1;
    }
}

namespace {

// Reads until `stop` returns a complete frame, within the deadline.
bool read_with_deadline(int fd, std::string& buf, int timeout_ms,
                        const std::function<bool(const std::string&)>& complete) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    char chunk[4096];
    while (!complete(buf)) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) return false;
        int remaining =
            int(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
        struct pollfd pfd{fd, POLLIN, 0};
        int pr = ::poll(&pfd, 1, remaining);
        if (pr <= 0) return false;
        ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n <= 0) return false; // EOF or error
        buf.append(chunk, size_t(n));
    }
    return true;
}

bool frame_complete(const std::string& buf) {
    if (buf.rfind("GIVEUP", 0) == 0) return buf.find('\n') != std::string::npos;
    if (buf.rfind("NODE ", 0) == 0) {
        size_t nl = buf.find('\n');
        if (nl == std::string::npos) return false;
        try {
            size_t len = std::stoul(buf.substr(5, nl - 5));
            return buf.size() >= nl + 1 + len;
        } catch (const std::exception&) {
            return true; // malformed header; let the parser report it
        }
    }
    // unknown prefix: complete once a newline arrives so we can reject it
    return buf.find('\n') != std::string::npos;
}

} // namespace

ProposerReply SubprocessProposer::propose(const std::string& payload, int timeout_ms) {
    ProposerReply r;
    if (broken_) {
        r.error = "proposer session is broken";
        return r;
    }
    if (pid_ < 0 && !start()) {
        broken_ = true;
        r.error = "could not start proposer: " + command_;
        return r;
    }
    std::string framed = frame_request(payload);
    size_t written = 0;
    while (written < framed.size()) {
        ssize_t n = ::write(in_fd_, framed.data() + written, framed.size() - written);
        if (n <= 0) {
            broken_ = true;
            stop();
            r.error = "proposer pipe closed";
            return r;
        }
        written += size_t(n);
    }
    std::string buf;
    if (!read_with_deadline(out_fd_, buf, timeout_ms, frame_complete)) {
        broken_ = true;
        stop();
        r.error = "proposer timeout";
        return r;
    }
    return parse_reply(buf);
}

// ---------------------------------------------------------------------------
// HTTP proposer

HttpProposer::HttpProposer(std::string url) : url_(std::move(url)) {}

ProposerReply HttpProposer::propose(const std::string& payload, int timeout_ms) {
    ProposerReply r;
    // split http://host:port/path
    std::string rest = url_;
    auto scheme = rest.find("://");
    if (scheme == std::string::npos) {
        r.error = "bad proposer url";
        return r;
    }
    rest = rest.substr(scheme + 3);
    std::string host_port = rest;
    std::string path = "/";
    auto slash = rest.find('/');
    if (slash != std::string::npos) {
        host_port = rest.substr(0, slash);
        path = rest.substr(slash);
    }
    httplib::Client client(("http://" + host_port).c_str());
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    auto res = client.Post(path.c_str(), frame_request(payload), "application/octet-stream");
    if (!res) {
        r.error = "proposer http request failed";
        return r;
    }
    if (res->status != 200) {
        r.error = "proposer http status " + std::to_string(res->status);
        return r;
    }
    return parse_reply(res->body);
}

std::unique_ptr<Proposer> make_proposer(const std::string& endpoint) {
    if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0)
        return std::make_unique<HttpProposer>(endpoint);
    return std::make_unique<SubprocessProposer>(endpoint);
}

} // namespace repair
} // namespace psk
