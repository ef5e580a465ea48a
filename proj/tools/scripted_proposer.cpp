// Scripted proposer for driving the repair loop in tests and demos.
// Speaks the framed protocol on stdin/stdout:
//   request:  PROPOSE <byte-length>\n<json payload>
//   reply:    NODE <byte-length>\n<node text>   or   GIVEUP\n
//
// Modes:
//   --mode dir --dir D   reply with D/<node_id>.node when present, else GIVEUP
//   --mode echo          reply with the request's node_source unchanged
//   --mode giveup        always GIVEUP

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace {

bool read_exact(std::string& out, size_t n) {
    out.resize(n);
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::read(STDIN_FILENO, out.data() + got, n - got);
        if (r <= 0) return false;
        got += size_t(r);
    }
    return true;
}

bool read_line(std::string& line) {
    line.clear();
    char c;
    while (true) {
        ssize_t r = ::read(STDIN_FILENO, &c, 1);
        if (r <= 0) return false;
        if (c == '\n') return true;
        line.push_back(c);
    }
}

void reply_node(const std::string& text) {
    std::string frame = "NODE " + std::to_string(text.size()) + "\n" + text;
    fwrite(frame.data(), 1, frame.size(), stdout);
    fflush(stdout);
}

void reply_giveup() {
    fputs("GIVEUP\n", stdout);
    fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    std::string mode = "giveup";
    std::string dir;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--mode" && i + 1 < argc) mode = argv[++i];
        else if (arg == "--dir" && i + 1 < argc) dir = argv[++i];
    }

    std::string header;
    while (read_line(header)) {
        if (header.rfind("PROPOSE ", 0) != 0) continue;
        size_t len = 0;
        try {
            len = std::stoul(header.substr(8));
        } catch (const std::exception&) {
            reply_giveup();
            continue;
        }
        std::string payload;
        if (!read_exact(payload, len)) break;

        nlohmann::json req;
        try {
            req = nlohmann::json::parse(payload);
        } catch (const std::exception&) {
            reply_giveup();
            continue;
        }

        if (mode == "echo") {
            reply_node(req.value("node_source", ""));
            continue;
        }
        if (mode == "dir" && !dir.empty()) {
            std::string node_id = req["failure"].value("node_id", "");
            std::ifstream in(dir + "/" + node_id + ".node");
            if (in) {
                std::stringstream buf;
                buf << in.rdbuf();
                reply_node(buf.str());
                continue;
            }
        }
        reply_giveup();
    }
    return 0;
}
