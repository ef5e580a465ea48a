#include "psk/store.hpp"

#include "json.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace psk {
namespace store {

inline constexpr const char* kStoreVersion = "1";

// ---------------------------------------------------------------------------
// Keys

namespace {

std::string bindings_canon(const std::vector<std::pair<std::string, Term>>& bindings) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& [name, term] : bindings)
        entries.emplace_back(name, canonical_text(term));
    std::sort(entries.begin(), entries.end());
    std::string out;
    for (const auto& [name, canon] : entries) out += name + ":=" + canon + ";";
    return out;
}

std::string method_canon(const Method& m) {
    switch (m.kind) {
    case MethodKind::Rewrite:
        return "rewrite|" + m.fact + "|" + m.pos.to_string() + "|" + (m.ltr ? "ltr" : "rtl") +
               "|" + bindings_canon(m.bindings);
    case MethodKind::Split:
        return "split|" + canonical_text(m.condition);
    case MethodKind::Induction:
        // the variable is determined by the goal's head binder, so the key is
        // stable under alpha-renaming
        return "induction";
    case MethodKind::Contradiction:
        return "contradiction";
    case MethodKind::Exact:
        return "exact|" + m.fact + "|" + bindings_canon(m.bindings);
    case MethodKind::Hole:
        return "hole";
    }
    return "?";
}

Digest chain_extend(const Digest& parent, const std::string& payload) {
    return digest_bytes("psk.chain", parent.hex() + "|" + payload);
}

std::string hyp_payload(const std::string& name, const Formula& f) {
    return name + "=" + canonical_text(f) + ";";
}

} // namespace

CacheKey node_key(const SketchNode& n, const Digest& ctx_digest,
                  std::vector<std::string> hints) {
    std::sort(hints.begin(), hints.end());
    hints.erase(std::unique(hints.begin(), hints.end()), hints.end());
    std::string payload = canonical_text(n.goal);
    payload += "\x1e";
    payload += method_canon(n.method);
    payload += "\x1e";
    payload += ctx_digest.hex();
    payload += "\x1e";
    for (const auto& h : hints) payload += h + ",";
    return digest_bytes("psk.nodekey", payload);
}

namespace {

void keys_walk(const SketchNode& n, Digest chain, const LemmaLibrary* lib,
               std::map<std::string, CacheKey>& out) {
    // referenced library lemmas extend this node's chain (their content
    // matters, not just their ids)
    std::vector<std::string> refs;
    if (!n.method.fact.empty()) refs.push_back(n.method.fact);
    for (const auto& u : n.uses) refs.push_back(u);
    if (lib) {
        std::string ext;
        for (const auto& r : refs)
            if (const Lemma* l = lib->find(r)) ext += hyp_payload(l->id, l->formula);
        if (!ext.empty()) chain = chain_extend(chain, "lemmas:" + ext);
    }

    out[n.id] = node_key(n, chain, n.uses);

    switch (n.method.kind) {
    case MethodKind::Split: {
        if (n.children.size() != 2) return;
        keys_walk(n.children[0], chain_extend(chain, hyp_payload(hyp_name(n.id, 0), n.method.condition)),
                  lib, out);
        keys_walk(n.children[1],
                  chain_extend(chain, hyp_payload(hyp_name(n.id, 1),
                                                  Formula::negate(n.method.condition))),
                  lib, out);
        return;
    }
    case MethodKind::Induction: {
        if (n.children.size() != 2 || n.goal.empty() || n.goal.kind() != FormulaKind::Forall)
            return;
        keys_walk(n.children[0], chain, lib, out);
        const std::string& v = n.method.var;
        Formula body = n.goal.subs()[0].kind() == FormulaKind::Imp ? n.goal.subs()[0].subs()[1]
                                                                   : n.goal.subs()[0];
        Digest step = chain_extend(
            chain, hyp_payload(hyp_name(n.id, 0), Formula::cmp(CmpOp::Ge, Term::var(v, kIntSort),
                                                               Term::int_lit(0))) +
                       hyp_payload(hyp_name(n.id, 1), body));
        keys_walk(n.children[1], step, lib, out);
        return;
    }
    case MethodKind::Contradiction: {
        if (n.children.size() != 1) return;
        keys_walk(n.children[0],
                  chain_extend(chain, hyp_payload(hyp_name(n.id, 0), Formula::negate(n.goal))),
                  lib, out);
        return;
    }
    case MethodKind::Rewrite:
        if (n.children.size() == 1) keys_walk(n.children[0], chain, lib, out);
        return;
    default:
        return;
    }
}

} // namespace

std::map<std::string, CacheKey> sketch_keys(const Sketch& s, const LemmaLibrary* lib) {
    std::string ambient;
    for (const auto& [name, f] : s.context) ambient += hyp_payload(name, f);
    Digest chain = digest_bytes("psk.chainroot", ambient);
    std::map<std::string, CacheKey> out;
    keys_walk(s.root, chain, lib, out);
    return out;
}

std::set<std::string> dirty_set(const Sketch& s_old, const Sketch& s_new,
                                const LemmaLibrary* lib) {
    auto old_keys = sketch_keys(s_old, lib);
    auto new_keys = sketch_keys(s_new, lib);
    std::set<std::string> out;
    for (const auto& [id, key] : new_keys) {
        auto it = old_keys.find(id);
        if (it == old_keys.end() || !(it->second == key)) out.insert(id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entry serialization

std::string entry_to_json(const CacheEntry& e) {
    nlohmann::ordered_json j;
    j["key"] = e.key.hex();
    j["node_id"] = e.node_id;
    j["verdict"] = e.accepted ? "accepted" : "failed";
    j["created"] = e.created;
    j["signature"] = e.signature_body;
    nlohmann::ordered_json obs = nlohmann::ordered_json::array();
    for (const auto& ob : e.obligations) {
        nlohmann::ordered_json o;
        o["slot"] = ob.slot;
        nlohmann::ordered_json ctx = nlohmann::ordered_json::array();
        for (const auto& [name, text] : ob.context)
            ctx.push_back({{"name", name}, {"formula", text}});
        o["context"] = std::move(ctx);
        o["goal"] = ob.goal;
        o["vars"] = ob.vars;
        o["proof"] = ob.proof_text;
        nlohmann::ordered_json certs = nlohmann::ordered_json::array();
        for (const auto& c : ob.certs)
            certs.push_back({{"kind", c.kind},
                             {"sequent_digest", c.sequent_digest_hex},
                             {"cert_digest", c.cert_digest_hex},
                             {"cert", c.cert_text}});
        o["certs"] = std::move(certs);
        obs.push_back(std::move(o));
    }
    j["obligations"] = std::move(obs);
    if (!e.accepted) {
        j["failure_cause"] = e.failure_cause;
        j["failure_detail"] = e.failure_detail;
    }
    j["entry_digest"] = "";
    std::string body = j.dump(1);
    j["entry_digest"] = digest_bytes("psk.entry", body).hex();
    return j.dump(1) + "\n";
}

std::optional<CacheEntry> entry_from_json(const std::string& text, std::string* error) {
    try {
        auto j = nlohmann::ordered_json::parse(text);
        std::string stored_digest = j.at("entry_digest").get<std::string>();
        j["entry_digest"] = "";
        std::string body = j.dump(1);
        if (digest_bytes("psk.entry", body).hex() != stored_digest) {
            if (error) *error = "entry digest mismatch";
            return std::nullopt;
        }
        CacheEntry e;
        e.key = Digest::from_hex(j.at("key").get<std::string>());
        e.node_id = j.at("node_id").get<std::string>();
        e.accepted = j.at("verdict").get<std::string>() == "accepted";
        e.created = j.at("created").get<std::string>();
        e.signature_body = j.at("signature").get<std::string>();
        for (const auto& o : j.at("obligations")) {
            ObligationRecord ob;
            ob.slot = o.at("slot").get<std::string>();
            for (const auto& c : o.at("context"))
                ob.context.emplace_back(c.at("name").get<std::string>(),
                                        c.at("formula").get<std::string>());
            ob.goal = o.at("goal").get<std::string>();
            ob.vars = o.at("vars").get<std::map<std::string, std::string>>();
            ob.proof_text = o.at("proof").get<std::string>();
            for (const auto& c : o.at("certs"))
                ob.certs.push_back({c.at("kind").get<std::string>(),
                                    c.at("sequent_digest").get<std::string>(),
                                    c.at("cert_digest").get<std::string>(),
                                    c.at("cert").get<std::string>()});
            e.obligations.push_back(std::move(ob));
        }
        if (!e.accepted) {
            e.failure_cause = j.value("failure_cause", "");
            e.failure_detail = j.value("failure_detail", "");
        }
        return e;
    } catch (const std::exception& ex) {
        if (error) *error = ex.what();
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// On-disk store

ProofStore::ProofStore(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);

    // single writer per store directory
    std::string lock_path = dir_ + "/LOCK";
    for (int attempt = 0; attempt < 2; ++attempt) {
        int fd = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            std::string pid = std::to_string(::getpid()) + "\n";
            ssize_t ignored = ::write(fd, pid.c_str(), pid.size());
            (void)ignored;
            ::close(fd);
            locked_ = true;
            break;
        }
        if (errno != EEXIST) throw StoreError("cannot create lock file: " + lock_path);
        // stale lock detection: remove when the holder is gone
        std::ifstream in(lock_path);
        long pid = 0;
        in >> pid;
        if (pid > 0 && ::kill(pid_t(pid), 0) == -1 && errno == ESRCH) {
            fs::remove(lock_path);
            continue;
        }
        throw StoreError("store is locked by pid " + std::to_string(pid));
    }
    if (!locked_) throw StoreError("could not acquire store lock");

    std::string version_path = dir_ + "/VERSION";
    if (fs::exists(version_path)) {
        std::ifstream in(version_path);
        std::string v;
        in >> v;
        if (v != kStoreVersion) {
            fs::remove(dir_ + "/LOCK");
            locked_ = false;
            throw StoreError("store version mismatch: found " + v);
        }
    } else {
        std::ofstream out(version_path);
        out << kStoreVersion << "\n";
    }
}

ProofStore::~ProofStore() {
    if (locked_) {
        std::error_code ec;
        fs::remove(dir_ + "/LOCK", ec);
    }
}

std::string ProofStore::entry_path(const CacheKey& key) const {
    std::string hex = key.hex();
    return dir_ + "/" + hex.substr(0, 2) + "/" + hex + ".entry";
}

std::optional<CacheEntry> ProofStore::lookup(const CacheKey& key) const {
    std::string path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    std::string error;
    auto entry = entry_from_json(buf.str(), &error);
    if (!entry) {
        std::lock_guard<std::mutex> lock(mu_);
        warnings_.push_back("corrupt entry " + path + ": " + error);
        return std::nullopt;
    }
    if (!(entry->key == key)) {
        std::lock_guard<std::mutex> lock(mu_);
        warnings_.push_back("entry key mismatch in " + path);
        return std::nullopt;
    }
    return entry;
}

void ProofStore::put(const CacheEntry& entry) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string path = entry_path(entry.key);
    fs::create_directories(fs::path(path).parent_path());
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << entry_to_json(entry);
    }
    fs::rename(tmp, path);
}

std::vector<CacheKey> ProofStore::keys() const {
    std::vector<CacheKey> out;
    if (!fs::exists(dir_)) return out;
    for (const auto& sub : fs::directory_iterator(dir_)) {
        if (!sub.is_directory()) continue;
        for (const auto& f : fs::directory_iterator(sub)) {
            std::string name = f.path().filename().string();
            if (name.size() == 64 + 6 && name.ends_with(".entry")) {
                try {
                    out.push_back(Digest::from_hex(name.substr(0, 64)));
                } catch (const std::exception&) {}
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ProofStore::gc() {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& sub : fs::directory_iterator(dir_)) {
        if (sub.is_directory()) fs::remove_all(sub);
    }
}

std::vector<std::string> ProofStore::take_warnings() const {
    std::lock_guard<std::mutex> lock(mu_);
    auto out = std::move(warnings_);
    warnings_.clear();
    return out;
}

} // namespace store
} // namespace psk
