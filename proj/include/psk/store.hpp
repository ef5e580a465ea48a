#ifndef PSK_STORE_HPP
#define PSK_STORE_HPP

#include "psk/obligations.hpp"
#include "psk/sketch.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Content-addressed cache of node verdicts and proof objects, persistent on
// disk:
//   <dir>/VERSION                 format version
//   <dir>/LOCK                    single-writer lock (holder pid)
//   <dir>/<first2hex>/<keyhex>.entry
// Entries are self-contained: signature, sequent texts, proof objects and
// certificate records, so an audit can re-validate everything from scratch.

namespace psk {
namespace store {

struct StoreError : LogicError {
    using LogicError::LogicError;
};

using CacheKey = Digest;

// Key over (node goal, method tag + parameters, context chain digest, sorted
// hint ids); alpha-equivalent inputs produce equal keys.
CacheKey node_key(const SketchNode& n, const Digest& ctx_digest,
                  std::vector<std::string> hints);

// Per-node keys for a whole sketch: context digests are chained root-to-node
// (ambient facts, method context extensions, referenced library lemmas).
std::map<std::string, CacheKey> sketch_keys(const Sketch& s, const LemmaLibrary* lib = nullptr);

// Node ids of s_new whose key differs from (or is absent in) s_old.
std::set<std::string> dirty_set(const Sketch& s_old, const Sketch& s_new,
                                const LemmaLibrary* lib = nullptr);

// ---------------------------------------------------------------------------
// Entries

struct CertRecord {
    std::string kind; // translate mode: cnf | lia | context-lia
    std::string sequent_digest_hex;
    std::string cert_digest_hex;
    std::string cert_text;
};

struct ObligationRecord {
    std::string slot;
    std::vector<std::pair<std::string, std::string>> context; // name, formula text
    std::string goal;
    std::map<std::string, std::string> vars; // free variable sorts
    std::string proof_text;                  // kernel proof object
    std::vector<CertRecord> certs;
};

struct CacheEntry {
    CacheKey key{};
    std::string node_id;
    bool accepted = false;
    std::string created; // timestamp; ignored by comparisons
    std::string signature_body;
    std::vector<ObligationRecord> obligations;
    std::string failure_cause;  // when !accepted
    std::string failure_detail;
};

// ---------------------------------------------------------------------------
// Store

class ProofStore {
public:
    // Creates the directory if needed, acquires the writer lock and checks
    // the VERSION stamp. Throws StoreError when another live process holds
    // the lock or the version mismatches.
    explicit ProofStore(const std::string& dir);
    ~ProofStore();
    ProofStore(const ProofStore&) = delete;
    ProofStore& operator=(const ProofStore&) = delete;

    std::optional<CacheEntry> lookup(const CacheKey& key) const;
    void put(const CacheEntry& entry);
    std::vector<CacheKey> keys() const;
    void gc(); // removes all entries (the store is otherwise append-only)

    const std::string& dir() const { return dir_; }
    // corruption notices collected by lookup
    std::vector<std::string> take_warnings() const;

private:
    std::string dir_;
    mutable std::mutex mu_;
    mutable std::vector<std::string> warnings_;
    bool locked_ = false;

    std::string entry_path(const CacheKey& key) const;
};

std::string entry_to_json(const CacheEntry& e);
std::optional<CacheEntry> entry_from_json(const std::string& text, std::string* error);

} // namespace store
} // namespace psk

#endif
