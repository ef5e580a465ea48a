#ifndef PSK_REPAIR_HPP
#define PSK_REPAIR_HPP

#include "psk/certcheck.hpp"
#include "psk/kernel.hpp"
#include "psk/obligations.hpp"
#include "psk/solver.hpp"
#include "psk/store.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Failure classification, structured feedback, the cache-aware check
// pipeline, and the bounded repair driver speaking the proposer wire
// protocol.

namespace psk {
namespace repair {

inline constexpr const char* kProtocolVersion = "psk-repair/1";

// ---------------------------------------------------------------------------
// Failure taxonomy

enum class CauseClass {
    MissingLemma,
    FailedInstantiation,
    InvalidRewrite,
    UnsatisfiedPrecondition,
};

const char* cause_name(CauseClass c);
std::optional<CauseClass> cause_from_name(const std::string& s);

CauseClass classify(const oblig::ExtractIssue& issue);
CauseClass classify(const solver::DischargeOutcome& outcome);

struct FailureRecord {
    std::string node_id;
    CauseClass cause = CauseClass::UnsatisfiedPrecondition;
    Sequent sequent; // the failing context and goal
    std::string detail;
    bool has_countermodel = false;
    solver::Countermodel countermodel;
    std::vector<std::string> hints; // retrieved lemma ids (advisory)
};

// ---------------------------------------------------------------------------
// Configuration and transcripts

struct RepairConfig {
    int max_rounds = 3;           // proposer exchange bound (R)
    int round_timeout_ms = 30000; // per-round proposer budget
    int hint_count = 5;
    int jobs = 1; // node discharge parallelism
    solver::SolverBudgets budgets;
};

struct TranscriptEvent {
    int round = 0; // 0 = initial check
    std::string type; // "node" | "obligation" | "proposer" | "verdict" | "note"
    std::string node_id;
    std::string detail;
    bool cache_hit = false;
    bool accepted = false;
};

struct Transcript {
    std::vector<TranscriptEvent> events;
    std::int64_t solver_calls = 0;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
    // per round: nodes whose obligations were freshly discharged / dirty set
    std::vector<std::set<std::string>> rediscovered_per_round;
    std::vector<std::set<std::string>> dirty_per_round;

    void note(int round, const std::string& text) {
        events.push_back({round, "note", "", text, false, false});
    }
};

// ---------------------------------------------------------------------------
// Single check pass

struct NodeOutcome {
    std::string node_id;
    bool accepted = false;
    bool cache_hit = false;
    std::optional<FailureRecord> failure;
};

struct CheckResult {
    bool input_error = false;
    WellFormedReport report;
    bool accepted = false;
    std::vector<NodeOutcome> nodes;           // document order
    std::vector<FailureRecord> failures;      // all failing nodes
    std::vector<FailureRecord> frontier;      // first failing node per independent subtree
    std::string proof_object;                 // root proof object when accepted
    Sequent claimed;                          // facts + referenced lemmas |- theorem
    std::shared_ptr<kernel::CertRegistry> registry;
};

// The claimed sequent: declared context facts plus every library lemma the
// sketch pulls in, with the theorem as goal.
Sequent claimed_sequent(const Sketch& s, const oblig::ObligationSet& set);

// One full extract-discharge-assemble pass. `store` may be null (no caching).
// `dirty` restricts failed-entry reuse: failed cache entries are re-attempted
// when a node in their subtree is dirty.
CheckResult check_once(const Sketch& s, const LemmaLibrary* lib, store::ProofStore* store,
                       const RepairConfig& cfg, Transcript& tr, int round = 0,
                       const std::set<std::string>* dirty = nullptr);

// ---------------------------------------------------------------------------
// Proposer protocol

// request payload (JSON):
//   {protocol:"psk-repair/1", round, failure:{node_id, cause, detail,
//    context:[{name,formula}], goal, countermodel?, hints:[{id,formula}]},
//    node_source:"<DSL node text>"}
// framed as `PROPOSE <byte-length>\n<payload>`; replies are
// `NODE <byte-length>\n<node text>` or `GIVEUP\n`.
std::string failure_json(const FailureRecord& f, const LemmaLibrary* lib);
std::string build_request(int round, const FailureRecord& f, const std::string& node_source,
                          const LemmaLibrary* lib);
std::string frame_request(const std::string& payload);

struct ProposerReply {
    enum class Kind { Node, GiveUp, Error };
    Kind kind = Kind::Error;
    std::string node_text;
    std::string error;
};

// Parses `NODE <len>\n<text>` / `GIVEUP\n`.
ProposerReply parse_reply(const std::string& framed);

class Proposer {
public:
    virtual ~Proposer() = default;
    virtual ProposerReply propose(const std::string& payload, int timeout_ms) = 0;
};

// In-process proposer for tests and embedding.
class CallbackProposer : public Proposer {
public:
    using Fn = std::function<ProposerReply(const std::string& payload)>;
    explicit CallbackProposer(Fn fn) : fn_(std::move(fn)) {}
    ProposerReply propose(const std::string& payload, int) override { return fn_(payload); }

private:
    Fn fn_;
};

// Subprocess speaking the framed protocol on stdin/stdout. One session per
// run; started lazily on the first exchange.
class SubprocessProposer : public Proposer {
public:
    explicit SubprocessProposer(std::string command);
    ~SubprocessProposer() override;
    ProposerReply propose(const std::string& payload, int timeout_ms) override;

private:
    std::string command_;
    int in_fd_ = -1;  // child stdin (we write)
    int out_fd_ = -1; // child stdout (we read)
    long pid_ = -1;
    bool broken_ = false;
    bool start();
    void stop();
};

// Single-endpoint HTTP POST carrying the same framed payloads.
class HttpProposer : public Proposer {
public:
    explicit HttpProposer(std::string url);
    ProposerReply propose(const std::string& payload, int timeout_ms) override;

private:
    std::string url_;
};

std::unique_ptr<Proposer> make_proposer(const std::string& endpoint);

// ---------------------------------------------------------------------------
// Bounded repair driver

struct RunVerdict {
    bool accepted = false;
    std::string proof_object;
    std::vector<FailureRecord> final_failures;
    Sketch final_sketch;
    Sequent claimed;
    int exchanges = 0;
    Transcript transcript;
};

RunVerdict run(const Sketch& s, Proposer& proposer, const RepairConfig& cfg,
               const LemmaLibrary* lib = nullptr, store::ProofStore* store = nullptr);

} // namespace repair
} // namespace psk

#endif
