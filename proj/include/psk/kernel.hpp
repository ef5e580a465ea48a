#ifndef PSK_KERNEL_HPP
#define PSK_KERNEL_HPP

#include "psk/logic.hpp"
#include "psk/token.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

// The trusted core. Theorem values can only be produced by apply_rule,
// replay, and admit_certified; nothing else in the codebase can mint one.

namespace psk {
namespace kernel {

struct KernelError : LogicError {
    using LogicError::LogicError;
};

enum class RuleKind {
    Assume, Weaken,
    AndI, AndEL, AndER,
    OrIL, OrIR, OrE,
    ImpI, ImpE,
    NotI, NotE, Raa, FalsumE, TopI,
    Refl, Sym, Trans, Cong, SubstEq,
    ForallE, ForallI, ExistsI, ExistsE,
    InductionInt,
    Cert, // certified leaf; only replay/admit_certified produce these
};

const char* rule_name(RuleKind k);
std::optional<RuleKind> rule_from_name(const std::string& name);

// Union of the parameter slots used by the individual rules. Which slots are
// read is fixed per rule.
struct RuleParams {
    std::string name;   // hypothesis / eigenvariable name
    std::string name2;  // second hypothesis / bound-variable name
    std::string name3;  // third name (induction hypothesis)
    std::string sort;
    Formula formula;
    Term term;
    std::vector<Term> terms; // cong: the fixed sibling arguments
    std::string fn;          // cong: function name
    int index = 0;           // cong: rewritten argument position
    Position pos;            // subst_eq
    bool ltr = true;         // subst_eq direction
    Digest cert_digest;      // certified leaves: sequent digest
};

struct ProofNode {
    RuleKind kind;
    RuleParams params;
    std::vector<std::shared_ptr<const ProofNode>> premises;
    Sequent concluded;
};

class Theorem {
public:
    Theorem() = delete;
    const Sequent& sequent() const { return seq_; }
    std::shared_ptr<const ProofNode> provenance() const { return prov_; }

private:
    Theorem(Sequent s, std::shared_ptr<const ProofNode> p)
        : seq_(std::move(s)), prov_(std::move(p)) {}
    Sequent seq_;
    std::shared_ptr<const ProofNode> prov_;
    friend struct KernelAccess; // defined in kernel.cpp only
};

// Registry of checker-validated certificates, keyed by sequent digest.
// Concurrent reads, serialized insertion.
class CertRegistry {
public:
    void insert(const Digest& sequent_digest, const Sequent& s, const Digest& cert_digest);
    std::optional<Sequent> lookup(const Digest& sequent_digest) const;
    std::optional<Digest> cert_for(const Digest& sequent_digest) const;
    std::vector<Digest> all_sequent_digests() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::pair<Sequent, Digest>> by_hex_;
};

// Applies one inference rule. Throws KernelError naming the violated side
// condition, or on premise shape mismatches.
Theorem apply_rule(RuleKind rule, const std::vector<Theorem>& premises, const RuleParams& params,
                   const Signature& sig);

// Records a checker-accepted obligation. The token must bind exactly this
// sequent's digest; the pair is added to the registry for later replay.
Theorem admit_certified(const Sequent& s, const AcceptanceToken& token, CertRegistry& registry);

// Proof object text: `PROOFOBJ v1 <theorem-digest-hex>` followed by one step
// per line.
std::string serialize_proof(const Theorem& t);

// Re-executes a serialized proof through apply_rule. Certified leaves are
// accepted only when their sequent digest is present in the registry. The
// conclusion must be alpha-equivalent to `claimed`.
Theorem replay(const std::string& proof_text, const Sequent& claimed, const Signature& sig,
               const CertRegistry& registry);

} // namespace kernel
} // namespace psk

#endif
