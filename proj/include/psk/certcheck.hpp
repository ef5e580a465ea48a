#ifndef PSK_CERTCHECK_HPP
#define PSK_CERTCHECK_HPP

#include "psk/solver.hpp"
#include "psk/token.hpp"
#include "psk/translate.hpp"

#include <string>
#include <variant>

// Trusted validation of solver certificates; the only issuer of acceptance
// tokens. Checking is total and terminating: linear in proof length times
// clause database size for RUP, linear in tree size for LIA.

namespace psk {
namespace cert {

inline constexpr const char* kCheckerVersion = "psk-checker/1";

struct Rejection {
    std::string reason;
    int step = -1;    // RUP: failing proof step
    std::string path; // LIA: branch path like "LRL"
};

using CheckResult = std::variant<AcceptanceToken, Rejection>;

inline bool accepted(const CheckResult& r) {
    return std::holds_alternative<AcceptanceToken>(r);
}

// Reverse-unit-propagation check: each proof clause, negated, must propagate
// to a conflict against the clauses accepted so far; the final clause must be
// empty. The token binds the originating obligation's sequent digest.
CheckResult check_rup(const CnfProblem& p, const solver::RupProof& proof,
                      const Digest& sequent_digest);

// Farkas/branch tree check over the ≤-normalized rows; exact rational
// arithmetic throughout.
CheckResult check_lia(const LiaProblem& p, const solver::LiaCert& cert,
                      const Digest& sequent_digest);

// Checker-side gate for a bridge outcome: re-derives the translated problem
// for the outcome's mode through the trusted translation unit and validates
// the certificate against it. The bridge's own problem copy is ignored.
CheckResult validate_outcome(const Sequent& ob, const Signature& sig,
                             const solver::DischargeOutcome& outcome);

} // namespace cert
} // namespace psk

#endif
