#ifndef PSK_SOLVER_HPP
#define PSK_SOLVER_HPP

#include "psk/translate.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Untrusted automation for route=auto obligations. Every unsat/infeasible
// verdict ships a certificate; nothing here can mint theorems or tokens.

namespace psk {
namespace solver {

// ---------------------------------------------------------------------------
// Propositional: DPLL emitting reverse-unit-propagation proofs

struct RupProof {
    std::vector<std::vector<int>> clauses; // last one empty on success
};

std::string rup_to_text(const RupProof& p); // one clause per line, 0-terminated
RupProof rup_from_text(const std::string& text);

enum class SatStatus { Sat, Unsat, ResourceLimit };

struct SatResult {
    SatStatus status;
    std::vector<bool> model; // 1-based semantics: model[v-1]
    RupProof proof;
    std::int64_t conflicts = 0;
};

SatResult solve_sat(const CnfProblem& p, std::int64_t conflict_budget = 100000);

// ---------------------------------------------------------------------------
// LIA: branch-and-bound over an exact rational relaxation with Farkas leaves

struct LiaCert {
    bool is_branch = false;
    int var = -1;          // branch variable (roster index)
    std::int64_t bound = 0; // left: x <= bound, right: x >= bound+1
    std::unique_ptr<LiaCert> left, right;
    std::vector<BigRat> farkas; // leaf multipliers over the ≤-normalized rows
};

// s-expression form: (branch x b <left> <right>) / (farkas l1 ... lm)
std::string lia_cert_to_text(const LiaCert& c, const LiaProblem& p);
std::unique_ptr<LiaCert> lia_cert_from_text(const std::string& text, const LiaProblem& p);

enum class LiaStatus { Feasible, Infeasible, ResourceLimit };

struct LiaResult {
    LiaStatus status;
    std::vector<std::int64_t> model; // aligned with the roster
    std::unique_ptr<LiaCert> cert;
    std::int64_t nodes = 0;
};

LiaResult solve_lia(const LiaProblem& p, std::int64_t node_budget = 10000);

// ---------------------------------------------------------------------------
// Discharge

struct SolverBudgets {
    std::int64_t sat_conflicts = 100000;
    std::int64_t lia_nodes = 10000;
};

// Formula-level countermodel mapped back through the atom map / roster.
struct Countermodel {
    std::vector<std::pair<std::string, bool>> atoms;        // rendered atom -> value
    std::vector<std::pair<std::string, std::int64_t>> ints; // variable/term -> value
};

struct DischargeOutcome {
    enum class Kind { Certified, Countermodel, Unsupported, ResourceLimit };
    Kind kind = Kind::Unsupported;

    // certified: the exact translated problem the certificate refers to
    TranslateMode mode = TranslateMode::Cnf;
    std::optional<CnfProblem> cnf;
    std::optional<LiaProblem> lia;
    std::string cert_text;

    Countermodel counter;
    std::string reason; // unsupported / resource-limit detail
};

DischargeOutcome discharge(const Sequent& ob, const Signature& sig,
                           const SolverBudgets& budgets = {});

} // namespace solver
} // namespace psk

#endif
