#ifndef PSK_TRANSLATE_HPP
#define PSK_TRANSLATE_HPP

#include "psk/logic.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

// Trusted translation of obligations to solver form. This unit is part of
// the trusted base: the certificate checker re-derives problems through it,
// so the solver bridge cannot smuggle in a different encoding.
//
// Validity of Γ ⊢ φ is encoded as unsatisfiability of Γ ∪ {¬φ}:
//   - LIA route when every goal-side conjunct is a linear atom after
//     negation-normal-form flattening. Uninterpreted Int-valued subterms are
//     abstracted as fresh integer variables (sound for unsatisfiability);
//     non-linear context conjuncts are dropped (sound weakening).
//   - Propositional route otherwise: maximal non-propositional subformulas
//     become opaque atoms, Tseitin transformation to CNF. Ground equality
//     atoms over uninterpreted symbols stay opaque; syntactically distinct
//     atoms are independent.
//   - Quantified context conjuncts are dropped; a quantified goal-side
//     conjunct makes the obligation unsupported.

namespace psk {

using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Problems

struct CnfProblem {
    int num_vars = 0;
    std::vector<std::vector<int>> clauses;
    std::vector<std::pair<int, Formula>> atoms; // (variable, abstracted atom)
};

enum class LinRel { Le, Ge, Eq };

struct LinConstraint {
    std::vector<std::int64_t> coeffs; // aligned with the variable roster
    LinRel rel;
    std::int64_t bound;
};

struct LiaProblem {
    std::vector<std::string> var_names; // roster: s-expression-safe names
    std::vector<Term> var_terms;        // the term each roster entry abstracts
    std::vector<LinConstraint> constraints;
    // true when non-linear context conjuncts were dropped; a feasible point
    // is then only a candidate countermodel, not a definitive one
    bool dropped_context = false;
};

// ≤-normalized view: one row per ≤/≥ constraint, two per equality (≤ first).
// Farkas multipliers index this row list.
struct LeRow {
    std::vector<BigRat> coeffs;
    BigRat bound;
};
std::vector<LeRow> normalized_rows(const LiaProblem& p);

struct Unsupported {
    std::string reason;
};

using Translation = std::variant<CnfProblem, LiaProblem, Unsupported>;

// Which trusted encoding a certificate refers to.
enum class TranslateMode { Cnf, Lia, ContextLia };
const char* translate_mode_name(TranslateMode m);
std::optional<TranslateMode> translate_mode_from_name(const std::string& s);

// ---------------------------------------------------------------------------
// Entry points

Translation translate(const Sequent& ob, const Signature& sig);

// Forced propositional encoding (used when the LIA route is inconclusive and
// as the checker-side derivation for cnf-mode certificates).
Translation translate_cnf(const Sequent& ob, const Signature& sig);

// Conjunction of the context's own linear atoms (goal ignored). Validates the
// sequent by ex falso when infeasible. Empty when no linear atoms exist.
std::optional<LiaProblem> translate_context_lia(const Sequent& ob, const Signature& sig);

// Re-derive the problem for a given mode (checker-side path).
Translation translate_for_mode(const Sequent& ob, const Signature& sig, TranslateMode mode);

// ---------------------------------------------------------------------------
// Text forms

std::string to_dimacs(const CnfProblem& p);
std::string lia_to_text(const LiaProblem& p);

} // namespace psk

#endif
