#ifndef PSK_LOGIC_HPP
#define PSK_LOGIC_HPP

#include "psk/digest.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// First-order logic with equality over a declared signature, extended with
// linear integer arithmetic atoms. All values are immutable after
// construction and safe to share across threads.

namespace psk {

inline constexpr const char* kIntSort = "Int";

struct LogicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Signature

struct FunctionDecl {
    std::vector<std::string> arg_sorts;
    std::string result_sort;
};

class Signature {
public:
    // Declarations reject duplicate names across all categories and any
    // attempt to redeclare the builtin Int vocabulary.
    void add_sort(const std::string& name);
    void add_function(const std::string& name, std::vector<std::string> arg_sorts,
                      std::string result_sort);
    void add_predicate(const std::string& name, std::vector<std::string> arg_sorts);
    void add_constant(const std::string& name, std::string sort);

    bool has_sort(const std::string& name) const;
    const FunctionDecl* function(const std::string& name) const;
    const std::vector<std::string>* predicate(const std::string& name) const;
    const std::string* constant(const std::string& name) const;
    bool name_taken(const std::string& name) const;

    const std::set<std::string>& sorts() const { return sorts_; }
    const std::map<std::string, FunctionDecl>& functions() const { return functions_; }
    const std::map<std::string, std::vector<std::string>>& predicates() const { return predicates_; }
    const std::map<std::string, std::string>& constants() const { return constants_; }

    bool operator==(const Signature&) const = default;

private:
    std::set<std::string> sorts_; // user sorts; Int is builtin and always valid
    std::map<std::string, FunctionDecl> functions_;
    std::map<std::string, std::vector<std::string>> predicates_;
    std::map<std::string, std::string> constants_;
};

// ---------------------------------------------------------------------------
// Terms

enum class TermKind { Var, Const, App, IntLit, Add, Sub, Mul };

class Term {
public:
    Term() = default;

    static Term var(std::string name, std::string sort);
    static Term constant(std::string name, std::string sort);
    static Term app(std::string name, std::vector<Term> args, std::string result_sort);
    // Checked builders that look up sorts in the signature.
    static Term constant(const std::string& name, const Signature& sig);
    static Term app(const std::string& name, std::vector<Term> args, const Signature& sig);
    static Term int_lit(std::int64_t value);
    static Term add(Term lhs, Term rhs);
    static Term sub(Term lhs, Term rhs);
    // Linear multiplication: at least one side must be an integer literal.
    static Term mul(Term lhs, Term rhs);

    bool empty() const { return node_ == nullptr; }
    TermKind kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; }
    const std::string& sort() const { return node_->sort; } // result sort, every kind
    std::int64_t int_value() const { return node_->value; }
    const std::vector<Term>& args() const { return node_->args; }

    bool operator==(const Term& other) const; // structural
private:
    struct Node {
        TermKind kind;
        std::string name;
        std::string sort;
        std::int64_t value = 0;
        std::vector<Term> args;
    };
    std::shared_ptr<const Node> node_;
    explicit Term(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
};

// ---------------------------------------------------------------------------
// Formulas

enum class FormulaKind { Pred, Eq, Cmp, Top, Bot, Not, And, Or, Imp, Forall, Exists };
enum class CmpOp { Le, Lt, Ge, Gt };

class Formula {
public:
    Formula() = default;

    static Formula pred(std::string name, std::vector<Term> args);
    static Formula eq(Term lhs, Term rhs); // sorts must agree
    static Formula cmp(CmpOp op, Term lhs, Term rhs); // both Int
    static Formula top();
    static Formula bot();
    static Formula negate(Formula f);
    static Formula conj(Formula l, Formula r);
    static Formula disj(Formula l, Formula r);
    static Formula imp(Formula l, Formula r);
    static Formula forall(std::string var, std::string sort, Formula body);
    static Formula exists(std::string var, std::string sort, Formula body);

    bool empty() const { return node_ == nullptr; }
    FormulaKind kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; } // pred name / binder var
    const std::string& sort() const { return node_->sort; } // binder sort
    CmpOp cmp_op() const { return node_->cmp; }
    const std::vector<Term>& terms() const { return node_->terms; }
    const std::vector<Formula>& subs() const { return node_->subs; }

    bool is_quantifier() const {
        return kind() == FormulaKind::Forall || kind() == FormulaKind::Exists;
    }

private:
    struct Node {
        FormulaKind kind;
        std::string name;
        std::string sort;
        CmpOp cmp = CmpOp::Le;
        std::vector<Term> terms;
        std::vector<Formula> subs;
    };
    std::shared_ptr<const Node> node_;
    explicit Formula(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
};

// ---------------------------------------------------------------------------
// Sequents

// Ordered context of uniquely named hypotheses plus a goal. Display order is
// insertion order; equality and digests are name-keyed and therefore
// insensitive to insertion order.
class Sequent {
public:
    Sequent() = default;
    explicit Sequent(Formula goal) : goal_(std::move(goal)) {}

    void add_hyp(const std::string& name, Formula f); // throws on duplicate name
    const Formula* hyp(const std::string& name) const;
    const std::vector<std::pair<std::string, Formula>>& hyps() const { return hyps_; }
    const Formula& goal() const { return goal_; }
    void set_goal(Formula g) { goal_ = std::move(g); }
    Sequent without_hyp(const std::string& name) const;

private:
    std::vector<std::pair<std::string, Formula>> hyps_;
    Formula goal_;
};

// ---------------------------------------------------------------------------
// Positions

// Path of child indices from a formula root. At each step index i selects the
// i-th child; quantifier bodies are child 0; Eq/Cmp children are [lhs, rhs];
// predicate and function applications index their argument lists.
struct Position {
    std::vector<int> path;
    bool operator==(const Position&) const = default;
    std::string to_string() const;
};

using TermOrFormula = std::variant<Term, Formula>;

// ---------------------------------------------------------------------------
// Core operations

// Sort of a term; terms carry their sorts structurally.
inline const std::string& sort_of(const Term& t) { return t.sort(); }

// Well-sortedness re-check against a signature (parsers establish this at
// construction; programmatic values can be audited with these).
void check_term(const Term& t, const Signature& sig,
                const std::map<std::string, std::string>& bound_vars = {});
void check_formula(const Formula& f, const Signature& sig,
                   std::map<std::string, std::string> bound_vars = {});

// Free variables (name -> sort).
std::map<std::string, std::string> free_vars(const Term& t);
std::map<std::string, std::string> free_vars(const Formula& f);

// Capture-avoiding substitution of variable (name, sort) by term t.
Term substitute(const Term& in, const std::string& var, const Term& t);
Formula substitute(const Formula& in, const std::string& var, const Term& t);

// Positional access. Throws LogicError on out-of-range paths.
TermOrFormula subterm_at(const Formula& f, const Position& p);
// Replace the term at p. Throws on out-of-range paths, kind mismatch
// (position resolves to a formula), sort mismatch, or variable capture.
Formula replace_at(const Formula& f, const Position& p, const Term& t);

// Alpha-equivalence: bound variable names are irrelevant, everything else is
// syntactic.
bool alpha_equal(const Formula& a, const Formula& b);
bool sequent_equal(const Sequent& a, const Sequent& b); // name-keyed, alpha formulas

// Canonical serialization: bound variables are renamed to de-Bruijn-style
// placeholders so alpha-equivalent values serialize identically.
std::string canonical_text(const Term& t);
std::string canonical_text(const Formula& f);
std::string canonical_text(const Sequent& s);

Digest canonical_digest(const Term& t);
Digest canonical_digest(const Formula& f);
Digest canonical_digest(const Sequent& s);

// ---------------------------------------------------------------------------
// Bounded semantic evaluation (test oracle)

// Finite interpretation: uninterpreted sorts get carriers {0..k-1}, Int
// quantifiers range over [int_lo, int_hi]. Symbols may be given explicit
// tables; anything absent is filled by a deterministic seeded fallback so the
// interpretation is total. Disable the fallback to get strict coverage
// errors.
struct Interpretation {
    std::map<std::string, std::int64_t> carriers;
    std::int64_t int_lo = -3;
    std::int64_t int_hi = 3;
    std::uint64_t seed = 0;
    bool seeded_fallback = true;

    std::map<std::string, std::int64_t> constants;
    std::map<std::pair<std::string, std::vector<std::int64_t>>, std::int64_t> functions;
    std::map<std::pair<std::string, std::vector<std::int64_t>>, bool> predicates;
    std::map<std::string, std::int64_t> var_assign; // free variables
};

struct EvalError : LogicError {
    using LogicError::LogicError;
};

// Tarskian truth under the bounded semantics. Throws EvalError for symbols or
// sorts the interpretation does not cover.
bool eval(const Formula& f, const Interpretation& interp, const Signature& sig);
std::int64_t eval_term(const Term& t, const Interpretation& interp, const Signature& sig,
                       const std::map<std::string, std::int64_t>& env);

// True when every interpretation extension satisfying all hypotheses also
// satisfies the goal (helper used by soundness suites).
bool sequent_holds(const Sequent& s, const Interpretation& interp, const Signature& sig);

} // namespace psk

#endif
