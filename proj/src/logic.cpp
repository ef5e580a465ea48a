#include "psk/logic.hpp"

#include <algorithm>
#include <sstream>

namespace psk {

// ---------------------------------------------------------------------------
// Signature

static bool is_builtin_name(const std::string& n) {
    static const std::set<std::string> builtins = {"+", "-", "*", "<=", "<", ">=", ">", "=", kIntSort};
    return builtins.count(n) > 0;
}

void Signature::add_sort(const std::string& name) {
    if (is_builtin_name(name)) throw LogicError("cannot redeclare builtin: " + name);
    if (name_taken(name)) throw LogicError("duplicate signature name: " + name);
    sorts_.insert(name);
}

void Signature::add_function(const std::string& name, std::vector<std::string> arg_sorts,
                             std::string result_sort) {
    if (is_builtin_name(name)) throw LogicError("cannot redeclare builtin: " + name);
    if (name_taken(name)) throw LogicError("duplicate signature name: " + name);
    for (const auto& s : arg_sorts)
        if (!has_sort(s)) throw LogicError("unknown sort in function " + name + ": " + s);
    if (!has_sort(result_sort)) throw LogicError("unknown result sort in function " + name);
    functions_.emplace(name, FunctionDecl{std::move(arg_sorts), std::move(result_sort)});
}

void Signature::add_predicate(const std::string& name, std::vector<std::string> arg_sorts) {
    if (is_builtin_name(name)) throw LogicError("cannot redeclare builtin: " + name);
    if (name_taken(name)) throw LogicError("duplicate signature name: " + name);
    for (const auto& s : arg_sorts)
        if (!has_sort(s)) throw LogicError("unknown sort in predicate " + name + ": " + s);
    predicates_.emplace(name, std::move(arg_sorts));
}

void Signature::add_constant(const std::string& name, std::string sort) {
    if (is_builtin_name(name)) throw LogicError("cannot redeclare builtin: " + name);
    if (name_taken(name)) throw LogicError("duplicate signature name: " + name);
    if (!has_sort(sort)) throw LogicError("unknown sort in constant " + name);
    constants_.emplace(name, std::move(sort));
}

bool Signature::has_sort(const std::string& name) const {
    return name == kIntSort || sorts_.count(name) > 0;
}

const FunctionDecl* Signature::function(const std::string& name) const {
    auto it = functions_.find(name);
    return it == functions_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* Signature::predicate(const std::string& name) const {
    auto it = predicates_.find(name);
    return it == predicates_.end() ? nullptr : &it->second;
}

const std::string* Signature::constant(const std::string& name) const {
    auto it = constants_.find(name);
    return it == constants_.end() ? nullptr : &it->second;
}

bool Signature::name_taken(const std::string& name) const {
    return sorts_.count(name) || functions_.count(name) || predicates_.count(name) ||
           constants_.count(name);
}

// ---------------------------------------------------------------------------
// Term construction

Term Term::var(std::string name, std::string sort) {
    return Term(Node{TermKind::Var, std::move(name), std::move(sort), 0, {}});
}

Term Term::constant(std::string name, std::string sort) {
    return Term(Node{TermKind::Const, std::move(name), std::move(sort), 0, {}});
}

Term Term::constant(const std::string& name, const Signature& sig) {
    const std::string* s = sig.constant(name);
    if (!s) throw LogicError("unknown constant: " + name);
    return constant(name, *s);
}

Term Term::app(std::string name, std::vector<Term> args, std::string result_sort) {
    return Term(Node{TermKind::App, std::move(name), std::move(result_sort), 0, std::move(args)});
}

Term Term::app(const std::string& name, std::vector<Term> args, const Signature& sig) {
    const FunctionDecl* d = sig.function(name);
    if (!d) throw LogicError("unknown function: " + name);
    if (d->arg_sorts.size() != args.size())
        throw LogicError("arity mismatch applying " + name);
    for (size_t i = 0; i < args.size(); ++i)
        if (args[i].sort() != d->arg_sorts[i])
            throw LogicError("sort mismatch in argument " + std::to_string(i) + " of " + name);
    return app(name, std::move(args), d->result_sort);
}

Term Term::int_lit(std::int64_t value) {
    return Term(Node{TermKind::IntLit, {}, kIntSort, value, {}});
}

static void require_int(const Term& t, const char* what) {
    if (t.sort() != kIntSort) throw LogicError(std::string("arithmetic requires Int operand: ") + what);
}

Term Term::add(Term lhs, Term rhs) {
    require_int(lhs, "+");
    require_int(rhs, "+");
    return Term(Node{TermKind::Add, {}, kIntSort, 0, {std::move(lhs), std::move(rhs)}});
}

Term Term::sub(Term lhs, Term rhs) {
    require_int(lhs, "-");
    require_int(rhs, "-");
    return Term(Node{TermKind::Sub, {}, kIntSort, 0, {std::move(lhs), std::move(rhs)}});
}

Term Term::mul(Term lhs, Term rhs) {
    require_int(lhs, "*");
    require_int(rhs, "*");
    if (lhs.kind() != TermKind::IntLit && rhs.kind() != TermKind::IntLit)
        throw LogicError("non-linear multiplication: one side must be an integer literal");
    return Term(Node{TermKind::Mul, {}, kIntSort, 0, {std::move(lhs), std::move(rhs)}});
}

bool Term::operator==(const Term& other) const {
    if (node_ == other.node_) return true;
    if (!node_ || !other.node_) return false;
    if (node_->kind != other.node_->kind || node_->name != other.node_->name ||
        node_->sort != other.node_->sort || node_->value != other.node_->value ||
        node_->args.size() != other.node_->args.size())
        return false;
    for (size_t i = 0; i < node_->args.size(); ++i)
        if (!(node_->args[i] == other.node_->args[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Formula construction

Formula Formula::pred(std::string name, std::vector<Term> args) {
    Node n{FormulaKind::Pred, std::move(name), {}, CmpOp::Le, std::move(args), {}};
    return Formula(std::move(n));
}

Formula Formula::eq(Term lhs, Term rhs) {
    if (lhs.sort() != rhs.sort())
        throw LogicError("equality between different sorts: " + lhs.sort() + " vs " + rhs.sort());
    Node n{FormulaKind::Eq, {}, lhs.sort(), CmpOp::Le, {std::move(lhs), std::move(rhs)}, {}};
    return Formula(std::move(n));
}

Formula Formula::cmp(CmpOp op, Term lhs, Term rhs) {
    require_int(lhs, "comparison");
    require_int(rhs, "comparison");
    Node n{FormulaKind::Cmp, {}, {}, op, {std::move(lhs), std::move(rhs)}, {}};
    return Formula(std::move(n));
}

Formula Formula::top() { return Formula(Node{FormulaKind::Top, {}, {}, CmpOp::Le, {}, {}}); }
Formula Formula::bot() { return Formula(Node{FormulaKind::Bot, {}, {}, CmpOp::Le, {}, {}}); }

Formula Formula::negate(Formula f) {
    return Formula(Node{FormulaKind::Not, {}, {}, CmpOp::Le, {}, {std::move(f)}});
}

Formula Formula::conj(Formula l, Formula r) {
    return Formula(Node{FormulaKind::And, {}, {}, CmpOp::Le, {}, {std::move(l), std::move(r)}});
}

Formula Formula::disj(Formula l, Formula r) {
    return Formula(Node{FormulaKind::Or, {}, {}, CmpOp::Le, {}, {std::move(l), std::move(r)}});
}

Formula Formula::imp(Formula l, Formula r) {
    return Formula(Node{FormulaKind::Imp, {}, {}, CmpOp::Le, {}, {std::move(l), std::move(r)}});
}

Formula Formula::forall(std::string var, std::string sort, Formula body) {
    return Formula(Node{FormulaKind::Forall, std::move(var), std::move(sort), CmpOp::Le, {},
                        {std::move(body)}});
}

Formula Formula::exists(std::string var, std::string sort, Formula body) {
    return Formula(Node{FormulaKind::Exists, std::move(var), std::move(sort), CmpOp::Le, {},
                        {std::move(body)}});
}

// ---------------------------------------------------------------------------
// Sequents

void Sequent::add_hyp(const std::string& name, Formula f) {
    if (hyp(name)) throw LogicError("duplicate hypothesis name: " + name);
    hyps_.emplace_back(name, std::move(f));
}

const Formula* Sequent::hyp(const std::string& name) const {
    for (const auto& [n, f] : hyps_)
        if (n == name) return &f;
    return nullptr;
}

Sequent Sequent::without_hyp(const std::string& name) const {
    Sequent out(goal_);
    for (const auto& [n, f] : hyps_)
        if (n != name) out.add_hyp(n, f);
    return out;
}

// ---------------------------------------------------------------------------
// Well-sortedness audit

void check_term(const Term& t, const Signature& sig,
                const std::map<std::string, std::string>& bound_vars) {
    if (t.empty()) throw LogicError("empty term");
    switch (t.kind()) {
    case TermKind::Var: {
        if (!sig.has_sort(t.sort())) throw LogicError("variable with unknown sort: " + t.name());
        auto it = bound_vars.find(t.name());
        if (it != bound_vars.end() && it->second != t.sort())
            throw LogicError("variable sort clash for " + t.name());
        return;
    }
    case TermKind::Const: {
        const std::string* s = sig.constant(t.name());
        if (!s) throw LogicError("unknown constant: " + t.name());
        if (*s != t.sort()) throw LogicError("constant sort clash: " + t.name());
        return;
    }
    case TermKind::App: {
        const FunctionDecl* d = sig.function(t.name());
        if (!d) throw LogicError("unknown function: " + t.name());
        if (d->arg_sorts.size() != t.args().size()) throw LogicError("arity mismatch: " + t.name());
        if (d->result_sort != t.sort()) throw LogicError("result sort clash: " + t.name());
        for (size_t i = 0; i < t.args().size(); ++i) {
            check_term(t.args()[i], sig, bound_vars);
            if (t.args()[i].sort() != d->arg_sorts[i])
                throw LogicError("argument sort mismatch in " + t.name());
        }
        return;
    }
    case TermKind::IntLit:
        return;
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul: {
        for (const auto& a : t.args()) {
            check_term(a, sig, bound_vars);
            if (a.sort() != kIntSort) throw LogicError("arithmetic over non-Int term");
        }
        if (t.kind() == TermKind::Mul && t.args()[0].kind() != TermKind::IntLit &&
            t.args()[1].kind() != TermKind::IntLit)
            throw LogicError("non-linear multiplication");
        return;
    }
    }
}

void check_formula(const Formula& f, const Signature& sig,
                   std::map<std::string, std::string> bound_vars) {
    if (f.empty()) throw LogicError("empty formula");
    switch (f.kind()) {
    case FormulaKind::Pred: {
        const auto* d = sig.predicate(f.name());
        if (!d) throw LogicError("unknown predicate: " + f.name());
        if (d->size() != f.terms().size()) throw LogicError("predicate arity mismatch: " + f.name());
        for (size_t i = 0; i < f.terms().size(); ++i) {
            check_term(f.terms()[i], sig, bound_vars);
            if (f.terms()[i].sort() != (*d)[i])
                throw LogicError("predicate argument sort mismatch in " + f.name());
        }
        return;
    }
    case FormulaKind::Eq:
        check_term(f.terms()[0], sig, bound_vars);
        check_term(f.terms()[1], sig, bound_vars);
        if (f.terms()[0].sort() != f.terms()[1].sort())
            throw LogicError("equality sort mismatch");
        return;
    case FormulaKind::Cmp:
        for (const auto& t : f.terms()) {
            check_term(t, sig, bound_vars);
            if (t.sort() != kIntSort) throw LogicError("comparison over non-Int term");
        }
        return;
    case FormulaKind::Top:
    case FormulaKind::Bot:
        return;
    case FormulaKind::Not:
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Imp:
        for (const auto& s : f.subs()) check_formula(s, sig, bound_vars);
        return;
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        if (!sig.has_sort(f.sort())) throw LogicError("binder with unknown sort: " + f.sort());
        bound_vars[f.name()] = f.sort();
        check_formula(f.subs()[0], sig, bound_vars);
        return;
    }
    }
}

// ---------------------------------------------------------------------------
// Free variables

static void free_vars_term(const Term& t, std::set<std::string>& bound,
                           std::map<std::string, std::string>& out) {
    switch (t.kind()) {
    case TermKind::Var:
        if (!bound.count(t.name())) out[t.name()] = t.sort();
        return;
    case TermKind::Const:
    case TermKind::IntLit:
        return;
    default:
        for (const auto& a : t.args()) free_vars_term(a, bound, out);
        return;
    }
}

static void free_vars_formula(const Formula& f, std::set<std::string>& bound,
                              std::map<std::string, std::string>& out) {
    switch (f.kind()) {
    case FormulaKind::Pred:
    case FormulaKind::Eq:
    case FormulaKind::Cmp:
        for (const auto& t : f.terms()) free_vars_term(t, bound, out);
        return;
    case FormulaKind::Top:
    case FormulaKind::Bot:
        return;
    case FormulaKind::Not:
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Imp:
        for (const auto& s : f.subs()) free_vars_formula(s, bound, out);
        return;
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        bool inserted = bound.insert(f.name()).second;
        free_vars_formula(f.subs()[0], bound, out);
        if (inserted) bound.erase(f.name());
        return;
    }
    }
}

std::map<std::string, std::string> free_vars(const Term& t) {
    std::map<std::string, std::string> out;
    if (t.empty()) return out;
    std::set<std::string> bound;
    free_vars_term(t, bound, out);
    return out;
}

std::map<std::string, std::string> free_vars(const Formula& f) {
    std::map<std::string, std::string> out;
    if (f.empty()) return out;
    std::set<std::string> bound;
    free_vars_formula(f, bound, out);
    return out;
}

// ---------------------------------------------------------------------------
// Substitution

Term substitute(const Term& in, const std::string& var, const Term& t) {
    switch (in.kind()) {
    case TermKind::Var:
        if (in.name() == var) {
            if (in.sort() != t.sort())
                throw LogicError("substitution sort mismatch for " + var);
            return t;
        }
        return in;
    case TermKind::Const:
    case TermKind::IntLit:
        return in;
    case TermKind::App: {
        std::vector<Term> args;
        args.reserve(in.args().size());
        for (const auto& a : in.args()) args.push_back(substitute(a, var, t));
        return Term::app(in.name(), std::move(args), in.sort());
    }
    case TermKind::Add:
        return Term::add(substitute(in.args()[0], var, t), substitute(in.args()[1], var, t));
    case TermKind::Sub:
        return Term::sub(substitute(in.args()[0], var, t), substitute(in.args()[1], var, t));
    case TermKind::Mul:
        return Term::mul(substitute(in.args()[0], var, t), substitute(in.args()[1], var, t));
    }
    throw LogicError("unreachable");
}

static std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
    std::string cand = base;
    int k = 0;
    while (avoid.count(cand)) cand = base + "_" + std::to_string(k++);
    return cand;
}

Formula substitute(const Formula& in, const std::string& var, const Term& t) {
    switch (in.kind()) {
    case FormulaKind::Pred: {
        std::vector<Term> args;
        args.reserve(in.terms().size());
        for (const auto& a : in.terms()) args.push_back(substitute(a, var, t));
        return Formula::pred(in.name(), std::move(args));
    }
    case FormulaKind::Eq:
        return Formula::eq(substitute(in.terms()[0], var, t), substitute(in.terms()[1], var, t));
    case FormulaKind::Cmp:
        return Formula::cmp(in.cmp_op(), substitute(in.terms()[0], var, t),
                            substitute(in.terms()[1], var, t));
    case FormulaKind::Top:
    case FormulaKind::Bot:
        return in;
    case FormulaKind::Not:
        return Formula::negate(substitute(in.subs()[0], var, t));
    case FormulaKind::And:
        return Formula::conj(substitute(in.subs()[0], var, t), substitute(in.subs()[1], var, t));
    case FormulaKind::Or:
        return Formula::disj(substitute(in.subs()[0], var, t), substitute(in.subs()[1], var, t));
    case FormulaKind::Imp:
        return Formula::imp(substitute(in.subs()[0], var, t), substitute(in.subs()[1], var, t));
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        if (in.name() == var) return in; // bound occurrence shadows
        auto t_free = free_vars(t);
        Formula body = in.subs()[0];
        std::string binder = in.name();
        if (t_free.count(binder)) {
            // rename the binder away from t's free variables
            std::set<std::string> avoid;
            for (const auto& [n, s] : t_free) avoid.insert(n);
            for (const auto& [n, s] : free_vars(body)) avoid.insert(n);
            avoid.insert(var);
            std::string renamed = fresh_name(binder, avoid);
            body = substitute(body, binder, Term::var(renamed, in.sort()));
            binder = renamed;
        }
        Formula new_body = substitute(body, var, t);
        return in.kind() == FormulaKind::Forall ? Formula::forall(binder, in.sort(), new_body)
                                                : Formula::exists(binder, in.sort(), new_body);
    }
    }
    throw LogicError("unreachable");
}

// ---------------------------------------------------------------------------
// Positions

std::string Position::to_string() const {
    std::string out = "[";
    for (size_t i = 0; i < path.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(path[i]);
    }
    return out + "]";
}

static TermOrFormula descend_term(const Term& t, const Position& p, size_t depth) {
    if (depth == p.path.size()) return t;
    int idx = p.path[depth];
    if (idx < 0 || size_t(idx) >= t.args().size())
        throw LogicError("position out of range at depth " + std::to_string(depth));
    return descend_term(t.args()[idx], p, depth + 1);
}

TermOrFormula subterm_at(const Formula& f, const Position& p) {
    return [&]() -> TermOrFormula {
        const Formula* cur = &f;
        size_t depth = 0;
        while (depth < p.path.size()) {
            int idx = p.path[depth];
            if (idx < 0) throw LogicError("negative position index");
            switch (cur->kind()) {
            case FormulaKind::Pred:
            case FormulaKind::Eq:
            case FormulaKind::Cmp:
                if (size_t(idx) >= cur->terms().size())
                    throw LogicError("position out of range at depth " + std::to_string(depth));
                return descend_term(cur->terms()[idx], p, depth + 1);
            case FormulaKind::Top:
            case FormulaKind::Bot:
                throw LogicError("position descends into an atom with no children");
            default:
                if (size_t(idx) >= cur->subs().size())
                    throw LogicError("position out of range at depth " + std::to_string(depth));
                cur = &cur->subs()[idx];
                ++depth;
            }
        }
        return *cur;
    }();
}

static Term replace_in_term(const Term& t, const Position& p, size_t depth, const Term& repl) {
    if (depth == p.path.size()) {
        if (t.sort() != repl.sort())
            throw LogicError("replacement sort mismatch: " + t.sort() + " vs " + repl.sort());
        return repl;
    }
    int idx = p.path[depth];
    if (idx < 0 || size_t(idx) >= t.args().size())
        throw LogicError("position out of range at depth " + std::to_string(depth));
    std::vector<Term> args = t.args();
    args[idx] = replace_in_term(t.args()[idx], p, depth + 1, repl);
    switch (t.kind()) {
    case TermKind::App:
        return Term::app(t.name(), std::move(args), t.sort());
    case TermKind::Add:
        return Term::add(args[0], args[1]);
    case TermKind::Sub:
        return Term::sub(args[0], args[1]);
    case TermKind::Mul:
        return Term::mul(args[0], args[1]);
    default:
        throw LogicError("position descends into a leaf term");
    }
}

static Formula replace_in_formula(const Formula& f, const Position& p, size_t depth,
                                  const Term& repl, std::set<std::string>& binders) {
    if (depth == p.path.size())
        throw LogicError("position resolves to a formula, not a term");
    int idx = p.path[depth];
    if (idx < 0) throw LogicError("negative position index");
    switch (f.kind()) {
    case FormulaKind::Pred:
    case FormulaKind::Eq:
    case FormulaKind::Cmp: {
        if (size_t(idx) >= f.terms().size())
            throw LogicError("position out of range at depth " + std::to_string(depth));
        for (const auto& [n, s] : free_vars(repl))
            if (binders.count(n))
                throw LogicError("replacement would capture bound variable " + n);
        std::vector<Term> terms = f.terms();
        terms[idx] = replace_in_term(f.terms()[idx], p, depth + 1, repl);
        if (f.kind() == FormulaKind::Pred) return Formula::pred(f.name(), std::move(terms));
        if (f.kind() == FormulaKind::Eq) return Formula::eq(terms[0], terms[1]);
        return Formula::cmp(f.cmp_op(), terms[0], terms[1]);
    }
    case FormulaKind::Top:
    case FormulaKind::Bot:
        throw LogicError("position descends into an atom with no children");
    case FormulaKind::Not:
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Imp: {
        if (size_t(idx) >= f.subs().size())
            throw LogicError("position out of range at depth " + std::to_string(depth));
        std::vector<Formula> subs = f.subs();
        subs[idx] = replace_in_formula(f.subs()[idx], p, depth + 1, repl, binders);
        switch (f.kind()) {
        case FormulaKind::Not: return Formula::negate(subs[0]);
        case FormulaKind::And: return Formula::conj(subs[0], subs[1]);
        case FormulaKind::Or: return Formula::disj(subs[0], subs[1]);
        default: return Formula::imp(subs[0], subs[1]);
        }
    }
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        if (idx != 0) throw LogicError("quantifier has a single child (the body)");
        bool inserted = binders.insert(f.name()).second;
        Formula body = replace_in_formula(f.subs()[0], p, depth + 1, repl, binders);
        if (inserted) binders.erase(f.name());
        return f.kind() == FormulaKind::Forall ? Formula::forall(f.name(), f.sort(), body)
                                               : Formula::exists(f.name(), f.sort(), body);
    }
    }
    throw LogicError("unreachable");
}

Formula replace_at(const Formula& f, const Position& p, const Term& t) {
    std::set<std::string> binders;
    return replace_in_formula(f, p, 0, t, binders);
}

// ---------------------------------------------------------------------------
// Canonical serialization

namespace {

struct CanonCtx {
    std::vector<std::string> binders; // innermost last
    int index_of(const std::string& name) const {
        for (int i = int(binders.size()) - 1; i >= 0; --i)
            if (binders[size_t(i)] == name) return int(binders.size()) - 1 - i;
        return -1;
    }
};

void canon_term(const Term& t, CanonCtx& ctx, std::string& out) {
    switch (t.kind()) {
    case TermKind::Var: {
        int db = ctx.index_of(t.name());
        if (db >= 0) {
            out += "$";
            out += std::to_string(db);
        } else {
            out += "(v ";
            out += t.name();
            out += " ";
            out += t.sort();
            out += ")";
        }
        return;
    }
    case TermKind::Const:
        out += "(c ";
        out += t.name();
        out += ")";
        return;
    case TermKind::IntLit:
        out += "(i ";
        out += std::to_string(t.int_value());
        out += ")";
        return;
    case TermKind::App: {
        out += "(f ";
        out += t.name();
        for (const auto& a : t.args()) {
            out += " ";
            canon_term(a, ctx, out);
        }
        out += ")";
        return;
    }
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul: {
        out += t.kind() == TermKind::Add ? "(add" : t.kind() == TermKind::Sub ? "(sub" : "(mul";
        for (const auto& a : t.args()) {
            out += " ";
            canon_term(a, ctx, out);
        }
        out += ")";
        return;
    }
    }
}

const char* cmp_tag(CmpOp op) {
    switch (op) {
    case CmpOp::Le: return "le";
    case CmpOp::Lt: return "lt";
    case CmpOp::Ge: return "ge";
    case CmpOp::Gt: return "gt";
    }
    return "?";
}

void canon_formula(const Formula& f, CanonCtx& ctx, std::string& out) {
    switch (f.kind()) {
    case FormulaKind::Pred: {
        out += "(p ";
        out += f.name();
        for (const auto& t : f.terms()) {
            out += " ";
            canon_term(t, ctx, out);
        }
        out += ")";
        return;
    }
    case FormulaKind::Eq: {
        out += "(eq ";
        out += f.terms()[0].sort();
        out += " ";
        canon_term(f.terms()[0], ctx, out);
        out += " ";
        canon_term(f.terms()[1], ctx, out);
        out += ")";
        return;
    }
    case FormulaKind::Cmp: {
        out += "(";
        out += cmp_tag(f.cmp_op());
        out += " ";
        canon_term(f.terms()[0], ctx, out);
        out += " ";
        canon_term(f.terms()[1], ctx, out);
        out += ")";
        return;
    }
    case FormulaKind::Top: out += "tt"; return;
    case FormulaKind::Bot: out += "ff"; return;
    case FormulaKind::Not:
        out += "(not ";
        canon_formula(f.subs()[0], ctx, out);
        out += ")";
        return;
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Imp: {
        out += f.kind() == FormulaKind::And ? "(and " : f.kind() == FormulaKind::Or ? "(or " : "(imp ";
        canon_formula(f.subs()[0], ctx, out);
        out += " ";
        canon_formula(f.subs()[1], ctx, out);
        out += ")";
        return;
    }
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        out += f.kind() == FormulaKind::Forall ? "(all " : "(ex ";
        out += f.sort();
        out += " ";
        ctx.binders.push_back(f.name());
        canon_formula(f.subs()[0], ctx, out);
        ctx.binders.pop_back();
        out += ")";
        return;
    }
    }
}

} // namespace

std::string canonical_text(const Term& t) {
    CanonCtx ctx;
    std::string out;
    canon_term(t, ctx, out);
    return out;
}

std::string canonical_text(const Formula& f) {
    CanonCtx ctx;
    std::string out;
    canon_formula(f, ctx, out);
    return out;
}

std::string canonical_text(const Sequent& s) {
    // Hypotheses keyed and ordered by name so construction order is
    // irrelevant to identity.
    std::vector<std::pair<std::string, const Formula*>> sorted;
    sorted.reserve(s.hyps().size());
    for (const auto& [n, f] : s.hyps()) sorted.emplace_back(n, &f);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string out = "(seq";
    for (const auto& [n, f] : sorted) {
        out += " (hyp ";
        out += n;
        out += " ";
        out += canonical_text(*f);
        out += ")";
    }
    out += " (goal ";
    out += canonical_text(s.goal());
    out += "))";
    return out;
}

bool alpha_equal(const Formula& a, const Formula& b) {
    if (a.empty() || b.empty()) return a.empty() == b.empty();
    return canonical_text(a) == canonical_text(b);
}

bool sequent_equal(const Sequent& a, const Sequent& b) {
    return canonical_text(a) == canonical_text(b);
}

Digest canonical_digest(const Term& t) { return digest_bytes("psk.term", canonical_text(t)); }
Digest canonical_digest(const Formula& f) { return digest_bytes("psk.formula", canonical_text(f)); }
Digest canonical_digest(const Sequent& s) { return digest_bytes("psk.sequent", canonical_text(s)); }

// ---------------------------------------------------------------------------
// Bounded evaluation

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_symbol(std::uint64_t seed, const std::string& name,
                          const std::vector<std::int64_t>& args) {
    std::uint64_t h = splitmix64(seed ^ 0x5bf03635ULL);
    for (char c : name) h = splitmix64(h ^ std::uint64_t(std::uint8_t(c)));
    for (auto a : args) h = splitmix64(h ^ std::uint64_t(a + 0x776e1357));
    return h;
}

std::int64_t domain_size(const Interpretation& in, const Signature& sig, const std::string& sort) {
    if (sort == kIntSort) return in.int_hi - in.int_lo + 1;
    auto it = in.carriers.find(sort);
    if (it == in.carriers.end())
        throw EvalError("uncovered sort: " + sort);
    if (it->second <= 0) throw EvalError("empty carrier for sort " + sort);
    (void)sig;
    return it->second;
}

std::int64_t domain_value(const Interpretation& in, const std::string& sort, std::int64_t index) {
    if (sort == kIntSort) return in.int_lo + index;
    return index;
}

std::int64_t fallback_value(const Interpretation& in, const Signature& sig, const std::string& sort,
                            std::uint64_t h) {
    std::int64_t k = domain_size(in, sig, sort);
    return domain_value(in, sort, std::int64_t(h % std::uint64_t(k)));
}

} // namespace

std::int64_t eval_term(const Term& t, const Interpretation& in, const Signature& sig,
                       const std::map<std::string, std::int64_t>& env) {
    switch (t.kind()) {
    case TermKind::Var: {
        auto it = env.find(t.name());
        if (it != env.end()) return it->second;
        auto fa = in.var_assign.find(t.name());
        if (fa != in.var_assign.end()) return fa->second;
        throw EvalError("uncovered variable: " + t.name());
    }
    case TermKind::Const: {
        auto it = in.constants.find(t.name());
        if (it != in.constants.end()) return it->second;
        if (!in.seeded_fallback) throw EvalError("uncovered constant: " + t.name());
        return fallback_value(in, sig, t.sort(), hash_symbol(in.seed, "c:" + t.name(), {}));
    }
    case TermKind::IntLit:
        return t.int_value();
    case TermKind::App: {
        std::vector<std::int64_t> args;
        args.reserve(t.args().size());
        for (const auto& a : t.args()) args.push_back(eval_term(a, in, sig, env));
        auto it = in.functions.find({t.name(), args});
        if (it != in.functions.end()) return it->second;
        if (!in.seeded_fallback) throw EvalError("uncovered function entry: " + t.name());
        return fallback_value(in, sig, t.sort(), hash_symbol(in.seed, "f:" + t.name(), args));
    }
    case TermKind::Add:
        return eval_term(t.args()[0], in, sig, env) + eval_term(t.args()[1], in, sig, env);
    case TermKind::Sub:
        return eval_term(t.args()[0], in, sig, env) - eval_term(t.args()[1], in, sig, env);
    case TermKind::Mul:
        return eval_term(t.args()[0], in, sig, env) * eval_term(t.args()[1], in, sig, env);
    }
    throw EvalError("unreachable");
}

static bool eval_formula(const Formula& f, const Interpretation& in, const Signature& sig,
                         std::map<std::string, std::int64_t>& env) {
    switch (f.kind()) {
    case FormulaKind::Pred: {
        std::vector<std::int64_t> args;
        args.reserve(f.terms().size());
        for (const auto& t : f.terms()) args.push_back(eval_term(t, in, sig, env));
        auto it = in.predicates.find({f.name(), args});
        if (it != in.predicates.end()) return it->second;
        if (!in.seeded_fallback) throw EvalError("uncovered predicate entry: " + f.name());
        return (hash_symbol(in.seed, "p:" + f.name(), args) & 1) != 0;
    }
    case FormulaKind::Eq:
        return eval_term(f.terms()[0], in, sig, env) == eval_term(f.terms()[1], in, sig, env);
    case FormulaKind::Cmp: {
        std::int64_t l = eval_term(f.terms()[0], in, sig, env);
        std::int64_t r = eval_term(f.terms()[1], in, sig, env);
        switch (f.cmp_op()) {
        case CmpOp::Le: return l <= r;
        case CmpOp::Lt: return l < r;
        case CmpOp::Ge: return l >= r;
        case CmpOp::Gt: return l > r;
        }
        return false;
    }
    case FormulaKind::Top: return true;
    case FormulaKind::Bot: return false;
    case FormulaKind::Not: return !eval_formula(f.subs()[0], in, sig, env);
    case FormulaKind::And:
        return eval_formula(f.subs()[0], in, sig, env) && eval_formula(f.subs()[1], in, sig, env);
    case FormulaKind::Or:
        return eval_formula(f.subs()[0], in, sig, env) || eval_formula(f.subs()[1], in, sig, env);
    case FormulaKind::Imp:
        return !eval_formula(f.subs()[0], in, sig, env) || eval_formula(f.subs()[1], in, sig, env);
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        std::int64_t k = domain_size(in, sig, f.sort());
        bool is_forall = f.kind() == FormulaKind::Forall;
        auto saved = env.find(f.name()) != env.end()
                         ? std::optional<std::int64_t>(env[f.name()])
                         : std::nullopt;
        bool result = is_forall;
        for (std::int64_t i = 0; i < k; ++i) {
            env[f.name()] = domain_value(in, f.sort(), i);
            bool v = eval_formula(f.subs()[0], in, sig, env);
            if (is_forall && !v) { result = false; break; }
            if (!is_forall && v) { result = true; break; }
        }
        if (saved) env[f.name()] = *saved; else env.erase(f.name());
        return result;
    }
    }
    throw EvalError("unreachable");
}

bool eval(const Formula& f, const Interpretation& in, const Signature& sig) {
    std::map<std::string, std::int64_t> env;
    return eval_formula(f, in, sig, env);
}

bool sequent_holds(const Sequent& s, const Interpretation& in, const Signature& sig) {
    // Free variables of the sequent are implicitly universal: enumerate every
    // assignment over their (bounded) domains.
    std::map<std::string, std::string> fv = free_vars(s.goal());
    for (const auto& [n, f] : s.hyps())
        for (const auto& [v, srt] : free_vars(f)) fv[v] = srt;

    std::vector<std::pair<std::string, std::string>> vars(fv.begin(), fv.end());
    std::vector<std::int64_t> idx(vars.size(), 0);

    auto run_once = [&](const Interpretation& local) {
        bool hyps_ok = true;
        for (const auto& [n, f] : s.hyps())
            if (!eval(f, local, sig)) { hyps_ok = false; break; }
        if (!hyps_ok) return true; // vacuously fine
        return eval(s.goal(), local, sig);
    };

    if (vars.empty()) return run_once(in);

    while (true) {
        Interpretation local = in;
        for (size_t i = 0; i < vars.size(); ++i)
            local.var_assign[vars[i].first] = domain_value(in, vars[i].second, idx[i]);
        if (!run_once(local)) return false;
        size_t i = 0;
        for (; i < vars.size(); ++i) {
            if (++idx[i] < domain_size(in, sig, vars[i].second)) break;
            idx[i] = 0;
        }
        if (i == vars.size()) return true;
    }
}

} // namespace psk
