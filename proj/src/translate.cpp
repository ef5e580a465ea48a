#include "psk/translate.hpp"

#include "psk/parse.hpp"

#include <map>
#include <sstream>

namespace psk {

const char* translate_mode_name(TranslateMode m) {
    switch (m) {
    case TranslateMode::Cnf: return "cnf";
    case TranslateMode::Lia: return "lia";
    case TranslateMode::ContextLia: return "context-lia";
    }
    return "?";
}

std::optional<TranslateMode> translate_mode_from_name(const std::string& s) {
    if (s == "cnf") return TranslateMode::Cnf;
    if (s == "lia") return TranslateMode::Lia;
    if (s == "context-lia") return TranslateMode::ContextLia;
    return std::nullopt;
}

namespace {

// ---------------------------------------------------------------------------
// NNF with constant folding. Quantified subformulas are opaque: negation is
// not pushed through them.

Formula nnf(const Formula& f, bool positive);

Formula nnf_atom(const Formula& f, bool positive) {
    if (positive) return f;
    // integer-tight rewrites of negated comparisons
    if (f.kind() == FormulaKind::Cmp) {
        const Term& l = f.terms()[0];
        const Term& r = f.terms()[1];
        switch (f.cmp_op()) {
        case CmpOp::Le: return Formula::cmp(CmpOp::Ge, l, Term::add(r, Term::int_lit(1)));
        case CmpOp::Lt: return Formula::cmp(CmpOp::Ge, l, r);
        case CmpOp::Ge: return Formula::cmp(CmpOp::Le, l, Term::sub(r, Term::int_lit(1)));
        case CmpOp::Gt: return Formula::cmp(CmpOp::Le, l, r);
        }
    }
    return Formula::negate(f);
}

Formula nnf(const Formula& f, bool positive) {
    switch (f.kind()) {
    case FormulaKind::Top: return positive ? Formula::top() : Formula::bot();
    case FormulaKind::Bot: return positive ? Formula::bot() : Formula::top();
    case FormulaKind::Not: return nnf(f.subs()[0], !positive);
    case FormulaKind::And:
    case FormulaKind::Or: {
        bool conj = (f.kind() == FormulaKind::And) == positive;
        Formula l = nnf(f.subs()[0], positive);
        Formula r = nnf(f.subs()[1], positive);
        // constant folding
        if (conj) {
            if (l.kind() == FormulaKind::Bot || r.kind() == FormulaKind::Bot)
                return Formula::bot();
            if (l.kind() == FormulaKind::Top) return r;
            if (r.kind() == FormulaKind::Top) return l;
            return Formula::conj(l, r);
        }
        if (l.kind() == FormulaKind::Top || r.kind() == FormulaKind::Top) return Formula::top();
        if (l.kind() == FormulaKind::Bot) return r;
        if (r.kind() == FormulaKind::Bot) return l;
        return Formula::disj(l, r);
    }
    case FormulaKind::Imp: {
        // a -> b === ~a \/ b
        Formula l = nnf(f.subs()[0], !positive);
        Formula r = nnf(f.subs()[1], positive);
        if (positive) {
            if (l.kind() == FormulaKind::Top || r.kind() == FormulaKind::Top)
                return Formula::top();
            if (l.kind() == FormulaKind::Bot) return r;
            if (r.kind() == FormulaKind::Bot) return l;
            return Formula::disj(l, r);
        }
        if (l.kind() == FormulaKind::Bot || r.kind() == FormulaKind::Bot) return Formula::bot();
        if (l.kind() == FormulaKind::Top) return r;
        if (r.kind() == FormulaKind::Top) return l;
        return Formula::conj(l, r);
    }
    case FormulaKind::Forall:
    case FormulaKind::Exists:
        return positive ? f : Formula::negate(f); // opaque
    default:
        return nnf_atom(f, positive);
    }
}

void flatten_conj(const Formula& f, std::vector<Formula>& out) {
    if (f.kind() == FormulaKind::And) {
        flatten_conj(f.subs()[0], out);
        flatten_conj(f.subs()[1], out);
    } else {
        out.push_back(f);
    }
}

bool is_quantified_literal(const Formula& f) {
    if (f.is_quantifier()) return true;
    return f.kind() == FormulaKind::Not && f.subs()[0].is_quantifier();
}

// ---------------------------------------------------------------------------
// Linearization with uninterpreted-term abstraction

struct Roster {
    std::vector<std::string> names;
    std::vector<Term> terms;
    std::map<std::string, int> by_key; // canonical term text -> index
    int abstractions = 0;

    int index_for(const Term& t) {
        std::string key = canonical_text(t);
        auto it = by_key.find(key);
        if (it != by_key.end()) return it->second;
        int idx = int(names.size());
        std::string name;
        if (t.kind() == TermKind::Var || t.kind() == TermKind::Const) name = t.name();
        else name = "@t" + std::to_string(abstractions++);
        names.push_back(name);
        terms.push_back(t);
        by_key.emplace(std::move(key), idx);
        return idx;
    }
};

struct LinSum {
    std::map<int, std::int64_t> coeffs; // roster index -> coefficient
    std::int64_t constant = 0;
};

// Linear view of an Int term; uninterpreted applications become roster
// variables. Every well-sorted Int term linearizes.
LinSum linearize(const Term& t, Roster& roster) {
    switch (t.kind()) {
    case TermKind::IntLit: return {{}, t.int_value()};
    case TermKind::Var:
    case TermKind::Const: {
        LinSum s;
        s.coeffs[roster.index_for(t)] = 1;
        return s;
    }
    case TermKind::App: {
        LinSum s;
        s.coeffs[roster.index_for(t)] = 1;
        return s;
    }
    case TermKind::Add:
    case TermKind::Sub: {
        LinSum a = linearize(t.args()[0], roster);
        LinSum b = linearize(t.args()[1], roster);
        std::int64_t sign = t.kind() == TermKind::Add ? 1 : -1;
        for (const auto& [i, c] : b.coeffs) {
            a.coeffs[i] += sign * c;
            if (a.coeffs[i] == 0) a.coeffs.erase(i);
        }
        a.constant += sign * b.constant;
        return a;
    }
    case TermKind::Mul: {
        const Term& lit = t.args()[0].kind() == TermKind::IntLit ? t.args()[0] : t.args()[1];
        const Term& other = t.args()[0].kind() == TermKind::IntLit ? t.args()[1] : t.args()[0];
        LinSum s = linearize(other, roster);
        std::int64_t k = lit.int_value();
        LinSum out;
        for (const auto& [i, c] : s.coeffs)
            if (c * k != 0) out.coeffs[i] = c * k;
        out.constant = s.constant * k;
        return out;
    }
    }
    throw LogicError("unreachable");
}

bool is_linear_atom(const Formula& f) {
    if (f.kind() == FormulaKind::Cmp) return true;
    if (f.kind() == FormulaKind::Eq && !f.terms().empty() && f.terms()[0].sort() == kIntSort)
        return true;
    return false;
}

// ⊤ contributes nothing, ⊥ contributes the infeasible row 0 <= -1.
bool lia_compatible(const Formula& f) {
    return is_linear_atom(f) || f.kind() == FormulaKind::Top || f.kind() == FormulaKind::Bot;
}

// lhs (rel) rhs  =>  sum(coeffs) rel bound
LinConstraint constraint_of(const Formula& atom, Roster& roster, int nvars_hint) {
    (void)nvars_hint;
    LinSum l = linearize(atom.terms()[0], roster);
    LinSum r = linearize(atom.terms()[1], roster);
    for (const auto& [i, c] : r.coeffs) {
        l.coeffs[i] -= c;
        if (l.coeffs[i] == 0) l.coeffs.erase(i);
    }
    std::int64_t bound = r.constant - l.constant;
    LinConstraint out;
    out.bound = bound;
    if (atom.kind() == FormulaKind::Eq) {
        out.rel = LinRel::Eq;
    } else {
        switch (atom.cmp_op()) {
        case CmpOp::Le: out.rel = LinRel::Le; break;
        case CmpOp::Lt: out.rel = LinRel::Le; out.bound -= 1; break;
        case CmpOp::Ge: out.rel = LinRel::Ge; break;
        case CmpOp::Gt: out.rel = LinRel::Ge; out.bound += 1; break;
        }
    }
    out.coeffs.assign(roster.names.size(), 0);
    for (const auto& [i, c] : l.coeffs) {
        if (size_t(i) >= out.coeffs.size()) out.coeffs.resize(size_t(i) + 1, 0);
        out.coeffs[size_t(i)] = c;
    }
    return out;
}

LiaProblem finish_lia(Roster roster, std::vector<LinConstraint> constraints) {
    LiaProblem p;
    p.var_names = std::move(roster.names);
    p.var_terms = std::move(roster.terms);
    p.constraints = std::move(constraints);
    for (auto& c : p.constraints) c.coeffs.resize(p.var_names.size(), 0);
    return p;
}

// ---------------------------------------------------------------------------
// Tseitin

struct Tseitin {
    CnfProblem cnf;
    std::map<std::string, int> atom_vars;

    int fresh_var() { return ++cnf.num_vars; }

    int atom_var(const Formula& atom) {
        std::string key = canonical_text(atom);
        auto it = atom_vars.find(key);
        if (it != atom_vars.end()) return it->second;
        int v = fresh_var();
        cnf.atoms.emplace_back(v, atom);
        atom_vars.emplace(std::move(key), v);
        return v;
    }

    void add_clause(std::vector<int> clause) {
        // drop tautologies so the problem invariant holds
        for (int lit : clause)
            for (int other : clause)
                if (lit == -other) return;
        cnf.clauses.push_back(std::move(clause));
    }

    int encode(const Formula& f) {
        switch (f.kind()) {
        case FormulaKind::Not:
            return -encode(f.subs()[0]);
        case FormulaKind::And: {
            int l = encode(f.subs()[0]);
            int r = encode(f.subs()[1]);
            int g = fresh_var();
            add_clause({-g, l});
            add_clause({-g, r});
            add_clause({g, -l, -r});
            return g;
        }
        case FormulaKind::Or: {
            int l = encode(f.subs()[0]);
            int r = encode(f.subs()[1]);
            int g = fresh_var();
            add_clause({-g, l, r});
            add_clause({g, -l});
            add_clause({g, -r});
            return g;
        }
        case FormulaKind::Imp: {
            int l = encode(f.subs()[0]);
            int r = encode(f.subs()[1]);
            int g = fresh_var();
            add_clause({-g, -l, r});
            add_clause({g, l});
            add_clause({g, -r});
            return g;
        }
        default:
            return atom_var(f); // atoms, incl. opaque quantified subformulas
        }
    }
};

std::vector<std::pair<Formula, bool>> conjuncts_of(const Sequent& ob) {
    std::vector<std::pair<Formula, bool>> out; // (formula, from_goal)
    for (const auto& [name, f] : ob.hyps()) {
        std::vector<Formula> cs;
        flatten_conj(nnf(f, true), cs);
        for (auto& c : cs) out.emplace_back(std::move(c), false);
    }
    std::vector<Formula> cs;
    flatten_conj(nnf(ob.goal(), false), cs);
    for (auto& c : cs) out.emplace_back(std::move(c), true);
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

std::vector<LeRow> normalized_rows(const LiaProblem& p) {
    std::vector<LeRow> rows;
    size_t n = p.var_names.size();
    auto push = [&](const LinConstraint& c, int sign) {
        LeRow row;
        row.coeffs.assign(n, 0);
        for (size_t i = 0; i < n && i < c.coeffs.size(); ++i)
            row.coeffs[i] = sign * c.coeffs[i];
        row.bound = sign * c.bound;
        rows.push_back(std::move(row));
    };
    for (const auto& c : p.constraints) {
        switch (c.rel) {
        case LinRel::Le: push(c, 1); break;
        case LinRel::Ge: push(c, -1); break;
        case LinRel::Eq:
            push(c, 1);
            push(c, -1);
            break;
        }
    }
    return rows;
}

namespace {

Translation translate_impl(const Sequent& ob, bool allow_lia) {
    auto conjuncts = conjuncts_of(ob);

    std::vector<Formula> usable;
    bool goal_all_linear = true;
    bool has_goal_conjunct = false;
    for (const auto& [c, from_goal] : conjuncts) {
        if (is_quantified_literal(c)) {
            if (from_goal) return Unsupported{"quantified-after-flattening"};
            continue; // quantified context conjuncts are dropped
        }
        if (from_goal) {
            has_goal_conjunct = true;
            if (!lia_compatible(c)) goal_all_linear = false;
        }
        usable.push_back(c);
    }

    if (allow_lia && goal_all_linear && has_goal_conjunct) {
        // LIA route: goal conjuncts plus the context's linear atoms
        Roster roster;
        std::vector<LinConstraint> constraints;
        bool dropped = false;
        for (const auto& [c, from_goal] : conjuncts) {
            if (is_quantified_literal(c)) {
                dropped = true;
                continue;
            }
            if (c.kind() == FormulaKind::Top) continue;
            if (c.kind() == FormulaKind::Bot) {
                constraints.push_back(LinConstraint{{}, LinRel::Le, -1});
                continue;
            }
            if (!is_linear_atom(c)) {
                dropped = true; // non-linear context conjunct dropped
                continue;
            }
            constraints.push_back(constraint_of(c, roster, 0));
        }
        LiaProblem p = finish_lia(std::move(roster), std::move(constraints));
        p.dropped_context = dropped;
        return p;
    }

    // Propositional route
    Tseitin ts;
    bool any = false;
    for (const auto& c : usable) {
        if (c.kind() == FormulaKind::Top) continue;
        if (c.kind() == FormulaKind::Bot) {
            ts.cnf.clauses.push_back({});
            any = true;
            continue;
        }
        ts.add_clause({ts.encode(c)});
        any = true;
    }
    if (!any) {
        // no constraints at all: trivially satisfiable problem
        if (ts.cnf.num_vars == 0) ts.cnf.num_vars = 1;
    }
    return std::move(ts.cnf);
}

} // namespace

Translation translate(const Sequent& ob, const Signature& sig) {
    (void)sig;
    return translate_impl(ob, true);
}

Translation translate_cnf(const Sequent& ob, const Signature& sig) {
    (void)sig;
    return translate_impl(ob, false);
}

std::optional<LiaProblem> translate_context_lia(const Sequent& ob, const Signature& sig) {
    (void)sig;
    Roster roster;
    std::vector<LinConstraint> constraints;
    for (const auto& [name, f] : ob.hyps()) {
        std::vector<Formula> cs;
        flatten_conj(nnf(f, true), cs);
        for (const auto& c : cs) {
            if (c.kind() == FormulaKind::Bot)
                constraints.push_back(LinConstraint{{}, LinRel::Le, -1});
            else if (is_linear_atom(c))
                constraints.push_back(constraint_of(c, roster, 0));
        }
    }
    if (constraints.empty()) return std::nullopt;
    return finish_lia(std::move(roster), std::move(constraints));
}

Translation translate_for_mode(const Sequent& ob, const Signature& sig, TranslateMode mode) {
    switch (mode) {
    case TranslateMode::Cnf:
        return translate_cnf(ob, sig);
    case TranslateMode::Lia:
        return translate(ob, sig);
    case TranslateMode::ContextLia: {
        auto p = translate_context_lia(ob, sig);
        if (!p) return Unsupported{"no linear context atoms"};
        return *p;
    }
    }
    return Unsupported{"bad mode"};
}

std::string to_dimacs(const CnfProblem& p) {
    std::ostringstream out;
    for (const auto& [v, atom] : p.atoms) out << "c atom " << v << " " << render(atom) << "\n";
    out << "p cnf " << p.num_vars << " " << p.clauses.size() << "\n";
    for (const auto& clause : p.clauses) {
        for (int lit : clause) out << lit << " ";
        out << "0\n";
    }
    return out.str();
}

std::string lia_to_text(const LiaProblem& p) {
    std::ostringstream out;
    for (size_t i = 0; i < p.var_names.size(); ++i)
        out << "c var " << p.var_names[i] << " := " << render(p.var_terms[i]) << "\n";
    for (const auto& c : p.constraints) {
        bool first = true;
        for (size_t i = 0; i < c.coeffs.size(); ++i) {
            if (c.coeffs[i] == 0) continue;
            if (!first) out << " + ";
            out << c.coeffs[i] << "*" << p.var_names[i];
            first = false;
        }
        if (first) out << "0";
        out << (c.rel == LinRel::Le ? " <= " : c.rel == LinRel::Ge ? " >= " : " = ") << c.bound
            << "\n";
    }
    return out.str();
}

} // namespace psk
