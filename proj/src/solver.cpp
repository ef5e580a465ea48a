#include "psk/solver.hpp"

#include "psk/parse.hpp"

#include <algorithm>
#include <sstream>

namespace psk {
namespace solver {

// ---------------------------------------------------------------------------
// RUP text form

std::string rup_to_text(const RupProof& p) {
    std::ostringstream out;
    for (const auto& clause : p.clauses) {
        for (int lit : clause) out << lit << " ";
        out << "0\n";
    }
    return out.str();
}

RupProof rup_from_text(const std::string& text) {
    RupProof p;
    std::istringstream in(text);
    std::vector<int> clause;
    long long lit;
    while (in >> lit) {
        if (lit == 0) {
            p.clauses.push_back(clause);
            clause.clear();
        } else {
            clause.push_back(int(lit));
        }
    }
    if (!clause.empty()) throw LogicError("RUP text: clause not 0-terminated");
    return p;
}

// ---------------------------------------------------------------------------
// DPLL with proof logging
//
// At every refuted node the negation of the decision set is emitted. Leaf
// clauses are RUP against the original clauses; an inner clause propagates a
// conflict via its two child clauses. The sequence therefore checks in order
// and ends with the empty clause at the root.

namespace {

struct DpllState {
    const CnfProblem& p;
    std::int64_t budget;
    std::vector<int> assign; // var -> -1/0/1
    std::vector<int> trail;
    std::vector<int> decisions;
    RupProof proof;
    std::int64_t conflicts = 0;
    bool limited = false;

    explicit DpllState(const CnfProblem& prob, std::int64_t b)
        : p(prob), budget(b), assign(size_t(prob.num_vars) + 1, 0) {}

    bool value(int lit) const {
        int v = assign[size_t(std::abs(lit))];
        return lit > 0 ? v == 1 : v == -1;
    }
    bool falsified(int lit) const {
        int v = assign[size_t(std::abs(lit))];
        return lit > 0 ? v == -1 : v == 1;
    }

    void set(int lit) {
        assign[size_t(std::abs(lit))] = lit > 0 ? 1 : -1;
        trail.push_back(lit);
    }

    // Unit propagation to fixpoint; returns false on conflict.
    bool propagate() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& clause : p.clauses) {
                int unassigned = 0;
                int unit = 0;
                bool satisfied = false;
                for (int lit : clause) {
                    if (value(lit)) { satisfied = true; break; }
                    if (!falsified(lit)) {
                        ++unassigned;
                        unit = lit;
                    }
                }
                if (satisfied) continue;
                if (unassigned == 0) return false; // conflict
                if (unassigned == 1) {
                    set(unit);
                    changed = true;
                }
            }
        }
        return true;
    }

    void emit_refutation() {
        std::vector<int> clause;
        clause.reserve(decisions.size());
        for (int d : decisions) clause.push_back(-d);
        proof.clauses.push_back(std::move(clause));
    }

    enum class Res { Sat, Unsat, Limit };

    Res search() {
        size_t trail_mark = trail.size();
        if (!propagate()) {
            ++conflicts;
            if (conflicts > budget) { limited = true; return Res::Limit; }
            emit_refutation();
            undo(trail_mark);
            return Res::Unsat;
        }
        int var = 0;
        for (int v = 1; v <= p.num_vars; ++v)
            if (assign[size_t(v)] == 0) { var = v; break; }
        if (var == 0) return Res::Sat; // total assignment

        for (int phase = 0; phase < 2; ++phase) {
            int lit = phase == 0 ? var : -var;
            size_t sub_mark = trail.size();
            set(lit);
            decisions.push_back(lit);
            Res r = search();
            decisions.pop_back();
            if (r == Res::Sat) return Res::Sat;
            if (r == Res::Limit) return Res::Limit;
            undo(sub_mark);
        }
        emit_refutation();
        undo(trail_mark);
        return Res::Unsat;
    }

    void undo(size_t mark) {
        while (trail.size() > mark) {
            assign[size_t(std::abs(trail.back()))] = 0;
            trail.pop_back();
        }
    }
};

} // namespace

SatResult solve_sat(const CnfProblem& p, std::int64_t conflict_budget) {
    DpllState st(p, conflict_budget);
    auto r = st.search();
    SatResult out;
    out.conflicts = st.conflicts;
    if (r == DpllState::Res::Limit) {
        out.status = SatStatus::ResourceLimit;
        return out;
    }
    if (r == DpllState::Res::Sat) {
        out.status = SatStatus::Sat;
        out.model.resize(size_t(p.num_vars));
        for (int v = 1; v <= p.num_vars; ++v) out.model[size_t(v) - 1] = st.assign[size_t(v)] == 1;
        return out;
    }
    out.status = SatStatus::Unsat;
    out.proof = std::move(st.proof);
    return out;
}

// ---------------------------------------------------------------------------
// LIA certificate text form

static void cert_text_rec(const LiaCert& c, const LiaProblem& p, std::string& out) {
    if (c.is_branch) {
        out += "(branch ";
        out += p.var_names.at(size_t(c.var));
        out += " ";
        out += std::to_string(c.bound);
        out += " ";
        cert_text_rec(*c.left, p, out);
        out += " ";
        cert_text_rec(*c.right, p, out);
        out += ")";
        return;
    }
    out += "(farkas";
    for (const auto& l : c.farkas) {
        out += " ";
        if (denominator(l) == 1) {
            out += numerator(l).str();
        } else {
            out += numerator(l).str() + "/" + denominator(l).str();
        }
    }
    out += ")";
}

std::string lia_cert_to_text(const LiaCert& c, const LiaProblem& p) {
    std::string out;
    cert_text_rec(c, p, out);
    return out;
}

namespace {

struct SexprReader {
    const std::string& text;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw LogicError("LIA certificate: " + msg);
    }
    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\n' || text[pos] == '\t'))
            ++pos;
    }
    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            fail(std::string("expected '") + c + "'");
        ++pos;
    }
    std::string word() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != '\n' && text[pos] != '\t')
            ++pos;
        if (start == pos) fail("expected a token");
        return text.substr(start, pos - start);
    }
    bool peek_close() {
        skip_ws();
        return pos < text.size() && text[pos] == ')';
    }

    std::unique_ptr<LiaCert> node(const LiaProblem& p) {
        expect('(');
        std::string head = word();
        auto out = std::make_unique<LiaCert>();
        if (head == "branch") {
            out->is_branch = true;
            std::string var = word();
            auto it = std::find(p.var_names.begin(), p.var_names.end(), var);
            if (it == p.var_names.end()) fail("unknown variable " + var);
            out->var = int(it - p.var_names.begin());
            out->bound = std::stoll(word());
            out->left = node(p);
            out->right = node(p);
            expect(')');
            return out;
        }
        if (head == "farkas") {
            while (!peek_close()) {
                std::string w = word();
                size_t slash = w.find('/');
                try {
                    if (slash == std::string::npos) {
                        out->farkas.emplace_back(boost::multiprecision::cpp_int(w));
                    } else {
                        out->farkas.emplace_back(
                            boost::multiprecision::cpp_int(w.substr(0, slash)),
                            boost::multiprecision::cpp_int(w.substr(slash + 1)));
                    }
                } catch (const std::exception&) {
                    fail("bad rational " + w);
                }
            }
            expect(')');
            return out;
        }
        fail("unknown node kind " + head);
    }
};

} // namespace

std::unique_ptr<LiaCert> lia_cert_from_text(const std::string& text, const LiaProblem& p) {
    SexprReader r{text, 0};
    auto out = r.node(p);
    r.skip_ws();
    if (r.pos != text.size()) r.fail("trailing input");
    return out;
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin feasibility with multiplier tracking

namespace {

struct FmRow {
    std::vector<BigRat> a;
    BigRat b;
    std::vector<BigRat> mult; // over the system rows
};

struct FmOutcome {
    bool feasible = false;
    std::vector<BigRat> point;         // when feasible
    std::vector<BigRat> witness_mult;  // when infeasible
    bool blown = false;                // row-count guard tripped
};

FmOutcome fm_feasibility(const std::vector<LeRow>& system, size_t nvars, std::int64_t& work,
                         std::int64_t work_limit) {
    const size_t kRowCap = 4000;
    std::vector<std::vector<FmRow>> stages; // stages[j] = rows before eliminating var j
    std::vector<FmRow> rows;
    rows.reserve(system.size());
    for (size_t i = 0; i < system.size(); ++i) {
        FmRow r;
        r.a = system[i].coeffs;
        r.a.resize(nvars, 0);
        r.b = system[i].bound;
        r.mult.assign(system.size(), 0);
        r.mult[i] = 1;
        rows.push_back(std::move(r));
    }

    auto const_check = [&](const std::vector<FmRow>& rs) -> const FmRow* {
        for (const auto& r : rs) {
            bool all_zero = true;
            for (const auto& c : r.a)
                if (c != 0) { all_zero = false; break; }
            if (all_zero && r.b < 0) return &r;
        }
        return nullptr;
    };

    FmOutcome out;
    for (size_t j = 0; j < nvars; ++j) {
        if (const FmRow* bad = const_check(rows)) {
            out.witness_mult = bad->mult;
            return out;
        }
        stages.push_back(rows);
        std::vector<FmRow> next;
        std::vector<const FmRow*> uppers, lowers;
        for (const auto& r : rows) {
            if (r.a[j] > 0) uppers.push_back(&r);
            else if (r.a[j] < 0) lowers.push_back(&r);
            else next.push_back(r);
        }
        for (const FmRow* u : uppers)
            for (const FmRow* l : lowers) {
                // (-a_l) * u + (a_u) * l eliminates var j
                BigRat cu = -l->a[j];
                BigRat cl = u->a[j];
                FmRow combined;
                combined.a.resize(nvars, 0);
                for (size_t k = 0; k < nvars; ++k)
                    combined.a[k] = cu * u->a[k] + cl * l->a[k];
                combined.b = cu * u->b + cl * l->b;
                combined.mult.resize(system.size(), 0);
                for (size_t k = 0; k < system.size(); ++k)
                    combined.mult[k] = cu * u->mult[k] + cl * l->mult[k];
                next.push_back(std::move(combined));
                work += std::int64_t(nvars + system.size());
                if (next.size() > kRowCap || work > work_limit) {
                    out.blown = true;
                    return out;
                }
            }
        rows = std::move(next);
    }
    if (const FmRow* bad = const_check(rows)) {
        out.witness_mult = bad->mult;
        return out;
    }

    // Feasible: back-substitute, preferring integral values.
    out.feasible = true;
    out.point.assign(nvars, 0);
    for (size_t jj = nvars; jj-- > 0;) {
        const auto& stage = stages[jj];
        bool has_lo = false, has_hi = false;
        BigRat lo = 0, hi = 0;
        for (const auto& r : stage) {
            if (r.a[jj] == 0) continue;
            BigRat rest = r.b;
            for (size_t k = jj + 1; k < nvars; ++k) rest -= r.a[k] * out.point[k];
            BigRat bound = rest / r.a[jj];
            if (r.a[jj] > 0) { // x <= bound
                if (!has_hi || bound < hi) { hi = bound; has_hi = true; }
            } else { // x >= bound
                if (!has_lo || bound > lo) { lo = bound; has_lo = true; }
            }
        }
        using boost::multiprecision::cpp_int;
        auto rat_floor = [](const BigRat& q) {
            cpp_int n = numerator(q), d = denominator(q);
            cpp_int quot = n / d;
            if (n % d != 0 && n < 0) quot -= 1;
            return BigRat(quot);
        };
        auto rat_ceil = [&](const BigRat& q) {
            return -rat_floor(-q);
        };
        BigRat v;
        if (has_lo && has_hi) {
            BigRat c = rat_ceil(lo);
            v = (c <= hi) ? c : (lo + hi) / 2;
        } else if (has_lo) {
            v = rat_ceil(lo) >= 0 ? rat_ceil(lo) : (rat_floor(BigRat(0)) >= lo ? BigRat(0)
                                                                               : rat_ceil(lo));
            if (lo <= 0) v = 0;
        } else if (has_hi) {
            v = hi >= 0 ? BigRat(0) : rat_floor(hi);
        } else {
            v = 0;
        }
        out.point[jj] = v;
    }
    return out;
}

struct BnbState {
    // Deep descents make Farkas bookkeeping quadratic, and desk-scale
    // problems never branch this far; beyond the caps the call reports a
    // resource limit. Work is charged per Fourier-Motzkin row produced.
    static constexpr int kMaxDepth = 32;

    const LiaProblem& problem;
    std::vector<LeRow> rows; // base rows + branch rows (path order)
    std::int64_t budget;
    std::int64_t nodes = 0;
    std::int64_t work = 0;
    std::int64_t work_limit = 0;
    bool limited = false;
    int depth = 0;

    std::unique_ptr<LiaCert> leaf(std::vector<BigRat> mult) {
        auto c = std::make_unique<LiaCert>();
        c->farkas = std::move(mult);
        return c;
    }

    // Returns feasible model via `model`, or a certificate (nullptr on limit).
    std::unique_ptr<LiaCert> run(std::optional<std::vector<std::int64_t>>& model) {
        ++nodes;
        if (nodes > budget || depth > kMaxDepth || work > work_limit) {
            limited = true;
            return nullptr;
        }
        size_t nvars = problem.var_names.size();
        FmOutcome fm = fm_feasibility(rows, nvars, work, work_limit);
        if (fm.blown) { limited = true; return nullptr; }
        if (!fm.feasible) return leaf(std::move(fm.witness_mult));

        int frac = -1;
        for (size_t j = 0; j < nvars; ++j) {
            if (denominator(fm.point[j]) != 1) { frac = int(j); break; }
        }
        if (frac < 0) {
            std::vector<std::int64_t> m(nvars, 0);
            for (size_t j = 0; j < nvars; ++j)
                m[j] = std::int64_t(numerator(fm.point[j]).convert_to<long long>());
            model = std::move(m);
            return nullptr;
        }

        using boost::multiprecision::cpp_int;
        cpp_int num = numerator(fm.point[size_t(frac)]);
        cpp_int den = denominator(fm.point[size_t(frac)]);
        cpp_int fl = num / den;
        if (num % den != 0 && num < 0) fl -= 1;
        std::int64_t b = fl.convert_to<long long>();

        size_t nrows = rows.size();

        // left: x <= b
        LeRow left_row;
        left_row.coeffs.assign(nvars, 0);
        left_row.coeffs[size_t(frac)] = 1;
        left_row.bound = b;
        rows.push_back(left_row);
        ++depth;
        auto left = run(model);
        --depth;
        rows.resize(nrows);
        if (model || limited) return nullptr;

        // right: x >= b+1  =>  -x <= -(b+1)
        LeRow right_row;
        right_row.coeffs.assign(nvars, 0);
        right_row.coeffs[size_t(frac)] = -1;
        right_row.bound = -(b + 1);
        rows.push_back(right_row);
        ++depth;
        auto right = run(model);
        --depth;
        rows.resize(nrows);
        if (model || limited) return nullptr;

        auto node = std::make_unique<LiaCert>();
        node->is_branch = true;
        node->var = frac;
        node->bound = b;
        node->left = std::move(left);
        node->right = std::move(right);
        return node;
    }
};

} // namespace

LiaResult solve_lia(const LiaProblem& p, std::int64_t node_budget) {
    BnbState st{p, normalized_rows(p), node_budget};
    st.work_limit = std::max<std::int64_t>(node_budget * 200, 100000);
    std::optional<std::vector<std::int64_t>> model;
    auto cert = st.run(model);
    LiaResult out;
    out.nodes = st.nodes;
    if (st.limited) {
        out.status = LiaStatus::ResourceLimit;
        return out;
    }
    if (model) {
        out.status = LiaStatus::Feasible;
        out.model = std::move(*model);
        // sanity: the model must satisfy every constraint
        auto rows = normalized_rows(p);
        for (const auto& r : rows) {
            BigRat lhs = 0;
            for (size_t j = 0; j < out.model.size(); ++j) lhs += r.coeffs[j] * out.model[j];
            if (lhs > r.bound) throw LogicError("internal: LIA model violates a constraint");
        }
        return out;
    }
    out.status = LiaStatus::Infeasible;
    out.cert = std::move(cert);
    return out;
}

// ---------------------------------------------------------------------------
// Discharge

namespace {

// Theory feasibility of the arithmetic literals implied by a propositional
// model. A false Int-equality atom contributes a disequality, which the
// constraint form cannot express directly; the model is spurious when both
// strict sides are separately infeasible together with the other literals.
struct TheoryCheck {
    bool mixed_conflict = false;
    std::vector<std::pair<std::string, std::int64_t>> ints;
};

bool is_linear_atom_formula(const Formula& atom) {
    return atom.kind() == FormulaKind::Cmp ||
           (atom.kind() == FormulaKind::Eq && atom.terms()[0].sort() == kIntSort);
}

TheoryCheck theory_check_model(const CnfProblem& cnf, const std::vector<bool>& model,
                               const SolverBudgets& budgets) {
    TheoryCheck out;
    Sequent pseudo{Formula::top()}; // container for linear literals
    std::vector<Formula> disequalities;
    int idx = 0;
    for (const auto& [var, atom] : cnf.atoms) {
        if (!is_linear_atom_formula(atom)) continue;
        bool value = model[size_t(var) - 1];
        if (!value && atom.kind() == FormulaKind::Eq) {
            disequalities.push_back(atom);
            continue;
        }
        Formula lit = value ? atom : Formula::negate(atom);
        pseudo.add_hyp("a" + std::to_string(idx++), lit);
    }
    if (pseudo.hyps().empty() && disequalities.empty()) return out;

    Signature dummy;
    if (!pseudo.hyps().empty()) {
        auto lp = translate_context_lia(pseudo, dummy);
        if (lp) {
            LiaResult r = solve_lia(*lp, budgets.lia_nodes);
            if (r.status == LiaStatus::Infeasible) {
                out.mixed_conflict = true;
                return out;
            }
            if (r.status == LiaStatus::Feasible)
                for (size_t j = 0; j < lp->var_names.size(); ++j)
                    out.ints.emplace_back(render(lp->var_terms[j]), r.model[j]);
        }
    }
    // each disequality a != b: spurious if the other literals force a = b
    for (const auto& eq : disequalities) {
        bool both_infeasible = true;
        for (int side = 0; side < 2 && both_infeasible; ++side) {
            Sequent with_side = pseudo;
            Formula strict = side == 0
                                 ? Formula::cmp(CmpOp::Lt, eq.terms()[0], eq.terms()[1])
                                 : Formula::cmp(CmpOp::Gt, eq.terms()[0], eq.terms()[1]);
            with_side.add_hyp("d", strict);
            auto lp = translate_context_lia(with_side, dummy);
            if (!lp) { both_infeasible = false; break; }
            LiaResult r = solve_lia(*lp, budgets.lia_nodes);
            if (r.status != LiaStatus::Infeasible) both_infeasible = false;
        }
        if (both_infeasible) {
            out.mixed_conflict = true;
            return out;
        }
    }
    return out;
}

struct CnfAttempt {
    bool done = false;
    DischargeOutcome out;
};

CnfAttempt try_cnf(const Sequent& ob, const Signature& sig, const SolverBudgets& budgets) {
    CnfAttempt res;
    Translation tr = translate_cnf(ob, sig);
    if (std::holds_alternative<Unsupported>(tr)) {
        res.done = true;
        res.out.kind = DischargeOutcome::Kind::Unsupported;
        res.out.reason = std::get<Unsupported>(tr).reason;
        return res;
    }
    CnfProblem p = std::get<CnfProblem>(std::move(tr));
    SatResult r = solve_sat(p, budgets.sat_conflicts);
    if (r.status == SatStatus::Unsat) {
        res.done = true;
        res.out.kind = DischargeOutcome::Kind::Certified;
        res.out.mode = TranslateMode::Cnf;
        res.out.cert_text = rup_to_text(r.proof);
        res.out.cnf = std::move(p);
        return res;
    }
    if (r.status == SatStatus::ResourceLimit) {
        res.done = true;
        res.out.kind = DischargeOutcome::Kind::ResourceLimit;
        res.out.reason = "sat conflict budget exhausted";
        return res;
    }

    TheoryCheck tc = theory_check_model(p, r.model, budgets);
    if (tc.mixed_conflict) {
        // The model's forced arithmetic literals are theory-infeasible. When
        // the context's own linear atoms are already contradictory the
        // sequent holds ex falso; otherwise the obligation needs mixed
        // reasoning the sketch must make explicit.
        auto ctx = translate_context_lia(ob, sig);
        if (ctx) {
            LiaResult cr = solve_lia(*ctx, budgets.lia_nodes);
            if (cr.status == LiaStatus::Infeasible) {
                res.done = true;
                res.out.kind = DischargeOutcome::Kind::Certified;
                res.out.mode = TranslateMode::ContextLia;
                res.out.cert_text = lia_cert_to_text(*cr.cert, *ctx);
                res.out.lia = std::move(*ctx);
                return res;
            }
        }
        res.done = true;
        res.out.kind = DischargeOutcome::Kind::Unsupported;
        res.out.reason = "mixed-fragment";
        return res;
    }

    res.done = true;
    res.out.kind = DischargeOutcome::Kind::Countermodel;
    for (const auto& [var, atom] : p.atoms)
        res.out.counter.atoms.emplace_back(render(atom), r.model[size_t(var) - 1]);
    res.out.counter.ints = std::move(tc.ints);
    return res;
}

} // namespace

DischargeOutcome discharge(const Sequent& ob, const Signature& sig, const SolverBudgets& budgets) {
    DischargeOutcome out;
    Translation tr = translate(ob, sig);

    if (std::holds_alternative<Unsupported>(tr)) {
        out.kind = DischargeOutcome::Kind::Unsupported;
        out.reason = std::get<Unsupported>(tr).reason;
        return out;
    }

    if (std::holds_alternative<LiaProblem>(tr)) {
        LiaProblem p = std::get<LiaProblem>(std::move(tr));
        LiaResult r = solve_lia(p, budgets.lia_nodes);
        switch (r.status) {
        case LiaStatus::Infeasible:
            out.kind = DischargeOutcome::Kind::Certified;
            out.mode = TranslateMode::Lia;
            out.cert_text = lia_cert_to_text(*r.cert, p);
            out.lia = std::move(p);
            return out;
        case LiaStatus::Feasible:
            if (p.dropped_context) {
                // dropped hypotheses may make this point spurious; the
                // propositional route sees the full context
                CnfAttempt res = try_cnf(ob, sig, budgets);
                if (res.done) return std::move(res.out);
            }
            out.kind = DischargeOutcome::Kind::Countermodel;
            for (size_t j = 0; j < p.var_names.size(); ++j)
                out.counter.ints.emplace_back(render(p.var_terms[j]), r.model[j]);
            return out;
        case LiaStatus::ResourceLimit:
            out.kind = DischargeOutcome::Kind::ResourceLimit;
            out.reason = "lia node budget exhausted";
            return out;
        }
    }

    CnfAttempt res = try_cnf(ob, sig, budgets);
    return std::move(res.out);
}

} // namespace solver
} // namespace psk
