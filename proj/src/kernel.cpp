#include "psk/kernel.hpp"

#include "psk/parse.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace psk {
namespace kernel {

// The single gateway to Theorem construction.
struct KernelAccess {
    static Theorem make(Sequent s, RuleKind kind, RuleParams params,
                        const std::vector<Theorem>& premises) {
        auto node = std::make_shared<ProofNode>();
        node->kind = kind;
        node->params = std::move(params);
        node->concluded = s;
        for (const auto& p : premises) node->premises.push_back(p.provenance());
        return Theorem(std::move(s), std::move(node));
    }
};

const char* rule_name(RuleKind k) {
    switch (k) {
    case RuleKind::Assume: return "assume";
    case RuleKind::Weaken: return "weaken";
    case RuleKind::AndI: return "and_i";
    case RuleKind::AndEL: return "and_e_l";
    case RuleKind::AndER: return "and_e_r";
    case RuleKind::OrIL: return "or_i_l";
    case RuleKind::OrIR: return "or_i_r";
    case RuleKind::OrE: return "or_e";
    case RuleKind::ImpI: return "imp_i";
    case RuleKind::ImpE: return "imp_e";
    case RuleKind::NotI: return "not_i";
    case RuleKind::NotE: return "not_e";
    case RuleKind::Raa: return "raa";
    case RuleKind::FalsumE: return "falsum_e";
    case RuleKind::TopI: return "top_i";
    case RuleKind::Refl: return "refl";
    case RuleKind::Sym: return "sym";
    case RuleKind::Trans: return "trans";
    case RuleKind::Cong: return "cong";
    case RuleKind::SubstEq: return "subst_eq";
    case RuleKind::ForallE: return "forall_e";
    case RuleKind::ForallI: return "forall_i";
    case RuleKind::ExistsI: return "exists_i";
    case RuleKind::ExistsE: return "exists_e";
    case RuleKind::InductionInt: return "induction_int";
    case RuleKind::Cert: return "CERT";
    }
    return "?";
}

std::optional<RuleKind> rule_from_name(const std::string& name) {
    static const std::map<std::string, RuleKind> table = {
        {"assume", RuleKind::Assume}, {"weaken", RuleKind::Weaken},
        {"and_i", RuleKind::AndI}, {"and_e_l", RuleKind::AndEL}, {"and_e_r", RuleKind::AndER},
        {"or_i_l", RuleKind::OrIL}, {"or_i_r", RuleKind::OrIR}, {"or_e", RuleKind::OrE},
        {"imp_i", RuleKind::ImpI}, {"imp_e", RuleKind::ImpE},
        {"not_i", RuleKind::NotI}, {"not_e", RuleKind::NotE}, {"raa", RuleKind::Raa},
        {"falsum_e", RuleKind::FalsumE}, {"top_i", RuleKind::TopI},
        {"refl", RuleKind::Refl}, {"sym", RuleKind::Sym}, {"trans", RuleKind::Trans},
        {"cong", RuleKind::Cong}, {"subst_eq", RuleKind::SubstEq},
        {"forall_e", RuleKind::ForallE}, {"forall_i", RuleKind::ForallI},
        {"exists_i", RuleKind::ExistsI}, {"exists_e", RuleKind::ExistsE},
        {"induction_int", RuleKind::InductionInt}, {"CERT", RuleKind::Cert},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Context plumbing

namespace {

[[noreturn]] void fail(const std::string& cond) { throw KernelError(cond); }

void need_premises(const std::vector<Theorem>& ps, size_t n, const char* rule) {
    if (ps.size() != n)
        fail(std::string(rule) + " expects " + std::to_string(n) + " premises, got " +
             std::to_string(ps.size()));
}

// Multiset union keyed by hypothesis name; shared names must agree up to
// alpha-equivalence.
Sequent merge_contexts(const Sequent& a, const Sequent& b, Formula goal) {
    Sequent out(std::move(goal));
    for (const auto& [n, f] : a.hyps()) out.add_hyp(n, f);
    for (const auto& [n, f] : b.hyps()) {
        if (const Formula* existing = out.hyp(n)) {
            if (!alpha_equal(*existing, f))
                fail("hypothesis name clash on '" + n + "' with different formulas");
        } else {
            out.add_hyp(n, f);
        }
    }
    return out;
}

Sequent with_goal(const Sequent& ctx, Formula goal) {
    Sequent out(std::move(goal));
    for (const auto& [n, f] : ctx.hyps()) out.add_hyp(n, f);
    return out;
}

// Discharge `name` when present; its formula must match `expected` (when
// given). Vacuous discharge is allowed.
Sequent discharge(const Sequent& s, const std::string& name, const Formula* expected,
                  Formula goal) {
    if (const Formula* f = s.hyp(name)) {
        if (expected && !alpha_equal(*f, *expected))
            fail("hypothesis '" + name + "' is " + render(*f) + ", expected " + render(*expected));
    }
    Sequent out = s.without_hyp(name);
    out.set_goal(std::move(goal));
    return out;
}

bool occurs_free_in_context(const Sequent& s, const std::string& var) {
    for (const auto& [n, f] : s.hyps())
        if (free_vars(f).count(var)) return true;
    return false;
}

const Formula& goal_of(const Theorem& t) { return t.sequent().goal(); }

void need_kind(const Formula& f, FormulaKind k, const char* what) {
    if (f.empty() || f.kind() != k) fail(std::string("premise goal is not ") + what);
}

} // namespace

// ---------------------------------------------------------------------------
// apply_rule

Theorem apply_rule(RuleKind rule, const std::vector<Theorem>& ps, const RuleParams& params,
                   const Signature& sig) {
    switch (rule) {
    case RuleKind::Assume: {
        need_premises(ps, 0, "assume");
        if (params.name.empty()) fail("assume needs a hypothesis name");
        check_formula(params.formula, sig);
        Sequent s(params.formula);
        s.add_hyp(params.name, params.formula);
        return KernelAccess::make(std::move(s), rule, params, ps);
    }
    case RuleKind::Weaken: {
        need_premises(ps, 1, "weaken");
        check_formula(params.formula, sig);
        if (ps[0].sequent().hyp(params.name))
            fail("weaken: hypothesis '" + params.name + "' already present");
        Sequent s = ps[0].sequent();
        s.add_hyp(params.name, params.formula);
        return KernelAccess::make(std::move(s), rule, params, ps);
    }
    case RuleKind::AndI: {
        need_premises(ps, 2, "and_i");
        Formula goal = Formula::conj(goal_of(ps[0]), goal_of(ps[1]));
        return KernelAccess::make(merge_contexts(ps[0].sequent(), ps[1].sequent(), goal), rule,
                                  params, ps);
    }
    case RuleKind::AndEL:
    case RuleKind::AndER: {
        need_premises(ps, 1, rule == RuleKind::AndEL ? "and_e_l" : "and_e_r");
        const Formula& g = goal_of(ps[0]);
        need_kind(g, FormulaKind::And, "a conjunction");
        Formula out = rule == RuleKind::AndEL ? g.subs()[0] : g.subs()[1];
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::OrIL: {
        need_premises(ps, 1, "or_i_l");
        check_formula(params.formula, sig);
        Formula out = Formula::disj(goal_of(ps[0]), params.formula);
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::OrIR: {
        need_premises(ps, 1, "or_i_r");
        check_formula(params.formula, sig);
        Formula out = Formula::disj(params.formula, goal_of(ps[0]));
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::OrE: {
        need_premises(ps, 3, "or_e");
        const Formula& disj = goal_of(ps[0]);
        need_kind(disj, FormulaKind::Or, "a disjunction");
        const Formula& a = disj.subs()[0];
        const Formula& b = disj.subs()[1];
        if (!alpha_equal(goal_of(ps[1]), goal_of(ps[2])))
            fail("or_e case conclusions differ");
        const Formula* ha = ps[1].sequent().hyp(params.name);
        if (!ha || !alpha_equal(*ha, a))
            fail("or_e left case must assume the left disjunct as '" + params.name + "'");
        const Formula* hb = ps[2].sequent().hyp(params.name2);
        if (!hb || !alpha_equal(*hb, b))
            fail("or_e right case must assume the right disjunct as '" + params.name2 + "'");
        Sequent left = ps[1].sequent().without_hyp(params.name);
        Sequent right = ps[2].sequent().without_hyp(params.name2);
        Sequent merged = merge_contexts(ps[0].sequent(), left, goal_of(ps[1]));
        merged = merge_contexts(merged, right, goal_of(ps[1]));
        return KernelAccess::make(std::move(merged), rule, params, ps);
    }
    case RuleKind::ImpI: {
        need_premises(ps, 1, "imp_i");
        check_formula(params.formula, sig);
        Formula out = Formula::imp(params.formula, goal_of(ps[0]));
        return KernelAccess::make(discharge(ps[0].sequent(), params.name, &params.formula, out),
                                  rule, params, ps);
    }
    case RuleKind::ImpE: {
        need_premises(ps, 2, "imp_e");
        const Formula& imp = goal_of(ps[0]);
        need_kind(imp, FormulaKind::Imp, "an implication");
        if (!alpha_equal(imp.subs()[0], goal_of(ps[1])))
            fail("imp_e argument does not match the antecedent");
        return KernelAccess::make(
            merge_contexts(ps[0].sequent(), ps[1].sequent(), imp.subs()[1]), rule, params, ps);
    }
    case RuleKind::NotI: {
        need_premises(ps, 1, "not_i");
        need_kind(goal_of(ps[0]), FormulaKind::Bot, "falsum");
        check_formula(params.formula, sig);
        Formula out = Formula::negate(params.formula);
        return KernelAccess::make(discharge(ps[0].sequent(), params.name, &params.formula, out),
                                  rule, params, ps);
    }
    case RuleKind::NotE: {
        need_premises(ps, 2, "not_e");
        const Formula& neg = goal_of(ps[0]);
        need_kind(neg, FormulaKind::Not, "a negation");
        if (!alpha_equal(neg.subs()[0], goal_of(ps[1])))
            fail("not_e argument does not match the negated formula");
        return KernelAccess::make(
            merge_contexts(ps[0].sequent(), ps[1].sequent(), Formula::bot()), rule, params, ps);
    }
    case RuleKind::Raa: {
        // classical: from Γ ∪ {¬A} ⊢ ⊥ conclude Γ ⊢ A
        need_premises(ps, 1, "raa");
        need_kind(goal_of(ps[0]), FormulaKind::Bot, "falsum");
        check_formula(params.formula, sig);
        Formula neg = Formula::negate(params.formula);
        return KernelAccess::make(discharge(ps[0].sequent(), params.name, &neg, params.formula),
                                  rule, params, ps);
    }
    case RuleKind::FalsumE: {
        need_premises(ps, 1, "falsum_e");
        need_kind(goal_of(ps[0]), FormulaKind::Bot, "falsum");
        check_formula(params.formula, sig);
        return KernelAccess::make(with_goal(ps[0].sequent(), params.formula), rule, params, ps);
    }
    case RuleKind::TopI: {
        need_premises(ps, 0, "top_i");
        return KernelAccess::make(Sequent(Formula::top()), rule, params, ps);
    }
    case RuleKind::Refl: {
        need_premises(ps, 0, "refl");
        check_term(params.term, sig);
        return KernelAccess::make(Sequent(Formula::eq(params.term, params.term)), rule, params,
                                  ps);
    }
    case RuleKind::Sym: {
        need_premises(ps, 1, "sym");
        const Formula& e = goal_of(ps[0]);
        need_kind(e, FormulaKind::Eq, "an equality");
        return KernelAccess::make(
            with_goal(ps[0].sequent(), Formula::eq(e.terms()[1], e.terms()[0])), rule, params, ps);
    }
    case RuleKind::Trans: {
        need_premises(ps, 2, "trans");
        const Formula& e1 = goal_of(ps[0]);
        const Formula& e2 = goal_of(ps[1]);
        need_kind(e1, FormulaKind::Eq, "an equality");
        need_kind(e2, FormulaKind::Eq, "an equality");
        if (!(e1.terms()[1] == e2.terms()[0]))
            fail("trans: middle terms differ");
        Formula out = Formula::eq(e1.terms()[0], e2.terms()[1]);
        return KernelAccess::make(merge_contexts(ps[0].sequent(), ps[1].sequent(), out), rule,
                                  params, ps);
    }
    case RuleKind::Cong: {
        // one argument position per application
        need_premises(ps, 1, "cong");
        const Formula& e = goal_of(ps[0]);
        need_kind(e, FormulaKind::Eq, "an equality");
        const FunctionDecl* fd = sig.function(params.fn);
        if (!fd) fail("cong: unknown function " + params.fn);
        size_t arity = fd->arg_sorts.size();
        if (params.index < 0 || size_t(params.index) >= arity)
            fail("cong: argument index out of range");
        if (params.terms.size() != arity - 1)
            fail("cong: expected " + std::to_string(arity - 1) + " fixed arguments");
        if (e.terms()[0].sort() != fd->arg_sorts[size_t(params.index)])
            fail("cong: equality sort does not match the argument sort");
        std::vector<Term> lhs_args, rhs_args;
        size_t fixed = 0;
        for (size_t i = 0; i < arity; ++i) {
            if (int(i) == params.index) {
                lhs_args.push_back(e.terms()[0]);
                rhs_args.push_back(e.terms()[1]);
            } else {
                const Term& a = params.terms[fixed++];
                check_term(a, sig);
                if (a.sort() != fd->arg_sorts[i]) fail("cong: fixed argument sort mismatch");
                lhs_args.push_back(a);
                rhs_args.push_back(a);
            }
        }
        Formula out = Formula::eq(Term::app(params.fn, std::move(lhs_args), fd->result_sort),
                                  Term::app(params.fn, std::move(rhs_args), fd->result_sort));
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::SubstEq: {
        need_premises(ps, 2, "subst_eq");
        const Formula& e = goal_of(ps[0]);
        need_kind(e, FormulaKind::Eq, "an equality");
        const Formula& target = goal_of(ps[1]);
        const Term& from = params.ltr ? e.terms()[0] : e.terms()[1];
        const Term& to = params.ltr ? e.terms()[1] : e.terms()[0];
        TermOrFormula sub = subterm_at(target, params.pos);
        if (!std::holds_alternative<Term>(sub))
            fail("subst_eq: position does not resolve to a term");
        if (!(std::get<Term>(sub) == from))
            fail("subst_eq: equality side does not match the subterm at the position");
        Formula out = replace_at(target, params.pos, to);
        return KernelAccess::make(merge_contexts(ps[0].sequent(), ps[1].sequent(), out), rule,
                                  params, ps);
    }
    case RuleKind::ForallE: {
        need_premises(ps, 1, "forall_e");
        const Formula& q = goal_of(ps[0]);
        need_kind(q, FormulaKind::Forall, "a universal");
        check_term(params.term, sig);
        if (params.term.sort() != q.sort())
            fail("forall_e: instantiation term has sort " + params.term.sort() + ", binder is " +
                 q.sort());
        Formula out = substitute(q.subs()[0], q.name(), params.term);
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::ForallI: {
        // params: name = eigenvariable, name2 = bound variable, sort
        need_premises(ps, 1, "forall_i");
        if (!sig.has_sort(params.sort)) fail("forall_i: unknown sort " + params.sort);
        if (occurs_free_in_context(ps[0].sequent(), params.name))
            fail("eigenvariable-not-fresh: '" + params.name + "' occurs in the context");
        Formula body =
            substitute(goal_of(ps[0]), params.name, Term::var(params.name2, params.sort));
        Formula out = Formula::forall(params.name2, params.sort, body);
        return KernelAccess::make(with_goal(ps[0].sequent(), out), rule, params, ps);
    }
    case RuleKind::ExistsI: {
        // params: formula = the target existential, term = witness
        need_premises(ps, 1, "exists_i");
        check_formula(params.formula, sig);
        need_kind(params.formula, FormulaKind::Exists, "an existential");
        check_term(params.term, sig);
        if (params.term.sort() != params.formula.sort())
            fail("exists_i: witness sort mismatch");
        Formula expected =
            substitute(params.formula.subs()[0], params.formula.name(), params.term);
        if (!alpha_equal(expected, goal_of(ps[0])))
            fail("exists_i: premise is not the instantiated body");
        return KernelAccess::make(with_goal(ps[0].sequent(), params.formula), rule, params, ps);
    }
    case RuleKind::ExistsE: {
        // params: name = eigenvariable, name2 = case hypothesis
        need_premises(ps, 2, "exists_e");
        const Formula& q = goal_of(ps[0]);
        need_kind(q, FormulaKind::Exists, "an existential");
        const Formula* hyp = ps[1].sequent().hyp(params.name2);
        if (!hyp) fail("exists_e: case hypothesis '" + params.name2 + "' missing");
        Formula expected = substitute(q.subs()[0], q.name(), Term::var(params.name, q.sort()));
        if (!alpha_equal(*hyp, expected))
            fail("exists_e: case hypothesis is not the eigen-instantiated body");
        const std::string& a = params.name;
        Sequent case_ctx = ps[1].sequent().without_hyp(params.name2);
        if (occurs_free_in_context(ps[0].sequent(), a) || occurs_free_in_context(case_ctx, a))
            fail("eigenvariable-not-fresh: '" + a + "' occurs in the context");
        if (free_vars(goal_of(ps[1])).count(a))
            fail("eigenvariable-not-fresh: '" + a + "' occurs in the conclusion");
        if (free_vars(q).count(a))
            fail("eigenvariable-not-fresh: '" + a + "' occurs in the existential");
        return KernelAccess::make(merge_contexts(ps[0].sequent(), case_ctx, goal_of(ps[1])), rule,
                                  params, ps);
    }
    case RuleKind::InductionInt: {
        // params: name = induction variable, name2 = eigenvariable,
        // name3 = "h0,h1" packed hypothesis names, formula = P (free in var)
        need_premises(ps, 2, "induction_int");
        const std::string& n = params.name;
        const std::string& k = params.name2;
        auto comma = params.name3.find(',');
        if (comma == std::string::npos) fail("induction_int: malformed hypothesis names");
        std::string h0 = params.name3.substr(0, comma);
        std::string h1 = params.name3.substr(comma + 1);
        const Formula& body = params.formula;
        check_formula(body, sig);

        Term kvar = Term::var(k, kIntSort);
        Formula base_expected = substitute(body, n, Term::int_lit(0));
        if (!alpha_equal(goal_of(ps[0]), base_expected))
            fail("induction_int: base premise must conclude " + render(base_expected));
        Formula step_expected = substitute(body, n, Term::add(kvar, Term::int_lit(1)));
        if (!alpha_equal(goal_of(ps[1]), step_expected))
            fail("induction_int: step premise must conclude " + render(step_expected));

        Formula guard = Formula::cmp(CmpOp::Ge, kvar, Term::int_lit(0));
        const Formula* g0 = ps[1].sequent().hyp(h0);
        if (!g0 || !alpha_equal(*g0, guard))
            fail("induction_int: step premise must assume " + render(guard) + " as '" + h0 + "'");
        Formula ih = substitute(body, n, kvar);
        const Formula* g1 = ps[1].sequent().hyp(h1);
        if (!g1 || !alpha_equal(*g1, ih))
            fail("induction_int: step premise must assume " + render(ih) + " as '" + h1 + "'");

        if (k != n && free_vars(body).count(k))
            fail("eigenvariable-not-fresh: '" + k + "' occurs in the induction body");
        Sequent step_ctx = ps[1].sequent().without_hyp(h0).without_hyp(h1);
        if (occurs_free_in_context(ps[0].sequent(), k) || occurs_free_in_context(step_ctx, k))
            fail("eigenvariable-not-fresh: '" + k + "' occurs in the context");

        Formula out = Formula::forall(
            n, kIntSort,
            Formula::imp(Formula::cmp(CmpOp::Ge, Term::var(n, kIntSort), Term::int_lit(0)), body));
        return KernelAccess::make(merge_contexts(ps[0].sequent(), step_ctx, out), rule, params,
                                  ps);
    }
    case RuleKind::Cert:
        fail("certified steps cannot be applied directly");
    }
    fail("unknown rule");
}

Theorem admit_certified(const Sequent& s, const AcceptanceToken& token, CertRegistry& registry) {
    Digest d = canonical_digest(s);
    if (!(d == token.sequent_digest()))
        fail("token/sequent digest mismatch: token is for a different sequent");
    registry.insert(d, s, token.cert_digest());
    RuleParams params;
    params.cert_digest = d;
    return KernelAccess::make(s, RuleKind::Cert, std::move(params), {});
}

// ---------------------------------------------------------------------------
// Registry

void CertRegistry::insert(const Digest& sequent_digest, const Sequent& s,
                          const Digest& cert_digest) {
    std::lock_guard<std::mutex> lock(mu_);
    by_hex_.emplace(sequent_digest.hex(), std::make_pair(s, cert_digest));
}

std::optional<Sequent> CertRegistry::lookup(const Digest& sequent_digest) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_hex_.find(sequent_digest.hex());
    if (it == by_hex_.end()) return std::nullopt;
    return it->second.first;
}

std::optional<Digest> CertRegistry::cert_for(const Digest& sequent_digest) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_hex_.find(sequent_digest.hex());
    if (it == by_hex_.end()) return std::nullopt;
    return it->second.second;
}

std::vector<Digest> CertRegistry::all_sequent_digests() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<Digest> out;
    for (const auto& [hex, v] : by_hex_) out.push_back(Digest::from_hex(hex));
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

// Free variables (eigenvariables) carry their sorts in a `{x:S,...}`
// preamble so parameters replay without guessing.
void quote_free_vars(const std::map<std::string, std::string>& fv, std::string& out) {
    if (fv.empty()) return;
    out += "{";
    bool first = true;
    for (const auto& [n, s] : fv) {
        if (!first) out += ",";
        out += n + ":" + s;
        first = false;
    }
    out += "} ";
}

void quote_formula(const Formula& f, std::string& out) {
    out += "f\"";
    quote_free_vars(free_vars(f), out);
    out += render(f);
    out += "\"";
}

void quote_term(const Term& t, std::string& out) {
    out += "t\"";
    quote_free_vars(free_vars(t), out);
    out += render(t);
    out += "\"";
}

// Parameter layout per rule, mirrored exactly by the replay parser below.
void serialize_params(RuleKind k, const RuleParams& p, std::string& out) {
    auto sp = [&] { out += " "; };
    switch (k) {
    case RuleKind::Assume:
    case RuleKind::Weaken:
    case RuleKind::ImpI:
    case RuleKind::NotI:
    case RuleKind::Raa:
        out += " " + p.name;
        sp();
        quote_formula(p.formula, out);
        return;
    case RuleKind::OrIL:
    case RuleKind::OrIR:
    case RuleKind::FalsumE:
        sp();
        quote_formula(p.formula, out);
        return;
    case RuleKind::OrE:
        out += " " + p.name + " " + p.name2;
        return;
    case RuleKind::Refl:
    case RuleKind::ForallE:
        sp();
        quote_term(p.term, out);
        return;
    case RuleKind::Cong: {
        out += " " + p.fn + " " + std::to_string(p.index);
        for (const auto& t : p.terms) {
            sp();
            quote_term(t, out);
        }
        return;
    }
    case RuleKind::SubstEq:
        out += " " + p.pos.to_string() + " " + (p.ltr ? "ltr" : "rtl");
        return;
    case RuleKind::ForallI:
        out += " " + p.name + " " + p.name2 + " " + p.sort;
        return;
    case RuleKind::ExistsI:
        sp();
        quote_formula(p.formula, out);
        sp();
        quote_term(p.term, out);
        return;
    case RuleKind::ExistsE:
        out += " " + p.name + " " + p.name2;
        return;
    case RuleKind::InductionInt:
        out += " " + p.name + " " + p.name2 + " " + p.name3;
        sp();
        quote_formula(p.formula, out);
        return;
    case RuleKind::Cert:
        out += " " + p.cert_digest.hex();
        return;
    default:
        return; // no parameters
    }
}

void topo(const std::shared_ptr<const ProofNode>& node,
          std::map<const ProofNode*, size_t>& index,
          std::vector<const ProofNode*>& order) {
    if (index.count(node.get())) return;
    for (const auto& p : node->premises) topo(p, index, order);
    index.emplace(node.get(), order.size());
    order.push_back(node.get());
}

} // namespace

std::string serialize_proof(const Theorem& t) {
    std::map<const ProofNode*, size_t> index;
    std::vector<const ProofNode*> order;
    topo(t.provenance(), index, order);

    std::string out = "PROOFOBJ v1 " + canonical_digest(t.sequent()).hex() + "\n";
    for (size_t i = 0; i < order.size(); ++i) {
        const ProofNode* n = order[i];
        out += std::to_string(i);
        out += " ";
        out += rule_name(n->kind);
        serialize_params(n->kind, n->params, out);
        for (const auto& p : n->premises) {
            out += " ";
            out += std::to_string(index.at(p.get()));
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

struct LineReader {
    const std::string& line;
    size_t pos = 0;
    size_t lineno;

    [[noreturn]] void fail(const std::string& msg) const {
        throw KernelError("proof line " + std::to_string(lineno) + ": " + msg);
    }
    void skip_ws() {
        while (pos < line.size() && line[pos] == ' ') ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= line.size();
    }
    std::string token() {
        skip_ws();
        size_t start = pos;
        while (pos < line.size() && line[pos] != ' ') ++pos;
        if (start == pos) fail("expected a token");
        return line.substr(start, pos - start);
    }
    std::size_t int_token() {
        std::string t = token();
        for (char c : t)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                fail("expected a numeric token, got '" + t + "'");
        return std::stoull(t);
    }
    // f"..." or t"..."
    std::string quoted(char tag) {
        skip_ws();
        if (pos + 1 >= line.size() || line[pos] != tag || line[pos + 1] != '"')
            fail(std::string("expected ") + tag + "\"...\" parameter");
        pos += 2;
        size_t end = line.find('"', pos);
        if (end == std::string::npos) fail("unterminated quoted parameter");
        std::string text = line.substr(pos, end - pos);
        pos = end + 1;
        return text;
    }
};

Position parse_pos_token(const std::string& tok, LineReader& r) {
    Position p;
    if (tok.size() < 2 || tok.front() != '[' || tok.back() != ']') r.fail("bad position");
    std::string inner = tok.substr(1, tok.size() - 2);
    if (inner.empty()) return p;
    std::istringstream ss(inner);
    std::string part;
    while (std::getline(ss, part, ',')) p.path.push_back(std::stoi(part));
    return p;
}

// Splits an optional `{x:S,...} ` preamble off a quoted parameter.
std::string split_preamble(const std::string& text, std::map<std::string, std::string>& seed) {
    if (text.empty() || text[0] != '{') return text;
    size_t end = text.find('}');
    if (end == std::string::npos) throw KernelError("malformed parameter preamble");
    std::string inner = text.substr(1, end - 1);
    std::istringstream ss(inner);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        size_t colon = entry.find(':');
        if (colon == std::string::npos) throw KernelError("malformed parameter preamble");
        seed[entry.substr(0, colon)] = entry.substr(colon + 1);
    }
    size_t rest = end + 1;
    while (rest < text.size() && text[rest] == ' ') ++rest;
    return text.substr(rest);
}

Formula parse_formula_param(const std::string& text, const Signature& sig,
                            std::map<std::string, std::string> seed) {
    std::string body = split_preamble(text, seed);
    FreeVarScope scope{true, std::move(seed)};
    return parse_formula_text(body, sig, scope);
}

Term parse_term_param(const std::string& text, const Signature& sig,
                      std::map<std::string, std::string> seed) {
    std::string body = split_preamble(text, seed);
    FreeVarScope scope{true, std::move(seed)};
    return parse_term_text(body, sig, scope);
}

} // namespace

Theorem replay(const std::string& proof_text, const Sequent& claimed, const Signature& sig,
               const CertRegistry& registry) {
    std::istringstream in(proof_text);
    std::string line;
    if (!std::getline(in, line)) throw KernelError("empty proof object");
    {
        std::istringstream hdr(line);
        std::string magic, version, digest;
        hdr >> magic >> version >> digest;
        if (magic != "PROOFOBJ" || version != "v1")
            throw KernelError("bad proof object header");
    }

    std::vector<Theorem> steps;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        LineReader r{line, 0, lineno};
        size_t idx = r.int_token();
        if (idx != steps.size()) r.fail("step index out of order");
        std::string rname = r.token();
        auto rk = rule_from_name(rname);
        if (!rk) r.fail("unknown rule id: " + rname);

        RuleParams params;
        std::vector<size_t> premise_idx;
        auto premise_list = [&] {
            while (!r.done()) premise_idx.push_back(r.int_token());
        };

        switch (*rk) {
        case RuleKind::Assume:
        case RuleKind::Weaken:
        case RuleKind::ImpI:
        case RuleKind::NotI:
        case RuleKind::Raa:
            params.name = r.token();
            params.formula = parse_formula_param(r.quoted('f'), sig, {});
            premise_list();
            break;
        case RuleKind::OrIL:
        case RuleKind::OrIR:
        case RuleKind::FalsumE:
            params.formula = parse_formula_param(r.quoted('f'), sig, {});
            premise_list();
            break;
        case RuleKind::OrE:
        case RuleKind::ExistsE:
            params.name = r.token();
            params.name2 = r.token();
            premise_list();
            break;
        case RuleKind::Refl:
        case RuleKind::ForallE:
            params.term = parse_term_param(r.quoted('t'), sig, {});
            premise_list();
            break;
        case RuleKind::Cong: {
            params.fn = r.token();
            params.index = std::stoi(r.token());
            const FunctionDecl* fd = sig.function(params.fn);
            if (!fd) r.fail("cong references unknown function");
            for (size_t i = 0; i + 1 < fd->arg_sorts.size(); ++i)
                params.terms.push_back(parse_term_param(r.quoted('t'), sig, {}));
            premise_list();
            break;
        }
        case RuleKind::SubstEq: {
            params.pos = parse_pos_token(r.token(), r);
            std::string dir = r.token();
            if (dir != "ltr" && dir != "rtl") r.fail("bad direction");
            params.ltr = dir == "ltr";
            premise_list();
            break;
        }
        case RuleKind::ForallI:
            params.name = r.token();
            params.name2 = r.token();
            params.sort = r.token();
            premise_list();
            break;
        case RuleKind::ExistsI:
            params.formula = parse_formula_param(r.quoted('f'), sig, {});
            params.term = parse_term_param(r.quoted('t'), sig, {});
            premise_list();
            break;
        case RuleKind::InductionInt: {
            params.name = r.token();
            params.name2 = r.token();
            params.name3 = r.token();
            std::map<std::string, std::string> seed = {{params.name, kIntSort},
                                                       {params.name2, kIntSort}};
            params.formula = parse_formula_param(r.quoted('f'), sig, seed);
            premise_list();
            break;
        }
        case RuleKind::Cert: {
            std::string hex = r.token();
            Digest d = Digest::from_hex(hex);
            auto seq = registry.lookup(d);
            if (!seq)
                r.fail("unknown certificate digest: " + hex);
            RuleParams p2;
            p2.cert_digest = d;
            steps.push_back(KernelAccess::make(*seq, RuleKind::Cert, std::move(p2), {}));
            continue;
        }
        default:
            premise_list();
            break;
        }

        std::vector<Theorem> premises;
        for (size_t pi : premise_idx) {
            if (pi >= steps.size()) r.fail("premise index out of range");
            premises.push_back(steps[pi]);
        }
        try {
            steps.push_back(apply_rule(*rk, premises, params, sig));
        } catch (const LogicError& e) {
            r.fail(std::string("step failed: ") + e.what());
        }
    }
    if (steps.empty()) throw KernelError("proof object has no steps");
    const Theorem& result = steps.back();
    if (!sequent_equal(result.sequent(), claimed))
        throw KernelError("conclusion mismatch: proof concludes " +
                          canonical_text(result.sequent()));
    return result;
}

} // namespace kernel
} // namespace psk
