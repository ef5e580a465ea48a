#include "psk/obligations.hpp"

#include "json.hpp"

namespace psk {
namespace oblig {

const char* route_name(Route r) {
    switch (r) {
    case Route::KernelStructural: return "kernel-structural";
    case Route::KernelExact: return "kernel-exact";
    case Route::Auto: return "auto";
    }
    return "?";
}

const char* fragment_name(Fragment f) {
    switch (f) {
    case Fragment::Propositional: return "propositional";
    case Fragment::Equality: return "equality";
    case Fragment::Lia: return "lia";
    case Fragment::Mixed: return "mixed";
    }
    return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Theory fragment hint

struct FragmentScan {
    bool arith = false;
    bool eq = false;
    bool prop = false;
};

void scan_term(const Term& t, FragmentScan& s) {
    switch (t.kind()) {
    case TermKind::IntLit:
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul:
        s.arith = true;
        break;
    default:
        break;
    }
    for (const auto& a : t.args()) scan_term(a, s);
}

void scan_formula(const Formula& f, FragmentScan& s) {
    switch (f.kind()) {
    case FormulaKind::Pred:
        s.prop = true;
        break;
    case FormulaKind::Cmp:
        s.arith = true;
        break;
    case FormulaKind::Eq:
        if (f.terms()[0].sort() == kIntSort) s.arith = true;
        else s.eq = true;
        break;
    default:
        break;
    }
    for (const auto& t : f.terms()) scan_term(t, s);
    for (const auto& sub : f.subs()) scan_formula(sub, s);
}

Fragment fragment_of(const Sequent& seq) {
    FragmentScan s;
    scan_formula(seq.goal(), s);
    for (const auto& [n, f] : seq.hyps()) scan_formula(f, s);
    int kinds = int(s.arith) + int(s.eq) + int(s.prop);
    if (kinds > 1) return Fragment::Mixed;
    if (s.arith) return Fragment::Lia;
    if (s.eq) return Fragment::Equality;
    return Fragment::Propositional;
}

// ---------------------------------------------------------------------------
// Extraction walk

struct Extractor {
    const Sketch& sketch;
    const LemmaLibrary* lib;
    std::vector<NodePlan> plans;

    // Applies the bindings to the universally quantified head of `fact`.
    // Returns the instantiated body, or an issue message.
    static std::variant<Formula, std::string>
    instantiate(const Formula& fact, const std::vector<std::pair<std::string, Term>>& bindings) {
        std::map<std::string, Term> by_name(bindings.begin(), bindings.end());
        Formula cur = fact;
        std::set<std::string> used;
        while (!cur.empty() && cur.kind() == FormulaKind::Forall) {
            auto it = by_name.find(cur.name());
            if (it == by_name.end())
                return "no binding for universally quantified variable '" + cur.name() + "'";
            if (it->second.sort() != cur.sort())
                return "binding for '" + cur.name() + "' has sort " + it->second.sort() +
                       ", expected " + cur.sort();
            used.insert(cur.name());
            cur = substitute(cur.subs()[0], cur.name(), it->second);
        }
        for (const auto& [name, term] : bindings)
            if (!used.count(name))
                return "binding '" + name + "' does not match a quantified variable of the fact";
        return cur;
    }

    void walk(const SketchNode& n, const Sequent& ctx) {
        NodePlan plan;
        plan.node_id = n.id;
        plan.method = n.method.kind;

        // resolve references: the method's fact first, then explicit uses;
        // library lemmas become context extensions for this subtree
        Sequent local = ctx;
        auto resolve = [&](const std::string& ref, bool required) -> const Formula* {
            if (const Formula* f = local.hyp(ref)) return f;
            if (lib) {
                if (const Lemma* l = lib->find(ref)) {
                    local.add_hyp(ref, l->formula);
                    plan.lemma_extensions.emplace_back(ref, l->formula);
                    return local.hyp(ref);
                }
            }
            if (required && !plan.issue)
                plan.issue = ExtractIssue{ExtractIssue::Kind::MissingFact,
                                          "unknown fact reference: " + ref};
            return nullptr;
        };

        const Formula* fact = nullptr;
        if (n.method.kind == MethodKind::Exact)
            fact = resolve(n.method.fact, true);
        else if (n.method.kind == MethodKind::Rewrite)
            fact = resolve(n.method.fact, false); // unresolved => solver-justified equation
        for (const auto& u : n.uses) resolve(u, true);

        local.set_goal(n.goal);
        plan.node_sequent = local;

        auto push_ob = [&](const std::string& slot, Route route, Sequent seq) {
            Obligation ob;
            ob.id = n.id + "/" + slot;
            ob.node_id = n.id;
            ob.slot = slot;
            ob.route = route;
            ob.sequent = std::move(seq);
            ob.fragment = fragment_of(ob.sequent);
            plan.obligations.push_back(std::move(ob));
        };

        switch (n.method.kind) {
        case MethodKind::Hole: {
            push_ob("goal", Route::Auto, local);
            break;
        }
        case MethodKind::Exact: {
            push_ob("goal", Route::KernelExact, local);
            Obligation& ob = plan.obligations.back();
            ob.fact_name = n.method.fact;
            if (fact) ob.fact_formula = *fact;
            ob.bindings = n.method.bindings;
            break;
        }
        case MethodKind::Rewrite: {
            plan.rewrite_pos = n.method.pos;
            plan.rewrite_ltr = n.method.ltr;
            const Formula& goal = n.goal;
            const Formula& child_goal = n.children[0].goal;

            Term lhs, rhs; // oriented: goal side / child side
            bool oriented = false;
            if (fact) {
                auto inst = instantiate(*fact, n.method.bindings);
                if (std::holds_alternative<std::string>(inst)) {
                    plan.issue = ExtractIssue{ExtractIssue::Kind::BadInstantiation,
                                              std::get<std::string>(inst)};
                    break;
                }
                Formula eq = std::get<Formula>(inst);
                if (eq.empty() || eq.kind() != FormulaKind::Eq) {
                    plan.issue = ExtractIssue{
                        ExtractIssue::Kind::BadInstantiation,
                        "fact instance is not an equality: " + render(eq)};
                    break;
                }
                lhs = n.method.ltr ? eq.terms()[0] : eq.terms()[1];
                rhs = n.method.ltr ? eq.terms()[1] : eq.terms()[0];
                oriented = true;

                Sequent eq_seq = local;
                eq_seq.set_goal(n.method.ltr ? eq : Formula::eq(eq.terms()[0], eq.terms()[1]));
                push_ob("eq", Route::KernelExact, eq_seq);
                Obligation& ob = plan.obligations.back();
                ob.fact_name = n.method.fact;
                ob.fact_formula = *fact;
                ob.bindings = n.method.bindings;
            }

            // structural checks at the chosen term position
            TermOrFormula sub{Formula{}};
            try {
                sub = subterm_at(goal, n.method.pos);
            } catch (const LogicError& e) {
                plan.issue =
                    ExtractIssue{ExtractIssue::Kind::BadRewrite,
                                 std::string("position does not resolve in the goal: ") + e.what()};
                break;
            }
            if (!std::holds_alternative<Term>(sub)) {
                plan.issue = ExtractIssue{ExtractIssue::Kind::BadRewrite,
                                          "position resolves to a formula, not a term"};
                break;
            }
            Term at = std::get<Term>(sub);

            if (!oriented) {
                // solver-justified equation between the two goal sides
                lhs = at;
                TermOrFormula child_sub{Formula{}};
                try {
                    child_sub = subterm_at(child_goal, n.method.pos);
                } catch (const LogicError& e) {
                    plan.issue = ExtractIssue{
                        ExtractIssue::Kind::BadRewrite,
                        std::string("position does not resolve in the child goal: ") + e.what()};
                    break;
                }
                if (!std::holds_alternative<Term>(child_sub)) {
                    plan.issue = ExtractIssue{ExtractIssue::Kind::BadRewrite,
                                              "child position resolves to a formula"};
                    break;
                }
                rhs = std::get<Term>(child_sub);
                if (lhs.sort() != rhs.sort()) {
                    plan.issue = ExtractIssue{ExtractIssue::Kind::BadRewrite,
                                              "rewrite sides have different sorts"};
                    break;
                }
                Sequent eq_seq = local;
                eq_seq.set_goal(n.method.ltr ? Formula::eq(lhs, rhs) : Formula::eq(rhs, lhs));
                push_ob("eq", Route::Auto, eq_seq);
            } else if (!(at == lhs)) {
                plan.issue = ExtractIssue{
                    ExtractIssue::Kind::BadRewrite,
                    "subterm at " + n.method.pos.to_string() + " is " + render(at) +
                        ", expected " + render(lhs)};
                break;
            }

            Formula expected_child;
            try {
                expected_child = replace_at(goal, n.method.pos, rhs);
            } catch (const LogicError& e) {
                plan.issue = ExtractIssue{ExtractIssue::Kind::BadRewrite,
                                          std::string("replacement failed: ") + e.what()};
                break;
            }
            if (!alpha_equal(child_goal, expected_child)) {
                plan.issue = ExtractIssue{
                    ExtractIssue::Kind::BadRewrite,
                    "child goal must be " + render(expected_child) + ", found " +
                        render(child_goal)};
            }
            break;
        }
        case MethodKind::Split:
        case MethodKind::Induction:
        case MethodKind::Contradiction:
            break; // no obligations of their own; assembly is kernel-structural
        }

        plans.push_back(plan);

        // children with extended contexts, document order
        switch (n.method.kind) {
        case MethodKind::Split: {
            Sequent left = local;
            left.add_hyp(hyp_name(n.id, 0), n.method.condition);
            walk(n.children[0], left);
            Sequent right = local;
            right.add_hyp(hyp_name(n.id, 1), Formula::negate(n.method.condition));
            walk(n.children[1], right);
            break;
        }
        case MethodKind::Induction: {
            walk(n.children[0], local);
            const std::string& v = n.method.var;
            // goal shape was validated: forall v:Int. v >= 0 -> P(v)
            Formula body = n.goal.subs()[0].subs()[1];
            Sequent step = local;
            step.add_hyp(hyp_name(n.id, 0),
                         Formula::cmp(CmpOp::Ge, Term::var(v, kIntSort), Term::int_lit(0)));
            step.add_hyp(hyp_name(n.id, 1), body);
            walk(n.children[1], step);
            break;
        }
        case MethodKind::Contradiction: {
            Sequent inner = local;
            inner.add_hyp(hyp_name(n.id, 0), Formula::negate(n.goal));
            walk(n.children[0], inner);
            break;
        }
        case MethodKind::Rewrite:
            if (!n.children.empty()) walk(n.children[0], local);
            break;
        default:
            break;
        }
    }
};

} // namespace

std::vector<const Obligation*> ObligationSet::all() const {
    std::vector<const Obligation*> out;
    for (const auto& plan : nodes)
        for (const auto& ob : plan.obligations) out.push_back(&ob);
    return out;
}

const NodePlan* ObligationSet::plan_for(const std::string& node_id) const {
    for (const auto& plan : nodes)
        if (plan.node_id == node_id) return &plan;
    return nullptr;
}

ObligationSet extract(const Sketch& s, const LemmaLibrary* lib) {
    Extractor ex{s, lib, {}};
    Sequent ambient{Formula::top()};
    for (const auto& [name, f] : s.context) ambient.add_hyp(name, f);
    ex.walk(s.root, ambient);
    ObligationSet out;
    out.nodes = std::move(ex.plans);
    return out;
}

std::string obligations_json(const ObligationSet& set) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Obligation* ob : set.all()) {
        nlohmann::ordered_json o;
        o["id"] = ob->id;
        o["node_id"] = ob->node_id;
        o["slot"] = ob->slot;
        o["route"] = route_name(ob->route);
        o["fragment"] = fragment_name(ob->fragment);
        nlohmann::ordered_json ctx = nlohmann::ordered_json::array();
        for (const auto& [name, f] : ob->sequent.hyps())
            ctx.push_back({{"name", name}, {"formula", render(f)}});
        o["context"] = std::move(ctx);
        o["goal"] = render(ob->sequent.goal());
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

} // namespace oblig
} // namespace psk
