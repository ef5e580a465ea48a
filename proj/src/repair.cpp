#include "psk/repair.hpp"

#include "json.hpp"

#include <chrono>
#include <future>
#include <sstream>

namespace psk {
namespace repair {

using kernel::RuleKind;
using kernel::RuleParams;
using kernel::Theorem;
using oblig::ExtractIssue;
using oblig::NodePlan;
using oblig::Obligation;
using oblig::ObligationSet;
using oblig::Route;

// ---------------------------------------------------------------------------
// Classification

const char* cause_name(CauseClass c) {
    switch (c) {
    case CauseClass::MissingLemma: return "missing_lemma";
    case CauseClass::FailedInstantiation: return "failed_instantiation";
    case CauseClass::InvalidRewrite: return "invalid_rewrite";
    case CauseClass::UnsatisfiedPrecondition: return "unsatisfied_precondition";
    }
    return "?";
}

std::optional<CauseClass> cause_from_name(const std::string& s) {
    if (s == "missing_lemma") return CauseClass::MissingLemma;
    if (s == "failed_instantiation") return CauseClass::FailedInstantiation;
    if (s == "invalid_rewrite") return CauseClass::InvalidRewrite;
    if (s == "unsatisfied_precondition") return CauseClass::UnsatisfiedPrecondition;
    return std::nullopt;
}

CauseClass classify(const ExtractIssue& issue) {
    switch (issue.kind) {
    case ExtractIssue::Kind::MissingFact: return CauseClass::MissingLemma;
    case ExtractIssue::Kind::BadInstantiation: return CauseClass::FailedInstantiation;
    case ExtractIssue::Kind::BadRewrite: return CauseClass::InvalidRewrite;
    }
    return CauseClass::UnsatisfiedPrecondition;
}

CauseClass classify(const solver::DischargeOutcome& outcome) {
    // countermodels, resource limits and unsupported fragments all mean the
    // obligation does not hold as stated
    (void)outcome;
    return CauseClass::UnsatisfiedPrecondition;
}

// ---------------------------------------------------------------------------
// Kernel-exact discharge: assume the fact, peel its universals with the
// bindings, match the goal.

namespace {

struct ExactResult {
    std::optional<Theorem> theorem;
    std::string error; // failed-instantiation detail when empty theorem
};

ExactResult kernel_exact_discharge(const Obligation& ob, const Signature& sig) {
    ExactResult out;
    if (ob.fact_formula.empty()) {
        out.error = "unknown fact reference: " + ob.fact_name;
        return out;
    }
    std::map<std::string, Term> by_name(ob.bindings.begin(), ob.bindings.end());
    try {
        RuleParams ap;
        ap.name = ob.fact_name;
        ap.formula = ob.fact_formula;
        Theorem cur = apply_rule(RuleKind::Assume, {}, ap, sig);
        std::set<std::string> used;
        while (!cur.sequent().goal().empty() &&
               cur.sequent().goal().kind() == FormulaKind::Forall) {
            const std::string& var = cur.sequent().goal().name();
            auto it = by_name.find(var);
            if (it == by_name.end()) {
                out.error = "no binding for universally quantified variable '" + var + "'";
                return out;
            }
            used.insert(var);
            RuleParams fe;
            fe.term = it->second;
            cur = apply_rule(RuleKind::ForallE, {cur}, fe, sig);
        }
        for (const auto& [name, term] : ob.bindings)
            if (!used.count(name)) {
                out.error = "binding '" + name + "' does not match a quantified variable";
                return out;
            }
        if (!alpha_equal(cur.sequent().goal(), ob.sequent.goal())) {
            out.error = "instance is " + render(cur.sequent().goal()) + ", goal is " +
                        render(ob.sequent.goal());
            return out;
        }
        out.theorem = std::move(cur);
        return out;
    } catch (const LogicError& e) {
        out.error = e.what();
        return out;
    }
}

// ---------------------------------------------------------------------------
// Node discharge

Theorem weaken_theorem_to(Theorem t, const Sequent& target, const Signature& sig) {
    for (const auto& [name, f] : target.hyps()) {
        if (t.sequent().hyp(name)) continue;
        RuleParams p;
        p.name = name;
        p.formula = f;
        t = apply_rule(RuleKind::Weaken, {t}, p, sig);
    }
    return t;
}

struct SlotProof {
    std::string slot;
    Theorem theorem;
    std::vector<store::CertRecord> certs;
};

struct NodeDischarge {
    bool accepted = false;
    bool cache_hit = false;
    std::vector<SlotProof> proofs;
    std::optional<FailureRecord> failure;
    std::int64_t solver_calls = 0;
};

FailureRecord make_failure(const NodePlan& plan, CauseClass cause, std::string detail) {
    FailureRecord f;
    f.node_id = plan.node_id;
    f.cause = cause;
    f.sequent = plan.node_sequent;
    f.detail = std::move(detail);
    return f;
}

store::CertRecord record_for(const solver::DischargeOutcome& outcome,
                             const AcceptanceToken& token) {
    store::CertRecord r;
    r.kind = translate_mode_name(outcome.mode);
    r.sequent_digest_hex = token.sequent_digest().hex();
    r.cert_digest_hex = token.cert_digest().hex();
    r.cert_text = outcome.cert_text;
    return r;
}

NodeDischarge discharge_node_fresh(const NodePlan& plan, const Signature& sig,
                                   const RepairConfig& cfg, kernel::CertRegistry& registry) {
    NodeDischarge out;
    if (plan.issue) {
        out.failure = make_failure(plan, classify(*plan.issue), plan.issue->detail);
        return out;
    }
    for (const Obligation& ob : plan.obligations) {
        if (ob.route == Route::KernelExact) {
            ExactResult r = kernel_exact_discharge(ob, sig);
            if (!r.theorem) {
                CauseClass cause = ob.fact_formula.empty() ? CauseClass::MissingLemma
                                                           : CauseClass::FailedInstantiation;
                out.failure = make_failure(plan, cause, ob.id + ": " + r.error);
                return out;
            }
            // cache entries hold obligation-level proofs: Γn |- goal
            Theorem t = weaken_theorem_to(std::move(*r.theorem), ob.sequent, sig);
            out.proofs.push_back({ob.slot, std::move(t), {}});
            continue;
        }
        // route auto
        ++out.solver_calls;
        solver::DischargeOutcome oc = solver::discharge(ob.sequent, sig, cfg.budgets);
        if (oc.kind == solver::DischargeOutcome::Kind::Certified) {
            auto check = cert::validate_outcome(ob.sequent, sig, oc);
            if (!cert::accepted(check)) {
                // an invalid certificate marks the obligation failed
                const auto& rej = std::get<cert::Rejection>(check);
                FailureRecord f = make_failure(plan, CauseClass::UnsatisfiedPrecondition,
                                               ob.id + ": certificate rejected: " + rej.reason);
                f.sequent = ob.sequent;
                out.failure = std::move(f);
                return out;
            }
            const AcceptanceToken& token = std::get<AcceptanceToken>(check);
            Theorem t = kernel::admit_certified(ob.sequent, token, registry);
            out.proofs.push_back({ob.slot, std::move(t), {record_for(oc, token)}});
            continue;
        }
        FailureRecord f = make_failure(plan, classify(oc), "");
        f.sequent = ob.sequent;
        switch (oc.kind) {
        case solver::DischargeOutcome::Kind::Countermodel:
            f.detail = ob.id + ": countermodel found";
            f.has_countermodel = true;
            f.countermodel = oc.counter;
            break;
        case solver::DischargeOutcome::Kind::Unsupported:
            f.detail = ob.id + ": unsupported fragment: " + oc.reason;
            break;
        default:
            f.detail = ob.id + ": resource limit: " + oc.reason;
            break;
        }
        out.failure = std::move(f);
        return out;
    }
    out.accepted = true;
    return out;
}

// Rebuild theorems from a cached entry: re-validate certificates through the
// trusted checker, then replay the stored proof objects. Any mismatch makes
// the entry unusable (treated as a miss).
std::optional<NodeDischarge> revive_entry(const store::CacheEntry& entry, const NodePlan& plan,
                                          const Signature& sig,
                                          kernel::CertRegistry& registry) {
    if (!entry.accepted) {
        NodeDischarge out;
        out.cache_hit = true;
        auto cause = cause_from_name(entry.failure_cause);
        if (!cause) return std::nullopt;
        out.failure = make_failure(plan, *cause, entry.failure_detail + " (cached)");
        return out;
    }
    NodeDischarge out;
    out.cache_hit = true;
    if (entry.obligations.size() != plan.obligations.size()) return std::nullopt;
    for (size_t i = 0; i < entry.obligations.size(); ++i) {
        const store::ObligationRecord& rec = entry.obligations[i];
        const Obligation& ob = plan.obligations[i];
        if (rec.slot != ob.slot) return std::nullopt;
        try {
            for (const auto& cr : rec.certs) {
                auto mode = translate_mode_from_name(cr.kind);
                if (!mode) return std::nullopt;
                solver::DischargeOutcome oc;
                oc.kind = solver::DischargeOutcome::Kind::Certified;
                oc.mode = *mode;
                oc.cert_text = cr.cert_text;
                auto check = cert::validate_outcome(ob.sequent, sig, oc);
                if (!cert::accepted(check)) return std::nullopt;
                kernel::admit_certified(ob.sequent, std::get<AcceptanceToken>(check), registry);
            }
            Theorem t = kernel::replay(rec.proof_text, ob.sequent, sig, registry);
            out.proofs.push_back({ob.slot, std::move(t), rec.certs});
        } catch (const LogicError&) {
            return std::nullopt;
        }
    }
    out.accepted = true;
    return out;
}

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

store::CacheEntry entry_for(const NodePlan& plan, const store::CacheKey& key,
                            const Signature& sig, const NodeDischarge& d) {
    store::CacheEntry e;
    e.key = key;
    e.node_id = plan.node_id;
    e.accepted = d.accepted;
    e.created = now_iso();
    e.signature_body = render_signature_body(sig);
    if (d.accepted) {
        for (size_t i = 0; i < plan.obligations.size(); ++i) {
            const Obligation& ob = plan.obligations[i];
            const SlotProof& sp = d.proofs[i];
            store::ObligationRecord rec;
            rec.slot = ob.slot;
            for (const auto& [name, f] : ob.sequent.hyps())
                rec.context.emplace_back(name, render(f));
            rec.goal = render(ob.sequent.goal());
            for (const auto& [name, f] : ob.sequent.hyps())
                for (const auto& [v, srt] : free_vars(f)) rec.vars[v] = srt;
            for (const auto& [v, srt] : free_vars(ob.sequent.goal())) rec.vars[v] = srt;
            rec.proof_text = kernel::serialize_proof(sp.theorem);
            rec.certs = sp.certs;
            e.obligations.push_back(std::move(rec));
        }
    } else if (d.failure) {
        e.failure_cause = cause_name(d.failure->cause);
        e.failure_detail = d.failure->detail;
    }
    return e;
}

// ---------------------------------------------------------------------------
// Assembly

struct Assembler {
    const Sketch& sketch;
    const ObligationSet& plan;
    const std::map<std::string, NodeDischarge>& discharges;
    const Signature& sig;

    const NodePlan& plan_of(const std::string& id) const {
        const NodePlan* p = plan.plan_for(id);
        if (!p) throw kernel::KernelError("internal: no plan for node " + id);
        return *p;
    }

    const Theorem& slot_theorem(const std::string& node_id, const std::string& slot) const {
        const NodeDischarge& d = discharges.at(node_id);
        for (const auto& sp : d.proofs)
            if (sp.slot == slot) return sp.theorem;
        throw kernel::KernelError("internal: missing proof for " + node_id + "/" + slot);
    }

    Theorem weaken_to(Theorem t, const Sequent& target) const {
        for (const auto& [name, f] : target.hyps()) {
            if (t.sequent().hyp(name)) continue;
            RuleParams p;
            p.name = name;
            p.formula = f;
            t = apply_rule(RuleKind::Weaken, {t}, p, sig);
        }
        return t;
    }

    // classical excluded middle: |- c \/ ~c
    Theorem excluded_middle(const Formula& c) const {
        RuleParams pa;
        pa.name = "@em.h";
        pa.formula = Formula::negate(Formula::disj(c, Formula::negate(c)));
        Theorem h = apply_rule(RuleKind::Assume, {}, pa, sig);
        RuleParams pc;
        pc.name = "@em.c";
        pc.formula = c;
        Theorem hc = apply_rule(RuleKind::Assume, {}, pc, sig);
        RuleParams oil;
        oil.formula = Formula::negate(c);
        Theorem d1 = apply_rule(RuleKind::OrIL, {hc}, oil, sig);
        Theorem bot1 = apply_rule(RuleKind::NotE, {h, d1}, {}, sig);
        RuleParams ni;
        ni.name = "@em.c";
        ni.formula = c;
        Theorem notc = apply_rule(RuleKind::NotI, {bot1}, ni, sig);
        RuleParams oir;
        oir.formula = c;
        Theorem d2 = apply_rule(RuleKind::OrIR, {notc}, oir, sig);
        Theorem bot2 = apply_rule(RuleKind::NotE, {h, d2}, {}, sig);
        RuleParams raa;
        raa.name = "@em.h";
        raa.formula = Formula::disj(c, Formula::negate(c));
        return apply_rule(RuleKind::Raa, {bot2}, raa, sig);
    }

    Theorem assemble(const SketchNode& n) const {
        const NodePlan& np = plan_of(n.id);
        switch (n.method.kind) {
        case MethodKind::Hole:
        case MethodKind::Exact:
            return weaken_to(slot_theorem(n.id, "goal"), np.node_sequent);
        case MethodKind::Rewrite: {
            Theorem eq = weaken_to(slot_theorem(n.id, "eq"), np.node_sequent);
            Theorem child = assemble(n.children[0]);
            RuleParams p;
            p.pos = np.rewrite_pos;
            p.ltr = !np.rewrite_ltr; // child goal carries the replaced side
            Theorem t = apply_rule(RuleKind::SubstEq, {eq, child}, p, sig);
            return weaken_to(std::move(t), np.node_sequent);
        }
        case MethodKind::Split: {
            Theorem left = assemble(n.children[0]);
            Theorem right = assemble(n.children[1]);
            // make sure the case hypotheses are present for discharge
            const NodePlan& lp = plan_of(n.children[0].id);
            const NodePlan& rp = plan_of(n.children[1].id);
            left = weaken_to(std::move(left), lp.node_sequent);
            right = weaken_to(std::move(right), rp.node_sequent);
            Theorem em = excluded_middle(n.method.condition);
            RuleParams p;
            p.name = hyp_name(n.id, 0);
            p.name2 = hyp_name(n.id, 1);
            Theorem t = apply_rule(RuleKind::OrE, {em, left, right}, p, sig);
            return weaken_to(std::move(t), np.node_sequent);
        }
        case MethodKind::Contradiction: {
            Theorem inner = assemble(n.children[0]);
            inner = weaken_to(std::move(inner), plan_of(n.children[0].id).node_sequent);
            RuleParams p;
            p.name = hyp_name(n.id, 0);
            p.formula = n.goal;
            Theorem t = apply_rule(RuleKind::Raa, {inner}, p, sig);
            return weaken_to(std::move(t), np.node_sequent);
        }
        case MethodKind::Induction: {
            Theorem base = assemble(n.children[0]);
            Theorem step = assemble(n.children[1]);
            step = weaken_to(std::move(step), plan_of(n.children[1].id).node_sequent);
            RuleParams p;
            p.name = n.method.var;
            p.name2 = n.method.var; // the step child reuses the bound name
            p.name3 = hyp_name(n.id, 0) + "," + hyp_name(n.id, 1);
            p.formula = n.goal.subs()[0].subs()[1];
            Theorem t = apply_rule(RuleKind::InductionInt, {base, step}, p, sig);
            return weaken_to(std::move(t), np.node_sequent);
        }
        }
        throw kernel::KernelError("internal: unknown method");
    }
};

} // namespace

// ---------------------------------------------------------------------------
// check_once

Sequent claimed_sequent(const Sketch& s, const ObligationSet& set) {
    Sequent claimed(s.theorem);
    for (const auto& [name, f] : s.context) claimed.add_hyp(name, f);
    for (const auto& plan : set.nodes)
        for (const auto& [name, f] : plan.lemma_extensions)
            if (!claimed.hyp(name)) claimed.add_hyp(name, f);
    return claimed;
}

namespace {

void frontier_walk(const SketchNode& n, const std::map<std::string, NodeDischarge>& discharges,
                   std::vector<const SketchNode*>& out) {
    auto it = discharges.find(n.id);
    if (it != discharges.end() && it->second.failure) {
        out.push_back(&n);
        return; // deeper failures are shadowed by this one
    }
    for (const auto& c : n.children) frontier_walk(c, discharges, out);
}

bool subtree_contains(const Sketch& s, const std::string& root_id,
                      const std::set<std::string>& ids) {
    const SketchNode* root = find_node(s, root_id);
    if (!root) return false;
    std::vector<const SketchNode*> stack = {root};
    while (!stack.empty()) {
        const SketchNode* n = stack.back();
        stack.pop_back();
        if (ids.count(n->id)) return true;
        for (const auto& c : n->children) stack.push_back(&c);
    }
    return false;
}

} // namespace

CheckResult check_once(const Sketch& s, const LemmaLibrary* lib, store::ProofStore* store,
                       const RepairConfig& cfg, Transcript& tr, int round,
                       const std::set<std::string>* dirty) {
    CheckResult res;
    res.registry = std::make_shared<kernel::CertRegistry>();

    res.report = validate_sketch(s, lib);
    if (res.report.blocked()) {
        res.input_error = true;
        return res;
    }

    ObligationSet plan = oblig::extract(s, lib);
    res.claimed = claimed_sequent(s, plan);
    auto keys = store::sketch_keys(s, lib);

    std::set<std::string> rediscovered;

    // per-node discharge (cache-aware); nodes are independent
    auto discharge_one = [&](const NodePlan& np) -> NodeDischarge {
        store::CacheKey key = keys.at(np.node_id);
        if (store) {
            if (auto entry = store->lookup(key)) {
                bool reuse = true;
                if (!entry->accepted && dirty && subtree_contains(s, np.node_id, *dirty))
                    reuse = false; // re-attempt failed entries after edits in their subtree
                if (reuse) {
                    if (auto revived = revive_entry(*entry, np, s.sig, *res.registry))
                        return std::move(*revived);
                }
            }
        }
        NodeDischarge d = discharge_node_fresh(np, s.sig, cfg, *res.registry);
        if (store) store->put(entry_for(np, key, s.sig, d));
        return d;
    };

    std::map<std::string, NodeDischarge> discharges;
    if (cfg.jobs > 1) {
        std::vector<std::future<std::pair<std::string, NodeDischarge>>> futures;
        size_t next = 0;
        while (next < plan.nodes.size()) {
            size_t batch = std::min<size_t>(size_t(cfg.jobs), plan.nodes.size() - next);
            futures.clear();
            for (size_t i = 0; i < batch; ++i) {
                const NodePlan& np = plan.nodes[next + i];
                futures.push_back(std::async(std::launch::async, [&np, &discharge_one] {
                    return std::make_pair(np.node_id, discharge_one(np));
                }));
            }
            for (auto& f : futures) {
                auto [id, d] = f.get();
                discharges.emplace(std::move(id), std::move(d));
            }
            next += batch;
        }
    } else {
        for (const NodePlan& np : plan.nodes) discharges.emplace(np.node_id, discharge_one(np));
    }

    // transcript in document order
    for (const NodePlan& np : plan.nodes) {
        const NodeDischarge& d = discharges.at(np.node_id);
        tr.solver_calls += d.solver_calls;
        if (d.cache_hit) ++tr.cache_hits;
        else {
            ++tr.cache_misses;
            rediscovered.insert(np.node_id);
        }
        tr.events.push_back({round, "node", np.node_id,
                             d.failure ? cause_name(d.failure->cause) : "ok", d.cache_hit,
                             !d.failure.has_value()});
        NodeOutcome oc;
        oc.node_id = np.node_id;
        oc.accepted = !d.failure.has_value();
        oc.cache_hit = d.cache_hit;
        oc.failure = d.failure;
        res.nodes.push_back(std::move(oc));
    }
    while (int(tr.rediscovered_per_round.size()) <= round) tr.rediscovered_per_round.push_back({});
    tr.rediscovered_per_round[size_t(round)] = rediscovered;

    // failures, hints, frontier
    for (auto& oc : res.nodes) {
        if (!oc.failure) continue;
        FailureRecord f = *oc.failure;
        if (lib) f.hints = retrieve_hints(f.sequent.goal(), *lib, cfg.hint_count);
        res.failures.push_back(f);
        oc.failure = f;
    }
    std::vector<const SketchNode*> frontier_nodes;
    frontier_walk(s.root, discharges, frontier_nodes);
    for (const SketchNode* n : frontier_nodes)
        for (const auto& f : res.failures)
            if (f.node_id == n->id) res.frontier.push_back(f);

    if (!res.failures.empty()) {
        tr.events.push_back({round, "verdict", "", "rejected", false, false});
        return res;
    }

    // assembly: kernel-structural only
    try {
        Assembler as{s, plan, discharges, s.sig};
        Theorem root = as.assemble(s.root);
        root = as.weaken_to(std::move(root), res.claimed);
        if (!sequent_equal(root.sequent(), res.claimed))
            throw kernel::KernelError("assembled sequent differs from the claimed sequent");
        res.proof_object = kernel::serialize_proof(root);
        res.accepted = true;
        tr.events.push_back({round, "verdict", "", "accepted", false, true});
    } catch (const LogicError& e) {
        FailureRecord f;
        f.node_id = s.root.id;
        f.cause = CauseClass::UnsatisfiedPrecondition;
        f.sequent = res.claimed;
        f.detail = std::string("kernel assembly failed: ") + e.what();
        res.failures.push_back(f);
        res.frontier.push_back(f);
        tr.events.push_back({round, "verdict", "", "rejected", false, false});
    }
    return res;
}

// ---------------------------------------------------------------------------
// Protocol

std::string failure_json(const FailureRecord& f, const LemmaLibrary* lib) {
    nlohmann::ordered_json j;
    j["node_id"] = f.node_id;
    j["cause"] = cause_name(f.cause);
    j["detail"] = f.detail;
    nlohmann::ordered_json ctx = nlohmann::ordered_json::array();
    for (const auto& [name, formula] : f.sequent.hyps())
        ctx.push_back({{"name", name}, {"formula", render(formula)}});
    j["context"] = std::move(ctx);
    j["goal"] = render(f.sequent.goal());
    if (f.has_countermodel) {
        nlohmann::ordered_json cm;
        nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
        for (const auto& [atom, value] : f.countermodel.atoms)
            atoms.push_back({{"atom", atom}, {"value", value}});
        cm["atoms"] = std::move(atoms);
        nlohmann::ordered_json ints = nlohmann::ordered_json::array();
        for (const auto& [name, value] : f.countermodel.ints)
            ints.push_back({{"var", name}, {"value", value}});
        cm["ints"] = std::move(ints);
        j["countermodel"] = std::move(cm);
    }
    nlohmann::ordered_json hints = nlohmann::ordered_json::array();
    for (const auto& id : f.hints) {
        nlohmann::ordered_json h;
        h["id"] = id;
        if (lib) {
            if (const Lemma* l = lib->find(id)) h["formula"] = render(l->formula);
        }
        hints.push_back(std::move(h));
    }
    j["hints"] = std::move(hints);
    return j.dump();
}

std::string build_request(int round, const FailureRecord& f, const std::string& node_source,
                          const LemmaLibrary* lib) {
    nlohmann::ordered_json j;
    j["protocol"] = kProtocolVersion;
    j["round"] = round;
    j["failure"] = nlohmann::ordered_json::parse(failure_json(f, lib));
    j["node_source"] = node_source;
    return j.dump();
}

std::string frame_request(const std::string& payload) {
    return "PROPOSE " + std::to_string(payload.size()) + "\n" + payload;
}

ProposerReply parse_reply(const std::string& framed) {
    ProposerReply r;
    if (framed.rfind("GIVEUP", 0) == 0) {
        r.kind = ProposerReply::Kind::GiveUp;
        return r;
    }
    if (framed.rfind("NODE ", 0) == 0) {
        size_t nl = framed.find('\n');
        if (nl == std::string::npos) {
            r.error = "missing frame terminator";
            return r;
        }
        std::string len_str = framed.substr(5, nl - 5);
        size_t len = 0;
        try {
            len = std::stoul(len_str);
        } catch (const std::exception&) {
            r.error = "bad frame length";
            return r;
        }
        if (framed.size() < nl + 1 + len) {
            r.error = "frame shorter than declared length";
            return r;
        }
        r.kind = ProposerReply::Kind::Node;
        r.node_text = framed.substr(nl + 1, len);
        return r;
    }
    r.error = "unrecognized reply frame";
    return r;
}

// ---------------------------------------------------------------------------
// Repair driver

RunVerdict run(const Sketch& s, Proposer& proposer, const RepairConfig& cfg,
               const LemmaLibrary* lib, store::ProofStore* store) {
    RunVerdict verdict;
    Sketch cur = s;
    Sketch prev = s;
    std::set<std::string> dirty;
    Transcript& tr = verdict.transcript;

    for (int round = 0;; ++round) {
        while (int(tr.dirty_per_round.size()) <= round) tr.dirty_per_round.push_back({});
        if (round > 0) tr.dirty_per_round[size_t(round)] = dirty;

        CheckResult res = check_once(cur, lib, store, cfg, tr, round,
                                     round > 0 ? &dirty : nullptr);
        if (res.input_error) {
            FailureRecord f;
            f.node_id = cur.root.id;
            f.cause = CauseClass::UnsatisfiedPrecondition;
            f.detail = "sketch no longer validates";
            verdict.final_failures = {f};
            verdict.final_sketch = cur;
            return verdict;
        }
        if (res.accepted) {
            verdict.accepted = true;
            verdict.proof_object = res.proof_object;
            verdict.claimed = res.claimed;
            verdict.final_sketch = cur;
            return verdict;
        }
        if (verdict.exchanges >= cfg.max_rounds) {
            verdict.final_failures = res.failures;
            verdict.final_sketch = cur;
            return verdict;
        }

        // one exchange per independent failing subtree, in document order
        prev = cur;
        bool edited = false;
        for (const FailureRecord& f : res.frontier) {
            if (verdict.exchanges >= cfg.max_rounds) break;
            ++verdict.exchanges;
            const SketchNode* failing = find_node(cur, f.node_id);
            if (!failing) continue;
            std::string payload =
                build_request(verdict.exchanges, f, render_node(*failing), lib);
            ProposerReply reply = proposer.propose(payload, cfg.round_timeout_ms);
            if (reply.kind == ProposerReply::Kind::Error) {
                tr.events.push_back({round, "proposer", f.node_id,
                                     "protocol error: " + reply.error, false, false});
                continue; // round consumed, no edit
            }
            if (reply.kind == ProposerReply::Kind::GiveUp) {
                tr.events.push_back({round, "proposer", f.node_id, "giveup", false, false});
                continue;
            }
            // parse the replacement subtree in the splice point's scope
            try {
                auto eigen = eigen_scope_at(cur, f.node_id);
                FreeVarScope scope{true, eigen ? *eigen : std::map<std::string, std::string>{}};
                SketchNode node = parse_node_text(reply.node_text, cur.sig, scope);
                if (node.id != f.node_id) {
                    tr.events.push_back({round, "proposer", f.node_id,
                                         "reply renames the failing node", false, false});
                    continue;
                }
                auto spliced = splice_node(cur, f.node_id, node);
                if (!spliced) continue;
                WellFormedReport report = validate_sketch(*spliced, lib);
                if (report.blocked()) {
                    tr.events.push_back({round, "proposer", f.node_id,
                                         "reply does not validate", false, false});
                    continue;
                }
                cur = std::move(*spliced);
                edited = true;
                tr.events.push_back({round, "proposer", f.node_id, "spliced", false, true});
            } catch (const ParseError& e) {
                tr.events.push_back({round, "proposer", f.node_id,
                                     std::string("reply parse error: ") + e.what(), false,
                                     false});
                continue;
            }
        }
        dirty = edited ? store::dirty_set(prev, cur, lib) : std::set<std::string>{};
    }
}

} // namespace repair
} // namespace psk
