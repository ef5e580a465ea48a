#include "psk/sketch.hpp"

#include <algorithm>
#include <sstream>

namespace psk {

std::string hyp_name(const std::string& node_id, int slot) {
    return "h" + node_id + "." + std::to_string(slot);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Fact references may point at auto-generated hypotheses (`h<node-id>.<slot>`),
// so a reference is IDENT with an optional dotted numeric suffix.
std::string parse_fact_ref(TokenStream& ts) {
    Token t = ts.expect_ident();
    std::string ref = t.text;
    if (ts.accept_symbol(".")) {
        if (ts.peek().kind != TokKind::Int) ts.fail("expected slot number after '.'");
        ref += "." + ts.next().text;
    }
    return ref;
}

Position parse_position(TokenStream& ts) {
    Position p;
    ts.expect_symbol("[");
    if (!ts.accept_symbol("]")) {
        do {
            if (ts.peek().kind != TokKind::Int) ts.fail("expected a child index");
            p.path.push_back(int(ts.next().value));
        } while (ts.accept_symbol(","));
        ts.expect_symbol("]");
    }
    return p;
}

std::vector<std::pair<std::string, Term>> parse_bindings(TokenStream& ts, const Signature& sig,
                                                         FreeVarScope& scope) {
    std::vector<std::pair<std::string, Term>> out;
    do {
        Token n = ts.expect_ident();
        ts.expect_symbol(":=");
        Term t = parse_term(ts, sig, scope);
        for (const auto& [name, existing] : out)
            if (name == n.text)
                throw ParseError("duplicate binding for " + n.text, n.line, n.col);
        out.emplace_back(n.text, std::move(t));
    } while (ts.accept_symbol(","));
    return out;
}

Method parse_method(TokenStream& ts, const Signature& sig, FreeVarScope& scope) {
    Method m;
    if (ts.accept_keyword("rewrite")) {
        m.kind = MethodKind::Rewrite;
        ts.expect_symbol("(");
        m.fact = parse_fact_ref(ts);
        ts.expect_symbol(",");
        m.pos = parse_position(ts);
        ts.expect_symbol(",");
        if (ts.accept_keyword("ltr")) m.ltr = true;
        else if (ts.accept_keyword("rtl")) m.ltr = false;
        else ts.fail("expected ltr or rtl");
        if (ts.accept_symbol(",")) m.bindings = parse_bindings(ts, sig, scope);
        ts.expect_symbol(")");
        return m;
    }
    if (ts.accept_keyword("split")) {
        m.kind = MethodKind::Split;
        ts.expect_symbol("(");
        m.condition = parse_formula(ts, sig, scope);
        ts.expect_symbol(")");
        return m;
    }
    if (ts.accept_keyword("induction")) {
        m.kind = MethodKind::Induction;
        ts.expect_symbol("(");
        m.var = ts.expect_ident().text;
        ts.expect_symbol(")");
        return m;
    }
    if (ts.accept_keyword("contradiction")) {
        m.kind = MethodKind::Contradiction;
        return m;
    }
    if (ts.accept_keyword("exact")) {
        m.kind = MethodKind::Exact;
        ts.expect_symbol("(");
        m.fact = parse_fact_ref(ts);
        if (ts.accept_symbol(",")) m.bindings = parse_bindings(ts, sig, scope);
        ts.expect_symbol(")");
        return m;
    }
    if (ts.accept_keyword("hole")) {
        m.kind = MethodKind::Hole;
        return m;
    }
    ts.fail("expected a method tag");
}

SketchNode parse_node(TokenStream& ts, const Signature& sig, FreeVarScope& scope,
                      std::set<std::string>& seen_ids) {
    SketchNode n;
    Token kw = ts.expect_keyword("node");
    n.line = kw.line;
    n.col = kw.col;
    Token id = ts.expect_ident();
    if (!seen_ids.insert(id.text).second)
        throw ParseError("duplicate node id: " + id.text, id.line, id.col);
    n.id = id.text;
    ts.expect_symbol("{");
    ts.expect_keyword("goal");
    ts.expect_symbol(":");
    n.goal = parse_formula(ts, sig, scope);
    ts.expect_symbol(";");
    ts.expect_keyword("method");
    ts.expect_symbol(":");
    n.method = parse_method(ts, sig, scope);
    ts.expect_symbol(";");
    if (ts.accept_keyword("uses")) {
        ts.expect_symbol(":");
        do {
            n.uses.push_back(parse_fact_ref(ts));
        } while (ts.accept_symbol(","));
        ts.expect_symbol(";");
    }
    while (ts.peek().kind == TokKind::Keyword && ts.peek().text == "node")
        n.children.push_back(parse_node(ts, sig, scope, seen_ids));
    ts.expect_symbol("}");
    return n;
}

} // namespace

Sketch parse_sketch(std::string_view text) {
    std::vector<Token> toks = lex(text);

    // The theorem formula precedes the signature block, so locate and parse
    // the signature first.
    Signature sig;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind == TokKind::Keyword && toks[i].text == "signature") {
            std::vector<Token> sub(toks.begin() + long(i) + 1, toks.end());
            TokenStream sts(std::move(sub));
            sts.expect_symbol("{");
            sig = parse_signature_body(sts);
            sts.expect_symbol("}");
            break;
        }
        if (toks[i].kind == TokKind::Keyword && toks[i].text == "context") break;
    }

    TokenStream ts(std::move(toks));
    Sketch s;
    s.sig = sig;
    ts.expect_keyword("theorem");
    s.name = ts.expect_ident().text;
    ts.expect_symbol(":");
    FreeVarScope closed{false, {}};
    s.theorem = parse_formula(ts, s.sig, closed);

    if (ts.accept_keyword("signature")) {
        // already parsed in the pre-pass; skip the block
        ts.expect_symbol("{");
        (void)parse_signature_body(ts);
        ts.expect_symbol("}");
    }

    ts.expect_keyword("context");
    ts.expect_symbol("{");
    while (!ts.accept_symbol("}")) {
        Token n = ts.expect_ident();
        ts.expect_symbol(":");
        FreeVarScope fact_scope{false, {}};
        Formula f = parse_formula(ts, s.sig, fact_scope);
        ts.expect_symbol(";");
        for (const auto& [name, existing] : s.context)
            if (name == n.text)
                throw ParseError("duplicate context fact: " + n.text, n.line, n.col);
        s.context.emplace_back(n.text, std::move(f));
    }

    ts.expect_keyword("proof");
    FreeVarScope open{true, {}};
    std::set<std::string> ids;
    s.root = parse_node(ts, s.sig, open, ids);
    if (!ts.at_end()) ts.fail("trailing input after proof");
    return s;
}

SketchNode parse_node_text(std::string_view text, const Signature& sig, FreeVarScope scope) {
    TokenStream ts(lex(text));
    scope.allow_free = true;
    std::set<std::string> ids;
    SketchNode n = parse_node(ts, sig, scope, ids);
    if (!ts.at_end()) ts.fail("trailing input after node");
    return n;
}

// ---------------------------------------------------------------------------
// Lemma library

LemmaLibrary LemmaLibrary::parse(std::string_view text, const Signature& sig) {
    LemmaLibrary lib;
    TokenStream ts(lex(text));
    while (!ts.at_end()) {
        Token n = ts.expect_ident();
        ts.expect_symbol(":");
        size_t start = ts.mark();
        try {
            FreeVarScope closed{false, {}};
            Formula f = parse_formula(ts, sig, closed);
            ts.expect_symbol(";");
            if (lib.find(n.text)) throw ParseError("duplicate lemma id: " + n.text, n.line, n.col);
            lib.lemmas_.push_back({n.text, std::move(f)});
        } catch (const ParseError&) {
            // Lemma does not fit this signature: skip to the next ';' and
            // record the id.
            ts.rewind(start);
            while (!ts.at_end() && !ts.accept_symbol(";")) ts.next();
            lib.skipped_.push_back(n.text);
        }
    }
    return lib;
}

const Lemma* LemmaLibrary::find(const std::string& id) const {
    for (const auto& l : lemmas_)
        if (l.id == id) return &l;
    return nullptr;
}

static void symbols_term(const Term& t, std::set<std::string>& out) {
    switch (t.kind()) {
    case TermKind::Const: out.insert(t.name()); return;
    case TermKind::App:
        out.insert(t.name());
        [[fallthrough]];
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul:
        for (const auto& a : t.args()) symbols_term(a, out);
        return;
    default: return;
    }
}

static void symbols_formula(const Formula& f, std::set<std::string>& out) {
    if (f.kind() == FormulaKind::Pred) out.insert(f.name());
    for (const auto& t : f.terms()) symbols_term(t, out);
    for (const auto& s : f.subs()) symbols_formula(s, out);
}

std::set<std::string> symbol_bag(const Formula& f) {
    std::set<std::string> out;
    symbols_formula(f, out);
    return out;
}

std::vector<std::string> retrieve_hints(const Formula& goal, const LemmaLibrary& lib, int k) {
    if (k <= 0 || lib.empty()) return {};
    std::set<std::string> gsyms = symbol_bag(goal);
    // score as a rational: overlap / bag-size, compared cross-multiplied
    struct Scored {
        std::size_t overlap;
        std::size_t size;
        std::string id;
    };
    std::vector<Scored> scored;
    for (const auto& l : lib.lemmas()) {
        std::set<std::string> ls = symbol_bag(l.formula);
        std::size_t ov = 0;
        for (const auto& s : ls)
            if (gsyms.count(s)) ++ov;
        scored.push_back({ov, std::max<std::size_t>(ls.size(), 1), l.id});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        // a.overlap/a.size > b.overlap/b.size, ties by id
        auto lhs = a.overlap * b.size;
        auto rhs = b.overlap * a.size;
        if (lhs != rhs) return lhs > rhs;
        return a.id < b.id;
    });
    std::vector<std::string> out;
    for (const auto& s : scored) {
        if (int(out.size()) >= k) break;
        out.push_back(s.id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

const char* issue_kind_name(IssueKind k) {
    switch (k) {
    case IssueKind::UnknownFact: return "unknown-fact";
    case IssueKind::ShapeViolation: return "shape-violation";
    case IssueKind::SortError: return "sort-error";
    case IssueKind::DuplicateId: return "duplicate-id";
    case IssueKind::CyclicDependency: return "cyclic-dependency";
    case IssueKind::UnresolvedHoleType: return "unresolved-hole-type";
    }
    return "?";
}

bool issue_blocks_extraction(IssueKind k) { return k != IssueKind::UnknownFact; }

namespace {

struct Validator {
    const Sketch& s;
    const LemmaLibrary* lib;
    std::vector<Issue> issues;
    std::set<std::string> ids;

    void add(const std::string& node, IssueKind k, std::string msg) {
        issues.push_back({node, k, std::move(msg)});
    }

    bool resolves(const std::string& ref, const std::set<std::string>& ctx_names) const {
        if (ctx_names.count(ref)) return true;
        return lib && lib->find(ref) != nullptr;
    }

    // Returns the induction body P (consequent with the bound variable free)
    // when the goal has the shape `forall v:Int. v >= 0 -> P(v)`.
    static std::optional<Formula> induction_body(const Formula& goal, const std::string& var) {
        if (goal.empty() || goal.kind() != FormulaKind::Forall) return std::nullopt;
        if (goal.name() != var || goal.sort() != kIntSort) return std::nullopt;
        const Formula& body = goal.subs()[0];
        if (body.kind() != FormulaKind::Imp) return std::nullopt;
        const Formula& guard = body.subs()[0];
        if (guard.kind() != FormulaKind::Cmp || guard.cmp_op() != CmpOp::Ge) return std::nullopt;
        const Term& lhs = guard.terms()[0];
        const Term& rhs = guard.terms()[1];
        if (lhs.kind() != TermKind::Var || lhs.name() != var) return std::nullopt;
        if (rhs.kind() != TermKind::IntLit || rhs.int_value() != 0) return std::nullopt;
        return body.subs()[1];
    }

    void check_closed(const std::string& node_id, const Formula& f,
                      const std::map<std::string, std::string>& eigen, bool is_hole_goal) {
        for (const auto& [v, sort] : free_vars(f)) {
            auto it = eigen.find(v);
            if (it == eigen.end()) {
                add(node_id, is_hole_goal ? IssueKind::UnresolvedHoleType : IssueKind::SortError,
                    "free variable '" + v + "' is not an eigenvariable in scope");
            } else if (it->second != sort) {
                add(node_id, IssueKind::SortError,
                    "eigenvariable '" + v + "' used at sort " + sort + ", bound at " + it->second);
            }
        }
    }

    void walk(const SketchNode& n, std::set<std::string> ctx_names,
              std::map<std::string, std::string> eigen) {
        if (!ids.insert(n.id).second) {
            add(n.id, IssueKind::DuplicateId, "duplicate node id");
            return;
        }
        try {
            std::map<std::string, std::string> bound;
            check_formula(n.goal, s.sig, bound);
        } catch (const LogicError& e) {
            add(n.id, IssueKind::SortError, e.what());
        }
        check_closed(n.id, n.goal, eigen, n.method.kind == MethodKind::Hole);

        // `uses` entries and exact facts must resolve; rewrite facts may
        // instead name a solver-justified equation, so they are not flagged.
        for (const auto& u : n.uses)
            if (!resolves(u, ctx_names))
                add(n.id, IssueKind::UnknownFact, "unknown fact reference: " + u);
        if (n.method.kind == MethodKind::Exact && !resolves(n.method.fact, ctx_names))
            add(n.id, IssueKind::UnknownFact, "unknown fact reference: " + n.method.fact);

        for (const auto& [bname, bterm] : n.method.bindings) {
            try {
                check_term(bterm, s.sig);
            } catch (const LogicError& e) {
                add(n.id, IssueKind::SortError, std::string("binding ") + bname + ": " + e.what());
            }
            for (const auto& [v, sort] : free_vars(bterm))
                if (!eigen.count(v))
                    add(n.id, IssueKind::SortError,
                        "binding " + bname + " uses unknown variable '" + v + "'");
        }

        // resolved library lemmas referenced here become context extensions
        // for this node and its subtree
        auto with_uses = ctx_names;
        for (const auto& u : n.uses)
            if (resolves(u, ctx_names)) with_uses.insert(u);
        if (!n.method.fact.empty() && resolves(n.method.fact, ctx_names))
            with_uses.insert(n.method.fact);

        switch (n.method.kind) {
        case MethodKind::Split: {
            if (n.method.condition.empty()) {
                add(n.id, IssueKind::ShapeViolation, "split is missing its condition");
                break;
            }
            try {
                check_formula(n.method.condition, s.sig);
            } catch (const LogicError& e) {
                add(n.id, IssueKind::SortError, e.what());
            }
            check_closed(n.id, n.method.condition, eigen, false);
            if (n.children.size() != 2) {
                add(n.id, IssueKind::ShapeViolation,
                    "split needs exactly 2 children, found " + std::to_string(n.children.size()));
                break;
            }
            for (int i = 0; i < 2; ++i)
                if (!alpha_equal(n.children[size_t(i)].goal, n.goal))
                    add(n.children[size_t(i)].id, IssueKind::ShapeViolation,
                        "split child goal must equal the parent goal");
            auto left = with_uses, right = with_uses;
            left.insert(hyp_name(n.id, 0));
            right.insert(hyp_name(n.id, 1));
            walk(n.children[0], left, eigen);
            walk(n.children[1], right, eigen);
            return;
        }
        case MethodKind::Induction: {
            auto body = induction_body(n.goal, n.method.var);
            if (!body) {
                add(n.id, IssueKind::ShapeViolation,
                    "induction goal must have the shape forall " + n.method.var +
                        ":Int. " + n.method.var + " >= 0 -> P(" + n.method.var + ")");
                break;
            }
            if (n.children.size() != 2) {
                add(n.id, IssueKind::ShapeViolation,
                    "induction needs exactly 2 children (base, step), found " +
                        std::to_string(n.children.size()));
                break;
            }
            const std::string& v = n.method.var;
            Formula base_goal = substitute(*body, v, Term::int_lit(0));
            Formula step_goal =
                substitute(*body, v, Term::add(Term::var(v, kIntSort), Term::int_lit(1)));
            if (!alpha_equal(n.children[0].goal, base_goal))
                add(n.children[0].id, IssueKind::ShapeViolation,
                    "induction base goal must be " + render(base_goal));
            if (!alpha_equal(n.children[1].goal, step_goal))
                add(n.children[1].id, IssueKind::ShapeViolation,
                    "induction step goal must be " + render(step_goal));
            walk(n.children[0], with_uses, eigen);
            auto step_names = with_uses;
            step_names.insert(hyp_name(n.id, 0));
            step_names.insert(hyp_name(n.id, 1));
            auto step_eigen = eigen;
            step_eigen[v] = kIntSort;
            walk(n.children[1], step_names, step_eigen);
            return;
        }
        case MethodKind::Contradiction: {
            if (n.children.size() != 1) {
                add(n.id, IssueKind::ShapeViolation,
                    "contradiction needs exactly 1 child, found " +
                        std::to_string(n.children.size()));
                break;
            }
            if (n.children[0].goal.empty() || n.children[0].goal.kind() != FormulaKind::Bot)
                add(n.children[0].id, IssueKind::ShapeViolation,
                    "contradiction child goal must be false");
            auto names = with_uses;
            names.insert(hyp_name(n.id, 0));
            walk(n.children[0], names, eigen);
            return;
        }
        case MethodKind::Rewrite: {
            if (n.children.size() != 1) {
                add(n.id, IssueKind::ShapeViolation,
                    "rewrite needs exactly 1 child, found " + std::to_string(n.children.size()));
                break;
            }
            walk(n.children[0], with_uses, eigen);
            return;
        }
        case MethodKind::Exact:
        case MethodKind::Hole:
            if (!n.children.empty())
                add(n.id, IssueKind::ShapeViolation,
                    std::string(n.method.kind == MethodKind::Exact ? "exact" : "hole") +
                        " nodes take no children");
            return;
        }
    }
};

} // namespace

WellFormedReport validate_sketch(const Sketch& s, const LemmaLibrary* lib) {
    Validator v{s, lib, {}, {}};

    if (s.root.goal.empty() || s.theorem.empty()) {
        v.add(s.root.id, IssueKind::ShapeViolation, "missing theorem or root goal");
    } else if (!alpha_equal(s.root.goal, s.theorem)) {
        v.add(s.root.id, IssueKind::ShapeViolation,
              "root goal must be alpha-equivalent to the theorem");
    }
    std::set<std::string> ctx_names;
    for (const auto& [name, f] : s.context) {
        ctx_names.insert(name);
        try {
            check_formula(f, s.sig);
        } catch (const LogicError& e) {
            v.add("", IssueKind::SortError, std::string("context fact ") + name + ": " + e.what());
        }
        if (!free_vars(f).empty())
            v.add("", IssueKind::SortError, "context fact " + name + " must be closed");
    }
    v.walk(s.root, ctx_names, {});

    WellFormedReport report;
    report.issues = std::move(v.issues);
    report.ok = report.issues.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_method(const Method& m) {
    std::ostringstream out;
    switch (m.kind) {
    case MethodKind::Rewrite: {
        out << "rewrite(" << m.fact << ", " << m.pos.to_string() << ", "
            << (m.ltr ? "ltr" : "rtl");
        if (!m.bindings.empty()) {
            out << ", ";
            for (size_t i = 0; i < m.bindings.size(); ++i) {
                if (i) out << ", ";
                out << m.bindings[i].first << " := " << render(m.bindings[i].second);
            }
        }
        out << ")";
        return out.str();
    }
    case MethodKind::Split: return "split(" + render(m.condition) + ")";
    case MethodKind::Induction: return "induction(" + m.var + ")";
    case MethodKind::Contradiction: return "contradiction";
    case MethodKind::Exact: {
        out << "exact(" << m.fact;
        if (!m.bindings.empty()) {
            out << ", ";
            for (size_t i = 0; i < m.bindings.size(); ++i) {
                if (i) out << ", ";
                out << m.bindings[i].first << " := " << render(m.bindings[i].second);
            }
        }
        out << ")";
        return out.str();
    }
    case MethodKind::Hole: return "hole";
    }
    return "?";
}

std::string render_node(const SketchNode& n, int indent) {
    std::string pad(size_t(indent) * 2, ' ');
    std::ostringstream out;
    out << pad << "node " << n.id << " {\n";
    out << pad << "  goal : " << render(n.goal) << ";\n";
    out << pad << "  method : " << render_method(n.method) << ";\n";
    if (!n.uses.empty()) {
        out << pad << "  uses : ";
        for (size_t i = 0; i < n.uses.size(); ++i) {
            if (i) out << ", ";
            out << n.uses[i];
        }
        out << ";\n";
    }
    for (const auto& c : n.children) out << render_node(c, indent + 1);
    out << pad << "}\n";
    return out.str();
}

static bool signature_empty(const Signature& sig) {
    return sig.sorts().empty() && sig.functions().empty() && sig.predicates().empty() &&
           sig.constants().empty();
}

std::string render_sketch(const Sketch& s) {
    std::ostringstream out;
    out << "theorem " << s.name << " : " << render(s.theorem) << "\n";
    if (!signature_empty(s.sig)) {
        out << "signature {\n";
        std::istringstream body(render_signature_body(s.sig));
        std::string line;
        while (std::getline(body, line)) out << "  " << line << "\n";
        out << "}\n";
    }
    out << "context {\n";
    for (const auto& [name, f] : s.context) out << "  " << name << " : " << render(f) << ";\n";
    out << "}\n";
    out << "proof\n";
    out << render_node(s.root, 0);
    return out.str();
}

// ---------------------------------------------------------------------------
// Tree helpers

static const SketchNode* find_in(const SketchNode& n, const std::string& id) {
    if (n.id == id) return &n;
    for (const auto& c : n.children)
        if (const SketchNode* r = find_in(c, id)) return r;
    return nullptr;
}

const SketchNode* find_node(const Sketch& s, const std::string& id) {
    return find_in(s.root, id);
}

static void collect(const SketchNode& n, std::vector<const SketchNode*>& out) {
    out.push_back(&n);
    for (const auto& c : n.children) collect(c, out);
}

std::vector<const SketchNode*> all_nodes(const Sketch& s) {
    std::vector<const SketchNode*> out;
    collect(s.root, out);
    return out;
}

static bool splice_in(SketchNode& n, const std::string& id, const SketchNode& repl) {
    if (n.id == id) {
        n = repl;
        return true;
    }
    for (auto& c : n.children)
        if (splice_in(c, id, repl)) return true;
    return false;
}

std::optional<Sketch> splice_node(const Sketch& s, const std::string& id,
                                  const SketchNode& replacement) {
    Sketch out = s;
    if (!splice_in(out.root, id, replacement)) return std::nullopt;
    return out;
}

static bool eigen_walk(const SketchNode& n, const std::string& id,
                       std::map<std::string, std::string>& eigen) {
    if (n.id == id) return true;
    for (size_t i = 0; i < n.children.size(); ++i) {
        auto saved = eigen;
        if (n.method.kind == MethodKind::Induction && i == 1) eigen[n.method.var] = kIntSort;
        if (eigen_walk(n.children[i], id, eigen)) return true;
        eigen = saved;
    }
    return false;
}

std::optional<std::map<std::string, std::string>> eigen_scope_at(const Sketch& s,
                                                                 const std::string& id) {
    std::map<std::string, std::string> eigen;
    if (!eigen_walk(s.root, id, eigen)) return std::nullopt;
    return eigen;
}

} // namespace psk
