#include "psk/parse.hpp"

#include <cctype>
#include <sstream>

namespace psk {

// ---------------------------------------------------------------------------
// Lexer

bool is_keyword(const std::string& w) {
    static const std::set<std::string> kw = {
        "theorem", "signature", "context", "proof", "node", "goal", "method", "uses",
        "sort", "fun", "pred", "const", "forall", "exists", "rewrite", "split",
        "induction", "contradiction", "exact", "hole", "ltr", "rtl", "true", "false"};
    return kw.count(w) > 0;
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto bump = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') { ++line; col = 1; }
            else ++col;
        }
        i += n;
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { bump(1); continue; }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') bump(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.text = std::string(src.substr(i, j - i));
            t.kind = is_keyword(t.text) ? TokKind::Keyword : TokKind::Ident;
            bump(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = TokKind::Int;
            t.text = std::string(src.substr(i, j - i));
            t.value = std::stoll(t.text);
            bump(j - i);
            out.push_back(std::move(t));
            continue;
        }
        // multi-char symbols first
        static const char* two[] = {"/\\", "\\/", "->", ":=", "<=", ">="};
        bool matched = false;
        for (const char* s : two) {
            if (src.substr(i, 2) == s) {
                t.kind = TokKind::Symbol;
                t.text = s;
                bump(2);
                out.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static const std::string singles = "()[]{},;:.~=<>+-*";
        if (singles.find(c) != std::string::npos) {
            t.kind = TokKind::Symbol;
            t.text = std::string(1, c);
            bump(1);
            out.push_back(std::move(t));
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    Token end;
    end.kind = TokKind::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

bool TokenStream::accept_symbol(std::string_view s) {
    if (peek().kind == TokKind::Symbol && peek().text == s) {
        next();
        return true;
    }
    return false;
}

bool TokenStream::accept_keyword(std::string_view s) {
    if (peek().kind == TokKind::Keyword && peek().text == s) {
        next();
        return true;
    }
    return false;
}

Token TokenStream::expect_symbol(std::string_view s) {
    if (peek().kind != TokKind::Symbol || peek().text != s)
        fail("expected '" + std::string(s) + "'");
    return next();
}

Token TokenStream::expect_keyword(std::string_view s) {
    if (peek().kind != TokKind::Keyword || peek().text != s)
        fail("expected '" + std::string(s) + "'");
    return next();
}

Token TokenStream::expect_ident() {
    if (peek().kind != TokKind::Ident) fail("expected identifier");
    return next();
}

void TokenStream::fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == TokKind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + ", got " + got, t.line, t.col);
}

// ---------------------------------------------------------------------------
// Parser
//
// Free-variable sorts may only become known after the variable has been used
// (e.g. `x = y /\ P(x)`), so parsing runs in two phases: build the tree with
// placeholder sorts while collecting unification constraints, then patch the
// placeholders once all constraints are solved.

namespace {

constexpr const char* kUnknownSort = "?";

struct Inference {
    // union-find over unknown slots; each set may have a resolved sort
    std::vector<int> parent;
    std::vector<std::string> sort; // "" = unresolved
    std::map<std::string, int> var_slot;

    int find(int x) {
        while (parent[size_t(x)] != x) x = parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
        return x;
    }
    int slot_for(const std::string& var) {
        auto it = var_slot.find(var);
        if (it != var_slot.end()) return it->second;
        int id = int(parent.size());
        parent.push_back(id);
        sort.emplace_back();
        var_slot.emplace(var, id);
        return id;
    }
    void constrain(int slot, const std::string& s, const Token& at) {
        int r = find(slot);
        if (sort[size_t(r)].empty()) sort[size_t(r)] = s;
        else if (sort[size_t(r)] != s)
            throw ParseError("conflicting sorts inferred for a free variable: " +
                                 sort[size_t(r)] + " vs " + s,
                             at.line, at.col);
    }
    void merge(int a, int b, const Token& at) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (!sort[size_t(a)].empty() && !sort[size_t(b)].empty() && sort[size_t(a)] != sort[size_t(b)])
            throw ParseError("conflicting sorts inferred for free variables", at.line, at.col);
        if (sort[size_t(a)].empty()) std::swap(a, b);
        parent[size_t(b)] = a;
    }
};

struct Parser {
    TokenStream& ts;
    const Signature& sig;
    FreeVarScope& scope;
    Inference inf;
    std::vector<std::pair<std::string, std::string>> binders; // name, sort

    const std::string* binder_sort(const std::string& name) const {
        for (auto it = binders.rbegin(); it != binders.rend(); ++it)
            if (it->first == name) return &it->second;
        return nullptr;
    }

    // Returns the sort of a term; unknown free variables get kUnknownSort and
    // a slot in the inference table.
    Term term_atom() {
        Token t = ts.peek();
        if (ts.accept_symbol("(")) {
            Term inner = term_expr();
            ts.expect_symbol(")");
            return inner;
        }
        if (t.kind == TokKind::Int) {
            ts.next();
            return Term::int_lit(t.value);
        }
        if (t.kind == TokKind::Symbol && t.text == "-") {
            // negative integer literal
            ts.next();
            if (ts.peek().kind != TokKind::Int) ts.fail("expected integer after unary '-'");
            Token v = ts.next();
            return Term::int_lit(-v.value);
        }
        if (t.kind != TokKind::Ident) ts.fail("expected a term");
        ts.next();
        const std::string& name = t.text;
        if (const FunctionDecl* fd = sig.function(name)) {
            ts.expect_symbol("(");
            std::vector<Term> args;
            if (!ts.accept_symbol(")")) {
                do {
                    Token at = ts.peek();
                    Term a = term_expr();
                    size_t idx = args.size();
                    if (idx >= fd->arg_sorts.size())
                        throw ParseError("too many arguments to " + name, at.line, at.col);
                    unify_term_sort(a, fd->arg_sorts[idx], at);
                    args.push_back(std::move(a));
                } while (ts.accept_symbol(","));
                ts.expect_symbol(")");
            }
            if (args.size() != fd->arg_sorts.size())
                throw ParseError("arity mismatch applying " + name, t.line, t.col);
            return Term::app(name, std::move(args), fd->result_sort);
        }
        if (const std::string* cs = sig.constant(name)) return Term::constant(name, *cs);
        if (const std::string* bs = binder_sort(name)) return Term::var(name, *bs);
        // free variable
        if (!scope.allow_free)
            throw ParseError("unknown identifier (formulas here must be closed): " + name,
                             t.line, t.col);
        auto known = scope.known.find(name);
        if (known != scope.known.end()) return Term::var(name, known->second);
        inf.slot_for(name);
        return Term::var(name, kUnknownSort);
    }

    void unify_term_sort(const Term& a, const std::string& want, const Token& at) {
        if (a.sort() == kUnknownSort) {
            inf.constrain(inf.slot_for(a.name()), want, at);
            return;
        }
        if (a.sort() != want)
            throw ParseError("sort mismatch: expected " + want + ", got " + a.sort(), at.line,
                             at.col);
    }

    // Unify the sorts of two terms (for '='); either may be unknown.
    void unify_terms(const Term& a, const Term& b, const Token& at) {
        bool ua = a.sort() == kUnknownSort, ub = b.sort() == kUnknownSort;
        if (ua && ub) inf.merge(inf.slot_for(a.name()), inf.slot_for(b.name()), at);
        else if (ua) inf.constrain(inf.slot_for(a.name()), b.sort(), at);
        else if (ub) inf.constrain(inf.slot_for(b.name()), a.sort(), at);
        else if (a.sort() != b.sort())
            throw ParseError("equality between different sorts: " + a.sort() + " vs " + b.sort(),
                             at.line, at.col);
    }

    Term term_mul() {
        Token at = ts.peek();
        Term lhs = term_atom();
        while (ts.peek().kind == TokKind::Symbol && ts.peek().text == "*") {
            Token op = ts.next();
            Term rhs = term_atom();
            unify_term_sort(lhs, kIntSort, at);
            unify_term_sort(rhs, kIntSort, op);
            if (lhs.kind() != TermKind::IntLit && rhs.kind() != TermKind::IntLit)
                throw ParseError("non-linear multiplication: one side must be a literal", op.line,
                                 op.col);
            lhs = Term::mul(patch_int(lhs), patch_int(rhs));
        }
        return lhs;
    }

    Term term_expr() {
        Token at = ts.peek();
        Term lhs = term_mul();
        while (ts.peek().kind == TokKind::Symbol &&
               (ts.peek().text == "+" || ts.peek().text == "-")) {
            Token op = ts.next();
            Term rhs = term_mul();
            unify_term_sort(lhs, kIntSort, at);
            unify_term_sort(rhs, kIntSort, op);
            lhs = op.text == "+" ? Term::add(patch_int(lhs), patch_int(rhs))
                                 : Term::sub(patch_int(lhs), patch_int(rhs));
        }
        return lhs;
    }

    // Arithmetic constructors require Int operands; a still-unknown free
    // variable used in arithmetic is Int from this point on.
    Term patch_int(const Term& t) {
        if (t.sort() == kUnknownSort) return Term::var(t.name(), kIntSort);
        return t;
    }

    Formula atom_or_comparison() {
        // Predicate applications are recognized by name; everything else is
        // parsed as a term and must be followed by a comparison operator.
        Token t = ts.peek();
        if (t.kind == TokKind::Ident) {
            if (const auto* pd = sig.predicate(t.text)) {
                ts.next();
                std::vector<Term> args;
                if (!pd->empty()) {
                    ts.expect_symbol("(");
                    do {
                        Token at = ts.peek();
                        Term a = term_expr();
                        size_t idx = args.size();
                        if (idx >= pd->size())
                            throw ParseError("too many arguments to " + t.text, at.line, at.col);
                        unify_term_sort(a, (*pd)[idx], at);
                        if (a.sort() == kUnknownSort) a = Term::var(a.name(), (*pd)[idx]);
                        args.push_back(std::move(a));
                    } while (ts.accept_symbol(","));
                    ts.expect_symbol(")");
                } else if (ts.accept_symbol("(")) {
                    ts.expect_symbol(")");
                }
                if (args.size() != pd->size())
                    throw ParseError("predicate arity mismatch: " + t.text, t.line, t.col);
                return Formula::pred(t.text, std::move(args));
            }
        }
        Token at = ts.peek();
        Term lhs = term_expr();
        Token op = ts.peek();
        if (op.kind != TokKind::Symbol) ts.fail("expected a comparison operator");
        if (op.text == "=") {
            ts.next();
            Term rhs = term_expr();
            unify_terms(lhs, rhs, op);
            return finish_eq(lhs, rhs, op);
        }
        CmpOp c;
        if (op.text == "<=") c = CmpOp::Le;
        else if (op.text == "<") c = CmpOp::Lt;
        else if (op.text == ">=") c = CmpOp::Ge;
        else if (op.text == ">") c = CmpOp::Gt;
        else { ts.fail("expected a comparison operator"); }
        ts.next();
        Term rhs = term_expr();
        unify_term_sort(lhs, kIntSort, at);
        unify_term_sort(rhs, kIntSort, op);
        return Formula::cmp(c, patch_int(lhs), patch_int(rhs));
    }

    // Equality construction deferring unknown-sort variables: if either side
    // is still unknown a placeholder Var survives until the patch pass.
    Formula finish_eq(const Term& lhs, const Term& rhs, const Token& at) {
        Term l = lhs, r = rhs;
        if (l.sort() == kUnknownSort && r.sort() != kUnknownSort) l = Term::var(l.name(), r.sort());
        if (r.sort() == kUnknownSort && l.sort() != kUnknownSort) r = Term::var(r.name(), l.sort());
        // both-unknown: the placeholder sorts agree, patched later from the
        // union-find solution
        (void)at;
        return Formula::eq(l, r);
    }

    Formula formula_atom() {
        Token t = ts.peek();
        if (ts.accept_keyword("true")) return Formula::top();
        if (ts.accept_keyword("false")) return Formula::bot();
        if (ts.accept_symbol("~")) return Formula::negate(formula_atom());
        if (t.kind == TokKind::Keyword && (t.text == "forall" || t.text == "exists"))
            return quantifier();
        if (t.kind == TokKind::Symbol && t.text == "(") {
            // Could be a parenthesized formula or a parenthesized term at the
            // start of a comparison. Try the comparison reading first.
            size_t m = ts.mark();
            try {
                return atom_or_comparison();
            } catch (const ParseError&) {
                ts.rewind(m);
            }
            ts.expect_symbol("(");
            Formula f = formula();
            ts.expect_symbol(")");
            return f;
        }
        return atom_or_comparison();
    }

    Formula quantifier() {
        Token q = ts.next(); // forall/exists
        Token v = ts.expect_ident();
        ts.expect_symbol(":");
        Token s = ts.peek();
        std::string sort;
        if (s.kind == TokKind::Ident) sort = ts.next().text;
        else ts.fail("expected a sort name");
        if (!sig.has_sort(sort)) throw ParseError("unknown sort: " + sort, s.line, s.col);
        ts.expect_symbol(".");
        binders.emplace_back(v.text, sort);
        Formula body = formula();
        binders.pop_back();
        return q.text == "forall" ? Formula::forall(v.text, sort, body)
                                  : Formula::exists(v.text, sort, body);
    }

    Formula formula_and() {
        Formula l = formula_atom();
        if (ts.accept_symbol("/\\")) return Formula::conj(l, formula_and());
        return l;
    }

    Formula formula_or() {
        Formula l = formula_and();
        if (ts.accept_symbol("\\/")) return Formula::disj(l, formula_or());
        return l;
    }

    Formula formula() {
        Token t = ts.peek();
        if (t.kind == TokKind::Keyword && (t.text == "forall" || t.text == "exists"))
            return quantifier();
        Formula l = formula_or();
        if (ts.accept_symbol("->")) return Formula::imp(l, formula());
        return l;
    }
};

} // namespace

namespace {

Term patch_term(const Term& t, const std::map<std::string, std::string>& solved) {
    switch (t.kind()) {
    case TermKind::Var: {
        if (t.sort() == kUnknownSort) {
            auto it = solved.find(t.name());
            if (it == solved.end())
                throw LogicError("cannot infer sort of free variable: " + t.name());
            return Term::var(t.name(), it->second);
        }
        return t;
    }
    case TermKind::Const:
    case TermKind::IntLit:
        return t;
    case TermKind::App: {
        std::vector<Term> args;
        for (const auto& a : t.args()) args.push_back(patch_term(a, solved));
        return Term::app(t.name(), std::move(args), t.sort());
    }
    case TermKind::Add:
        return Term::add(patch_term(t.args()[0], solved), patch_term(t.args()[1], solved));
    case TermKind::Sub:
        return Term::sub(patch_term(t.args()[0], solved), patch_term(t.args()[1], solved));
    case TermKind::Mul:
        return Term::mul(patch_term(t.args()[0], solved), patch_term(t.args()[1], solved));
    }
    throw LogicError("unreachable");
}

Formula patch_formula(const Formula& f, const std::map<std::string, std::string>& solved) {
    switch (f.kind()) {
    case FormulaKind::Pred: {
        std::vector<Term> args;
        for (const auto& t : f.terms()) args.push_back(patch_term(t, solved));
        return Formula::pred(f.name(), std::move(args));
    }
    case FormulaKind::Eq:
        return Formula::eq(patch_term(f.terms()[0], solved), patch_term(f.terms()[1], solved));
    case FormulaKind::Cmp:
        return Formula::cmp(f.cmp_op(), patch_term(f.terms()[0], solved),
                            patch_term(f.terms()[1], solved));
    case FormulaKind::Top:
    case FormulaKind::Bot:
        return f;
    case FormulaKind::Not:
        return Formula::negate(patch_formula(f.subs()[0], solved));
    case FormulaKind::And:
        return Formula::conj(patch_formula(f.subs()[0], solved), patch_formula(f.subs()[1], solved));
    case FormulaKind::Or:
        return Formula::disj(patch_formula(f.subs()[0], solved), patch_formula(f.subs()[1], solved));
    case FormulaKind::Imp:
        return Formula::imp(patch_formula(f.subs()[0], solved), patch_formula(f.subs()[1], solved));
    case FormulaKind::Forall:
        return Formula::forall(f.name(), f.sort(), patch_formula(f.subs()[0], solved));
    case FormulaKind::Exists:
        return Formula::exists(f.name(), f.sort(), patch_formula(f.subs()[0], solved));
    }
    throw LogicError("unreachable");
}

bool term_has_unknown(const Term& t) {
    if (t.kind() == TermKind::Var) return t.sort() == kUnknownSort;
    for (const auto& a : t.args())
        if (term_has_unknown(a)) return true;
    return false;
}

bool formula_has_unknown(const Formula& f) {
    for (const auto& t : f.terms())
        if (term_has_unknown(t)) return true;
    for (const auto& s : f.subs())
        if (formula_has_unknown(s)) return true;
    return false;
}

// Leftover slots from backtracked parse attempts may be unresolved; only
// variables that survive into the final tree must resolve, and patch_term
// reports those.
std::map<std::string, std::string> solve_inference(Parser& p, const Token& at) {
    (void)at;
    std::map<std::string, std::string> solved = p.scope.known;
    for (auto& [name, slot] : p.inf.var_slot) {
        int r = p.inf.find(slot);
        const std::string& s = p.inf.sort[size_t(r)];
        if (!s.empty()) solved[name] = s;
    }
    return solved;
}

} // namespace

Formula parse_formula(TokenStream& ts, const Signature& sig, FreeVarScope& scope) {
    Token at = ts.peek();
    Parser p{ts, sig, scope, {}, {}};
    Formula f = p.formula();
    if (formula_has_unknown(f)) {
        auto solved = solve_inference(p, at);
        try {
            f = patch_formula(f, solved);
        } catch (const LogicError& e) {
            throw ParseError(e.what(), at.line, at.col);
        }
    }
    // export any newly inferred free-variable sorts
    for (auto& [name, slot] : p.inf.var_slot) {
        int r = p.inf.find(slot);
        if (!p.inf.sort[size_t(r)].empty()) scope.known[name] = p.inf.sort[size_t(r)];
    }
    for (const auto& [n, s] : free_vars(f)) scope.known[n] = s;
    return f;
}

Term parse_term(TokenStream& ts, const Signature& sig, FreeVarScope& scope) {
    Token at = ts.peek();
    Parser p{ts, sig, scope, {}, {}};
    Term t = p.term_expr();
    if (term_has_unknown(t)) {
        auto solved = solve_inference(p, at);
        try {
            t = patch_term(t, solved);
        } catch (const LogicError& e) {
            throw ParseError(e.what(), at.line, at.col);
        }
    }
    for (const auto& [n, s] : free_vars(t)) scope.known[n] = s;
    return t;
}

Formula parse_formula_text(std::string_view text, const Signature& sig, FreeVarScope scope) {
    TokenStream ts(lex(text));
    Formula f = parse_formula(ts, sig, scope);
    if (!ts.at_end()) ts.fail("trailing input after formula");
    return f;
}

Term parse_term_text(std::string_view text, const Signature& sig, FreeVarScope scope) {
    TokenStream ts(lex(text));
    Term t = parse_term(ts, sig, scope);
    if (!ts.at_end()) ts.fail("trailing input after term");
    return t;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// term precedence: atom=3, * =2, +/- =1
void render_term_prec(const Term& t, int parent_prec, std::string& out) {
    switch (t.kind()) {
    case TermKind::Var:
    case TermKind::Const:
        out += t.name();
        return;
    case TermKind::IntLit: {
        if (t.int_value() < 0 && parent_prec >= 2) {
            out += "(";
            out += std::to_string(t.int_value());
            out += ")";
        } else {
            out += std::to_string(t.int_value());
        }
        return;
    }
    case TermKind::App: {
        out += t.name();
        out += "(";
        for (size_t i = 0; i < t.args().size(); ++i) {
            if (i) out += ", ";
            render_term_prec(t.args()[i], 0, out);
        }
        out += ")";
        return;
    }
    case TermKind::Add:
    case TermKind::Sub: {
        bool paren = parent_prec > 1;
        if (paren) out += "(";
        render_term_prec(t.args()[0], 1, out);
        out += t.kind() == TermKind::Add ? " + " : " - ";
        render_term_prec(t.args()[1], 2, out); // right operand binds tighter (left assoc)
        if (paren) out += ")";
        return;
    }
    case TermKind::Mul: {
        bool paren = parent_prec > 2;
        if (paren) out += "(";
        render_term_prec(t.args()[0], 2, out);
        out += " * ";
        render_term_prec(t.args()[1], 3, out);
        if (paren) out += ")";
        return;
    }
    }
}

// formula precedence: atom=5, ~=4, /\=3, \/=2, ->=1, quantifier=0
int formula_prec(const Formula& f) {
    switch (f.kind()) {
    case FormulaKind::Forall:
    case FormulaKind::Exists: return 0;
    case FormulaKind::Imp: return 1;
    case FormulaKind::Or: return 2;
    case FormulaKind::And: return 3;
    case FormulaKind::Not: return 4;
    default: return 5;
    }
}

const char* cmp_text(CmpOp op) {
    switch (op) {
    case CmpOp::Le: return "<=";
    case CmpOp::Lt: return "<";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
    }
    return "?";
}

void render_formula_prec(const Formula& f, int parent_prec, std::string& out) {
    int prec = formula_prec(f);
    bool paren = prec < parent_prec;
    if (paren) out += "(";
    switch (f.kind()) {
    case FormulaKind::Pred: {
        out += f.name();
        if (!f.terms().empty()) {
            out += "(";
            for (size_t i = 0; i < f.terms().size(); ++i) {
                if (i) out += ", ";
                render_term_prec(f.terms()[i], 0, out);
            }
            out += ")";
        }
        break;
    }
    case FormulaKind::Eq:
        render_term_prec(f.terms()[0], 0, out);
        out += " = ";
        render_term_prec(f.terms()[1], 0, out);
        break;
    case FormulaKind::Cmp:
        render_term_prec(f.terms()[0], 0, out);
        out += " ";
        out += cmp_text(f.cmp_op());
        out += " ";
        render_term_prec(f.terms()[1], 0, out);
        break;
    case FormulaKind::Top: out += "true"; break;
    case FormulaKind::Bot: out += "false"; break;
    case FormulaKind::Not:
        out += "~";
        render_formula_prec(f.subs()[0], 5, out);
        break;
    case FormulaKind::And:
        render_formula_prec(f.subs()[0], 4, out);
        out += " /\\ ";
        render_formula_prec(f.subs()[1], 3, out); // right-assoc
        break;
    case FormulaKind::Or:
        render_formula_prec(f.subs()[0], 3, out);
        out += " \\/ ";
        render_formula_prec(f.subs()[1], 2, out);
        break;
    case FormulaKind::Imp:
        render_formula_prec(f.subs()[0], 2, out);
        out += " -> ";
        render_formula_prec(f.subs()[1], 1, out);
        break;
    case FormulaKind::Forall:
    case FormulaKind::Exists:
        out += f.kind() == FormulaKind::Forall ? "forall " : "exists ";
        out += f.name();
        out += ":";
        out += f.sort();
        out += ". ";
        render_formula_prec(f.subs()[0], 0, out);
        break;
    }
    if (paren) out += ")";
}

} // namespace

std::string render(const Term& t) {
    std::string out;
    render_term_prec(t, 0, out);
    return out;
}

std::string render(const Formula& f) {
    std::string out;
    render_formula_prec(f, 0, out);
    return out;
}

std::string render(const Position& p) { return p.to_string(); }

std::string render_signature_body(const Signature& sig) {
    std::ostringstream out;
    for (const auto& s : sig.sorts()) out << "sort " << s << ";\n";
    for (const auto& [name, d] : sig.functions()) {
        out << "fun " << name << " : ";
        for (size_t i = 0; i < d.arg_sorts.size(); ++i) {
            if (i) out << ", ";
            out << d.arg_sorts[i];
        }
        out << " -> " << d.result_sort << ";\n";
    }
    for (const auto& [name, args] : sig.predicates()) {
        out << "pred " << name << " :";
        for (size_t i = 0; i < args.size(); ++i) {
            out << (i ? ", " : " ") << args[i];
        }
        out << ";\n";
    }
    for (const auto& [name, sort] : sig.constants())
        out << "const " << name << " : " << sort << ";\n";
    return out.str();
}

Signature parse_signature_body(TokenStream& ts) {
    Signature sig;
    auto parse_sort_name = [&]() {
        const Token& t = ts.peek();
        if (t.kind != TokKind::Ident) ts.fail("expected a sort name");
        return ts.next().text;
    };
    while (true) {
        if (ts.accept_keyword("sort")) {
            Token n = ts.expect_ident();
            ts.expect_symbol(";");
            sig.add_sort(n.text);
        } else if (ts.accept_keyword("fun")) {
            Token n = ts.expect_ident();
            ts.expect_symbol(":");
            std::vector<std::string> args;
            args.push_back(parse_sort_name());
            while (ts.accept_symbol(",")) args.push_back(parse_sort_name());
            ts.expect_symbol("->");
            std::string res = parse_sort_name();
            ts.expect_symbol(";");
            sig.add_function(n.text, std::move(args), res);
        } else if (ts.accept_keyword("pred")) {
            // nullary predicates (propositional atoms) are written `pred A : ;`
            Token n = ts.expect_ident();
            ts.expect_symbol(":");
            std::vector<std::string> args;
            if (!(ts.peek().kind == TokKind::Symbol && ts.peek().text == ";")) {
                args.push_back(parse_sort_name());
                while (ts.accept_symbol(",")) args.push_back(parse_sort_name());
            }
            ts.expect_symbol(";");
            sig.add_predicate(n.text, std::move(args));
        } else if (ts.accept_keyword("const")) {
            Token n = ts.expect_ident();
            ts.expect_symbol(":");
            std::string s = parse_sort_name();
            ts.expect_symbol(";");
            sig.add_constant(n.text, s);
        } else {
            break;
        }
    }
    return sig;
}

} // namespace psk
