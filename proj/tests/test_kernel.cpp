#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "derivation_gen.hpp"
#include "psk/kernel.hpp"
#include "testutil.hpp"

#include <type_traits>

using namespace psk;
using namespace psk::kernel;
using psktest::DerivationGen;
using psktest::Gen;
using psktest::test_signature;

namespace {

Theorem assume(const std::string& name, const Formula& f, const Signature& sig) {
    RuleParams p;
    p.name = name;
    p.formula = f;
    return apply_rule(RuleKind::Assume, {}, p, sig);
}

} // namespace

// The module boundary exposes no way to build a Theorem from raw parts.
static_assert(!std::is_constructible_v<Theorem, Sequent>);
static_assert(!std::is_constructible_v<Theorem, Sequent, std::shared_ptr<const ProofNode>>);
static_assert(!std::is_default_constructible_v<Theorem>);
static_assert(!std::is_constructible_v<AcceptanceToken, Digest, Digest, std::string>);
static_assert(!std::is_default_constructible_v<AcceptanceToken>);

TEST_CASE("propositional rules") {
    Signature sig = test_signature();
    Formula A = parse_formula_text("A", sig);
    Formula B = parse_formula_text("B", sig);

    SUBCASE("and_i merges contexts") {
        Theorem ta = assume("h1", A, sig);
        Theorem tb = assume("h2", B, sig);
        Theorem t = apply_rule(RuleKind::AndI, {ta, tb}, {}, sig);
        CHECK(alpha_equal(t.sequent().goal(), parse_formula_text("A /\\ B", sig)));
        CHECK(t.sequent().hyps().size() == 2);
    }
    SUBCASE("hypothesis name clash with different formulas is rejected") {
        Theorem ta = assume("h", A, sig);
        Theorem tb = assume("h", B, sig);
        CHECK_THROWS_AS(apply_rule(RuleKind::AndI, {ta, tb}, {}, sig), KernelError);
    }
    SUBCASE("imp_i discharges by name, vacuous allowed") {
        Theorem ta = assume("h", A, sig);
        RuleParams p;
        p.name = "h";
        p.formula = A;
        Theorem t = apply_rule(RuleKind::ImpI, {ta}, p, sig);
        CHECK(t.sequent().hyps().empty());
        CHECK(alpha_equal(t.sequent().goal(), parse_formula_text("A -> A", sig)));

        RuleParams v;
        v.name = "nope";
        v.formula = B;
        Theorem tv = apply_rule(RuleKind::ImpI, {ta}, v, sig);
        CHECK(tv.sequent().hyps().size() == 1);
        CHECK(alpha_equal(tv.sequent().goal(), parse_formula_text("B -> A", sig)));
    }
    SUBCASE("or_e discharges both cases") {
        Theorem td = assume("hd", parse_formula_text("A \\/ B", sig), sig);
        // left case: from A conclude A \/ B ... use a common conclusion C = A \/ B
        RuleParams pl;
        pl.formula = B;
        Theorem tl = apply_rule(RuleKind::OrIL, {assume("hl", A, sig)}, pl, sig);
        RuleParams pr;
        pr.formula = A;
        Theorem tr = apply_rule(RuleKind::OrIR, {assume("hr", B, sig)}, pr, sig);
        RuleParams p;
        p.name = "hl";
        p.name2 = "hr";
        Theorem t = apply_rule(RuleKind::OrE, {td, tl, tr}, p, sig);
        CHECK(t.sequent().hyps().size() == 1); // only hd remains
        CHECK(alpha_equal(t.sequent().goal(), parse_formula_text("A \\/ B", sig)));
    }
    SUBCASE("raa gives classical reasoning") {
        // from {h: ~A} |- falsum conclude |- A
        Theorem tn = assume("h", parse_formula_text("~A", sig), sig);
        Theorem ta = assume("k", A, sig);
        Theorem bot = apply_rule(RuleKind::NotE, {tn, ta}, {}, sig);
        RuleParams p;
        p.name = "h";
        p.formula = A;
        Theorem t = apply_rule(RuleKind::Raa, {bot}, p, sig);
        CHECK(t.sequent().hyps().size() == 1); // k: A remains
        CHECK(alpha_equal(t.sequent().goal(), A));
    }
}

TEST_CASE("equality rules") {
    Signature sig = test_signature();

    SUBCASE("subst_eq rewrites at a position") {
        Theorem eq = assume("he", parse_formula_text("f(c) = d", sig), sig);
        Theorem target = assume("ht", parse_formula_text("P(f(c))", sig), sig);
        RuleParams p;
        p.pos.path = {0};
        p.ltr = true;
        Theorem t = apply_rule(RuleKind::SubstEq, {eq, target}, p, sig);
        CHECK(alpha_equal(t.sequent().goal(), parse_formula_text("P(d)", sig)));

        // right occurrence only
        Theorem both = assume("hb", parse_formula_text("f(c) = f(c)", sig), sig);
        RuleParams p2;
        p2.pos.path = {1};
        p2.ltr = true;
        Theorem t2 = apply_rule(RuleKind::SubstEq, {eq, both}, p2, sig);
        CHECK(alpha_equal(t2.sequent().goal(), parse_formula_text("f(c) = d", sig)));
    }
    SUBCASE("subst_eq mismatch is reported") {
        Theorem eq = assume("he", parse_formula_text("f(c) = d", sig), sig);
        Theorem target = assume("ht", parse_formula_text("P(d)", sig), sig);
        RuleParams p;
        p.pos.path = {0};
        p.ltr = true;
        CHECK_THROWS_WITH_AS(apply_rule(RuleKind::SubstEq, {eq, target}, p, sig),
                             doctest::Contains("does not match"), KernelError);
    }
    SUBCASE("cong builds one argument position") {
        Theorem eq = assume("he", parse_formula_text("c = d", sig), sig);
        RuleParams p;
        p.fn = "g";
        p.index = 1;
        p.terms = {Term::constant("c", sig)};
        Theorem t = apply_rule(RuleKind::Cong, {eq}, p, sig);
        CHECK(alpha_equal(t.sequent().goal(), parse_formula_text("g(c, c) = g(c, d)", sig)));
    }
    SUBCASE("refl sym trans") {
        RuleParams p;
        p.term = parse_term_text("h(m)", sig);
        Theorem r = apply_rule(RuleKind::Refl, {}, p, sig);
        CHECK(alpha_equal(r.sequent().goal(), parse_formula_text("h(m) = h(m)", sig)));
        Theorem s = apply_rule(RuleKind::Sym, {r}, {}, sig);
        Theorem t = apply_rule(RuleKind::Trans, {r, s}, {}, sig);
        CHECK(alpha_equal(t.sequent().goal(), r.sequent().goal()));
    }
}

TEST_CASE("quantifier rules") {
    Signature sig = test_signature();

    SUBCASE("forall_e with explicit instantiation") {
        Theorem t = assume("h", parse_formula_text("forall x:S. P(x)", sig), sig);
        RuleParams p;
        p.term = Term::constant("c", sig);
        Theorem out = apply_rule(RuleKind::ForallE, {t}, p, sig);
        CHECK(alpha_equal(out.sequent().goal(), parse_formula_text("P(c)", sig)));
        RuleParams bad;
        bad.term = Term::int_lit(0);
        CHECK_THROWS_AS(apply_rule(RuleKind::ForallE, {t}, bad, sig), KernelError);
    }
    SUBCASE("forall_i enforces eigenvariable freshness") {
        // premise: {h: P(a)} |- P(a); a occurs in the context
        Formula pa = parse_formula_text("P(a)", sig, {true, {{"a", "S"}}});
        Theorem t = assume("h", pa, sig);
        RuleParams p;
        p.name = "a";
        p.name2 = "x";
        p.sort = "S";
        CHECK_THROWS_WITH_AS(apply_rule(RuleKind::ForallI, {t}, p, sig),
                             doctest::Contains("eigenvariable-not-fresh"), KernelError);

        // after discharging the hypothesis the eigenvariable is fresh
        RuleParams pi;
        pi.name = "h";
        pi.formula = pa;
        Theorem imp = apply_rule(RuleKind::ImpI, {t}, pi, sig);
        Theorem out = apply_rule(RuleKind::ForallI, {imp}, p, sig);
        CHECK(alpha_equal(out.sequent().goal(),
                          parse_formula_text("forall x:S. P(x) -> P(x)", sig)));
    }
    SUBCASE("exists_i and exists_e") {
        Theorem pc = assume("h", parse_formula_text("P(c)", sig), sig);
        RuleParams pi;
        pi.formula = parse_formula_text("exists x:S. P(x)", sig);
        pi.term = Term::constant("c", sig);
        Theorem ex = apply_rule(RuleKind::ExistsI, {pc}, pi, sig);
        CHECK(alpha_equal(ex.sequent().goal(), parse_formula_text("exists x:S. P(x)", sig)));

        // case proof: {hc: P(a)} |- exists x. P(x), eigen a
        Formula pa = parse_formula_text("P(a)", sig, {true, {{"a", "S"}}});
        Theorem case_t = apply_rule(
            RuleKind::ExistsI, {assume("hc", pa, sig)},
            [&] {
                RuleParams q;
                q.formula = parse_formula_text("exists x:S. P(x)", sig);
                q.term = Term::var("a", "S");
                return q;
            }(),
            sig);
        RuleParams pe;
        pe.name = "a";
        pe.name2 = "hc";
        Theorem out = apply_rule(RuleKind::ExistsE, {ex, case_t}, pe, sig);
        CHECK(alpha_equal(out.sequent().goal(), parse_formula_text("exists x:S. P(x)", sig)));
    }
}

TEST_CASE("integer induction rule") {
    Signature sig;
    sig.add_function("plus", {"Int", "Int"}, "Int");
    Formula body = parse_formula_text("plus(n, 0) = n", sig, {true, {{"n", "Int"}}});
    Formula ax0 = parse_formula_text("forall x:Int. plus(0, x) = x", sig);
    Formula axs =
        parse_formula_text("forall x:Int. forall y:Int. plus(x + 1, y) = plus(x, y) + 1", sig);
    Term n = Term::var("n", kIntSort);
    Formula guard = Formula::cmp(CmpOp::Ge, n, Term::int_lit(0));

    // base: instantiate plus(0, x) = x at 0
    RuleParams fe0;
    fe0.term = Term::int_lit(0);
    Theorem base = apply_rule(RuleKind::ForallE, {assume("ax0", ax0, sig)}, fe0, sig);

    // step: plus(n+1, 0) = plus(n, 0) + 1 by the axiom, then rewrite with the
    // induction hypothesis and chain
    RuleParams fen;
    fen.term = n;
    Theorem e1 = apply_rule(RuleKind::ForallE, {assume("axs", axs, sig)}, fen, sig);
    Theorem e1b = apply_rule(RuleKind::ForallE, {e1}, fe0, sig);
    Theorem ih = assume("h1", body, sig);
    RuleParams refl_p;
    refl_p.term = Term::add(Term::app("plus", {n, Term::int_lit(0)}, sig), Term::int_lit(1));
    Theorem r = apply_rule(RuleKind::Refl, {}, refl_p, sig);
    RuleParams se;
    se.pos.path = {1, 0};
    se.ltr = true;
    Theorem e2 = apply_rule(RuleKind::SubstEq, {ih, r}, se, sig);
    Theorem chained = apply_rule(RuleKind::Trans, {e1b, e2}, {}, sig);
    RuleParams w1;
    w1.name = "h0";
    w1.formula = guard;
    Theorem step = apply_rule(RuleKind::Weaken, {chained}, w1, sig);

    RuleParams p;
    p.name = "n";
    p.name2 = "n";
    p.name3 = "h0,h1";
    p.formula = body;

    SUBCASE("conclusion shape") {
        Theorem t = apply_rule(RuleKind::InductionInt, {base, step}, p, sig);
        CHECK(alpha_equal(t.sequent().goal(),
                          parse_formula_text("forall n:Int. n >= 0 -> plus(n, 0) = n", sig)));
        // h0/h1 discharged; ax0 and axs remain
        REQUIRE(t.sequent().hyps().size() == 2);
        CHECK(t.sequent().hyp("ax0") != nullptr);
        CHECK(t.sequent().hyp("axs") != nullptr);

        // semantic check over n in [0,3]: any interpretation satisfying the
        // remaining assumptions satisfies the conclusion
        Gen g(42);
        Interpretation in;
        in.int_lo = 0;
        in.int_hi = 3;
        int satisfying = 0;
        for (int i = 0; i < 300; ++i) {
            in.seed = g.rng();
            if (sequent_holds(t.sequent(), in, sig)) ++satisfying;
        }
        CHECK(satisfying == 300);
    }
    SUBCASE("base premise with P(1) is a shape mismatch") {
        Theorem bad_base = assume("bad", substitute(body, "n", Term::int_lit(1)), sig);
        CHECK_THROWS_WITH_AS(apply_rule(RuleKind::InductionInt, {bad_base, step}, p, sig),
                             doctest::Contains("base premise"), KernelError);
    }
    SUBCASE("missing step hypotheses") {
        CHECK_THROWS_AS(apply_rule(RuleKind::InductionInt, {base, chained}, p, sig),
                        KernelError);
    }
    SUBCASE("leaking an open hypothesis past induction is rejected") {
        // context containing the induction variable must not survive
        RuleParams wbad;
        wbad.name = "leak";
        wbad.formula = substitute(body, "n", Term::add(n, Term::int_lit(1)));
        Theorem leaky = apply_rule(RuleKind::Weaken, {step}, wbad, sig);
        CHECK_THROWS_WITH_AS(apply_rule(RuleKind::InductionInt, {base, leaky}, p, sig),
                             doctest::Contains("eigenvariable-not-fresh"), KernelError);
    }
}

TEST_CASE("serialize and replay") {
    Signature sig = test_signature();
    CertRegistry registry;

    SUBCASE("replay of a stored and_i proof") {
        Theorem ta = assume("h1", parse_formula_text("A", sig), sig);
        Theorem tb = assume("h2", parse_formula_text("B", sig), sig);
        Theorem t = apply_rule(RuleKind::AndI, {ta, tb}, {}, sig);
        std::string po = serialize_proof(t);
        Theorem back = replay(po, t.sequent(), sig, registry);
        CHECK(sequent_equal(back.sequent(), t.sequent()));
        CHECK(serialize_proof(back) == po); // replay . record = identity
    }
    SUBCASE("corrupted rule id fails at that line") {
        Theorem ta = assume("h1", parse_formula_text("A", sig), sig);
        RuleParams p;
        p.name = "h1";
        p.formula = parse_formula_text("A", sig);
        Theorem t = apply_rule(RuleKind::ImpI, {ta}, p, sig);
        std::string po = serialize_proof(t);
        std::string corrupted = po;
        size_t at = corrupted.find("imp_i");
        REQUIRE(at != std::string::npos);
        corrupted.replace(at, 5, "and_i");
        CHECK_THROWS_WITH_AS(replay(corrupted, t.sequent(), sig, registry),
                             doctest::Contains("line 3"), KernelError);
    }
    SUBCASE("certified leaf requires a registry entry") {
        std::string po = "PROOFOBJ v1 " + std::string(64, '0') + "\n0 CERT " +
                         std::string(64, 'a') + "\n";
        Sequent claimed(parse_formula_text("A", sig));
        CHECK_THROWS_WITH_AS(replay(po, claimed, sig, registry),
                             doctest::Contains("unknown certificate digest"), KernelError);
    }
    SUBCASE("conclusion mismatch is rejected") {
        Theorem ta = assume("h1", parse_formula_text("A", sig), sig);
        std::string po = serialize_proof(ta);
        Sequent other(parse_formula_text("B", sig));
        CHECK_THROWS_WITH_AS(replay(po, other, sig, registry),
                             doctest::Contains("conclusion mismatch"), KernelError);
    }
    SUBCASE("random derivations round trip") {
        DerivationGen dg(314159);
        for (int i = 0; i < 60; ++i) {
            Theorem t = dg.random_derivation(40);
            std::string po = serialize_proof(t);
            Theorem back = replay(po, t.sequent(), dg.sig, registry);
            CHECK(sequent_equal(back.sequent(), t.sequent()));
        }
    }
}

TEST_CASE("kernel soundness on random derivations") {
    // the acceptance suite runs the full 1000-derivation version
    DerivationGen dg(271828);
    Gen ig(161803);
    int total_interps = 0;
    for (int i = 0; i < 150; ++i) {
        Theorem t = dg.random_derivation(30);
        for (int j = 0; j < 8; ++j) {
            Interpretation in = ig.random_interpretation(1 + ig.pick(3));
            CHECK(sequent_holds(t.sequent(), in, dg.sig));
            ++total_interps;
        }
    }
    CHECK(total_interps == 150 * 8);
}
