#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "psk/obligations.hpp"
#include "testutil.hpp"

using namespace psk;
using namespace psk::oblig;

namespace {

Sketch parse_ok(const char* text, const LemmaLibrary* lib = nullptr) {
    Sketch s = parse_sketch(text);
    WellFormedReport r = validate_sketch(s, lib);
    REQUIRE_FALSE(r.blocked());
    return s;
}

} // namespace

TEST_CASE("single-hole sketch yields one auto obligation") {
    Sketch s = parse_ok(R"(
theorem t : A -> A
signature { pred A : ; }
context { }
proof
node n0 { goal : A -> A; method : hole; }
)");
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 1);
    CHECK(obs[0]->id == "n0/goal");
    CHECK(obs[0]->route == Route::Auto);
    CHECK(obs[0]->fragment == Fragment::Propositional);
    CHECK(obs[0]->sequent.hyps().empty());
}

TEST_CASE("split produces two child obligations and no structural residue") {
    Sketch s = parse_ok(R"(
theorem t : C
signature { pred C : ; const m : Int; }
context { }
proof
node n0 { goal : C; method : split(m >= 0);
  node n1 { goal : C; method : hole; }
  node n2 { goal : C; method : hole; }
}
)");
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0]->node_id == "n1");
    CHECK(obs[1]->node_id == "n2");
    // child contexts gain the condition and its negation
    REQUIRE(obs[0]->sequent.hyps().size() == 1);
    CHECK(obs[0]->sequent.hyps()[0].first == "hn0.0");
    CHECK(alpha_equal(obs[0]->sequent.hyps()[0].second,
                      parse_formula_text("m >= 0", s.sig)));
    REQUIRE(obs[1]->sequent.hyps().size() == 1);
    CHECK(obs[1]->sequent.hyps()[0].first == "hn0.1");
    CHECK(alpha_equal(obs[1]->sequent.hyps()[0].second,
                      parse_formula_text("~(m >= 0)", s.sig)));
    // the split node itself contributes nothing
    CHECK(set.plan_for("n0")->obligations.empty());
}

TEST_CASE("rewrite with a resolved fact") {
    const char* text = R"(
theorem t : P(plus(n0c, 0))
signature { fun plus : Int, Int -> Int; pred P : Int; const n0c : Int; }
context {
  plus_zero : forall a:Int. plus(a, 0) = a;
  p_holds : P(n0c);
}
proof
node n0 { goal : P(plus(n0c, 0)); method : rewrite(plus_zero, [0], ltr, a := n0c);
  node n1 { goal : P(n0c); method : exact(p_holds); }
}
)";
    Sketch s = parse_ok(text);
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0]->id == "n0/eq");
    CHECK(obs[0]->route == Route::KernelExact);
    CHECK(alpha_equal(obs[0]->sequent.goal(),
                      parse_formula_text("plus(n0c, 0) = n0c", s.sig)));
    CHECK(obs[1]->id == "n1/goal");
    CHECK_FALSE(set.plan_for("n0")->issue.has_value());

    SUBCASE("wrong position is a bad rewrite") {
        Sketch bad = parse_sketch(text);
        SketchNode root = bad.root;
        root.method.pos.path = {0, 0};
        auto spliced = splice_node(bad, "n0", root);
        ObligationSet bs = extract(*spliced);
        REQUIRE(bs.plan_for("n0")->issue.has_value());
        CHECK(bs.plan_for("n0")->issue->kind == ExtractIssue::Kind::BadRewrite);
    }
    SUBCASE("missing binding is a bad instantiation") {
        Sketch bad = parse_sketch(text);
        SketchNode root = bad.root;
        root.method.bindings.clear();
        auto spliced = splice_node(bad, "n0", root);
        ObligationSet bs = extract(*spliced);
        REQUIRE(bs.plan_for("n0")->issue.has_value());
        CHECK(bs.plan_for("n0")->issue->kind == ExtractIssue::Kind::BadInstantiation);
    }
    SUBCASE("unknown exact fact is a missing fact") {
        Sketch bad = parse_sketch(text);
        SketchNode leaf = *find_node(bad, "n1");
        leaf.method.fact = "p_nope";
        auto spliced = splice_node(bad, "n1", leaf);
        ObligationSet bs = extract(*spliced);
        REQUIRE(bs.plan_for("n1")->issue.has_value());
        CHECK(bs.plan_for("n1")->issue->kind == ExtractIssue::Kind::MissingFact);
    }
}

TEST_CASE("rewrite with an unresolved fact becomes a solver equation") {
    Sketch s = parse_sketch(R"(
theorem t : R(m + 0)
signature { pred R : Int; const m : Int; }
context { r_holds : R(m); }
proof
node n0 { goal : R(m + 0); method : rewrite(arith, [0], ltr);
  node n1 { goal : R(m); method : exact(r_holds); }
}
)");
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0]->id == "n0/eq");
    CHECK(obs[0]->route == Route::Auto);
    CHECK(alpha_equal(obs[0]->sequent.goal(), parse_formula_text("m + 0 = m", s.sig)));
    CHECK_FALSE(set.plan_for("n0")->issue.has_value());
}

TEST_CASE("induction extends the step context") {
    Sketch s = parse_ok(R"(
theorem t : forall n:Int. n >= 0 -> n + 1 >= 1
signature { }
context { }
proof
node n0 { goal : forall n:Int. n >= 0 -> n + 1 >= 1; method : induction(n);
  node n1 { goal : 0 + 1 >= 1; method : hole; }
  node n2 { goal : n + 1 + 1 >= 1; method : hole; }
}
)");
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0]->sequent.hyps().empty()); // base keeps the ambient context
    REQUIRE(obs[1]->sequent.hyps().size() == 2);
    CHECK(obs[1]->sequent.hyps()[0].first == "hn0.0");
    CHECK(alpha_equal(obs[1]->sequent.hyps()[0].second,
                      parse_formula_text("n >= 0", s.sig, {true, {}})));
    CHECK(obs[1]->sequent.hyps()[1].first == "hn0.1");
    CHECK(alpha_equal(obs[1]->sequent.hyps()[1].second,
                      parse_formula_text("n + 1 >= 1", s.sig, {true, {}})));
    CHECK(obs[1]->fragment == Fragment::Lia);
}

TEST_CASE("contradiction adds the negated goal") {
    Sketch s = parse_ok(R"(
theorem t : ~(m + 1 <= m)
signature { const m : Int; }
context { }
proof
node n0 { goal : ~(m + 1 <= m); method : contradiction;
  node n1 { goal : false; method : hole; }
}
)");
    ObligationSet set = extract(s);
    auto obs = set.all();
    REQUIRE(obs.size() == 1);
    REQUIRE(obs[0]->sequent.hyps().size() == 1);
    CHECK(alpha_equal(obs[0]->sequent.hyps()[0].second,
                      parse_formula_text("~~(m + 1 <= m)", s.sig)));
}

TEST_CASE("library lemmas referenced by uses extend the local context") {
    Signature sig;
    sig.add_function("h", {"Int"}, "Int");
    sig.add_constant("m", "Int");
    LemmaLibrary lib = LemmaLibrary::parse("lemA : forall x:Int. h(x) >= 0;", sig);
    Sketch s = parse_sketch(R"(
theorem t : h(m) + 1 >= 1
signature { fun h : Int -> Int; const m : Int; }
context { }
proof
node n0 { goal : h(m) + 1 >= 1; method : hole; uses : lemA; }
)");
    REQUIRE(validate_sketch(s, &lib).ok);
    ObligationSet set = extract(s, &lib);
    auto obs = set.all();
    REQUIRE(obs.size() == 1);
    REQUIRE(obs[0]->sequent.hyps().size() == 1);
    CHECK(obs[0]->sequent.hyps()[0].first == "lemA");
    CHECK(set.plan_for("n0")->lemma_extensions.size() == 1);

    // without the library the reference is a missing fact
    ObligationSet dry = extract(s);
    REQUIRE(dry.plan_for("n0")->issue.has_value());
    CHECK(dry.plan_for("n0")->issue->kind == ExtractIssue::Kind::MissingFact);
}

TEST_CASE("extraction is deterministic") {
    Sketch s = parse_ok(R"(
theorem t : C
signature { pred C : ; const m : Int; }
context { base : C; }
proof
node n0 { goal : C; method : split(m >= 0);
  node n1 { goal : C; method : exact(base); }
  node n2 { goal : C; method : hole; }
}
)");
    std::string j1 = obligations_json(extract(s));
    std::string j2 = obligations_json(extract(s));
    CHECK(j1 == j2);
    CHECK(j1.find("\"id\": \"n1/goal\"") != std::string::npos);
    CHECK(j1.find("\"route\": \"kernel-exact\"") != std::string::npos);
    CHECK(j1.find("\"fragment\"") != std::string::npos);
}
