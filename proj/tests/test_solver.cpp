#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "psk/certcheck.hpp"
#include "psk/solver.hpp"
#include "testutil.hpp"

using namespace psk;
using namespace psk::solver;
using psktest::brute_force_lia;
using psktest::brute_force_sat;
using psktest::CnfGen;
using psktest::Gen;
using psktest::test_signature;

TEST_CASE("translate routes") {
    Signature sig = test_signature();

    SUBCASE("propositional hypothesis and disjunction goal") {
        Sequent ob(parse_formula_text("A \\/ B", sig));
        ob.add_hyp("h", parse_formula_text("A", sig));
        Translation t = translate(ob, sig);
        REQUIRE(std::holds_alternative<CnfProblem>(t));
        const auto& p = std::get<CnfProblem>(t);
        // unsat encoding of A /\ ~(A \/ B)
        auto model = brute_force_sat(p);
        CHECK_FALSE(model.has_value());
    }
    SUBCASE("linear goal goes to the LIA route") {
        // x >= 1 -> x >= 0 becomes {x>=1, x<=-1}
        Sequent ob(parse_formula_text("x >= 1 -> x >= 0", sig, {true, {}}));
        Translation t = translate(ob, sig);
        REQUIRE(std::holds_alternative<LiaProblem>(t));
        const auto& p = std::get<LiaProblem>(t);
        REQUIRE(p.var_names.size() == 1);
        CHECK(p.var_names[0] == "x");
        REQUIRE(p.constraints.size() == 2);
        CHECK_FALSE(brute_force_lia(p, -10, 10).has_value());
    }
    SUBCASE("quantified goal is unsupported") {
        Sequent ob(parse_formula_text("forall x:S. P(x)", sig));
        Translation t = translate(ob, sig);
        REQUIRE(std::holds_alternative<Unsupported>(t));
        CHECK(std::get<Unsupported>(t).reason == "quantified-after-flattening");
    }
    SUBCASE("quantified context formulas are dropped") {
        Sequent ob(parse_formula_text("m + 1 >= m", sig));
        ob.add_hyp("ax", parse_formula_text("forall x:S. P(x)", sig));
        Translation t = translate(ob, sig);
        REQUIRE(std::holds_alternative<LiaProblem>(t));
        CHECK(std::get<LiaProblem>(t).dropped_context);
        CHECK_FALSE(brute_force_lia(std::get<LiaProblem>(t), -10, 10).has_value());
    }
    SUBCASE("uninterpreted Int terms are abstracted consistently") {
        // h(m) = m, h(m) + 1 >= 1 share one abstraction variable
        Sequent ob(parse_formula_text("h(m) + 1 >= 1", sig));
        ob.add_hyp("e", parse_formula_text("h(m) = m", sig));
        ob.add_hyp("g", parse_formula_text("m >= 0", sig));
        Translation t = translate(ob, sig);
        REQUIRE(std::holds_alternative<LiaProblem>(t));
        const auto& p = std::get<LiaProblem>(t);
        // roster: @t0 (h(m)) and m
        CHECK(p.var_names.size() == 2);
        CHECK_FALSE(brute_force_lia(p, -10, 10).has_value());
    }
    SUBCASE("translation is deterministic") {
        Sequent ob(parse_formula_text("A -> B -> A", sig));
        Translation t1 = translate(ob, sig);
        Translation t2 = translate(ob, sig);
        CHECK(to_dimacs(std::get<CnfProblem>(t1)) == to_dimacs(std::get<CnfProblem>(t2)));
    }
}

TEST_CASE("solve_sat basics") {
    SUBCASE("contradictory units yield the one-line proof") {
        CnfProblem p;
        p.num_vars = 1;
        p.clauses = {{1}, {-1}};
        SatResult r = solve_sat(p);
        REQUIRE(r.status == SatStatus::Unsat);
        REQUIRE(r.proof.clauses.size() == 1);
        CHECK(r.proof.clauses[0].empty());
        CHECK(accepted(cert::check_rup(p, r.proof, Digest{})));
    }
    SUBCASE("satisfiable problems return a total assignment") {
        CnfProblem p;
        p.num_vars = 2;
        p.clauses = {{1, 2}};
        SatResult r = solve_sat(p);
        REQUIRE(r.status == SatStatus::Sat);
        REQUIRE(r.model.size() == 2);
        CHECK((r.model[0] || r.model[1]));
    }
    SUBCASE("pigeonhole 3 into 2") {
        CnfProblem p = psktest::pigeonhole(3, 2);
        CHECK_FALSE(brute_force_sat(p).has_value()); // oracle confirms unsat
        SatResult r = solve_sat(p);
        REQUIRE(r.status == SatStatus::Unsat);
        CHECK(accepted(cert::check_rup(p, r.proof, Digest{})));
        CHECK(r.proof.clauses.back().empty());
    }
    SUBCASE("rup text round trip") {
        RupProof proof;
        proof.clauses = {{1, -2}, {2}, {}};
        CHECK(rup_from_text(rup_to_text(proof)).clauses == proof.clauses);
    }
}

TEST_CASE("solver vs oracle on random CNFs") {
    CnfGen g(90210);
    int unsat_count = 0;
    for (int i = 0; i < 500; ++i) {
        CnfProblem p = g.random_cnf(8, 12);
        auto oracle = brute_force_sat(p);
        SatResult r = solve_sat(p);
        REQUIRE(r.status != SatStatus::ResourceLimit);
        if (oracle.has_value()) {
            REQUIRE(r.status == SatStatus::Sat);
            // the solver's model must satisfy every clause
            for (const auto& clause : p.clauses) {
                bool sat = false;
                for (int lit : clause)
                    if ((lit > 0) == r.model[size_t(std::abs(lit)) - 1]) { sat = true; break; }
                CHECK(sat);
            }
        } else {
            REQUIRE(r.status == SatStatus::Unsat);
            CHECK(accepted(cert::check_rup(p, r.proof, Digest{})));
            ++unsat_count;
        }
    }
    CHECK(unsat_count > 50); // the generator must exercise both outcomes
}

TEST_CASE("solve_lia basics") {
    auto mk_problem = [](int nvars) {
        LiaProblem p;
        for (int j = 0; j < nvars; ++j) {
            p.var_names.push_back("x" + std::to_string(j));
            p.var_terms.push_back(Term::var("x" + std::to_string(j), kIntSort));
        }
        return p;
    };

    SUBCASE("direct Farkas infeasibility") {
        // x >= 1, x <= 0
        LiaProblem p = mk_problem(1);
        p.constraints.push_back({{1}, LinRel::Ge, 1});
        p.constraints.push_back({{1}, LinRel::Le, 0});
        LiaResult r = solve_lia(p);
        REQUIRE(r.status == LiaStatus::Infeasible);
        REQUIRE(r.cert);
        CHECK_FALSE(r.cert->is_branch);
        CHECK(accepted(cert::check_lia(p, *r.cert, Digest{})));
    }
    SUBCASE("2x = 1 needs a branch") {
        LiaProblem p = mk_problem(1);
        p.constraints.push_back({{2}, LinRel::Eq, 1});
        CHECK_FALSE(brute_force_lia(p, -2, 2).has_value()); // oracle
        LiaResult r = solve_lia(p);
        REQUIRE(r.status == LiaStatus::Infeasible);
        REQUIRE(r.cert);
        CHECK(r.cert->is_branch);
        CHECK(accepted(cert::check_lia(p, *r.cert, Digest{})));
        // round-trip the s-expression
        std::string text = lia_cert_to_text(*r.cert, p);
        auto back = lia_cert_from_text(text, p);
        CHECK(lia_cert_to_text(*back, p) == text);
    }
    SUBCASE("feasible region returns an integer model") {
        LiaProblem p = mk_problem(2);
        p.constraints.push_back({{1, 1}, LinRel::Ge, 0}); // x + y >= 0
        LiaResult r = solve_lia(p);
        REQUIRE(r.status == LiaStatus::Feasible);
        CHECK(r.model.size() == 2);
        CHECK(r.model[0] + r.model[1] >= 0);
    }
    SUBCASE("unbounded fractional descent hits the node budget") {
        // 2x - 2y = 1 has no integer solutions but an unbounded relaxation
        LiaProblem p = mk_problem(2);
        p.constraints.push_back({{2, -2}, LinRel::Eq, 1});
        LiaResult r = solve_lia(p, 50);
        CHECK(r.status == LiaStatus::ResourceLimit);
    }
}

TEST_CASE("lia solver vs oracle on random systems") {
    CnfGen g(271);
    int infeasible_count = 0;
    for (int i = 0; i < 500; ++i) {
        LiaProblem p = g.random_lia(3, 3, 5);
        auto oracle = brute_force_lia(p, -10, 10);
        LiaResult r = solve_lia(p, 20000);
        if (r.status == LiaStatus::ResourceLimit) continue; // unbounded pathologies
        if (oracle.has_value()) {
            // bounded oracle found a model; solver must agree feasible
            REQUIRE(r.status == LiaStatus::Feasible);
        } else if (r.status == LiaStatus::Infeasible) {
            REQUIRE(r.cert);
            CHECK(accepted(cert::check_lia(p, *r.cert, Digest{})));
            ++infeasible_count;
        } else {
            // solver says feasible with a model outside the oracle box; verify
            auto rows = normalized_rows(p);
            for (const auto& row : rows) {
                BigRat lhs = 0;
                for (size_t j = 0; j < r.model.size(); ++j) lhs += row.coeffs[j] * r.model[j];
                CHECK(lhs <= row.bound);
            }
        }
    }
    CHECK(infeasible_count > 50);
}

TEST_CASE("discharge outcomes") {
    Signature sig = test_signature();
    auto seq = [&](const char* goal, std::vector<std::pair<const char*, const char*>> hyps = {}) {
        FreeVarScope scope{true, {}};
        Sequent s(parse_formula_text(goal, sig, scope));
        for (auto& [n, f] : hyps) s.add_hyp(n, parse_formula_text(f, sig, scope));
        return s;
    };

    SUBCASE("propositional tautology is certified") {
        DischargeOutcome out = discharge(seq("A -> A"), sig);
        CHECK(out.kind == DischargeOutcome::Kind::Certified);
        CHECK(out.mode == TranslateMode::Cnf);
        CHECK(accepted(cert::validate_outcome(seq("A -> A"), sig, out)));
    }
    SUBCASE("unprovable linear goal yields a countermodel") {
        DischargeOutcome out = discharge(seq("x >= 1"), sig);
        REQUIRE(out.kind == DischargeOutcome::Kind::Countermodel);
        REQUIRE(out.counter.ints.size() == 1);
        CHECK(out.counter.ints[0].first == "x");
        CHECK(out.counter.ints[0].second <= 0);
    }
    SUBCASE("guarded arithmetic is certified via LIA") {
        DischargeOutcome out = discharge(seq("n + 1 >= 1", {{"g", "n >= 0"}}), sig);
        CHECK(out.kind == DischargeOutcome::Kind::Certified);
        CHECK(out.mode == TranslateMode::Lia);
        CHECK(accepted(cert::validate_outcome(seq("n + 1 >= 1", {{"g", "n >= 0"}}), sig, out)));
        // semantic confirmation over n in [0,3]
        Interpretation in;
        in.int_lo = 0;
        in.int_hi = 3;
        CHECK(sequent_holds(seq("n + 1 >= 1", {{"g", "n >= 0"}}), in, sig));
    }
    SUBCASE("contradictory linear context closes any goal") {
        auto ob = seq("P(c)", {{"a", "m >= 1"}, {"b", "m <= 0"}});
        DischargeOutcome out = discharge(ob, sig);
        CHECK(out.kind == DischargeOutcome::Kind::Certified);
        CHECK(out.mode == TranslateMode::ContextLia);
        CHECK(accepted(cert::validate_outcome(ob, sig, out)));
    }
    SUBCASE("negated disjunctions of linear atoms stay in the LIA fragment") {
        auto ob = seq("m >= 1 \\/ m <= 1");
        DischargeOutcome out = discharge(ob, sig);
        CHECK(out.kind == DischargeOutcome::Kind::Certified);
        CHECK(out.mode == TranslateMode::Lia);
    }
    SUBCASE("mixed reasoning is reported as unsupported") {
        // syntactically distinct arithmetic atoms linked only through theory
        auto ob = seq("m >= 0", {{"h1", "A -> m >= 0"}, {"h2", "~A -> m >= 0"}});
        DischargeOutcome out = discharge(ob, sig);
        CHECK(out.kind == DischargeOutcome::Kind::Unsupported);
        CHECK(out.reason == "mixed-fragment");
    }
    SUBCASE("equality goals need a kernel step") {
        // a != b cannot be expressed in the constraint form, so the solver
        // reports the fragment gap instead of a spurious countermodel
        auto ob = seq("m = m");
        DischargeOutcome out = discharge(ob, sig);
        CHECK(out.kind == DischargeOutcome::Kind::Unsupported);
        CHECK(out.reason == "mixed-fragment");
    }
    SUBCASE("quantified goal is unsupported") {
        DischargeOutcome out = discharge(seq("forall x:S. P(x)"), sig);
        CHECK(out.kind == DischargeOutcome::Kind::Unsupported);
        CHECK(out.reason == "quantified-after-flattening");
    }
    SUBCASE("abstraction countermodels name the offending terms") {
        DischargeOutcome out = discharge(seq("h(m) >= 0"), sig);
        REQUIRE(out.kind == DischargeOutcome::Kind::Countermodel);
        REQUIRE_FALSE(out.counter.ints.empty());
        bool found = false;
        for (auto& [name, v] : out.counter.ints)
            if (name == "h(m)") found = true;
        CHECK(found);
    }
}
