#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "psk/repair.hpp"
#include "testutil.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>

using namespace psk;
using namespace psk::repair;
namespace fs = std::filesystem;

namespace {

const char* kAddZero = R"(
theorem add_zero : forall n:Int. n >= 0 -> plus(n, 0) = n
signature {
  fun plus : Int, Int -> Int;
}
context {
  plus_zero : forall x:Int. plus(0, x) = x;
  plus_succ : forall x:Int. forall y:Int. plus(x + 1, y) = plus(x, y) + 1;
  refl_int : forall x:Int. x = x;
}
proof
node n0 {
  goal : forall n:Int. n >= 0 -> plus(n, 0) = n;
  method : induction(n);
  node n1 {
    goal : plus(0, 0) = 0;
    method : exact(plus_zero, x := 0);
  }
  node n2 {
    goal : plus(n + 1, 0) = n + 1;
    method : rewrite(plus_succ, [0], ltr, x := n, y := 0);
    node n3 {
      goal : plus(n, 0) + 1 = n + 1;
      method : rewrite(hn0.1, [0, 0], ltr);
      node n4 {
        goal : n + 1 = n + 1;
        method : exact(refl_int, x := n + 1);
      }
    }
  }
}
)";

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("psk-repair-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

CheckResult check(const Sketch& s, store::ProofStore* st = nullptr,
                  const LemmaLibrary* lib = nullptr) {
    RepairConfig cfg;
    Transcript tr;
    return check_once(s, lib, st, cfg, tr);
}

} // namespace

TEST_CASE("classification is total and matches the taxonomy") {
    using oblig::ExtractIssue;
    CHECK(classify(ExtractIssue{ExtractIssue::Kind::MissingFact, ""}) ==
          CauseClass::MissingLemma);
    CHECK(classify(ExtractIssue{ExtractIssue::Kind::BadInstantiation, ""}) ==
          CauseClass::FailedInstantiation);
    CHECK(classify(ExtractIssue{ExtractIssue::Kind::BadRewrite, ""}) ==
          CauseClass::InvalidRewrite);
    solver::DischargeOutcome oc;
    oc.kind = solver::DischargeOutcome::Kind::Countermodel;
    CHECK(classify(oc) == CauseClass::UnsatisfiedPrecondition);
    oc.kind = solver::DischargeOutcome::Kind::Unsupported;
    CHECK(classify(oc) == CauseClass::UnsatisfiedPrecondition);
    for (auto c : {CauseClass::MissingLemma, CauseClass::FailedInstantiation,
                   CauseClass::InvalidRewrite, CauseClass::UnsatisfiedPrecondition})
        CHECK(cause_from_name(cause_name(c)) == c);
}

TEST_CASE("check_once accepts the induction flagship and the proof replays") {
    Sketch s = parse_sketch(kAddZero);
    CheckResult res = check(s);
    for (const auto& f : res.failures) MESSAGE(f.node_id, " ", cause_name(f.cause), " ", f.detail);
    REQUIRE(res.accepted);
    CHECK(res.nodes.size() == 5);

    // the emitted proof object replays against the claimed sequent
    kernel::Theorem back =
        kernel::replay(res.proof_object, res.claimed, s.sig, *res.registry);
    CHECK(sequent_equal(back.sequent(), res.claimed));

    // semantic spot-check of the conclusion over n in [0,3]
    psktest::Gen g(7);
    Interpretation in;
    in.int_lo = 0;
    in.int_hi = 3;
    for (int i = 0; i < 100; ++i) {
        in.seed = g.rng();
        CHECK(sequent_holds(back.sequent(), in, s.sig));
    }
}

TEST_CASE("failure records carry context, goal, countermodel and hints") {
    Signature sig;
    sig.add_constant("m", "Int");
    LemmaLibrary lib = LemmaLibrary::parse("bound_low : m >= 10;", sig);
    Sketch s = parse_sketch(R"(
theorem t : m >= 1
signature { const m : Int; }
context { low : m >= 0; }
proof
node n0 { goal : m >= 1; method : hole; }
)");
    RepairConfig cfg;
    Transcript tr;
    CheckResult res = check_once(s, &lib, nullptr, cfg, tr);
    REQUIRE_FALSE(res.accepted);
    REQUIRE(res.failures.size() == 1);
    const FailureRecord& f = res.failures[0];
    CHECK(f.node_id == "n0");
    CHECK(f.cause == CauseClass::UnsatisfiedPrecondition);
    REQUIRE(f.has_countermodel);
    REQUIRE(f.countermodel.ints.size() == 1);
    CHECK(f.countermodel.ints[0].first == "m");
    CHECK(f.countermodel.ints[0].second == 0);
    REQUIRE(f.hints.size() == 1);
    CHECK(f.hints[0] == "bound_low");
    CHECK(f.sequent.hyps().size() == 1);

    // protocol payload round trip
    std::string payload = build_request(1, f, "node n0 { ... }", &lib);
    auto j = nlohmann::json::parse(payload);
    CHECK(j["protocol"] == kProtocolVersion);
    CHECK(j["failure"]["cause"] == "unsatisfied_precondition");
    CHECK(j["failure"]["countermodel"]["ints"][0]["var"] == "m");
    CHECK(j["failure"]["hints"][0]["id"] == "bound_low");
    CHECK(j["node_source"] == "node n0 { ... }");
}

TEST_CASE("frontier reports the first failing node per independent subtree") {
    Sketch s = parse_sketch(R"(
theorem t : A
signature { pred A : ; const m : Int; }
context { }
proof
node n0 { goal : A; method : split(m >= 0);
  node n1 { goal : A; method : hole; }
  node n2 { goal : A; method : hole; }
}
)");
    CheckResult res = check(s);
    REQUIRE_FALSE(res.accepted);
    CHECK(res.failures.size() == 2);
    REQUIRE(res.frontier.size() == 2); // two independent failing subtrees
    CHECK(res.frontier[0].node_id == "n1");
    CHECK(res.frontier[1].node_id == "n2");
}

TEST_CASE("protocol framing") {
    CHECK(frame_request("abc") == "PROPOSE 3\nabc");
    auto node = parse_reply("NODE 5\nhello");
    REQUIRE(node.kind == ProposerReply::Kind::Node);
    CHECK(node.node_text == "hello");
    CHECK(parse_reply("GIVEUP\n").kind == ProposerReply::Kind::GiveUp);
    CHECK(parse_reply("WAT\n").kind == ProposerReply::Kind::Error);
    CHECK(parse_reply("NODE 10\nshort").kind == ProposerReply::Kind::Error);
}

TEST_CASE("repair loop") {
    // mutated flagship: wrong rewrite position in n3
    Sketch broken = parse_sketch(kAddZero);
    {
        SketchNode n3 = *find_node(broken, "n3");
        n3.method.pos.path = {1, 0};
        auto spliced = splice_node(broken, "n3", n3);
        REQUIRE(spliced.has_value());
        broken = *spliced;
    }
    std::string fixed_node = render_node(*find_node(parse_sketch(kAddZero), "n3"), 0);

    SUBCASE("already-valid sketches need no proposer") {
        Sketch s = parse_sketch(kAddZero);
        int calls = 0;
        CallbackProposer proposer([&](const std::string&) {
            ++calls;
            return ProposerReply{ProposerReply::Kind::GiveUp, "", ""};
        });
        RepairConfig cfg;
        RunVerdict v = run(s, proposer, cfg);
        CHECK(v.accepted);
        CHECK(calls == 0);
        CHECK(v.exchanges == 0);
    }
    SUBCASE("a scripted fix repairs in one round with local re-checking") {
        TempDir tmp;
        store::ProofStore st(tmp.path.string());
        std::vector<std::string> asked;
        CallbackProposer proposer([&](const std::string& payload) {
            auto j = nlohmann::json::parse(payload);
            asked.push_back(j["failure"]["node_id"]);
            // the proposer sees exactly the failing node's source
            CHECK(j["node_source"].get<std::string>().rfind("node n3", 0) == 0);
            CHECK(j["failure"]["cause"] == "invalid_rewrite");
            return ProposerReply{ProposerReply::Kind::Node, fixed_node, ""};
        });
        RepairConfig cfg;
        RunVerdict v = run(broken, proposer, cfg, nullptr, &st);
        CHECK(v.accepted);
        CHECK(v.exchanges == 1);
        REQUIRE(asked.size() == 1);
        CHECK(asked[0] == "n3");

        // locality: round 1 re-discharged only nodes inside the dirty set
        // (n4's context chain is untouched by a rewrite-parameter edit, so
        // only n3's key changes)
        REQUIRE(v.transcript.dirty_per_round.size() >= 2);
        const auto& dirty = v.transcript.dirty_per_round[1];
        const auto& redone = v.transcript.rediscovered_per_round[1];
        CHECK(dirty == std::set<std::string>{"n3"});
        for (const auto& id : redone) CHECK(dirty.count(id) == 1);
        // untouched nodes all hit the cache in round 1
        for (const auto& ev : v.transcript.events)
            if (ev.round == 1 && ev.type == "node" && !dirty.count(ev.node_id))
                CHECK(ev.cache_hit);
        // the final proof replays
        CheckResult fresh = check(v.final_sketch);
        REQUIRE(fresh.accepted);
        kernel::Theorem back = kernel::replay(v.proof_object, v.claimed, v.final_sketch.sig,
                                              *fresh.registry);
        CHECK(sequent_equal(back.sequent(), v.claimed));
    }
    SUBCASE("bound enforcement with a no-op proposer") {
        CallbackProposer proposer([&](const std::string& payload) {
            auto j = nlohmann::json::parse(payload);
            return ProposerReply{ProposerReply::Kind::Node, j["node_source"], ""};
        });
        RepairConfig cfg;
        cfg.max_rounds = 1;
        RunVerdict v = run(broken, proposer, cfg);
        CHECK_FALSE(v.accepted);
        CHECK(v.exchanges == 1);
        REQUIRE_FALSE(v.final_failures.empty());
        CHECK(v.final_failures[0].cause == CauseClass::InvalidRewrite);
    }
    SUBCASE("malformed replies consume a round without editing") {
        int calls = 0;
        CallbackProposer proposer([&](const std::string&) {
            ++calls;
            return ProposerReply{ProposerReply::Kind::Node, "this is not a node", ""};
        });
        RepairConfig cfg;
        cfg.max_rounds = 2;
        RunVerdict v = run(broken, proposer, cfg);
        CHECK_FALSE(v.accepted);
        CHECK(calls == 2);
        CHECK(v.exchanges == 2);
    }
    SUBCASE("replies that rename the failing node are protocol violations") {
        CallbackProposer proposer([&](const std::string&) {
            std::string renamed = fixed_node;
            auto at = renamed.find("node n3");
            renamed.replace(at, 7, "node zz");
            return ProposerReply{ProposerReply::Kind::Node, renamed, ""};
        });
        RepairConfig cfg;
        cfg.max_rounds = 1;
        RunVerdict v = run(broken, proposer, cfg);
        CHECK_FALSE(v.accepted);
        bool saw_rename_note = false;
        for (const auto& ev : v.transcript.events)
            if (ev.detail.find("renames") != std::string::npos) saw_rename_note = true;
        CHECK(saw_rename_note);
    }
}

TEST_CASE("subprocess proposer end to end") {
    Sketch broken = parse_sketch(kAddZero);
    {
        SketchNode n4 = *find_node(broken, "n4");
        n4.method.bindings[0].second = Term::var("n", kIntSort); // instance != goal
        auto spliced = splice_node(broken, "n4", n4);
        broken = *spliced;
    }
    TempDir tmp;
    std::string fixed = render_node(*find_node(parse_sketch(kAddZero), "n4"), 0);
    {
        std::ofstream out(tmp.path / "n4.node");
        out << fixed;
    }
    SubprocessProposer proposer(std::string(PSK_PROPOSER_BIN) + " --mode dir --dir " +
                                tmp.path.string());
    RepairConfig cfg;
    RunVerdict v = run(broken, proposer, cfg);
    CHECK(v.accepted);
    CHECK(v.exchanges == 1);

    SUBCASE("giveup mode rejects within the bound") {
        SubprocessProposer giveup(std::string(PSK_PROPOSER_BIN) + " --mode giveup");
        RepairConfig one;
        one.max_rounds = 1;
        RunVerdict rej = run(broken, giveup, one);
        CHECK_FALSE(rej.accepted);
        CHECK(rej.exchanges == 1);
        CHECK(rej.final_failures[0].cause == CauseClass::FailedInstantiation);
    }
    SUBCASE("a non-protocol subprocess is a consumed round") {
        SubprocessProposer cat_proposer("cat");
        RepairConfig one;
        one.max_rounds = 1;
        one.round_timeout_ms = 2000;
        RunVerdict rej = run(broken, cat_proposer, one);
        CHECK_FALSE(rej.accepted);
        CHECK(rej.exchanges == 1);
    }
}

TEST_CASE("warm store prevents repeat solver work") {
    TempDir tmp;
    Sketch s = parse_sketch(R"(
theorem t : forall n:Int. n >= 0 -> plus(n, 0) = n
signature { fun plus : Int, Int -> Int; }
context {
  plus_zero : forall x:Int. plus(0, x) = x;
  plus_succ : forall x:Int. forall y:Int. plus(x + 1, y) = plus(x, y) + 1;
}
proof
node n0 { goal : forall n:Int. n >= 0 -> plus(n, 0) = n; method : induction(n);
  node n1 { goal : plus(0, 0) = 0; method : exact(plus_zero, x := 0); }
  node n2 { goal : plus(n + 1, 0) = n + 1;
    method : rewrite(plus_succ, [0], ltr, x := n, y := 0);
    node n3 { goal : plus(n, 0) + 1 = n + 1;
      method : rewrite(hn0.1, [0, 0], ltr);
      node n4 { goal : n + 1 >= 1; method : hole; }
    }
  }
}
)");
    // n4's hole is solver-provable from the step guard; n3's structural check
    // fails against this child, but caching still covers each node's own
    // obligations and verdicts
    {
        store::ProofStore st(tmp.path.string());
        RepairConfig cfg;
        Transcript tr;
        CheckResult res = check_once(s, nullptr, &st, cfg, tr);
        CHECK(tr.solver_calls > 0);
        CHECK(tr.cache_misses == 5);
    }
    {
        store::ProofStore st(tmp.path.string());
        RepairConfig cfg;
        Transcript tr;
        CheckResult res = check_once(s, nullptr, &st, cfg, tr);
        CHECK(tr.solver_calls == 0);
        CHECK(tr.cache_misses == 0);
        CHECK(tr.cache_hits == 5);
    }
}

TEST_CASE("discharge parallelism produces identical results") {
    Sketch s = parse_sketch(kAddZero);
    RepairConfig seq_cfg;
    RepairConfig par_cfg;
    par_cfg.jobs = 4;
    Transcript tr1, tr2;
    CheckResult r1 = check_once(s, nullptr, nullptr, seq_cfg, tr1);
    CheckResult r2 = check_once(s, nullptr, nullptr, par_cfg, tr2);
    REQUIRE(r1.accepted);
    REQUIRE(r2.accepted);
    CHECK(r1.proof_object == r2.proof_object);
}
