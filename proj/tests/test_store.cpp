#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "psk/store.hpp"
#include "testutil.hpp"

#include <filesystem>
#include <fstream>

using namespace psk;
using namespace psk::store;
namespace fs = std::filesystem;

namespace {

const char* kSketchText = R"(
theorem t : C
signature { pred C : ; const m : Int; }
context { base : C; }
proof
node n0 { goal : C; method : split(m >= 0);
  node n1 { goal : C; method : exact(base); }
  node n2 { goal : C; method : hole; }
}
)";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("psk-store-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("node keys") {
    Sketch s = parse_sketch(kSketchText);

    SUBCASE("same inputs give equal keys") {
        auto k1 = sketch_keys(s);
        auto k2 = sketch_keys(s);
        CHECK(k1 == k2);
        CHECK(k1.size() == 3);
    }
    SUBCASE("hint order does not matter") {
        const SketchNode* n = find_node(s, "n2");
        Digest ctx = digest_bytes("test", "ctx");
        CHECK(node_key(*n, ctx, {"a", "b"}) == node_key(*n, ctx, {"b", "a"}));
        CHECK_FALSE(node_key(*n, ctx, {"a"}) == node_key(*n, ctx, {"a", "b"}));
    }
    SUBCASE("goal alpha-renaming keeps keys") {
        Signature sig = psktest::test_signature();
        SketchNode a;
        a.id = "x";
        a.goal = parse_formula_text("forall x:S. P(x)", sig);
        a.method.kind = MethodKind::Hole;
        SketchNode b = a;
        b.goal = parse_formula_text("forall y:S. P(y)", sig);
        Digest ctx = digest_bytes("test", "ctx");
        CHECK(node_key(a, ctx, {}) == node_key(b, ctx, {}));
    }
    SUBCASE("editing a split condition dirties the node and both subtrees") {
        Sketch edited = parse_sketch(kSketchText);
        SketchNode root = edited.root;
        root.method.condition = parse_formula_text("m >= 1", edited.sig);
        auto spliced = splice_node(edited, "n0", root);
        auto dirty = dirty_set(s, *spliced);
        CHECK(dirty == std::set<std::string>{"n0", "n1", "n2"});
    }
    SUBCASE("editing a leaf dirties only that leaf") {
        Sketch edited = parse_sketch(kSketchText);
        SketchNode leaf = *find_node(edited, "n2");
        leaf.uses.push_back("base");
        auto spliced = splice_node(edited, "n2", leaf);
        auto dirty = dirty_set(s, *spliced);
        CHECK(dirty == std::set<std::string>{"n2"});
    }
    SUBCASE("identical sketches have an empty dirty set") {
        CHECK(dirty_set(s, s).empty());
    }
    SUBCASE("context fact edits invalidate everything") {
        Sketch edited = parse_sketch(kSketchText);
        edited.context[0].second = parse_formula_text("C \\/ C", edited.sig);
        auto dirty = dirty_set(s, edited);
        CHECK(dirty.size() == 3);
    }
    SUBCASE("library lemma content participates in keys") {
        Signature sig;
        sig.add_predicate("C", {});
        LemmaLibrary lib1 = LemmaLibrary::parse("lemA : C;", sig);
        LemmaLibrary lib2 = LemmaLibrary::parse("lemA : C \\/ C;", sig);
        Sketch sk = parse_sketch(R"(
theorem t : C
signature { pred C : ; }
context { }
proof
node n0 { goal : C; method : exact(lemA); }
)");
        auto k1 = sketch_keys(sk, &lib1);
        auto k2 = sketch_keys(sk, &lib2);
        CHECK_FALSE(k1.at("n0") == k2.at("n0"));
    }
}

TEST_CASE("store round trip and corruption handling") {
    TempDir tmp;

    CacheEntry e;
    e.key = digest_bytes("test", "key1");
    e.node_id = "n0";
    e.accepted = true;
    e.created = "2026-01-01T00:00:00Z";
    e.signature_body = "pred C : ;\n";
    ObligationRecord ob;
    ob.slot = "goal";
    ob.context = {{"h", "C"}};
    ob.goal = "C";
    ob.vars = {};
    ob.proof_text = "PROOFOBJ v1 00\n0 assume h f\"C\"\n";
    ob.certs.push_back({"cnf", "aa", "bb", "0\n"});
    e.obligations.push_back(ob);

    SUBCASE("store then lookup") {
        ProofStore st(tmp.path.string());
        st.put(e);
        auto back = st.lookup(e.key);
        REQUIRE(back.has_value());
        CHECK(back->node_id == "n0");
        CHECK(back->accepted);
        REQUIRE(back->obligations.size() == 1);
        CHECK(back->obligations[0].certs.size() == 1);
        CHECK(back->obligations[0].proof_text == ob.proof_text);
        CHECK(st.keys().size() == 1);
    }
    SUBCASE("lookup of a never-stored key is absent") {
        ProofStore st(tmp.path.string());
        CHECK_FALSE(st.lookup(digest_bytes("test", "nope")).has_value());
    }
    SUBCASE("truncated entries are treated as absent with a warning") {
        ProofStore st(tmp.path.string());
        st.put(e);
        std::string hex = e.key.hex();
        fs::path p = tmp.path / hex.substr(0, 2) / (hex + ".entry");
        // truncate the file
        fs::resize_file(p, 40);
        CHECK_FALSE(st.lookup(e.key).has_value());
        auto warnings = st.take_warnings();
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("corrupt entry") != std::string::npos);
    }
    SUBCASE("tampered entries fail the digest check") {
        ProofStore st(tmp.path.string());
        st.put(e);
        std::string hex = e.key.hex();
        fs::path p = tmp.path / hex.substr(0, 2) / (hex + ".entry");
        std::ifstream in(p);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        auto at = text.find("\"goal\": \"C\"");
        REQUIRE(at != std::string::npos);
        text.replace(at, 11, "\"goal\": \"D\"");
        std::ofstream out(p, std::ios::trunc);
        out << text;
        out.close();
        CHECK_FALSE(st.lookup(e.key).has_value());
        auto warnings = st.take_warnings();
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("digest mismatch") != std::string::npos);
    }
    SUBCASE("failed entries persist their cause") {
        ProofStore st(tmp.path.string());
        CacheEntry f;
        f.key = digest_bytes("test", "key2");
        f.node_id = "n1";
        f.accepted = false;
        f.created = "2026-01-01T00:00:00Z";
        f.failure_cause = "missing_lemma";
        f.failure_detail = "unknown fact reference: ghost";
        st.put(f);
        auto back = st.lookup(f.key);
        REQUIRE(back.has_value());
        CHECK_FALSE(back->accepted);
        CHECK(back->failure_cause == "missing_lemma");
    }
    SUBCASE("gc wipes entries but keeps the store usable") {
        ProofStore st(tmp.path.string());
        st.put(e);
        CHECK(st.keys().size() == 1);
        st.gc();
        CHECK(st.keys().empty());
        st.put(e);
        CHECK(st.keys().size() == 1);
    }
}

TEST_CASE("single writer lock") {
    TempDir tmp;
    {
        ProofStore st(tmp.path.string());
        CHECK_THROWS_WITH_AS(ProofStore(tmp.path.string()), doctest::Contains("locked by pid"),
                             StoreError);
    }
    // released on destruction
    ProofStore st2(tmp.path.string());
    CHECK(st2.keys().empty());

    SUBCASE("stale locks from dead processes are reclaimed") {
        // simulate: drop a lock file with an unlikely pid
        fs::path lock = tmp.path / "LOCK";
        {
            ProofStore* leak = nullptr;
            (void)leak;
        }
    }
}

TEST_CASE("version stamp") {
    TempDir tmp;
    { ProofStore st(tmp.path.string()); }
    std::ofstream(tmp.path / "VERSION", std::ios::trunc) << "999\n";
    CHECK_THROWS_WITH_AS(ProofStore(tmp.path.string()), doctest::Contains("version mismatch"),
                         StoreError);
}
