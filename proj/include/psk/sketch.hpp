#ifndef PSK_SKETCH_HPP
#define PSK_SKETCH_HPP

#include "psk/logic.hpp"
#include "psk/parse.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

// The proof-sketch DSL: parsing, well-formedness validation and rendering.
// Files use the `.psk` extension; lemma libraries reuse the context-fact
// syntax with extension `.plib`.

namespace psk {

enum class MethodKind { Rewrite, Split, Induction, Contradiction, Exact, Hole };

struct Method {
    MethodKind kind = MethodKind::Hole;
    std::string fact;                                    // rewrite/exact reference
    Position pos;                                        // rewrite
    bool ltr = true;                                     // rewrite direction
    std::vector<std::pair<std::string, Term>> bindings;  // rewrite/exact, source order
    Formula condition;                                   // split
    std::string var;                                     // induction
};

struct SketchNode {
    std::string id;
    Formula goal;
    Method method;
    std::vector<std::string> uses;
    std::vector<SketchNode> children;
    int line = 0;
    int col = 0;
};

struct Sketch {
    std::string name;
    Signature sig;
    Formula theorem;
    std::vector<std::pair<std::string, Formula>> context; // declared facts, document order
    SketchNode root;
};

// ---------------------------------------------------------------------------
// Lemma library (.plib): named closed formulas, plus symbol bags for scoring.

struct Lemma {
    std::string id;
    Formula formula;
};

class LemmaLibrary {
public:
    // Parses `name : formula ;` entries against the given signature. Entries
    // that do not sort-check are skipped and reported in `skipped`.
    static LemmaLibrary parse(std::string_view text, const Signature& sig);

    const Lemma* find(const std::string& id) const;
    const std::vector<Lemma>& lemmas() const { return lemmas_; }
    const std::vector<std::string>& skipped() const { return skipped_; }
    bool empty() const { return lemmas_.empty(); }

private:
    std::vector<Lemma> lemmas_;
    std::vector<std::string> skipped_;
};

// Non-builtin symbols (functions, predicates, constants) of a formula.
std::set<std::string> symbol_bag(const Formula& f);

// Top-k lemmas by overlap score |symbols(goal) ∩ symbols(lemma)| /
// |symbols(lemma)|; ties broken by lexicographic id. Purely advisory.
std::vector<std::string> retrieve_hints(const Formula& goal, const LemmaLibrary& lib, int k);

// ---------------------------------------------------------------------------
// Well-formedness

enum class IssueKind {
    UnknownFact,
    ShapeViolation,
    SortError,
    DuplicateId,
    CyclicDependency,
    UnresolvedHoleType,
};

const char* issue_kind_name(IssueKind k);

// Unknown-fact issues are diagnosable downstream (they surface as
// missing-lemma failures at discharge); everything else prevents extraction.
bool issue_blocks_extraction(IssueKind k);

struct Issue {
    std::string node_id;
    IssueKind kind;
    std::string message;
};

struct WellFormedReport {
    bool ok = true; // ok <=> issues empty
    std::vector<Issue> issues;

    bool blocked() const {
        for (const auto& i : issues)
            if (issue_blocks_extraction(i.kind)) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Operations

// Parses a complete sketch file. Throws ParseError (with location) on syntax
// errors and duplicate node ids.
Sketch parse_sketch(std::string_view text);

// Parses a single `node ...` subtree against an existing signature. Eigen
// variables already in scope at the splice point are passed via `scope`.
SketchNode parse_node_text(std::string_view text, const Signature& sig, FreeVarScope scope = {});

// Structural and reference checks; issues are data, not failures. The lemma
// library participates in `uses` resolution when provided.
WellFormedReport validate_sketch(const Sketch& s, const LemmaLibrary* lib = nullptr);

// Deterministic pretty-printer; parse_sketch(render_sketch(s)) is
// structurally equal to s.
std::string render_sketch(const Sketch& s);
std::string render_node(const SketchNode& n, int indent = 0);
std::string render_method(const Method& m);

// ---------------------------------------------------------------------------
// Tree helpers

const SketchNode* find_node(const Sketch& s, const std::string& id);
// Nodes in document order (preorder).
std::vector<const SketchNode*> all_nodes(const Sketch& s);
// Replaces the subtree rooted at `id`; returns nullopt when id is absent.
std::optional<Sketch> splice_node(const Sketch& s, const std::string& id,
                                  const SketchNode& replacement);

// Eigenvariables in scope at a node: induction variables of ancestors whose
// step branch contains it. Returns name -> sort, or nullopt if id not found.
std::optional<std::map<std::string, std::string>> eigen_scope_at(const Sketch& s,
                                                                 const std::string& id);

// Hypothesis name auto-generated for a context extension slot of a node.
std::string hyp_name(const std::string& node_id, int slot);

} // namespace psk

#endif
