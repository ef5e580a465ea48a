#ifndef PSK_OBLIGATIONS_HPP
#define PSK_OBLIGATIONS_HPP

#include "psk/sketch.hpp"

#include <optional>
#include <string>
#include <vector>

// Deterministic expansion of a validated sketch into proof obligations with
// provenance. Extraction is total: structural problems (bad rewrite
// positions, unresolved references, ill-sorted bindings) are recorded on the
// node plan and surface as failures at discharge time.

namespace psk {
namespace oblig {

enum class Route { KernelStructural, KernelExact, Auto };
enum class Fragment { Propositional, Equality, Lia, Mixed };

const char* route_name(Route r);
const char* fragment_name(Fragment f);

struct Obligation {
    std::string id; // "<node-id>/<slot>"
    std::string node_id;
    std::string slot; // "eq" | "goal"
    Route route = Route::Auto;
    Fragment fragment = Fragment::Propositional;
    Sequent sequent;

    // kernel-exact discharge data
    std::string fact_name;
    Formula fact_formula; // empty when the reference did not resolve
    std::vector<std::pair<std::string, Term>> bindings;
};

// A structural or reference problem detected during extraction, reported
// downstream as a discharge failure.
struct ExtractIssue {
    enum class Kind { MissingFact, BadInstantiation, BadRewrite };
    Kind kind;
    std::string detail;
};

// Everything the pipeline needs per node: the node's own obligations, its
// full context (ambient facts, chain extensions, referenced library lemmas)
// and any recorded issue.
struct NodePlan {
    std::string node_id;
    MethodKind method;
    Sequent node_sequent; // context chain |- node goal
    std::vector<Obligation> obligations;
    std::optional<ExtractIssue> issue;

    // rewrite assembly data (valid when method == Rewrite and no issue)
    Position rewrite_pos;
    bool rewrite_ltr = true;

    // lemmas this node pulled in from the library (name -> formula),
    // in resolution order; they extend the context chain for the subtree
    std::vector<std::pair<std::string, Formula>> lemma_extensions;
};

struct ObligationSet {
    std::vector<NodePlan> nodes; // document order
    // flat view in document order, expansion slots in fixed per-tag order
    std::vector<const Obligation*> all() const;
    const NodePlan* plan_for(const std::string& node_id) const;
};

// Pure function of the sketch (and library); identical across runs and
// platforms.
ObligationSet extract(const Sketch& s, const LemmaLibrary* lib = nullptr);

// JSON document: one object per obligation
// {id, node_id, slot, route, fragment, context:[{name, formula}], goal}.
std::string obligations_json(const ObligationSet& set);

} // namespace oblig
} // namespace psk

#endif
