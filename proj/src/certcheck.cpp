#include "psk/certcheck.hpp"

#include <algorithm>

namespace psk {

namespace cert_internal {
struct TokenIssuer {
    static AcceptanceToken make(const Digest& sequent, const Digest& cert) {
        return AcceptanceToken(sequent, cert, cert::kCheckerVersion);
    }
};
} // namespace cert_internal

namespace cert {

namespace {

Digest cert_digest_of(const std::string& text) { return digest_bytes("psk.cert", text); }

} // namespace

// ---------------------------------------------------------------------------
// RUP

CheckResult check_rup(const CnfProblem& p, const solver::RupProof& proof,
                      const Digest& sequent_digest) {
    for (const auto& clause : p.clauses)
        for (int lit : clause)
            if (lit == 0 || std::abs(lit) > p.num_vars)
                return Rejection{"malformed problem clause", -1, {}};

    std::vector<std::vector<int>> db = p.clauses;
    for (size_t step = 0; step < proof.clauses.size(); ++step) {
        const auto& c = proof.clauses[step];
        for (int lit : c)
            if (lit == 0 || std::abs(lit) > p.num_vars)
                return Rejection{"malformed proof clause", int(step), {}};

        // assignment: negation of the clause
        std::vector<int> assign(size_t(p.num_vars) + 1, 0);
        bool conflict = false;
        for (int lit : c) {
            int v = std::abs(lit);
            int want = lit > 0 ? -1 : 1;
            if (assign[size_t(v)] != 0 && assign[size_t(v)] != want) {
                conflict = true; // clause is a tautology; trivially RUP
                break;
            }
            assign[size_t(v)] = want;
        }
        // unit propagation to a conflict
        bool changed = !conflict;
        while (changed && !conflict) {
            changed = false;
            for (const auto& clause : db) {
                int unassigned = 0;
                int unit = 0;
                bool satisfied = false;
                for (int lit : clause) {
                    int v = assign[size_t(std::abs(lit))];
                    bool value = lit > 0 ? v == 1 : v == -1;
                    bool falsified = lit > 0 ? v == -1 : v == 1;
                    if (value) { satisfied = true; break; }
                    if (!falsified) { ++unassigned; unit = lit; }
                }
                if (satisfied) continue;
                if (unassigned == 0) { conflict = true; break; }
                if (unassigned == 1) {
                    assign[size_t(std::abs(unit))] = unit > 0 ? 1 : -1;
                    changed = true;
                }
            }
        }
        if (!conflict) return Rejection{"non-propagating", int(step), {}};
        db.push_back(c);
    }
    if (proof.clauses.empty() || !proof.clauses.back().empty())
        return Rejection{"missing empty clause", int(proof.clauses.size()) - 1, {}};
    return cert_internal::TokenIssuer::make(sequent_digest,
                                            cert_digest_of(solver::rup_to_text(proof)));
}

// ---------------------------------------------------------------------------
// LIA

namespace {

std::optional<Rejection> check_lia_node(std::vector<LeRow>& rows, size_t nvars,
                                        const solver::LiaCert& node, std::string& path) {
    if (node.is_branch) {
        if (node.var < 0 || size_t(node.var) >= nvars)
            return Rejection{"malformed tree: branch variable out of range", -1, path};
        if (!node.left || !node.right)
            return Rejection{"malformed tree: missing branch child", -1, path};
        {
            LeRow left;
            left.coeffs.assign(nvars, 0);
            left.coeffs[size_t(node.var)] = 1;
            left.bound = node.bound;
            rows.push_back(std::move(left));
            path.push_back('L');
            if (auto r = check_lia_node(rows, nvars, *node.left, path)) return r;
            path.pop_back();
            rows.pop_back();
        }
        {
            LeRow right;
            right.coeffs.assign(nvars, 0);
            right.coeffs[size_t(node.var)] = -1;
            right.bound = -(node.bound + 1);
            rows.push_back(std::move(right));
            path.push_back('R');
            if (auto r = check_lia_node(rows, nvars, *node.right, path)) return r;
            path.pop_back();
            rows.pop_back();
        }
        return std::nullopt;
    }

    // Farkas leaf: lambda >= 0, sum(lambda_i * a_i) = 0, sum(lambda_i * b_i) < 0
    if (node.farkas.size() != rows.size())
        return Rejection{"malformed tree: " + std::to_string(node.farkas.size()) +
                             " multipliers for " + std::to_string(rows.size()) + " rows",
                         -1, path};
    for (const auto& l : node.farkas)
        if (l < 0) return Rejection{"negative multiplier", -1, path};
    BigRat total = 0;
    for (size_t i = 0; i < rows.size(); ++i) total += node.farkas[i] * rows[i].bound;
    if (!(total < 0)) return Rejection{"non-negative constant sum", -1, path};
    for (size_t j = 0; j < nvars; ++j) {
        BigRat residue = 0;
        for (size_t i = 0; i < rows.size(); ++i) residue += node.farkas[i] * rows[i].coeffs[j];
        if (residue != 0) return Rejection{"nonzero variable residue", -1, path};
    }
    return std::nullopt;
}

} // namespace

CheckResult check_lia(const LiaProblem& p, const solver::LiaCert& cert,
                      const Digest& sequent_digest) {
    std::vector<LeRow> rows = normalized_rows(p);
    for (auto& r : rows) r.coeffs.resize(p.var_names.size(), 0);
    std::string path;
    if (auto rej = check_lia_node(rows, p.var_names.size(), cert, path)) return *rej;
    return cert_internal::TokenIssuer::make(sequent_digest,
                                            cert_digest_of(solver::lia_cert_to_text(cert, p)));
}

// ---------------------------------------------------------------------------
// Bridge outcome gate

CheckResult validate_outcome(const Sequent& ob, const Signature& sig,
                             const solver::DischargeOutcome& outcome) {
    using Kind = solver::DischargeOutcome::Kind;
    if (outcome.kind != Kind::Certified)
        return Rejection{"outcome is not certified", -1, {}};

    Digest sequent_digest = canonical_digest(ob);
    Translation tr = translate_for_mode(ob, sig, outcome.mode);
    if (std::holds_alternative<Unsupported>(tr))
        return Rejection{"translation does not support this obligation: " +
                             std::get<Unsupported>(tr).reason,
                         -1, {}};

    if (outcome.mode == TranslateMode::Cnf) {
        if (!std::holds_alternative<CnfProblem>(tr))
            return Rejection{"mode mismatch: trusted translation is not propositional", -1, {}};
        solver::RupProof proof;
        try {
            proof = solver::rup_from_text(outcome.cert_text);
        } catch (const LogicError& e) {
            return Rejection{e.what(), -1, {}};
        }
        return check_rup(std::get<CnfProblem>(tr), proof, sequent_digest);
    }
    if (!std::holds_alternative<LiaProblem>(tr))
        return Rejection{"mode mismatch: trusted translation is not linear arithmetic", -1, {}};
    const LiaProblem& p = std::get<LiaProblem>(tr);
    std::unique_ptr<solver::LiaCert> cert;
    try {
        cert = solver::lia_cert_from_text(outcome.cert_text, p);
    } catch (const LogicError& e) {
        return Rejection{e.what(), -1, {}};
    }
    return check_lia(p, *cert, sequent_digest);
}

} // namespace cert
} // namespace psk
