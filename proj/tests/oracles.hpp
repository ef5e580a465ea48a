#ifndef PSK_TESTS_ORACLES_HPP
#define PSK_TESTS_ORACLES_HPP

#include "psk/solver.hpp"
#include "psk/translate.hpp"

#include <optional>
#include <random>
#include <vector>

// Brute-force oracles, independent of the solver implementations they check.

namespace psktest {

// Truth-table SAT: tries all 2^n assignments.
inline std::optional<std::vector<bool>> brute_force_sat(const psk::CnfProblem& p) {
    int n = p.num_vars;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        bool ok = true;
        for (const auto& clause : p.clauses) {
            bool sat = false;
            for (int lit : clause) {
                bool v = (mask >> (std::abs(lit) - 1)) & 1;
                if ((lit > 0) == v) { sat = true; break; }
            }
            if (!sat) { ok = false; break; }
        }
        if (ok) {
            std::vector<bool> model(size_t(n), false);
            for (int i = 0; i < n; ++i) model[size_t(i)] = ((mask >> i) & 1) != 0;
            return model;
        }
    }
    return std::nullopt;
}

// Bounded integer search over [lo, hi]^n.
inline std::optional<std::vector<std::int64_t>> brute_force_lia(const psk::LiaProblem& p,
                                                                std::int64_t lo,
                                                                std::int64_t hi) {
    size_t n = p.var_names.size();
    std::vector<std::int64_t> x(n, lo);
    auto rows = psk::normalized_rows(p);
    while (true) {
        bool ok = true;
        for (const auto& r : rows) {
            psk::BigRat lhs = 0;
            for (size_t j = 0; j < n; ++j) lhs += r.coeffs[j] * x[j];
            if (lhs > r.bound) { ok = false; break; }
        }
        if (ok) return x;
        size_t i = 0;
        for (; i < n; ++i) {
            if (++x[i] <= hi) break;
            x[i] = lo;
        }
        if (i == n) return std::nullopt;
        if (n == 0) return std::nullopt;
    }
}

// Pigeonhole: m pigeons into k holes, each pigeon somewhere, no hole shared.
// Unsatisfiable whenever m > k.
inline psk::CnfProblem pigeonhole(int pigeons, int holes) {
    psk::CnfProblem p;
    auto var = [&](int pigeon, int hole) { return pigeon * holes + hole + 1; };
    p.num_vars = pigeons * holes;
    for (int i = 0; i < pigeons; ++i) {
        std::vector<int> clause;
        for (int h = 0; h < holes; ++h) clause.push_back(var(i, h));
        p.clauses.push_back(std::move(clause));
    }
    for (int h = 0; h < holes; ++h)
        for (int i = 0; i < pigeons; ++i)
            for (int j = i + 1; j < pigeons; ++j)
                p.clauses.push_back({-var(i, h), -var(j, h)});
    return p;
}

struct CnfGen {
    std::mt19937_64 rng;
    explicit CnfGen(std::uint64_t seed) : rng(seed) {}

    psk::CnfProblem random_cnf(int max_vars, int max_clauses) {
        psk::CnfProblem p;
        p.num_vars = 1 + int(rng() % std::uint64_t(max_vars));
        int nclauses = 1 + int(rng() % std::uint64_t(max_clauses));
        for (int c = 0; c < nclauses; ++c) {
            int len = 1 + int(rng() % 3);
            std::vector<int> clause;
            for (int i = 0; i < len; ++i) {
                int v = 1 + int(rng() % std::uint64_t(p.num_vars));
                int lit = (rng() & 1) ? v : -v;
                bool taut = false;
                for (int other : clause)
                    if (other == -lit) taut = true;
                if (!taut) clause.push_back(lit);
            }
            if (!clause.empty()) p.clauses.push_back(std::move(clause));
        }
        if (p.clauses.empty()) p.clauses.push_back({1});
        return p;
    }

    // Every CNF over exactly n vars with `nclauses` clauses of width <= 3,
    // enumerated by index; used for the exhaustive small-space sweep.
    psk::LiaProblem random_lia(int max_vars, std::int64_t coeff_bound,
                               std::int64_t bound_bound) {
        psk::LiaProblem p;
        int n = 1 + int(rng() % std::uint64_t(max_vars));
        for (int j = 0; j < n; ++j) {
            p.var_names.push_back("x" + std::to_string(j));
            p.var_terms.push_back(psk::Term::var("x" + std::to_string(j), psk::kIntSort));
        }
        int m = 1 + int(rng() % 5);
        for (int i = 0; i < m; ++i) {
            psk::LinConstraint c;
            c.coeffs.resize(size_t(n), 0);
            for (int j = 0; j < n; ++j)
                c.coeffs[size_t(j)] =
                    std::int64_t(rng() % std::uint64_t(2 * coeff_bound + 1)) - coeff_bound;
            int rel = int(rng() % 3);
            c.rel = rel == 0 ? psk::LinRel::Le : rel == 1 ? psk::LinRel::Ge : psk::LinRel::Eq;
            c.bound = std::int64_t(rng() % std::uint64_t(2 * bound_bound + 1)) - bound_bound;
            p.constraints.push_back(std::move(c));
        }
        return p;
    }
};

} // namespace psktest

#endif
