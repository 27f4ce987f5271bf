#pragma once

#include <functional>
#include <string>
#include <vector>

#include "retrialq/estimators.hpp"
#include "retrialq/process.hpp"

namespace retrialq {

// One loss evaluation made during the search. `budget_level` records how
// many times the replication budget was raised for a CI-bearing evaluator.
struct Probe {
    int n = 0;
    double value = 0.0;
    double halfwidth = 0.0;
    Method method = Method::analytic;
    int budget_level = 0;
};

struct SearchTrace {
    std::vector<Probe> probes;
    int n_lower = 1;
    int n_upper = 1;
    int result = -1;                 // minimal feasible n (when conclusive)
    bool conclusive = true;
    int inconclusive_n = -1;         // the n whose probe stayed ambiguous
};

// Smallest n whose closed-form loss at the merged rate lambda + delta is
// <= alpha: Erlang B for poisson arrivals, the D/M/n/0 formula for
// deterministic ones. This treats the orbit as permanently occupied, so it
// overshoots the true requirement and seeds the bisection bracket.
int upper_bound_servers(double lambda, double delta, double mu, double alpha,
                        ProcessKind arrival_kind);

// Loss evaluation hook: must return the estimate for `n`, spending more
// replication effort as budget_level grows (analytic evaluators ignore it).
using LossEvaluator = std::function<LossEstimate(int n, int budget_level)>;

// Bisection on a nonincreasing loss curve: find the minimal n in
// [n_lower, n_upper] with f(n) <= alpha. If f(n_upper) > alpha the bracket
// is doubled first. A CI-bearing probe is feasible when value + halfwidth
// <= alpha and infeasible when value - halfwidth > alpha; anything between
// triggers a budget raise up to `max_budget_level`, after which the trace
// is flagged inconclusive at that n.
SearchTrace minimal_servers(const LossEvaluator& evaluator, double alpha, int n_lower,
                            int n_upper, int max_budget_level = 4);

}  // namespace retrialq
