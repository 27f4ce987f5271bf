#include "retrialq/optimizer.hpp"

#include <stdexcept>

#include "retrialq/bounds.hpp"

namespace retrialq {

int upper_bound_servers(double lambda, double delta, double mu, double alpha,
                        ProcessKind arrival_kind) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    const double merged_rate = lambda + delta;
    for (int n = 1;; ++n) {
        double loss;
        if (arrival_kind == ProcessKind::poisson) {
            loss = erlang_b(merged_rate / mu, n);
        } else {
            loss = gi_loss(InterarrivalLst::deterministic(1.0 / merged_rate), mu, n);
        }
        if (loss <= alpha) return n;
    }
}

namespace {

enum class Verdict { feasible, infeasible, ambiguous };

Verdict classify(const LossEstimate& est, double alpha) {
    if (est.value + est.halfwidth <= alpha) return Verdict::feasible;
    if (est.value - est.halfwidth > alpha) return Verdict::infeasible;
    return Verdict::ambiguous;
}

}  // namespace

SearchTrace minimal_servers(const LossEvaluator& evaluator, double alpha, int n_lower,
                            int n_upper, int max_budget_level) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (n_lower < 1 || n_lower > n_upper)
        throw std::invalid_argument("need 1 <= n_lower <= n_upper");

    SearchTrace trace;
    trace.n_lower = n_lower;
    trace.n_upper = n_upper;

    auto probe = [&](int n) -> Verdict {
        for (int level = 0;; ++level) {
            const LossEstimate est = evaluator(n, level);
            trace.probes.push_back({n, est.value, est.halfwidth, est.method, level});
            const Verdict v = classify(est, alpha);
            if (v != Verdict::ambiguous) return v;
            if (level >= max_budget_level) return Verdict::ambiguous;
        }
    };

    auto fail_inconclusive = [&](int n) {
        trace.conclusive = false;
        trace.inconclusive_n = n;
        trace.result = -1;
        return trace;
    };

    // Everything feasible already at the lower end?
    switch (probe(n_lower)) {
        case Verdict::feasible:
            trace.result = n_lower;
            return trace;
        case Verdict::ambiguous:
            return fail_inconclusive(n_lower);
        case Verdict::infeasible:
            break;
    }

    // Make sure the upper end is feasible, doubling the bracket if the seed
    // bound was too small.
    int lo = n_lower;
    int hi = n_upper > n_lower ? n_upper : 2 * n_lower;
    for (;;) {
        trace.n_upper = hi;
        const Verdict v = probe(hi);
        if (v == Verdict::feasible) break;
        if (v == Verdict::ambiguous) return fail_inconclusive(hi);
        lo = hi;
        hi *= 2;
    }

    // Invariant: lo infeasible, hi feasible.
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        switch (probe(mid)) {
            case Verdict::feasible: hi = mid; break;
            case Verdict::infeasible: lo = mid; break;
            case Verdict::ambiguous: return fail_inconclusive(mid);
        }
    }
    trace.result = hi;
    return trace;
}

}  // namespace retrialq
