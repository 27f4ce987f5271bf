#pragma once

#include <string>
#include <utility>
#include <vector>

#include "retrialq/engine.hpp"

namespace retrialq {

// Estimator identities. The sdn* codes are the wire names used in configs
// and reports: sdn8 = occupancy identity (no rare event in it), sdn9 =
// boundary flux balance, sdn10 = direct loss counting.
enum class Method { sdn8, sdn9, sdn10, analytic };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct LossEstimate {
    Method method = Method::sdn10;
    double value = 0.0;          // raw point estimate (may leave [0,1] by noise)
    double clamped_value = 0.0;  // value clamped to [0,1]
    bool clamped = false;
    double halfwidth = 0.0;  // 95% CI
    int replications = 0;
    double effective_sample_size = 0.0;
};

// Occupancy identity: f = (lambda - mu * mean busy servers) / lambda.
double loss_sdn8(const TrajectoryStats& stats, double lambda, double mu);

// Flux balance: f = [rate of arrivals at level n - rate of successful
// retrials] / lambda.
double loss_sdn9(const TrajectoryStats& stats, double lambda);

// Direct counting: lost arrivals over all arrivals.
double loss_sdn10(const TrajectoryStats& stats);

// Finite-horizon frequency and event-rate averages, the common input to the
// balance-residual checks. Exact stationary quantities can be substituted
// directly (all fields are real-valued).
struct FrequencyEstimates {
    std::vector<std::array<double, 2>> state_freq;    // time fraction in (i, j)
    std::vector<std::array<double, 2>> arrival_rate;  // arrival epochs at (i, j) per unit time
    std::vector<std::array<double, 2>> retrial_rate;  // retrial epochs at (i, j) per unit time

    explicit FrequencyEstimates(int n)
        : state_freq(n + 1, {0.0, 0.0}),
          arrival_rate(n + 1, {0.0, 0.0}),
          retrial_rate(n + 1, {0.0, 0.0}) {}
    int n() const { return static_cast<int>(state_freq.size()) - 1; }
};

FrequencyEstimates frequencies(const TrajectoryStats& stats);

// LHS - RHS of each limiting balance equation with limits replaced by
// finite-horizon averages; `scale` holds the largest term magnitude of each
// equation for relative comparison.
struct ResidualReport {
    std::vector<std::array<double, 2>> residual;
    std::vector<std::array<double, 2>> scale;

    explicit ResidualReport(int n)
        : residual(n + 1, {0.0, 0.0}), scale(n + 1, {0.0, 0.0}) {}
    int n() const { return static_cast<int>(residual.size()) - 1; }
    double max_abs_residual() const;
};

ResidualReport balance_residuals(const FrequencyEstimates& freq, double mu);
ResidualReport balance_residuals(const TrajectoryStats& stats, double mu);

// Weighted (self-normalized) aggregation of per-replication values. A
// log_weight of 0 everywhere reduces to the plain replication mean.
LossEstimate aggregate(const std::vector<std::pair<double, double>>& value_and_log_weight,
                       Method method = Method::sdn10);

// Per-replication evaluation plus aggregation.
LossEstimate estimate_loss(const std::vector<TrajectoryStats>& runs, Method method,
                           double lambda, double mu);

}  // namespace retrialq
