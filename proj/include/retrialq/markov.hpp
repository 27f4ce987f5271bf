#pragma once

#include <array>
#include <string>
#include <vector>

#include "retrialq/estimators.hpp"

namespace retrialq {

// Stationary probabilities P[i][j] of the Poisson/Poisson system,
// i = busy servers, j = orbit occupancy.
struct StationaryDistribution {
    std::vector<std::array<double, 2>> p;

    explicit StationaryDistribution(int n) : p(n + 1, {0.0, 0.0}) {}
    int n() const { return static_cast<int>(p.size()) - 1; }
    double sum() const;
    double mean_busy() const;  // sum of i * P[i][j]
};

// Which linear system to solve. `corrected` is generated from the
// transition structure of the dynamics (arrival lambda: (i,j)->(i+1,j) for
// i<n, (n,0)->(n,1); service i*mu: (i,j)->(i-1,j); retrial delta:
// (i,1)->(i+1,0) for i<n). `as_published` transcribes the published
// closed-form equations verbatim, which differ from the dynamics in two
// terms; it is kept so reports can show both when they disagree.
enum class BalanceVariant { corrected, as_published };

std::string variant_name(BalanceVariant v);

// Dense rate matrix Q (row = from-state, column = to-state, index 2i + j);
// row sums are zero.
std::vector<std::vector<double>> build_generator(double lambda, double delta, double mu, int n);

struct BalanceSystem {
    int n = 0;
    BalanceVariant variant = BalanceVariant::corrected;
    double lambda = 0, delta = 0, mu = 0;
    // 2(n+1) equations; the last row is the normalization sum P = 1,
    // replacing one redundant (corrected) or dropped (literal) balance row.
    std::vector<std::vector<double>> a;
    std::vector<double> b;
};

BalanceSystem build_balance_system(double lambda, double delta, double mu, int n,
                                   BalanceVariant variant = BalanceVariant::corrected);

// Dense direct solve with partial pivoting. Checks the invariants
// (entries >= -1e-12, clamped; probabilities sum to 1 within 1e-10) and
// throws on a singular system.
StationaryDistribution solve_stationary(const BalanceSystem& system);

// Largest relative residual of the full corrected balance set at `dist`.
// For the corrected system this is < 1e-10; for the literal variant it
// quantifies how far the published equations sit from the dynamics.
double corrected_balance_residual(const StationaryDistribution& dist, double lambda,
                                  double delta, double mu);

// The three equivalent loss expressions evaluated at a stationary
// distribution.
struct LossTriple {
    double direct = 0.0;     // P_{n,1}
    double balance = 0.0;    // [lambda P_n - delta sum_{i<n} P_{i,1}] / lambda
    double occupancy = 0.0;  // 1 - (mu/lambda) E[busy servers]
    double max_pairwise_diff() const;
};

LossTriple loss_markov(const StationaryDistribution& dist, double lambda, double delta,
                       double mu);

// Convenience: solve and return the direct loss value.
double analytic_loss(double lambda, double delta, double mu, int n,
                     BalanceVariant variant = BalanceVariant::corrected);

// Exact stationary event rates of the Poisson/Poisson chain, for
// substituting into the balance-residual formulas.
FrequencyEstimates stationary_frequencies(const StationaryDistribution& dist, double lambda,
                                          double delta);

}  // namespace retrialq
