#include "retrialq/markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace retrialq {

namespace {

int idx(int i, int j) { return 2 * i + j; }

void check_params(double lambda, double delta, double mu, int n) {
    if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
    if (delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
    if (n < 1) throw std::invalid_argument("need at least one server");
}

// Gaussian elimination with partial pivoting; a is modified in place.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int m = static_cast<int>(a.size());
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int row = col + 1; row < m; ++row)
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
        if (std::abs(a[pivot][col]) < 1e-14)
            throw std::runtime_error("singular balance system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int row = col + 1; row < m; ++row) {
            const double factor = a[row][col] / a[col][col];
            if (factor == 0.0) continue;
            for (int k = col; k < m; ++k) a[row][k] -= factor * a[col][k];
            b[row] -= factor * b[col];
        }
    }
    std::vector<double> x(m);
    for (int row = m - 1; row >= 0; --row) {
        double s = b[row];
        for (int k = row + 1; k < m; ++k) s -= a[row][k] * x[k];
        x[row] = s / a[row][row];
    }
    return x;
}

}  // namespace

double StationaryDistribution::sum() const {
    double s = 0.0;
    for (const auto& row : p) s += row[0] + row[1];
    return s;
}

double StationaryDistribution::mean_busy() const {
    double s = 0.0;
    for (int i = 0; i <= n(); ++i) s += i * (p[i][0] + p[i][1]);
    return s;
}

std::string variant_name(BalanceVariant v) {
    return v == BalanceVariant::corrected ? "corrected" : "as-published";
}

std::vector<std::vector<double>> build_generator(double lambda, double delta, double mu, int n) {
    check_params(lambda, delta, mu, n);
    const int m = 2 * (n + 1);
    std::vector<std::vector<double>> q(m, std::vector<double>(m, 0.0));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j < 2; ++j) {
            const int s = idx(i, j);
            if (i < n) {
                q[s][idx(i + 1, j)] += lambda;  // arrival takes a free server
            } else if (j == 0) {
                q[s][idx(n, 1)] += lambda;  // arrival fills the orbit
            }
            // arrival at (n,1) is a loss: no state change, no generator entry
            if (i > 0) q[s][idx(i - 1, j)] += i * mu;
            if (j == 1 && i < n) q[s][idx(i + 1, 0)] += delta;  // successful retrial
        }
    }
    for (int s = 0; s < m; ++s) {
        double out = 0.0;
        for (int t = 0; t < m; ++t)
            if (t != s) out += q[s][t];
        q[s][s] = -out;
    }
    return q;
}

BalanceSystem build_balance_system(double lambda, double delta, double mu, int n,
                                   BalanceVariant variant) {
    check_params(lambda, delta, mu, n);
    const int m = 2 * (n + 1);
    BalanceSystem sys;
    sys.n = n;
    sys.variant = variant;
    sys.lambda = lambda;
    sys.delta = delta;
    sys.mu = mu;
    sys.a.assign(m, std::vector<double>(m, 0.0));
    sys.b.assign(m, 0.0);

    if (variant == BalanceVariant::corrected) {
        // Global balance: columns of the generator. One row is redundant.
        const auto q = build_generator(lambda, delta, mu, n);
        for (int row = 0; row < m; ++row)
            for (int col = 0; col < m; ++col) sys.a[row][col] = q[col][row];
    } else {
        int row = 0;
        // boundary i = 0: mu P_{1,j} = lambda P_{0,j} + j delta P_{0,j}
        for (int j = 0; j < 2; ++j, ++row) {
            sys.a[row][idx(1, j)] += mu;
            sys.a[row][idx(0, j)] -= lambda + j * delta;
        }
        // interior: i mu P_{i,j} - (i+1) mu P_{i+1,j}
        //   = lambda P_{i-1,j} - lambda P_{i,j} + (1-j) delta P_{i-1,1} - j P_{i,1}
        // (the final term is printed without a delta factor; kept verbatim)
        for (int i = 1; i < n; ++i) {
            for (int j = 0; j < 2; ++j, ++row) {
                sys.a[row][idx(i, j)] += i * mu + lambda;
                sys.a[row][idx(i + 1, j)] -= (i + 1) * mu;
                sys.a[row][idx(i - 1, j)] -= lambda;
                if (j == 0)
                    sys.a[row][idx(i - 1, 1)] -= delta;
                else
                    sys.a[row][idx(i, 1)] += 1.0;
            }
        }
        // i = n, j = 0: n mu P_{n,0} = lambda P_{n-1,0} - lambda P_{n,0} + delta P_{n,1}
        // (the retrial inflow is printed as coming from (n,1); kept verbatim)
        sys.a[row][idx(n, 0)] += n * mu + lambda;
        sys.a[row][idx(n - 1, 0)] -= lambda;
        sys.a[row][idx(n, 1)] -= delta;
        ++row;
        // i = n, j = 1: n mu P_{n,1} = lambda P_{n-1,1} + lambda P_{n,0}
        sys.a[row][idx(n, 1)] += n * mu;
        sys.a[row][idx(n - 1, 1)] -= lambda;
        sys.a[row][idx(n, 0)] -= lambda;
    }

    // Normalization replaces the last row.
    std::fill(sys.a[m - 1].begin(), sys.a[m - 1].end(), 1.0);
    sys.b[m - 1] = 1.0;
    return sys;
}

StationaryDistribution solve_stationary(const BalanceSystem& system) {
    const int m = 2 * (system.n + 1);
    const auto x = solve_dense(system.a, system.b);
    StationaryDistribution dist(system.n);
    // The as-published system is a diagnostic and may sit outside the
    // probability simplex; only the corrected system is held to the
    // invariants.
    const bool strict = system.variant == BalanceVariant::corrected;
    double sum = 0.0;
    for (int i = 0; i <= system.n; ++i) {
        for (int j = 0; j < 2; ++j) {
            double v = x[idx(i, j)];
            if (strict && v < -1e-12)
                throw std::runtime_error("stationary solve produced a negative probability");
            dist.p[i][j] = std::max(v, 0.0);
            sum += dist.p[i][j];
        }
    }
    if (strict && std::abs(sum - 1.0) > 1e-10)
        throw std::runtime_error("stationary probabilities do not sum to 1");
    (void)m;
    return dist;
}

double corrected_balance_residual(const StationaryDistribution& dist, double lambda,
                                  double delta, double mu) {
    const int n = dist.n();
    const auto q = build_generator(lambda, delta, mu, n);
    const int m = 2 * (n + 1);
    double worst = 0.0;
    for (int col = 0; col < m; ++col) {
        double res = 0.0, scale = 0.0;
        for (int row = 0; row < m; ++row) {
            const double term = dist.p[row / 2][row % 2] * q[row][col];
            res += term;
            scale = std::max(scale, std::abs(term));
        }
        if (scale > 0.0) worst = std::max(worst, std::abs(res) / scale);
    }
    return worst;
}

double LossTriple::max_pairwise_diff() const {
    return std::max({std::abs(direct - balance), std::abs(direct - occupancy),
                     std::abs(balance - occupancy)});
}

LossTriple loss_markov(const StationaryDistribution& dist, double lambda, double delta,
                       double mu) {
    const int n = dist.n();
    LossTriple f;
    f.direct = dist.p[n][1];
    double orbit_below_n = 0.0;
    for (int i = 0; i < n; ++i) orbit_below_n += dist.p[i][1];
    f.balance = (lambda * (dist.p[n][0] + dist.p[n][1]) - delta * orbit_below_n) / lambda;
    f.occupancy = 1.0 - (mu / lambda) * dist.mean_busy();
    return f;
}

double analytic_loss(double lambda, double delta, double mu, int n, BalanceVariant variant) {
    const auto dist = solve_stationary(build_balance_system(lambda, delta, mu, n, variant));
    return loss_markov(dist, lambda, delta, mu).direct;
}

FrequencyEstimates stationary_frequencies(const StationaryDistribution& dist, double lambda,
                                          double delta) {
    FrequencyEstimates freq(dist.n());
    for (int i = 0; i <= dist.n(); ++i) {
        for (int j = 0; j < 2; ++j) {
            freq.state_freq[i][j] = dist.p[i][j];
            freq.arrival_rate[i][j] = lambda * dist.p[i][j];
            freq.retrial_rate[i][j] = delta * dist.p[i][j];
        }
    }
    return freq;
}

}  // namespace retrialq
