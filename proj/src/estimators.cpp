#include "retrialq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace retrialq {

std::string method_name(Method m) {
    switch (m) {
        case Method::sdn8: return "sdn8";
        case Method::sdn9: return "sdn9";
        case Method::sdn10: return "sdn10";
        case Method::analytic: return "analytic";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "sdn8") return Method::sdn8;
    if (name == "sdn9") return Method::sdn9;
    if (name == "sdn10") return Method::sdn10;
    if (name == "analytic") return Method::analytic;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

double loss_sdn8(const TrajectoryStats& stats, double lambda, double mu) {
    if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
    if (stats.elapsed <= 0.0) throw std::invalid_argument("empty measurement window");
    const double mean_busy = stats.int_q1 / stats.elapsed;
    return (lambda - mu * mean_busy) / lambda;
}

double loss_sdn9(const TrajectoryStats& stats, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
    if (stats.elapsed <= 0.0) throw std::invalid_argument("empty measurement window");
    const int n = stats.n();
    const double arrivals_at_n =
        static_cast<double>(stats.arrivals_at[n][0] + stats.arrivals_at[n][1]);
    double successful_retrials = 0.0;
    for (int i = 0; i < n; ++i)
        successful_retrials += static_cast<double>(stats.retrials_at[i][1]);
    return (arrivals_at_n - successful_retrials) / (stats.elapsed * lambda);
}

double loss_sdn10(const TrajectoryStats& stats) {
    if (stats.total_arrivals == 0) throw std::invalid_argument("no arrivals observed");
    return static_cast<double>(stats.total_losses) / static_cast<double>(stats.total_arrivals);
}

FrequencyEstimates frequencies(const TrajectoryStats& stats) {
    if (stats.elapsed <= 0.0) throw std::invalid_argument("empty measurement window");
    FrequencyEstimates freq(stats.n());
    for (int i = 0; i <= stats.n(); ++i) {
        for (int j = 0; j < 2; ++j) {
            freq.state_freq[i][j] = stats.occupation[i][j] / stats.elapsed;
            freq.arrival_rate[i][j] = static_cast<double>(stats.arrivals_at[i][j]) / stats.elapsed;
            freq.retrial_rate[i][j] = static_cast<double>(stats.retrials_at[i][j]) / stats.elapsed;
        }
    }
    return freq;
}

double ResidualReport::max_abs_residual() const {
    double m = 0.0;
    for (const auto& row : residual)
        for (double r : row) m = std::max(m, std::abs(r));
    return m;
}

namespace {

void accumulate(double term, double& residual, double& scale) {
    residual += term;
    scale = std::max(scale, std::abs(term));
}

}  // namespace

ResidualReport balance_residuals(const FrequencyEstimates& freq, double mu) {
    const int n = freq.n();
    ResidualReport report(n);
    const auto& F = freq.state_freq;
    const auto& A = freq.arrival_rate;
    const auto& R = freq.retrial_rate;

    for (int j = 0; j < 2; ++j) {
        // i = 0 boundary: service out of level 1 balances input at level 0.
        {
            double& res = report.residual[0][j];
            double& sc = report.scale[0][j];
            accumulate(mu * F[1][j], res, sc);
            accumulate(-A[0][j], res, sc);
            if (j == 1) accumulate(-R[0][j], res, sc);
        }
        // interior levels
        for (int i = 1; i < n; ++i) {
            double& res = report.residual[i][j];
            double& sc = report.scale[i][j];
            accumulate(i * mu * F[i][j], res, sc);
            accumulate(-(i + 1) * mu * F[i + 1][j], res, sc);
            accumulate(-A[i - 1][j], res, sc);
            accumulate(A[i][j], res, sc);
            if (j == 0)
                accumulate(-R[i - 1][1], res, sc);
            else
                accumulate(R[i][1], res, sc);
        }
        // i = n
        if (j == 0) {
            double& res = report.residual[n][0];
            double& sc = report.scale[n][0];
            accumulate(n * mu * F[n][0], res, sc);
            accumulate(-A[n - 1][0], res, sc);
            accumulate(A[n][0], res, sc);
            accumulate(-R[n - 1][1], res, sc);
        } else {
            double& res = report.residual[n][1];
            double& sc = report.scale[n][1];
            accumulate(n * mu * F[n][1], res, sc);
            accumulate(-A[n - 1][1], res, sc);
            accumulate(-A[n][0], res, sc);
        }
    }
    return report;
}

ResidualReport balance_residuals(const TrajectoryStats& stats, double mu) {
    return balance_residuals(frequencies(stats), mu);
}

LossEstimate aggregate(const std::vector<std::pair<double, double>>& value_and_log_weight,
                       Method method) {
    const std::size_t r = value_and_log_weight.size();
    if (r == 0) throw std::invalid_argument("aggregate needs at least one replication");

    double max_logw = -std::numeric_limits<double>::infinity();
    for (const auto& [v, lw] : value_and_log_weight) max_logw = std::max(max_logw, lw);
    if (!std::isfinite(max_logw)) throw std::invalid_argument("all replication weights are zero");

    double wsum = 0.0, w2sum = 0.0;
    std::vector<double> w(r);
    for (std::size_t k = 0; k < r; ++k) {
        w[k] = std::exp(value_and_log_weight[k].second - max_logw);
        wsum += w[k];
        w2sum += w[k] * w[k];
    }

    LossEstimate est;
    est.method = method;
    est.replications = static_cast<int>(r);
    est.effective_sample_size = wsum * wsum / w2sum;

    double mean = 0.0;
    for (std::size_t k = 0; k < r; ++k) mean += (w[k] / wsum) * value_and_log_weight[k].first;
    est.value = mean;

    if (r >= 2) {
        double var = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            const double wn = w[k] / wsum;
            const double d = value_and_log_weight[k].first - mean;
            var += wn * wn * d * d;
        }
        var *= static_cast<double>(r) / static_cast<double>(r - 1);
        est.halfwidth = 1.959963984540054 * std::sqrt(var);
    }

    est.clamped_value = std::clamp(est.value, 0.0, 1.0);
    est.clamped = est.clamped_value != est.value;
    return est;
}

LossEstimate estimate_loss(const std::vector<TrajectoryStats>& runs, Method method,
                           double lambda, double mu) {
    std::vector<std::pair<double, double>> values;
    values.reserve(runs.size());
    for (const auto& s : runs) {
        double v;
        switch (method) {
            case Method::sdn8: v = loss_sdn8(s, lambda, mu); break;
            case Method::sdn9: v = loss_sdn9(s, lambda); break;
            case Method::sdn10: v = loss_sdn10(s); break;
            default: throw std::invalid_argument("analytic method needs no trajectory");
        }
        values.emplace_back(v, s.log_weight);
    }
    return aggregate(values, method);
}

}  // namespace retrialq
