#include "retrialq/bounds.hpp"

#include <cmath>
#include <vector>

namespace retrialq {

double InterarrivalLst::operator()(double s) const {
    if (s < 0.0) throw std::invalid_argument("LST argument must be nonnegative");
    if (kind_ == Kind::exponential) return param_ / (param_ + s);
    return std::exp(-s * param_);
}

double erlang_b(double rho, int n) {
    if (rho <= 0.0) throw std::invalid_argument("offered load must be positive");
    if (n < 0) throw std::invalid_argument("server count must be nonnegative");
    double b = 1.0;
    for (int k = 1; k <= n; ++k) b = rho * b / (k + rho * b);
    return b;
}

double gi_loss(const InterarrivalLst& lst, double mu, int n) {
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
    if (n < 0) throw std::invalid_argument("server count must be nonnegative");

    // log of prod_{j=1..i} (1 - r_j) / r_j, accumulated once
    std::vector<double> log_prod(n + 1, 0.0);
    for (int j = 1; j <= n; ++j) {
        const double r = lst(j * mu);
        if (!(r > 0.0) || !(r < 1.0)) throw std::invalid_argument("degenerate LST");
        log_prod[j] = log_prod[j - 1] + std::log1p(-r) - std::log(r);
    }

    // log C(n, i) + log_prod[i], summed via a max shift
    std::vector<double> log_terms(n + 1);
    double log_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double log_binom =
            std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        log_terms[i] = log_binom + log_prod[i];
        log_max = std::max(log_max, log_terms[i]);
    }
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) sum += std::exp(log_terms[i] - log_max);
    return std::exp(-log_max - std::log(sum));
}

}  // namespace retrialq
