#pragma once

#include <stdexcept>

#include "retrialq/process.hpp"

namespace retrialq {

// Laplace-Stieltjes transform of an interarrival distribution, evaluated at
// j * mu to produce the r_j coefficients of the GI/M/n/0 loss formula.
class InterarrivalLst {
  public:
    static InterarrivalLst exponential(double rate) {
        if (rate <= 0.0) throw std::invalid_argument("rate must be positive");
        return InterarrivalLst(Kind::exponential, rate);
    }
    static InterarrivalLst deterministic(double mean) {
        if (mean <= 0.0) throw std::invalid_argument("mean must be positive");
        return InterarrivalLst(Kind::deterministic, mean);
    }
    static InterarrivalLst from_spec(const PointProcessSpec& spec) {
        return spec.kind == ProcessKind::poisson ? exponential(spec.rate)
                                                 : deterministic(1.0 / spec.rate);
    }

    double operator()(double s) const;

  private:
    enum class Kind { exponential, deterministic };
    InterarrivalLst(Kind kind, double param) : kind_(kind), param_(param) {}
    Kind kind_;
    double param_;  // rate (exponential) or mean (deterministic)
};

// Erlang B blocking probability of M/M/n/0 at offered load rho, via the
// stable recursion B(k) = rho B(k-1) / (k + rho B(k-1)).
double erlang_b(double rho, int n);

// GI/M/n/0 loss probability; inner products accumulated in log space.
double gi_loss(const InterarrivalLst& lst, double mu, int n);

}  // namespace retrialq
