#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

namespace retrialq {

enum class ProcessKind { poisson, deterministic };

// Specification of an exogenous point process (arrivals or retrials).
// `rate` is the long-run number of events per unit time. For the poisson
// kind an optional `proposal_rate` switches sampling to a different
// exponential law; trajectories are then reweighted via
// log_likelihood_ratio so estimates stay unbiased under the nominal rate.
struct PointProcessSpec {
    ProcessKind kind = ProcessKind::poisson;
    double rate = 1.0;
    std::optional<double> proposal_rate;

    void validate() const {
        if (rate < 0.0 || !std::isfinite(rate))
            throw std::invalid_argument("point process rate must be nonnegative and finite");
        if (kind == ProcessKind::deterministic && rate <= 0.0)
            throw std::invalid_argument("deterministic process requires rate > 0");
        if (proposal_rate) {
            if (kind != ProcessKind::poisson)
                throw std::invalid_argument("proposal_rate is only allowed for poisson processes");
            if (*proposal_rate <= 0.0 || !std::isfinite(*proposal_rate))
                throw std::invalid_argument("proposal_rate must be positive and finite");
        }
    }

    // Rate actually used when drawing increments.
    double sampling_rate() const { return proposal_rate ? *proposal_rate : rate; }

    bool weighted() const { return proposal_rate && *proposal_rate != rate; }
};

// Identifies one reproducible random stream. The same (seed, stream_id)
// pair always yields the identical increment sequence, independent of any
// other stream in the program.
struct RngStream {
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;

    std::mt19937_64 make_engine() const;
};

// splitmix64 step; used to decorrelate (seed, stream_id) pairs.
std::uint64_t mix64(std::uint64_t x);

// Stateful increment source for one point process. Event times of the
// deterministic kind are computed as count * interval (not accumulated)
// so that ties between two deterministic processes are exact in floating
// point.
class ProcessClock {
  public:
    ProcessClock(const PointProcessSpec& spec, const RngStream& stream);

    // Absolute time of the next pending event (infinity when rate == 0).
    double next_time() const { return next_time_; }

    // Consume the pending event and schedule the following one.
    void advance();

    // Gap between the previous event and the pending one.
    double pending_increment() const { return last_increment_; }

    std::uint64_t count() const { return count_; }

    const PointProcessSpec& spec() const { return spec_; }

  private:
    double draw_increment();
    void schedule_next();

    PointProcessSpec spec_;
    std::mt19937_64 rng_;
    double interval_ = 0.0;  // deterministic kind
    std::uint64_t count_ = 0;
    double last_event_time_ = 0.0;
    double next_time_ = std::numeric_limits<double>::infinity();
    double last_increment_ = 0.0;
};

// One increment drawn from a fresh stream; convenience for tests and
// one-shot sampling.
double next_increment(const PointProcessSpec& spec, const RngStream& stream);

// Log of the Radon-Nikodym factor for one exponential increment:
// ln(nominal/proposal) + (proposal - nominal) * x. Summed over a
// trajectory's increments this gives the trajectory log-weight.
inline double log_likelihood_ratio(double nominal_rate, double proposal_rate, double increment) {
    if (nominal_rate <= 0.0 || proposal_rate <= 0.0)
        throw std::invalid_argument("likelihood ratio requires positive rates");
    if (increment < 0.0)
        throw std::invalid_argument("likelihood ratio requires a nonnegative increment");
    return std::log(nominal_rate / proposal_rate) + (proposal_rate - nominal_rate) * increment;
}

}  // namespace retrialq
