#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "retrialq/process.hpp"

namespace retrialq {

// Run length: either a simulated-time limit or an arrival-count budget.
struct Horizon {
    enum class Kind { time, arrivals } kind = Kind::time;
    double time_limit = 0.0;
    std::uint64_t arrival_budget = 0;

    static Horizon time(double t) { return {Kind::time, t, 0}; }
    static Horizon arrivals(std::uint64_t k) { return {Kind::arrivals, 0.0, k}; }
};

struct SystemConfig {
    int n = 1;                 // servers
    double mu = 1.0;           // service rate per busy server
    PointProcessSpec arrival;  // rate lambda
    PointProcessSpec retrial;  // rate delta
    Horizon horizon = Horizon::time(1e4);
    std::uint64_t seed = 1;
    int replications = 1;

    void validate() const;
};

// (q1, q2, q3) plus pending event clocks. q1 = busy servers, q2 = orbit
// occupancy (0/1), q3 = cumulative losses.
struct SystemState {
    int q1 = 0;
    int q2 = 0;
    std::uint64_t q3 = 0;
    double clock = 0.0;
};

enum class EventKind { arrival, retrial, service };

// Everything the estimators need from one trajectory. Occupation times and
// event counters are indexed by the pre-event state (q1, q2).
struct TrajectoryStats {
    double elapsed = 0.0;
    double int_q1 = 0.0;                                // integral of q1 over the window
    std::vector<std::array<double, 2>> occupation;      // time with (q1, q2) = (i, j)
    std::vector<std::array<std::uint64_t, 2>> arrivals_at;
    std::vector<std::array<std::uint64_t, 2>> retrials_at;
    std::uint64_t total_arrivals = 0;
    std::uint64_t total_losses = 0;
    std::uint64_t total_completions = 0;
    double log_weight = 0.0;  // 0 when no importance sampling

    explicit TrajectoryStats(int n = 0)
        : occupation(n + 1, {0.0, 0.0}),
          arrivals_at(n + 1, {0, 0}),
          retrials_at(n + 1, {0, 0}) {}

    int n() const { return static_cast<int>(occupation.size()) - 1; }

    // Additive merge of disjoint windows / independent runs (log_weight is
    // meaningless after merging weighted runs and is left at 0).
    void merge(const TrajectoryStats& other);
};

// Applies the transition for one event to the state. Returns true when the
// event was an arrival that was lost. The caller has already charged the
// pre-event occupation time.
bool apply_event(EventKind kind, SystemState& state, int n);

// Single-trajectory simulator. One instance is strictly single-threaded;
// independent instances may run concurrently.
class Simulator {
  public:
    // stream ids used within one replication (replication r uses base 3r).
    Simulator(const SystemConfig& config, std::uint64_t stream_base, double warmup);

    // Advance to the earliest pending event and apply exactly one
    // transition, updating statistics. Returns false once the horizon has
    // been reached (in which case no transition was applied).
    bool step();

    // Run to the horizon and return the accumulated statistics.
    TrajectoryStats finish();

    const SystemState& state() const { return state_; }
    const TrajectoryStats& stats() const { return stats_; }

  private:
    void charge_occupation(double upto);
    void reschedule_service();
    void check_conservation() const;

    SystemConfig config_;
    double warmup_ = 0.0;
    SystemState state_;
    TrajectoryStats stats_;
    ProcessClock arrival_clock_;
    ProcessClock retrial_clock_;
    std::mt19937_64 service_rng_;
    double next_service_ = std::numeric_limits<double>::infinity();
    double end_time_ = std::numeric_limits<double>::infinity();
    std::uint64_t raw_arrivals_ = 0;
    std::uint64_t raw_completions_ = 0;
    double last_arrival_epoch_ = 0.0;
    bool done_ = false;
};

// Default warmup: 5% of a time horizon, none for an arrival budget.
double default_warmup(const SystemConfig& config);

// One full run from the empty system. Identical (config, warmup) inputs give
// bit-identical results.
TrajectoryStats run(const SystemConfig& config, double warmup);

// `config.replications` independent runs on derived, non-overlapping RNG
// streams. Result order is by replication index regardless of `threads`.
std::vector<TrajectoryStats> replicate(const SystemConfig& config, double warmup,
                                       int threads = 1);

}  // namespace retrialq
