#include "retrialq/engine.hpp"

#include <stdexcept>
#include <thread>

namespace retrialq {

void SystemConfig::validate() const {
    if (n < 1) throw std::invalid_argument("need at least one server");
    if (mu <= 0.0 || !std::isfinite(mu)) throw std::invalid_argument("mu must be positive");
    arrival.validate();
    retrial.validate();
    if (retrial.proposal_rate)
        throw std::invalid_argument("importance sampling applies to the arrival process only");
    if (horizon.kind == Horizon::Kind::time) {
        if (!(horizon.time_limit > 0.0)) throw std::invalid_argument("time horizon must be positive");
    } else {
        if (horizon.arrival_budget == 0) throw std::invalid_argument("arrival budget must be positive");
        if (arrival.rate <= 0.0)
            throw std::invalid_argument("arrival budget requires a positive arrival rate");
    }
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
}

void TrajectoryStats::merge(const TrajectoryStats& other) {
    if (other.n() != n()) throw std::invalid_argument("merging stats with different n");
    elapsed += other.elapsed;
    int_q1 += other.int_q1;
    for (int i = 0; i <= n(); ++i) {
        for (int j = 0; j < 2; ++j) {
            occupation[i][j] += other.occupation[i][j];
            arrivals_at[i][j] += other.arrivals_at[i][j];
            retrials_at[i][j] += other.retrials_at[i][j];
        }
    }
    total_arrivals += other.total_arrivals;
    total_losses += other.total_losses;
    total_completions += other.total_completions;
    log_weight = 0.0;
}

bool apply_event(EventKind kind, SystemState& state, int n) {
    if (state.q1 < 0 || state.q1 > n || (state.q2 != 0 && state.q2 != 1))
        throw std::logic_error("inconsistent system state");
    switch (kind) {
        case EventKind::arrival:
            if (state.q1 < n) {
                ++state.q1;
            } else if (state.q2 == 0) {
                state.q2 = 1;
            } else {
                ++state.q3;
                return true;
            }
            return false;
        case EventKind::retrial:
            if (state.q2 == 1 && state.q1 < n) {
                ++state.q1;
                state.q2 = 0;
            }
            return false;
        case EventKind::service:
            if (state.q1 <= 0) throw std::logic_error("service completion with no busy server");
            --state.q1;
            return false;
    }
    throw std::logic_error("unreachable event kind");
}

double default_warmup(const SystemConfig& config) {
    if (config.horizon.kind == Horizon::Kind::time) return 0.05 * config.horizon.time_limit;
    return 0.0;
}

Simulator::Simulator(const SystemConfig& config, std::uint64_t stream_base, double warmup)
    : config_(config),
      warmup_(warmup),
      stats_(config.n),
      arrival_clock_(config.arrival, RngStream{config.seed, stream_base}),
      retrial_clock_(config.retrial, RngStream{config.seed, stream_base + 1}),
      service_rng_(RngStream{config.seed, stream_base + 2}.make_engine()) {
    config_.validate();
    if (warmup_ < 0.0) throw std::invalid_argument("warmup must be nonnegative");
    if (config_.horizon.kind == Horizon::Kind::time) {
        end_time_ = config_.horizon.time_limit;
        if (end_time_ <= warmup_) throw std::invalid_argument("empty measurement window");
    }
}

void Simulator::charge_occupation(double upto) {
    const double start = std::max(state_.clock, warmup_);
    const double dt = upto - start;
    if (dt > 0.0) {
        stats_.occupation[state_.q1][state_.q2] += dt;
        stats_.int_q1 += static_cast<double>(state_.q1) * dt;
    }
}

void Simulator::reschedule_service() {
    if (state_.q1 == 0) {
        next_service_ = std::numeric_limits<double>::infinity();
    } else {
        std::exponential_distribution<double> exp_dist(static_cast<double>(state_.q1) * config_.mu);
        next_service_ = state_.clock + exp_dist(service_rng_);
    }
}

void Simulator::check_conservation() const {
    const std::uint64_t lhs = raw_arrivals_;
    const std::uint64_t rhs =
        raw_completions_ + static_cast<std::uint64_t>(state_.q1) +
        static_cast<std::uint64_t>(state_.q2) + state_.q3;
    if (lhs != rhs) throw std::logic_error("customer conservation violated");
}

bool Simulator::step() {
    if (done_) return false;

    const double ta = arrival_clock_.next_time();
    const double tr = retrial_clock_.next_time();
    const double ts = next_service_;

    // Tied epochs (possible with two deterministic processes) are processed
    // arrival first, then retrial, then service.
    EventKind kind;
    double t;
    if (ta <= tr && ta <= ts) {
        kind = EventKind::arrival;
        t = ta;
    } else if (tr <= ts) {
        kind = EventKind::retrial;
        t = tr;
    } else {
        kind = EventKind::service;
        t = ts;
    }

    if (config_.horizon.kind == Horizon::Kind::time && t > end_time_) {
        charge_occupation(end_time_);
        if (config_.arrival.weighted()) {
            // Censored tail: no arrival between the last one and the horizon.
            stats_.log_weight +=
                (*config_.arrival.proposal_rate - config_.arrival.rate) *
                (end_time_ - last_arrival_epoch_);
        }
        state_.clock = end_time_;
        done_ = true;
        return false;
    }

    charge_occupation(t);
    const bool measured = t >= warmup_;
    const int pre_q1 = state_.q1;
    const int pre_q2 = state_.q2;

    switch (kind) {
        case EventKind::arrival: {
            ++raw_arrivals_;
            if (config_.arrival.weighted()) {
                stats_.log_weight += log_likelihood_ratio(
                    config_.arrival.rate, *config_.arrival.proposal_rate,
                    arrival_clock_.pending_increment());
            }
            last_arrival_epoch_ = t;
            const bool lost = apply_event(kind, state_, config_.n);
            if (measured) {
                ++stats_.total_arrivals;
                ++stats_.arrivals_at[pre_q1][pre_q2];
                if (lost) ++stats_.total_losses;
            }
            arrival_clock_.advance();
            state_.clock = t;
            if (state_.q1 != pre_q1) reschedule_service();
            if (config_.horizon.kind == Horizon::Kind::arrivals &&
                raw_arrivals_ >= config_.horizon.arrival_budget) {
                end_time_ = t;
                done_ = true;
            }
            break;
        }
        case EventKind::retrial: {
            apply_event(kind, state_, config_.n);
            if (measured) ++stats_.retrials_at[pre_q1][pre_q2];
            retrial_clock_.advance();
            state_.clock = t;
            if (state_.q1 != pre_q1) reschedule_service();
            break;
        }
        case EventKind::service: {
            ++raw_completions_;
            apply_event(kind, state_, config_.n);
            if (measured) ++stats_.total_completions;
            state_.clock = t;
            reschedule_service();
            break;
        }
    }

    check_conservation();
    return !done_;
}

TrajectoryStats Simulator::finish() {
    while (step()) {
    }
    stats_.elapsed = end_time_ - warmup_;
    if (stats_.elapsed <= 0.0) throw std::runtime_error("empty measurement window");
    return stats_;
}

TrajectoryStats run(const SystemConfig& config, double warmup) {
    return Simulator(config, 0, warmup).finish();
}

std::vector<TrajectoryStats> replicate(const SystemConfig& config, double warmup, int threads) {
    config.validate();
    const int reps = config.replications;
    std::vector<TrajectoryStats> out(reps, TrajectoryStats(config.n));
    if (threads < 1) threads = 1;
    threads = std::min(threads, reps);

    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](int worker) {
        try {
            for (int r = worker; r < reps; r += threads) {
                out[r] = Simulator(config, static_cast<std::uint64_t>(r) * 3, warmup).finish();
            }
        } catch (...) {
            errors[worker] = std::current_exception();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace retrialq
