#include "retrialq/process.hpp"

namespace retrialq {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 RngStream::make_engine() const {
    // Two mixing rounds keep streams with adjacent ids decorrelated.
    std::uint64_t s = mix64(seed ^ mix64(stream_id * 0xda942042e4dd58b5ULL + 1));
    return std::mt19937_64(s);
}

ProcessClock::ProcessClock(const PointProcessSpec& spec, const RngStream& stream)
    : spec_(spec), rng_(stream.make_engine()) {
    spec_.validate();
    if (spec_.kind == ProcessKind::deterministic) interval_ = 1.0 / spec_.rate;
    // Processes start "just renewed" at t = 0: the first event occurs after
    // one full increment.
    schedule_next();
}

double ProcessClock::draw_increment() {
    if (spec_.kind == ProcessKind::deterministic) return interval_;
    const double r = spec_.sampling_rate();
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    std::exponential_distribution<double> exp_dist(r);
    return exp_dist(rng_);
}

void ProcessClock::schedule_next() {
    last_increment_ = draw_increment();
    if (spec_.kind == ProcessKind::deterministic) {
        // count * interval, not accumulation: multiples shared by two
        // deterministic grids then coincide bit-exactly.
        next_time_ = static_cast<double>(count_ + 1) * interval_;
    } else {
        next_time_ = last_event_time_ + last_increment_;
    }
}

void ProcessClock::advance() {
    if (std::isfinite(next_time_)) last_event_time_ = next_time_;
    ++count_;
    schedule_next();
}

double next_increment(const PointProcessSpec& spec, const RngStream& stream) {
    spec.validate();
    if (spec.kind == ProcessKind::deterministic) return 1.0 / spec.rate;
    const double r = spec.sampling_rate();
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    auto rng = stream.make_engine();
    std::exponential_distribution<double> exp_dist(r);
    return exp_dist(rng);
}

}  // namespace retrialq
