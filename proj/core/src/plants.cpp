#include "smartconf/plants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "smartconf/errors.hpp"

namespace smartconf {

namespace {

// Independent, reproducible stream per (seed, purpose).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x5eedu};
    return std::mt19937_64(seq);
}

std::uint64_t poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

double sinusoid_offset(std::uint64_t seed) {
    auto rng = make_stream(seed, 99);
    return std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
}

double background(double base, double amplitude, double period, double offset, double jitter,
                  std::int64_t tick, std::mt19937_64& rng) {
    // The jitter draw happens every tick so the stream never depends on knob values.
    const double noise = std::normal_distribution<double>(0.0, 1.0)(rng);
    const double swing =
        period > 0.0
            ? amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(tick) / period + offset)
            : 0.0;
    return std::max(0.0, base + swing + jitter * noise);
}

std::size_t served(std::size_t length, double fraction) {
    return std::min(length, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(length))));
}

std::size_t capacity(double knob) {
    if (!(knob > 0.0)) return 0;
    if (knob >= 1e15) return std::numeric_limits<std::size_t>::max() / 2;
    return static_cast<std::size_t>(std::floor(knob));
}

} // namespace

std::int64_t WorkloadSchedule::total_ticks() const {
    std::int64_t total = 0;
    for (const auto& p : phases) total += p.duration;
    return total;
}

const WorkloadPhase& WorkloadSchedule::at(std::int64_t tick) const {
    if (phases.empty()) throw InvalidArgument("empty workload schedule");
    std::int64_t start = 0;
    for (const auto& p : phases) {
        if (tick < start + p.duration) return p;
        start += p.duration;
    }
    return phases.back();
}

void WorkloadSchedule::validate() const {
    if (phases.empty()) throw InvalidArgument("workload schedule has no phases");
    for (const auto& p : phases) {
        if (p.duration <= 0) throw InvalidArgument("phase durations must be positive");
        if (p.arrival_rate < 0.0 || p.read_fraction < 0.0 || p.read_fraction > 1.0) {
            throw InvalidArgument("phase rates out of range");
        }
    }
}

MetricReading Plant::step(std::span<const double> knob_values) {
    if (knob_values.size() != knob_count()) {
        throw InvalidArgument("expected one value per knob");
    }
    return step([knob_values](std::size_t i, const Sense&) { return knob_values[i]; });
}

// ---------------------------------------------------------------------------

BoundedQueuePlant::BoundedQueuePlant(BoundedQueueConfig config, WorkloadSchedule schedule)
    : config_(config),
      schedule_(std::move(schedule)),
      arrivals_rng_(make_stream(schedule_.seed, 1)),
      sizes_rng_(make_stream(schedule_.seed, 2)),
      phase_offset_(sinusoid_offset(schedule_.seed)),
      base_(config.base_mem),
      memory_(config.base_mem) {
    schedule_.validate();
}

std::span<const double> BoundedQueuePlant::queued_sizes() const {
    return {queue_.data() + head_, queue_.size() - head_};
}

MetricReading BoundedQueuePlant::step(const KnobHook& hook) {
    const double knob = hook(0, {memory_, static_cast<double>(queue_length())});
    const auto& phase = schedule_.at(tick_);

    // Serve before admitting so one tick never overshoots the limit.
    const std::size_t done = served(queue_length(), config_.drain_fraction);
    head_ += done;
    throughput_ += static_cast<double>(done);
    if (head_ > 4096 && head_ * 2 > queue_.size()) {
        queue_.erase(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }

    const std::uint64_t arrivals = poisson(arrivals_rng_, phase.arrival_rate);
    const std::size_t cap = capacity(knob);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint64_t i = 0; i < arrivals && queue_length() < cap; ++i) {
        double size = phase.request_size_mb;
        if (phase.read_fraction > 0.0 && unit(sizes_rng_) < phase.read_fraction) {
            size = phase.read_size_mb;
        }
        queue_.push_back(size);
    }

    base_ = background(config_.base_mem, config_.base_amplitude, config_.base_period, phase_offset_,
                       config_.base_jitter, tick_, arrivals_rng_);
    double queued = 0.0;
    for (double s : queued_sizes()) queued += s;
    memory_ = base_ + queued;
    ++tick_;

    MetricReading r;
    r.metric = memory_;
    r.deputy = static_cast<double>(queue_length());
    r.deputies = {r.deputy};
    r.throughput_cum = throughput_;
    r.violation = memory_ > config_.mem_limit;
    r.knob_used = true;
    return r;
}

// ---------------------------------------------------------------------------

WriteBufferPlant::WriteBufferPlant(WriteBufferConfig config, WorkloadSchedule schedule,
                                   double initial_lower)
    : config_(config),
      schedule_(std::move(schedule)),
      rng_(make_stream(schedule_.seed, 3)),
      lower_(initial_lower) {
    schedule_.validate();
    if (!(config_.upper_limit > 0.0 && config_.upper_limit <= 1.0)) {
        throw InvalidArgument("upper limit must lie in (0, 1]");
    }
    if (!(initial_lower >= 0.0 && initial_lower < config_.upper_limit)) {
        throw InvalidArgument("lower limit must lie in [0, upper limit)");
    }
    fill_ = lower_ * config_.heap_mb;
}

double WriteBufferPlant::limit() const {
    return std::numeric_limits<double>::infinity();
}

double WriteBufferPlant::worst_latency() const {
    double worst = flushing_ ? now_ - flush_start_ : 0.0;
    for (const auto& f : recent_) {
        if (f.end > now_ - config_.latency_window) worst = std::max(worst, f.duration);
    }
    return worst;
}

void WriteBufferPlant::start_flush(const KnobHook& hook) {
    const double requested = hook(0, {worst_latency(), fill_});
    knob_used_ = true;
    // The lower limit must stay strictly below the upper one.
    const double ceiling = std::nextafter(config_.upper_limit, 0.0);
    lower_ = std::clamp(std::isfinite(requested) ? requested : lower_, 0.0, ceiling);

    std::uniform_real_distribution<double> wobble(-config_.flush_rate_jitter,
                                                  config_.flush_rate_jitter);
    const double rate = config_.flush_rate_mb * (1.0 + wobble(rng_));
    flush_target_ = lower_ * config_.heap_mb;
    const double amount = std::max(0.0, fill_ - flush_target_);
    flushing_ = true;
    flush_start_ = now_;
    flush_left_ = std::max(1e-3, config_.flush_overhead_s + amount / rate);
    flush_drain_rate_ = flush_left_ > 0.0 ? amount / flush_left_ : 0.0;
    ++flushes_;
}

MetricReading WriteBufferPlant::step(const KnobHook& hook) {
    const auto& phase = schedule_.at(tick_);
    const double noise = std::normal_distribution<double>(0.0, 1.0)(rng_);
    const double write_rate = std::max(0.0, phase.arrival_rate * (1.0 + config_.write_jitter * noise));
    const double upper_mb = config_.upper_limit * config_.heap_mb;
    knob_used_ = false;

    double remaining = 1.0;
    while (remaining > 1e-12) {
        if (flushing_) {
            const double dt = std::min(remaining, flush_left_);
            flush_left_ -= dt;
            fill_ = std::max(flush_target_, fill_ - flush_drain_rate_ * dt);
            remaining -= dt;
            now_ += dt;
            if (flush_left_ <= 1e-12) {
                flushing_ = false;
                fill_ = flush_target_;
                recent_.push_back({now_, now_ - flush_start_});
            }
            continue;
        }
        const double room = std::max(0.0, upper_mb - fill_);
        if (write_rate * remaining < room) {
            fill_ += write_rate * remaining;
            written_ += write_rate * remaining;
            now_ += remaining;
            remaining = 0.0;
        } else {
            const double dt = write_rate > 0.0 ? room / write_rate : remaining;
            fill_ = upper_mb;
            written_ += room;
            now_ += dt;
            remaining -= dt;
            start_flush(hook);
        }
    }
    now_ = static_cast<double>(tick_ + 1);
    ++tick_;
    while (!recent_.empty() && recent_.front().end <= now_ - config_.latency_window) {
        recent_.pop_front();
    }

    MetricReading r;
    r.metric = worst_latency();
    r.deputy = fill_;
    r.deputies = {fill_};
    r.throughput_cum = written_;
    r.violation = false;
    r.knob_used = knob_used_;
    return r;
}

// ---------------------------------------------------------------------------

DualQueuePlant::DualQueuePlant(DualQueueConfig config, WorkloadSchedule schedule)
    : config_(config),
      schedule_(std::move(schedule)),
      arrivals_rng_(make_stream(schedule_.seed, 4)),
      mix_rng_(make_stream(schedule_.seed, 5)),
      phase_offset_(sinusoid_offset(schedule_.seed)),
      memory_(config.base_mem) {
    schedule_.validate();
}

MetricReading DualQueuePlant::step(const KnobHook& hook) {
    const double request_knob = hook(0, {memory_, static_cast<double>(requests_.size())});
    const double response_knob = hook(1, {memory_, static_cast<double>(responses_.size())});
    const auto& phase = schedule_.at(tick_);

    const std::size_t sent = served(responses_.size(), config_.response_drain_fraction);
    responses_.erase(responses_.begin(), responses_.begin() + static_cast<std::ptrdiff_t>(sent));
    throughput_ += static_cast<double>(sent);

    // A full response queue rejects the reply; the request is still consumed.
    const std::size_t response_cap = capacity(response_knob);
    std::size_t handled = served(requests_.size(), config_.request_drain_fraction);
    for (; handled > 0; --handled) {
        if (responses_.size() < response_cap) responses_.push_back(requests_.front());
        requests_.pop_front();
    }

    const std::uint64_t arrivals = poisson(arrivals_rng_, phase.arrival_rate);
    const std::size_t request_cap = capacity(request_knob);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint64_t i = 0; i < arrivals && requests_.size() < request_cap; ++i) {
        requests_.push_back(phase.read_fraction > 0.0 && unit(mix_rng_) < phase.read_fraction);
    }

    const double base = background(config_.base_mem, config_.base_amplitude, config_.base_period,
                                   phase_offset_, config_.base_jitter, tick_, arrivals_rng_);
    double queued = 0.0;
    for (bool read : requests_) queued += read ? config_.read_request_mb : config_.write_request_mb;
    for (bool read : responses_) queued += read ? config_.read_response_mb : config_.write_response_mb;
    memory_ = base + queued;
    ++tick_;

    MetricReading r;
    r.metric = memory_;
    r.deputies = {static_cast<double>(requests_.size()), static_cast<double>(responses_.size())};
    r.deputy = r.deputies[0];
    r.throughput_cum = throughput_;
    r.violation = memory_ > config_.mem_limit;
    r.knob_used = true;
    return r;
}

} // namespace smartconf
