#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace smartconf {

// One workload phase. Fields a plant does not use are ignored.
struct WorkloadPhase {
    std::int64_t duration = 1;
    double arrival_rate = 0.0;    // requests/tick; MB/tick of writes for the write buffer
    double request_size_mb = 1.0; // size of a write request
    double read_fraction = 0.0;   // share of arrivals that are reads
    double read_size_mb = 0.0;    // size of a read request (bounded queue only)
};

struct WorkloadSchedule {
    std::vector<WorkloadPhase> phases;
    std::uint64_t seed = 1;

    std::int64_t total_ticks() const;
    // Phase active at `tick`; ticks past the end stay in the last phase.
    const WorkloadPhase& at(std::int64_t tick) const;
    // Throws InvalidArgument on an empty schedule or a nonpositive duration.
    void validate() const;
};

// What a use site sees when it consults a knob.
struct Sense {
    double metric;
    double deputy;
};

// Called by a plant whenever it uses knob `index`; returns the value to apply.
using KnobHook = std::function<double(std::size_t index, const Sense& sense)>;

struct MetricReading {
    double metric = 0.0;
    double deputy = 0.0;              // deputy of knob 0
    std::vector<double> deputies;     // one per knob
    double throughput_cum = 0.0;
    bool violation = false;
    bool knob_used = false;           // false when a conditional knob was not consulted
};

class Plant {
public:
    virtual ~Plant() = default;

    virtual std::size_t knob_count() const = 0;
    virtual std::int64_t tick() const = 0;
    // Hard limit on the metric; +inf when the plant has none.
    virtual double limit() const = 0;
    // Advances one tick, consulting `hook` where the subsystem reads its knobs.
    virtual MetricReading step(const KnobHook& hook) = 0;

    // Fixed knob values for the tick.
    MetricReading step(std::span<const double> knob_values);
};

// Bounded request queue under a memory ceiling. Knob: max queue size (count).
// Deputy: queue length. Metric: memory used (MB).
struct BoundedQueueConfig {
    double mem_limit = 495.0;
    double base_mem = 340.0;
    double base_amplitude = 50.0; // slow background swing (GC, caches)
    double base_period = 100.0;
    double base_jitter = 4.0;
    double drain_fraction = 0.2;  // share of the queue served per tick
};

class BoundedQueuePlant final : public Plant {
public:
    BoundedQueuePlant(BoundedQueueConfig config, WorkloadSchedule schedule);

    std::size_t knob_count() const override { return 1; }
    std::int64_t tick() const override { return tick_; }
    double limit() const override { return config_.mem_limit; }
    using Plant::step;
    MetricReading step(const KnobHook& hook) override;

    double memory_used() const { return memory_; }
    double base_memory() const { return base_; }
    // Sizes currently queued, oldest first.
    std::span<const double> queued_sizes() const;
    std::size_t queue_length() const { return queue_.size() - head_; }

private:
    BoundedQueueConfig config_;
    WorkloadSchedule schedule_;
    std::mt19937_64 arrivals_rng_;
    std::mt19937_64 sizes_rng_;
    double phase_offset_;
    std::vector<double> queue_; // FIFO, front = oldest
    std::size_t head_ = 0;
    std::int64_t tick_ = 0;
    double base_;
    double memory_;
    double throughput_ = 0.0;
};

// Write buffer with a flush that blocks writers. Knob: lower limit (fraction of
// heap) the flush drains down to; consulted only when a flush starts.
// Metric: worst blocked interval (s) in a sliding window.
struct WriteBufferConfig {
    double heap_mb = 1000.0;
    double upper_limit = 0.4;
    double flush_rate_mb = 20.0;    // MB/s
    double flush_rate_jitter = 0.1; // +- relative, per flush
    double flush_overhead_s = 0.5;
    double write_jitter = 0.2;      // relative stddev of per-tick write rate
    double latency_window = 30.0;   // s
};

class WriteBufferPlant final : public Plant {
public:
    WriteBufferPlant(WriteBufferConfig config, WorkloadSchedule schedule, double initial_lower);

    std::size_t knob_count() const override { return 1; }
    std::int64_t tick() const override { return tick_; }
    double limit() const override;
    using Plant::step;
    MetricReading step(const KnobHook& hook) override;

    double fill_mb() const { return fill_; }
    double lower_limit() const { return lower_; }
    bool flushing() const { return flushing_; }
    std::size_t flush_count() const { return flushes_; }
    double worst_latency() const;

private:
    struct Flush {
        double end;
        double duration;
    };

    void start_flush(const KnobHook& hook);

    WriteBufferConfig config_;
    WorkloadSchedule schedule_;
    std::mt19937_64 rng_;
    std::int64_t tick_ = 0;
    double now_ = 0.0;
    double fill_ = 0.0;
    double lower_;
    bool flushing_ = false;
    double flush_start_ = 0.0;
    double flush_left_ = 0.0;
    double flush_target_ = 0.0;
    double flush_drain_rate_ = 0.0;
    std::deque<Flush> recent_;
    std::size_t flushes_ = 0;
    double written_ = 0.0;
    bool knob_used_ = false;
};

// Request and response queues sharing one heap. Knob 0 limits the request
// queue, knob 1 the response queue. Writes are large requests with small
// responses; reads the reverse.
struct DualQueueConfig {
    double mem_limit = 495.0;
    double base_mem = 340.0;
    double base_amplitude = 50.0;
    double base_period = 100.0;
    double base_jitter = 4.0;
    double request_drain_fraction = 0.2;
    double response_drain_fraction = 0.6;
    double write_request_mb = 2.0;
    double write_response_mb = 0.1;
    double read_request_mb = 0.1;
    double read_response_mb = 2.0;
};

class DualQueuePlant final : public Plant {
public:
    DualQueuePlant(DualQueueConfig config, WorkloadSchedule schedule);

    std::size_t knob_count() const override { return 2; }
    std::int64_t tick() const override { return tick_; }
    double limit() const override { return config_.mem_limit; }
    using Plant::step;
    MetricReading step(const KnobHook& hook) override;

    double memory_used() const { return memory_; }
    std::size_t request_length() const { return requests_.size(); }
    std::size_t response_length() const { return responses_.size(); }

private:
    DualQueueConfig config_;
    WorkloadSchedule schedule_;
    std::mt19937_64 arrivals_rng_;
    std::mt19937_64 mix_rng_;
    double phase_offset_;
    std::deque<bool> requests_;  // true = read
    std::deque<bool> responses_;
    std::int64_t tick_ = 0;
    double memory_;
    double throughput_ = 0.0;
};

} // namespace smartconf
