#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smartconf {

struct ProfileSample {
    double setting; // config value, or the deputy value for indirect knobs
    double perf;

    friend bool operator==(const ProfileSample&, const ProfileSample&) = default;
};

struct GroupStats {
    double setting;
    std::size_t count;
    double mean;           // m_i
    double stddev;         // sigma_i, sample (count - 1) convention
    double mean_above_min; // m'_i, mean minus the global minimum perf
};

struct SynthesisReport {
    double alpha;
    double delta;
    double lambda;
    double pole;
    double virtual_goal;
};

// Per-setting statistics, ordered by ascending setting.
std::vector<GroupStats> group_stats(std::span<const ProfileSample> samples);

// OLS slope of group means against settings. The intercept is fitted and dropped.
double fit_alpha(std::span<const GroupStats> groups);

// 1 + mean(3 sigma_i / m'_i), skipping groups whose m'_i is below 1e-9 * max m'.
double compute_delta(std::span<const GroupStats> groups);

// mean(sigma_i / m_i), skipping groups with m_i == 0.
double compute_lambda(std::span<const GroupStats> groups);

SynthesisReport synthesize(std::span<const ProfileSample> samples, double goal, bool hard);

} // namespace smartconf
