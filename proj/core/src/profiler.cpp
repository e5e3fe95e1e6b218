#include "smartconf/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "smartconf/controller.hpp"
#include "smartconf/errors.hpp"

namespace smartconf {

namespace {

struct Accumulator {
    std::size_t count = 0;
    std::vector<double> values;
};

// Neumaier-compensated sum; keeps group means stable under sample duplication.
double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

} // namespace

std::vector<GroupStats> group_stats(std::span<const ProfileSample> samples) {
    if (samples.empty()) {
        throw InvalidArgument("group_stats: no samples");
    }
    std::map<double, Accumulator> by_setting;
    double global_min = samples.front().perf;
    for (const auto& s : samples) {
        if (!std::isfinite(s.setting) || !std::isfinite(s.perf)) {
            throw InvalidArgument("group_stats: non-finite sample");
        }
        auto& acc = by_setting[s.setting];
        ++acc.count;
        acc.values.push_back(s.perf);
        global_min = std::min(global_min, s.perf);
    }

    std::vector<GroupStats> out;
    out.reserve(by_setting.size());
    for (auto& [setting, acc] : by_setting) {
        // Sorting makes the sums independent of sample order.
        std::sort(acc.values.begin(), acc.values.end());
        const double mean = compensated_sum(acc.values) / static_cast<double>(acc.count);
        std::vector<double> squares;
        squares.reserve(acc.values.size());
        for (double v : acc.values) squares.push_back((v - mean) * (v - mean));
        const double ss = compensated_sum(squares);
        const double stddev =
            acc.count > 1 ? std::sqrt(ss / static_cast<double>(acc.count - 1)) : 0.0;
        out.push_back({setting, acc.count, mean, stddev, std::max(0.0, mean - global_min)});
    }
    return out;
}

double fit_alpha(std::span<const GroupStats> groups) {
    if (groups.size() < 2) {
        throw InsufficientData("fit_alpha: need at least 2 distinct settings");
    }
    const double n = static_cast<double>(groups.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& g : groups) {
        mean_x += g.setting;
        mean_y += g.mean;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double scale = 0.0;
    for (const auto& g : groups) {
        sxx += (g.setting - mean_x) * (g.setting - mean_x);
        sxy += (g.setting - mean_x) * (g.mean - mean_y);
        scale = std::max(scale, std::abs(g.mean));
    }
    if (sxx == 0.0) {
        throw InsufficientData("fit_alpha: settings are all equal");
    }
    const double slope = sxy / sxx;
    if (scale == 0.0) scale = 1.0;
    if (!(std::abs(slope) >= 1e-9 * scale)) {
        throw DegenerateGain("fit_alpha: knob does not affect the metric");
    }
    return slope;
}

double compute_delta(std::span<const GroupStats> groups) {
    if (groups.empty()) {
        throw InsufficientData("compute_delta: no groups");
    }
    double max_above = 0.0;
    for (const auto& g : groups) max_above = std::max(max_above, g.mean_above_min);
    const double eps = 1e-9 * max_above;

    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& g : groups) {
        if (g.mean_above_min <= 0.0 || g.mean_above_min < eps) continue;
        sum += 3.0 * g.stddev / g.mean_above_min;
        ++used;
    }
    if (used == 0) {
        throw InsufficientData("compute_delta: every group sits at the minimum performance");
    }
    return 1.0 + sum / static_cast<double>(used);
}

double compute_lambda(std::span<const GroupStats> groups) {
    if (groups.empty()) {
        throw InsufficientData("compute_lambda: no groups");
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& g : groups) {
        if (g.mean == 0.0) continue;
        sum += g.stddev / g.mean;
        ++used;
    }
    if (used == 0) {
        throw InsufficientData("compute_lambda: every group has zero mean");
    }
    return sum / static_cast<double>(used);
}

SynthesisReport synthesize(std::span<const ProfileSample> samples, double goal, bool hard) {
    const auto groups = group_stats(samples);
    SynthesisReport r{};
    r.alpha = fit_alpha(groups);
    r.delta = compute_delta(groups);
    r.lambda = compute_lambda(groups);
    r.pole = compute_pole(r.delta);
    r.virtual_goal = compute_virtual_goal(goal, r.lambda, hard);
    return r;
}

} // namespace smartconf
