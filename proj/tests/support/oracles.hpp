#pragma once

// Brute-force reference implementations. Deliberately naive: long double,
// linear scans, two-pass variance, explicit normal equations. Nothing here
// calls into the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

struct Point {
    double x;
    double y;
};

struct Group {
    long double x = 0;
    std::vector<long double> ys;
    long double mean = 0;
    long double sd = 0;
    long double above_min = 0;
};

inline double pole(double delta) {
    if (delta <= 2.0) return 0.0;
    return static_cast<double>(1.0L - 2.0L / static_cast<long double>(delta));
}

inline double virtual_goal(double goal, double lambda, bool hard) {
    if (!hard) return goal;
    return static_cast<double>((1.0L - static_cast<long double>(lambda)) * static_cast<long double>(goal));
}

inline std::vector<Group> groups(const std::vector<Point>& pts) {
    std::vector<Group> out;
    for (const auto& p : pts) {
        bool found = false;
        for (auto& g : out) {
            if (g.x == p.x) {
                g.ys.push_back(p.y);
                found = true;
                break;
            }
        }
        if (!found) {
            Group g;
            g.x = p.x;
            g.ys.push_back(p.y);
            out.push_back(std::move(g));
        }
    }
    long double global_min = std::numeric_limits<long double>::infinity();
    for (const auto& p : pts) global_min = std::min<long double>(global_min, p.y);
    for (auto& g : out) {
        long double s = 0;
        for (auto y : g.ys) s += y;
        g.mean = s / static_cast<long double>(g.ys.size());
        long double ss = 0;
        for (auto y : g.ys) ss += (y - g.mean) * (y - g.mean);
        g.sd = g.ys.size() > 1 ? std::sqrt(ss / static_cast<long double>(g.ys.size() - 1)) : 0.0L;
        g.above_min = g.mean - global_min;
    }
    std::sort(out.begin(), out.end(), [](const Group& a, const Group& b) { return a.x < b.x; });
    return out;
}

// Slope from the 2x2 normal equations [n Sx; Sx Sxx][b0 b1]' = [Sy Sxy]'.
inline double slope(const std::vector<Group>& gs) {
    long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& g : gs) {
        n += 1;
        sx += g.x;
        sy += g.mean;
        sxx += g.x * g.x;
        sxy += g.x * g.mean;
    }
    const long double det = n * sxx - sx * sx;
    return static_cast<double>((n * sxy - sx * sy) / det);
}

inline std::optional<double> delta(const std::vector<Group>& gs) {
    long double top = 0;
    for (const auto& g : gs) top = std::max(top, g.above_min);
    long double sum = 0;
    int used = 0;
    for (const auto& g : gs) {
        if (g.above_min <= 0 || g.above_min < 1e-9L * top) continue;
        sum += 3.0L * g.sd / g.above_min;
        ++used;
    }
    if (used == 0) return std::nullopt;
    return static_cast<double>(1.0L + sum / used);
}

inline std::optional<double> lambda(const std::vector<Group>& gs) {
    long double sum = 0;
    int used = 0;
    for (const auto& g : gs) {
        if (g.mean == 0) continue;
        sum += g.sd / g.mean;
        ++used;
    }
    if (used == 0) return std::nullopt;
    return static_cast<double>(sum / used);
}

inline bool close(double a, double b, double rel) {
    if (a == b) return true;
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) / scale <= rel;
}

} // namespace oracle
