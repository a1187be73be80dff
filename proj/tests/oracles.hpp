#ifndef GAITKIT_TESTS_ORACLES_HPP
#define GAITKIT_TESTS_ORACLES_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace gaitkit::testing {

struct BruteCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

/// Deliberately naive matcher: every reference, in order, scans every detection.
inline BruteCounts brute_force_match(const std::vector<double>& det, const std::vector<double>& ref, double window) {
    std::vector<bool> used(det.size(), false);
    BruteCounts c;
    for (double r : ref) {
        int best = -1;
        for (std::size_t j = 0; j < det.size(); ++j) {
            if (used[j] || std::abs(det[j] - r) > window / 2) continue;
            if (best < 0) {
                best = static_cast<int>(j);
                continue;
            }
            const double dj = std::abs(det[j] - r), db = std::abs(det[static_cast<std::size_t>(best)] - r);
            if (dj < db || (dj == db && det[j] < det[static_cast<std::size_t>(best)])) best = static_cast<int>(j);
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            ++c.tp;
        } else {
            ++c.fn;
        }
    }
    for (bool u : used) c.fp += !u;
    return c;
}

}  // namespace gaitkit::testing

#endif
