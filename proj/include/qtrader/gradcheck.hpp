#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtrader/network.hpp"

namespace qtrader {

// Analytic-vs-finite-difference verification of the two gradient paths: the
// parameter-shift rule on the post-net circuit, and the full network gradient
// of the Huber batch loss.
struct GradCheckReport {
    struct Entry {
        std::string group;
        double max_rel_error = 0.0;
        double tolerance = 0.0;
        bool passed = false;
    };
    std::vector<Entry> entries;
    bool passed = true;

    std::string to_string() const;
};

// Parameter-shift gradients of <Z_obs> for a 4-qubit, depth-2 circuit against
// central finite differences (h = 1e-4), over `trials` random (theta, input)
// pairs. Error metric per trial: ||ps - fd|| / ||fd|| over the gradient vector.
GradCheckReport::Entry check_param_shift(int trials, double tolerance, uint64_t seed);

// Full-network batch-loss gradient vs central finite differences (h = 1e-5)
// on scalar parameters drawn from every group (LSTM, pre-net, each head's
// angles, projection, post-net). Parameters whose finite difference is below
// 1e-5 are redrawn so the comparison is not noise-dominated.
std::vector<GradCheckReport::Entry> check_network_gradient(double tolerance, uint64_t seed);

GradCheckReport run_gradcheck(double ps_tolerance, double net_tolerance, uint64_t seed);

}  // namespace qtrader
