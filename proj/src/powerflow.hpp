#pragma once

#include <vector>

#include "netcase.hpp"

namespace mgstab {

struct PowerflowSolution {
    std::vector<Complex> v;              // per bus, case order
    std::vector<Complex> bus_injection;  // net S per bus, pu
    std::vector<double> gen_p;           // per generator (slack units solved)
    std::vector<double> gen_q;
    std::vector<double> pv_p;            // per PV unit, pu injected at unity pf
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;

    static constexpr double kTolerance = 1e-8;
    static constexpr int kMaxIterations = 50;
};

/// Bus treated as an external boundary: voltage-regulated (slack or pv_gen)
/// with no machine attached. Such buses hold their powerflow phasor during
/// dynamics.
bool is_external_bus(const Case& c, int bus_id);

/// Newton-Raphson from a flat start; throws Domain (carrying the last
/// mismatch) when the iteration cap is hit.
PowerflowSolution run_powerflow(const Case& c);

}  // namespace mgstab
