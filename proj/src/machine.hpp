#pragma once

#include <span>
#include <vector>

#include "netcase.hpp"
#include "powerflow.hpp"

namespace mgstab {

struct MachineState {
    double delta = 0.0;      // rotor angle, rad
    double omega_dev = 0.0;  // speed deviation from synchronous, rad/s
};

/// Constant EMF behind the transient reactance (classical model); computed
/// once pre-fault and held for the whole run.
struct InternalSource {
    double emf_mag = 0.0;
    double emf_angle0 = 0.0;
};

struct MachineInit {
    InternalSource source;
    MachineState state;
    double pm = 0.0;  // dispatched electrical power at the operating point
};

/// E' angle0 = V_terminal + j xdp I_gen, delta0 = arg(E'), omega_dev = 0.
MachineInit init_classical_gen(const GenUnit& gen, const Case& c, const PowerflowSolution& pf,
                               int gen_index);

/// Pe_i = sum_j |E_i||E_j| (G_ij cos d_ij + B_ij sin d_ij) over a matrix
/// reduced to the source nodes, ordered like `sources`. `deltas` carries the
/// instantaneous angle of every source (fixed sources pass their constant one).
std::vector<double> electrical_power(std::span<const double> deltas,
                                     std::span<const InternalSource> sources,
                                     const YbusMatrix& y_sources);

struct SwingDerivative {
    double d_delta = 0.0;  // rad/s
    double d_omega = 0.0;  // rad/s²
};

/// d_delta = omega_dev,
/// d_omega = (omega_s / 2H) (pm - pe - D omega_dev / omega_s).
SwingDerivative swing_rhs(const MachineState& state, double h_sys, double d_damp, double pm,
                          double pe, double omega_s);

}  // namespace mgstab
