#pragma once

#include <Eigen/LU>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "machine.hpp"
#include "netcase.hpp"
#include "powerflow.hpp"
#include "pvmodel.hpp"

namespace mgstab {

struct Scenario {
    int fault_bus = 0;
    Complex fault_admittance{1e6, -1e6};  // "bolted" default
    double t_fault = 0.0;
    double t_clear = 0.0;
    std::vector<int> island_branches;        // branch indices opened at t_fault
    std::vector<std::string> trip_elements;  // "pv:<idx>" / "load:<idx>", removed at t_fault
};

struct SimConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    double angle_limit = kPi;  // rad, on the relative rotor deviation
    double v_recover = 0.9;    // pu; 0 disables the voltage criterion
    double t_settle = 3.0;     // s, final window the voltage must hold through
};

enum class Verdict { Stable, Unstable };

struct SimResult {
    std::vector<double> time;
    std::vector<std::string> machine_names;  // "g<bus>"
    std::vector<std::string> bus_names;      // monitored buses
    std::vector<std::string> source_names;   // machines then PV units

    // series[i][k] = quantity of element i at time[k]
    std::vector<std::vector<double>> delta;           // rad
    std::vector<std::vector<double>> omega_dev;       // rad/s
    std::vector<std::vector<double>> bus_vm;          // pu
    std::vector<std::vector<double>> source_current;  // pu magnitude
    std::vector<double> max_rel_dev;                  // rad, vs the angle reference
    std::vector<double> fault_current;                // pu into the fault shunt

    Verdict verdict = Verdict::Stable;
    double max_rel_angle_dev = 0.0;
    double peak_fault_current = 0.0;
    double t_clear = 0.0;
    bool diverged = false;
    double diverged_at = 0.0;
};

/// The three reduced network stages. Retained nodes: machine internal nodes,
/// external-grid buses, PV buses, the fault bus and machine terminals; the
/// same node set in every stage.
struct StageMatrices {
    YbusMatrix pre;
    YbusMatrix fault_on;
    YbusMatrix post;
};

StageMatrices stage_matrices(const Case& c, const Scenario& sc);

// ---------------------------------------------------------------------------
// Algebraic network solve

/// One fixed-voltage source (machine EMF or external-grid phasor) with its
/// instantaneous angle.
struct SourceSpec {
    double emf_mag = 0.0;
    double angle = 0.0;
};

/// One saturating PV injection, addressed by node index in the reduced matrix.
struct PvSlot {
    int node = 0;       // index into the matrix node list (a retained bus)
    double p_ref = 0.0; // pu on the system base
    double i_max = 0.0; // pu on the system base
};

struct NetworkSolution {
    std::vector<Complex> v_bus;           // per non-source retained node, matrix order
    std::vector<Complex> source_current;  // per source, out of the source node
    std::vector<Complex> pv_current;      // per PV slot
    std::vector<double> pe;               // Re(E conj(I)) per source
    int solves = 0;                       // linear solves spent (1 when no PV)
};

/// Solve the reduced network: the first `sources.size()` nodes of `y_red`
/// carry known voltages, the rest receive the PV fixed point. Norton form of
/// the sources; iterate on the PV injections to 1e-8 pu, cap 50.
NetworkSolution solve_network(const YbusMatrix& y_red, std::span<const SourceSpec> sources,
                              std::span<const PvSlot> pvs);

// ---------------------------------------------------------------------------
// Engine

/// A prepared simulation: powerflow, machine initialization and the factored
/// stage matrices, reusable across clearing-time trials of one scenario.
class TransientSim {
public:
    TransientSim(const Case& c, const Scenario& sc, const SimConfig& cfg);
    ~TransientSim();
    TransientSim(TransientSim&&) noexcept;

    /// Integrate pre -> fault-on -> post with the prepared matrices.
    SimResult run(double t_clear, double t_end) const;
    SimResult run() const;  // scenario t_clear, config t_end

    const PowerflowSolution& powerflow() const;
    const std::vector<MachineInit>& machines() const;
    const StageMatrices& stages() const;
    int machine_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SimResult simulate(const Case& c, const Scenario& sc, const SimConfig& cfg);

/// Re-derivable verdict: unstable iff the relative rotor deviation exceeds
/// angle_limit after clearing, or any monitored bus voltage dips below
/// v_recover inside the final t_settle window.
Verdict classify_stability(const SimResult& r, const SimConfig& cfg);

}  // namespace mgstab
