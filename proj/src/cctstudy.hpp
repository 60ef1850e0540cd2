#pragma once

#include <string>
#include <vector>

#include "simengine.hpp"

namespace mgstab {

enum class CctStatus {
    Ok,
    ExceedsHorizon,    // no unstable clearing time up to the horizon
    BelowResolution,   // already unstable at the first tried clearing time
};

struct CctTrial {
    double t_clear = 0.0;  // absolute time
    Verdict verdict = Verdict::Stable;
};

struct CctResult {
    CctStatus status = CctStatus::Ok;
    double cct = 0.0;           // last stable clearing instant minus t_fault
    double bracket_low = 0.0;   // absolute clearing times around the boundary
    double bracket_high = 0.0;
    double resolution = 0.0;
    std::vector<CctTrial> trials;
};

struct StudyRow {
    std::string label;
    bool feasible = true;
    CctStatus status = CctStatus::Ok;
    double cct = 0.0;
    double peak_fault_current = 0.0;
};

/// Knobs shared by the study drivers. The scenario's own t_clear acts as the
/// search horizon (largest clearing time tried); each trial's t_end is
/// t_clear + t_settle + a fixed post-clear margin.
struct StudyConfig {
    SimConfig sim;
    double resolution = 0.1;    // bracket width target; the sweep step
    bool use_bisection = true;
    double probe_window = 0.1;  // fault duration for the fault-current probe, s
    unsigned threads = 1;       // 0 = hardware concurrency
};

/// Clearing time increased from t_fault + t_step in t_step increments until
/// the first unstable verdict (the procedure the CCT definition comes from).
CctResult find_cct_sweep(const Case& c, const Scenario& sc, const SimConfig& cfg, double t_step,
                         unsigned threads = 1);

/// Bisection on the clearing time over the first-swing stable/unstable
/// boundary; bracket shrinks to `resolution`.
CctResult find_cct_bisect(const Case& c, const Scenario& sc, const SimConfig& cfg,
                          double resolution);

/// One CCT per PV share, a single unit of the given MW at `pv_bus` replacing
/// every PV unit of the case (0 MW = no PV at all); the machine dispatch is
/// rebalanced by the powerflow each time.
std::vector<StudyRow> sweep_pv_share(const Case& c, const std::vector<double>& shares_mw,
                                     int pv_bus, const Scenario& sc, const StudyConfig& study);

/// Centralized (one unit of total_mw at centralized_bus) vs distributed
/// (units per layout, same total) under the identical fault.
std::vector<StudyRow> compare_topologies(const Case& c, double total_mw, int centralized_bus,
                                         const std::vector<std::pair<int, double>>& layout_bus_mw,
                                         const Scenario& sc, const StudyConfig& study);

struct ProbeResult {
    double peak = 0.0;  // max |I| into the fault shunt over the fault-on window
    std::vector<std::pair<std::string, double>> per_source;  // machine/PV peaks
};

ProbeResult fault_current_probe(const Case& c, const Scenario& sc, const SimConfig& cfg);

}  // namespace mgstab
