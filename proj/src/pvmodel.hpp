#pragma once

#include "common.hpp"
#include "netcase.hpp"

namespace mgstab {
namespace pvmodel {

// Fixed physical constants used by the array characteristic.
inline constexpr double kElectronCharge = 1.602176634e-19;  // C
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K

/// Voltage floor used when converting a power reference into a current
/// magnitude, and the DC-link collapse threshold.
inline constexpr double kVBusFloor = 1e-3;   // pu
inline constexpr double kVdcFloor = 1e-6;    // V

struct PvState {
    double v_dc = 0.0;          // V
    double irradiance = 1000.0; // W/m²
};

/// Array current at DC voltage v_dc under irradiance g. The short-circuit
/// current scales linearly with g (g = 1000 W/m² is the rated point).
double pv_current(double v_dc, const PvParams& p, double g = 1000.0);

/// Array power I(v_dc) * v_dc, W.
double pv_power(double v_dc, const PvParams& p, double g = 1000.0);

/// Open-circuit voltage of the array, V.
double open_circuit_voltage(const PvParams& p, double g = 1000.0);

/// The unique interior maximizer of pv_power on (0, V_oc), to 1e-9 V.
double mppt_voltage(const PvParams& p, double g = 1000.0);

/// DC-link voltage derivative from the power balance
/// (C/2) d(V_dc²)/dt = P_pv - P_dc, i.e. dV_dc/dt = (p_pv - p_dc) / (C V_dc).
double dc_link_rhs(const PvState& state, double p_pv, double p_dc, const PvParams& p);

/// Unity-power-factor injection: |I| = min(p_ref / max(|v|, floor), i_max),
/// phase aligned with the bus voltage. Inputs in system per-unit.
Complex injection_current(double p_ref_pu, double i_max_pu, Complex v_bus);

/// Unit power reference on the system base: MPP power capped at the rating.
double unit_p_ref_pu(const PvParams& p, double base_mva, double g = 1000.0);

/// Inverter current ceiling on the system base (i_max is a multiple of the
/// unit's rated current).
double unit_i_max_pu(const PvParams& p, double base_mva);

/// Full injection law for one unit.
Complex pv_injection(const PvState& state, Complex v_bus, const PvParams& p, double base_mva);

/// Steady-state DC operating voltage: the MPP voltage, or when the array can
/// make more than the rating, the point on the falling branch where the array
/// power equals the rating.
double pinned_voltage(const PvParams& p, double base_mva, double g = 1000.0);

/// Scale a unit to a target MPP output in MW: n_p (and the DC capacitance)
/// scale linearly, rating follows the target.
PvParams scaled_to_mw(const PvParams& tmpl, int bus, double mw);

/// Built-in slot template (1000-cell string, ~5 MW at STC) used by studies
/// when the case carries no PV units of its own.
PvParams default_unit(int bus, double mw);

}  // namespace pvmodel
}  // namespace mgstab
