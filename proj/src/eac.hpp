#pragma once

#include "common.hpp"

namespace mgstab {
namespace eac {

/// Single machine vs infinite bus, sine power-angle curves for the three
/// network stages.
struct SmibSpec {
    double h = 0.0;        // s, system base
    double omega_s = 0.0;  // rad/s
    double pm = 0.0;       // pu
    double pmax_pre = 0.0;
    double pmax_fault = 0.0;
    double pmax_post = 0.0;
};

/// Fault-on trajectory for zero electrical power during the fault:
/// delta(t) = (omega_s pm / 4H) t² + delta0. Rejects pmax_fault != 0.
double fault_on_angle(const SmibSpec& spec, double delta0, double t);

/// t_cr = sqrt(4H (delta_cr - delta0) / (omega_s pm)); the algebraic inverse
/// of fault_on_angle.
double critical_clearing_time(const SmibSpec& spec, double delta0, double delta_cr);

/// Equal-area critical clearing angle. For pmax_fault = 0 and identical
/// pre/post curves this is the closed-form
///   cos dcr = (pm/Pmax)(dmax - d0) + cos dmax,  dmax = pi - asin(pm/Pmax);
/// otherwise the area balance is solved by bisection on dcr.
double critical_angle_eac(const SmibSpec& spec, double delta0);

}  // namespace eac
}  // namespace mgstab
