#include "eac.hpp"

#include <cmath>

namespace mgstab {
namespace eac {

double fault_on_angle(const SmibSpec& spec, double delta0, double t) {
    if (spec.pmax_fault != 0.0)
        raise(ErrorKind::Domain, "fault_on_angle applies only when fault-on power is zero");
    if (t < 0.0) raise(ErrorKind::Domain, "fault_on_angle requires t >= 0");
    return spec.omega_s * spec.pm / (4.0 * spec.h) * t * t + delta0;
}

double critical_clearing_time(const SmibSpec& spec, double delta0, double delta_cr) {
    if (delta_cr < delta0)
        raise(ErrorKind::Domain, "critical_clearing_time requires delta_cr >= delta0");
    if (spec.pm <= 0.0) raise(ErrorKind::Domain, "critical_clearing_time requires pm > 0");
    return std::sqrt(4.0 * spec.h * (delta_cr - delta0) / (spec.omega_s * spec.pm));
}

double critical_angle_eac(const SmibSpec& spec, double delta0) {
    if (spec.pm >= spec.pmax_post)
        raise(ErrorKind::Domain, "no post-fault equilibrium: pm >= pmax_post");
    if (spec.pmax_fault >= spec.pm)
        raise(ErrorKind::Domain, "machine does not accelerate: pmax_fault >= pm");

    double dmax = kPi - std::asin(spec.pm / spec.pmax_post);
    if (delta0 >= dmax)
        raise(ErrorKind::Domain, "delta0 beyond the post-fault unstable equilibrium");

    if (spec.pmax_fault == 0.0 && spec.pmax_pre == spec.pmax_post) {
        double rhs = spec.pm / spec.pmax_post * (dmax - delta0) + std::cos(dmax);
        if (rhs < -1.0 || rhs > 1.0)
            raise(ErrorKind::Domain, "equal-area balance has no solution in (delta0, dmax)");
        return std::acos(rhs);
    }

    // accelerating area on (delta0, d) minus decelerating area on (d, dmax),
    // both with closed-form antiderivatives of pm - P sin(delta)
    auto balance = [&](double d) {
        double acc = spec.pm * (d - delta0) + spec.pmax_fault * (std::cos(d) - std::cos(delta0));
        double dec = -spec.pm * (dmax - d) - spec.pmax_post * (std::cos(dmax) - std::cos(d));
        return acc - dec;
    };
    double lo = delta0, hi = dmax;
    if (balance(hi) < 0.0)
        raise(ErrorKind::Domain, "equal-area balance has no solution in (delta0, dmax)");
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        if (balance(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace eac
}  // namespace mgstab
