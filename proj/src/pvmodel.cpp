#include "pvmodel.hpp"

#include <cmath>

namespace mgstab {
namespace pvmodel {

namespace {

// q / (k T A), the exponent coefficient of the diode term, 1/V
double diode_coef(const PvParams& p) {
    return kElectronCharge / (kBoltzmann * p.t_cell * p.a_ideality);
}

}  // namespace

double pv_current(double v_dc, const PvParams& p, double g) {
    if (v_dc < 0.0) raise(ErrorKind::Domain, "pv_current requires v_dc >= 0");
    double isc = p.i_sc_stc * g / 1000.0;
    double expo = diode_coef(p) * v_dc / p.n_s;
    if (expo > 700.0)
        raise(ErrorKind::Numeric, "pv_current: diode exponent out of range (v_dc too large)");
    return p.n_p * isc - p.n_p * p.i_rs * (std::exp(expo) - 1.0);
}

double pv_power(double v_dc, const PvParams& p, double g) {
    return pv_current(v_dc, p, g) * v_dc;
}

double open_circuit_voltage(const PvParams& p, double g) {
    double isc = p.i_sc_stc * g / 1000.0;
    return p.n_s * std::log(1.0 + isc / p.i_rs) / diode_coef(p);
}

double mppt_voltage(const PvParams& p, double g) {
    if (g <= 0.0) raise(ErrorKind::Domain, "mppt_voltage requires g > 0");
    double voc = open_circuit_voltage(p, g);
    double c = diode_coef(p) / p.n_s;
    auto dpdv = [&](double v) {
        // d(IV)/dV = I + V dI/dV with dI/dV = -n_p i_rs c exp(c v)
        return pv_current(v, p, g) - v * p.n_p * p.i_rs * c * std::exp(c * v);
    };
    double lo = 0.0, hi = voc;
    if (dpdv(lo) <= 0.0 || dpdv(hi) >= 0.0)
        raise(ErrorKind::Domain, "mppt_voltage: no sign change of dP/dV on (0, V_oc)");
    while (hi - lo > 1e-9) {
        double mid = 0.5 * (lo + hi);
        if (dpdv(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double dc_link_rhs(const PvState& state, double p_pv, double p_dc, const PvParams& p) {
    if (state.v_dc <= kVdcFloor)
        raise(ErrorKind::Numeric, "DC-link collapse: v_dc at or below floor");
    return (p_pv - p_dc) / (p.c_dc * state.v_dc);
}

Complex injection_current(double p_ref_pu, double i_max_pu, Complex v_bus) {
    double vm = std::abs(v_bus);
    double mag = std::min(p_ref_pu / std::max(vm, kVBusFloor), i_max_pu);
    if (vm < 1e-12) return Complex(mag, 0.0);
    return mag * v_bus / vm;
}

double unit_p_ref_pu(const PvParams& p, double base_mva, double g) {
    double mpp_mw = pv_power(mppt_voltage(p, g), p, g) * 1e-6;
    return std::min(mpp_mw, p.rating_mva) / base_mva;
}

double unit_i_max_pu(const PvParams& p, double base_mva) {
    return p.i_max * p.rating_mva / base_mva;
}

Complex pv_injection(const PvState& state, Complex v_bus, const PvParams& p, double base_mva) {
    return injection_current(unit_p_ref_pu(p, base_mva, state.irradiance),
                             unit_i_max_pu(p, base_mva), v_bus);
}

double pinned_voltage(const PvParams& p, double base_mva, double g) {
    double vmpp = mppt_voltage(p, g);
    double mpp_w = pv_power(vmpp, p, g);
    double rating_w = p.rating_mva * 1e6;
    if (mpp_w <= rating_w) return vmpp;
    // curtailed at the rating: solve pv_power(v) = rating on the falling branch
    double lo = vmpp, hi = open_circuit_voltage(p, g);
    while (hi - lo > 1e-9) {
        double mid = 0.5 * (lo + hi);
        if (pv_power(mid, p, g) > rating_w)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

PvParams scaled_to_mw(const PvParams& tmpl, int bus, double mw) {
    if (mw <= 0.0) raise(ErrorKind::Domain, "scaled_to_mw requires mw > 0");
    PvParams p = tmpl;
    double mpp_mw = pv_power(mppt_voltage(p), p) * 1e-6;
    double factor = mw / mpp_mw;
    p.bus = bus;
    p.n_p = tmpl.n_p * factor;
    p.c_dc = tmpl.c_dc * factor;
    p.rating_mva = mw;
    return p;
}

PvParams default_unit(int bus, double mw) {
    PvParams tmpl;
    tmpl.bus = bus;
    tmpl.n_p = 1433.0;
    tmpl.n_s = 1000.0;
    tmpl.i_sc_stc = 5.0;
    tmpl.i_rs = 1e-9;
    tmpl.t_cell = 298.0;
    tmpl.a_ideality = 1.5;
    tmpl.c_dc = 0.05;
    tmpl.rating_mva = 5.0;
    tmpl.i_max = 1.1;
    return scaled_to_mw(tmpl, bus, mw);
}

}  // namespace pvmodel
}  // namespace mgstab
