#include "machine.hpp"

#include <cmath>

namespace mgstab {

MachineInit init_classical_gen(const GenUnit& gen, const Case& c, const PowerflowSolution& pf,
                               int gen_index) {
    int bi = c.bus_index(gen.bus);
    if (bi < 0) raise(ErrorKind::Validation, "generator bus not in case");
    Complex v = pf.v[bi];
    if (std::abs(v) < 1e-9)
        raise(ErrorKind::Numeric, "cannot initialize machine at bus " + std::to_string(gen.bus) +
                                      ": terminal voltage is zero");
    double p = pf.gen_p[gen_index];
    double q = pf.gen_q[gen_index];
    Complex i = std::conj(Complex(p, q) / v);
    Complex e = v + Complex(0.0, gen.xdp) * i;

    MachineInit out;
    out.source.emf_mag = std::abs(e);
    out.source.emf_angle0 = std::arg(e);
    out.state.delta = out.source.emf_angle0;
    out.state.omega_dev = 0.0;
    out.pm = p;
    return out;
}

std::vector<double> electrical_power(std::span<const double> deltas,
                                     std::span<const InternalSource> sources,
                                     const YbusMatrix& y_sources) {
    const size_t n = sources.size();
    if (deltas.size() != n || static_cast<size_t>(y_sources.size()) != n)
        raise(ErrorKind::Validation, "electrical_power: dimension mismatch");
    const Eigen::MatrixXcd& y = y_sources.matrix();
    std::vector<double> pe(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < n; ++j) {
            double g = y(i, j).real();
            double b = y(i, j).imag();
            double dij = deltas[i] - deltas[j];
            acc += sources[i].emf_mag * sources[j].emf_mag *
                   (g * std::cos(dij) + b * std::sin(dij));
        }
        pe[i] = acc;
    }
    return pe;
}

SwingDerivative swing_rhs(const MachineState& state, double h_sys, double d_damp, double pm,
                          double pe, double omega_s) {
    SwingDerivative out;
    out.d_delta = state.omega_dev;
    out.d_omega = omega_s / (2.0 * h_sys) * (pm - pe - d_damp * state.omega_dev / omega_s);
    return out;
}

}  // namespace mgstab
