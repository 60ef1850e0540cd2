#include "powerflow.hpp"

#include <Eigen/LU>
#include <cmath>

#include "pvmodel.hpp"

namespace mgstab {

bool is_external_bus(const Case& c, int bus_id) {
    int bi = c.bus_index(bus_id);
    if (bi < 0) return false;
    BusKind k = c.buses[bi].kind;
    if (k == BusKind::Pq) return false;
    for (const GenUnit& g : c.gens)
        if (g.bus == bus_id) return false;
    return true;
}

PowerflowSolution run_powerflow(const Case& c) {
    const int n = static_cast<int>(c.buses.size());
    YbusMatrix ybus = build_ybus(c);
    const Eigen::MatrixXcd& Y = ybus.matrix();

    // scheduled injections
    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
    std::vector<double> vset(n, 1.0);
    std::vector<double> pv_p(c.pvs.size(), 0.0);

    for (const GenUnit& g : c.gens) {
        int i = c.bus_index(g.bus);
        if (c.buses[i].kind != BusKind::Slack) p_spec[i] += g.pm;
        vset[i] = g.v_set;
    }
    for (size_t k = 0; k < c.pvs.size(); ++k) {
        pv_p[k] = pvmodel::unit_p_ref_pu(c.pvs[k], c.base_mva);
        p_spec[c.bus_index(c.pvs[k].bus)] += pv_p[k];
    }
    for (const StaticLoad& l : c.loads) {
        int i = c.bus_index(l.bus);
        p_spec[i] -= l.p;
        q_spec[i] -= l.q;
    }

    std::vector<int> ang;  // buses with a free angle (non-slack)
    std::vector<int> mag;  // buses with a free magnitude (pq)
    for (int i = 0; i < n; ++i) {
        if (c.buses[i].kind != BusKind::Slack) ang.push_back(i);
        if (c.buses[i].kind == BusKind::Pq) mag.push_back(i);
    }
    const int na = static_cast<int>(ang.size());
    const int nm = static_cast<int>(mag.size());

    Eigen::VectorXcd V(n);
    for (int i = 0; i < n; ++i)
        V[i] = c.buses[i].kind == BusKind::Pq ? Complex(1.0, 0.0) : Complex(vset[i], 0.0);

    PowerflowSolution sol;
    auto calc_s = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        return v.array() * (Y * v).conjugate().array();
    };

    int it = 0;
    double mis = 0.0;
    for (;; ++it) {
        Eigen::VectorXcd S = calc_s(V);
        mis = 0.0;
        Eigen::VectorXd f(na + nm);
        for (int a = 0; a < na; ++a) f[a] = p_spec[ang[a]] - S[ang[a]].real();
        for (int b = 0; b < nm; ++b) f[na + b] = q_spec[mag[b]] - S[mag[b]].imag();
        if (f.size() > 0) mis = f.cwiseAbs().maxCoeff();
        if (mis <= PowerflowSolution::kTolerance) break;
        if (it >= PowerflowSolution::kMaxIterations)
            raise(ErrorKind::Domain,
                  "powerflow did not converge: max mismatch " + std::to_string(mis) +
                      " pu after " + std::to_string(it) + " iterations");

        Eigen::VectorXcd I = Y * V;
        // dS_i/dtheta_j and dS_i/d|V|_j in complex form
        Eigen::MatrixXd J(na + nm, na + nm);
        auto ds_dtheta = [&](int i, int j) -> Complex {
            const Complex jj(0.0, 1.0);
            if (i == j)
                return jj * V[i] * std::conj(I[i]) - jj * V[i] * std::conj(Y(i, i) * V[i]);
            return -jj * V[i] * std::conj(Y(i, j) * V[j]);
        };
        auto ds_dvm = [&](int i, int j) -> Complex {
            Complex ej = V[j] / std::abs(V[j]);
            if (i == j) return ej * std::conj(I[i]) + V[i] * std::conj(Y(i, i) * ej);
            return V[i] * std::conj(Y(i, j) * ej);
        };
        for (int a = 0; a < na; ++a) {
            for (int a2 = 0; a2 < na; ++a2) J(a, a2) = ds_dtheta(ang[a], ang[a2]).real();
            for (int b = 0; b < nm; ++b) J(a, na + b) = ds_dvm(ang[a], mag[b]).real();
        }
        for (int b = 0; b < nm; ++b) {
            for (int a2 = 0; a2 < na; ++a2) J(na + b, a2) = ds_dtheta(mag[b], ang[a2]).imag();
            for (int b2 = 0; b2 < nm; ++b2) J(na + b, na + b2) = ds_dvm(mag[b], mag[b2]).imag();
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        Eigen::VectorXd dx = lu.solve(f);
        if (!dx.allFinite())
            raise(ErrorKind::Numeric, "powerflow Jacobian is singular");
        for (int a = 0; a < na; ++a) {
            int i = ang[a];
            double th = std::arg(V[i]) + dx[a];
            V[i] = std::abs(V[i]) * Complex(std::cos(th), std::sin(th));
        }
        for (int b = 0; b < nm; ++b) {
            int i = mag[b];
            double vm = std::abs(V[i]) + dx[na + b];
            V[i] = vm * V[i] / std::abs(V[i]);
        }
    }

    Eigen::VectorXcd S = calc_s(V);
    sol.v.assign(V.data(), V.data() + n);
    sol.bus_injection.assign(S.data(), S.data() + n);
    sol.pv_p = pv_p;
    sol.converged = true;
    sol.iterations = it;
    sol.max_mismatch = mis;

    sol.gen_p.resize(c.gens.size());
    sol.gen_q.resize(c.gens.size());
    for (size_t k = 0; k < c.gens.size(); ++k) {
        const GenUnit& g = c.gens[k];
        int i = c.bus_index(g.bus);
        // the machine covers the bus residual: net injection plus local load,
        // minus any co-located PV output
        double pl = 0.0, ql = 0.0;
        for (const StaticLoad& l : c.loads)
            if (l.bus == g.bus) { pl += l.p; ql += l.q; }
        double ppv = 0.0;
        for (size_t m = 0; m < c.pvs.size(); ++m)
            if (c.pvs[m].bus == g.bus) ppv += pv_p[m];
        sol.gen_p[k] = S[i].real() + pl - ppv;
        sol.gen_q[k] = S[i].imag() + ql;
    }
    return sol;
}

}  // namespace mgstab
