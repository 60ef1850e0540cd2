#include "simengine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace mgstab {

namespace {

struct TripSet {
    std::vector<int> pvs;    // unit indices tripped at t_fault
    std::vector<int> loads;  // load indices dropped at t_fault
};

TripSet parse_trips(const Case& c, const Scenario& sc) {
    TripSet out;
    for (const std::string& e : sc.trip_elements) {
        auto colon = e.find(':');
        if (colon == std::string::npos)
            raise(ErrorKind::Validation, "trip element '" + e + "' must look like pv:<idx> or load:<idx>");
        std::string kind = e.substr(0, colon);
        int idx = -1;
        try {
            idx = std::stoi(e.substr(colon + 1));
        } catch (...) {
            raise(ErrorKind::Validation, "trip element '" + e + "' has a non-numeric index");
        }
        if (kind == "pv") {
            if (idx < 0 || idx >= static_cast<int>(c.pvs.size()))
                raise(ErrorKind::Validation, "trip element '" + e + "' is out of range");
            out.pvs.push_back(idx);
        } else if (kind == "load") {
            if (idx < 0 || idx >= static_cast<int>(c.loads.size()))
                raise(ErrorKind::Validation, "trip element '" + e + "' is out of range");
            out.loads.push_back(idx);
        } else if (kind == "gen") {
            raise(ErrorKind::Domain, "tripping synchronous machines is not supported");
        } else {
            raise(ErrorKind::Validation, "unknown trip element kind '" + kind + "'");
        }
    }
    return out;
}

Eigen::MatrixXcd pick(const Eigen::MatrixXcd& m, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
    Eigen::MatrixXcd out(rows.size(), cols.size());
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
    return out;
}

/// Known-voltage / unknown-voltage split of a reduced matrix with the source
/// nodes first. Shared by the engine stages and the free solve_network.
struct Partition {
    int n_k = 0, n_u = 0;
    Eigen::MatrixXcd y_kk, y_ku, y_uk;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu_uu;

    static Partition build(const YbusMatrix& y, int n_sources) {
        Partition p;
        p.n_k = n_sources;
        p.n_u = y.size() - n_sources;
        if (p.n_u < 0) raise(ErrorKind::Validation, "solve_network: more sources than nodes");
        std::vector<int> K(p.n_k), U(p.n_u);
        for (int i = 0; i < p.n_k; ++i) K[i] = i;
        for (int i = 0; i < p.n_u; ++i) U[i] = p.n_k + i;
        const Eigen::MatrixXcd& m = y.matrix();
        p.y_kk = pick(m, K, K);
        p.y_ku = pick(m, K, U);
        p.y_uk = pick(m, U, K);
        if (p.n_u > 0) {
            Eigen::MatrixXcd y_uu = pick(m, U, U);
            p.lu_uu.compute(y_uu);
            if (!p.lu_uu.isInvertible()) {
                std::string names;
                for (int i : U) names += (names.empty() ? "" : ", ") + node_label(y.nodes()[i]);
                raise(ErrorKind::Numeric,
                      "network solve: unknown-voltage block is singular over {" + names + "}");
            }
        }
        return p;
    }

    NetworkSolution solve(const Eigen::VectorXcd& v_k, std::span<const PvSlot> pvs) const {
        NetworkSolution out;
        Eigen::VectorXcd v_u(n_u);
        if (n_u > 0) {
            Eigen::VectorXcd rhs0 = -y_uk * v_k;
            Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(n_u);
            v_u = lu_uu.solve(rhs0);
            out.solves = 1;
            if (!pvs.empty()) {
                Eigen::VectorXcd inj_prev = inj;
                for (int it = 0; it < 50; ++it) {
                    Eigen::VectorXcd inj_new = Eigen::VectorXcd::Zero(n_u);
                    out.pv_current.assign(pvs.size(), Complex(0, 0));
                    for (size_t s = 0; s < pvs.size(); ++s) {
                        int u = pvs[s].node - n_k;
                        if (u < 0 || u >= n_u)
                            raise(ErrorKind::Validation, "PV slot does not address an unknown bus node");
                        Complex i = pvmodel::injection_current(pvs[s].p_ref, pvs[s].i_max, v_u[u]);
                        inj_new[u] += i;
                        out.pv_current[s] = i;
                    }
                    if (it > 8) inj_new = 0.5 * (inj_new + inj_prev);  // damp a rare limit cycle
                    double change = (inj_new - inj_prev).cwiseAbs().maxCoeff();
                    inj_prev = inj_new;
                    v_u = lu_uu.solve(rhs0 + inj_new);
                    ++out.solves;
                    if (change <= 1e-8) break;
                    if (it == 49)
                        raise(ErrorKind::Numeric,
                              "network solve: PV injection fixed point did not converge");
                }
            }
        } else {
            out.solves = 1;
        }

        Eigen::VectorXcd i_k = y_kk * v_k;
        if (n_u > 0) i_k += y_ku * v_u;
        out.v_bus.assign(v_u.data(), v_u.data() + n_u);
        out.source_current.resize(n_k);
        out.pe.resize(n_k);
        for (int k = 0; k < n_k; ++k) {
            out.source_current[k] = i_k[k];
            out.pe[k] = (v_k[k] * std::conj(i_k[k])).real();
        }
        return out;
    }
};

/// Extend a bus-level matrix with one internal node per machine, linked to
/// its terminal through 1/(j xdp).
YbusMatrix augment_with_machines(const YbusMatrix& phys, const Case& c) {
    const int n = phys.size();
    const int m = static_cast<int>(c.gens.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n + m, n + m);
    y.topLeftCorner(n, n) = phys.matrix();
    std::vector<NodeRef> nodes = phys.nodes();
    for (int k = 0; k < m; ++k) {
        int bi = phys.index_of({NodeRef::Kind::Bus, c.gens[k].bus});
        if (bi < 0) raise(ErrorKind::Validation, "machine terminal missing from bus matrix");
        Complex yg = 1.0 / Complex(0.0, c.gens[k].xdp);
        y(n + k, n + k) += yg;
        y(bi, bi) += yg;
        y(n + k, bi) -= yg;
        y(bi, n + k) -= yg;
        nodes.push_back({NodeRef::Kind::GenInternal, k});
    }
    return YbusMatrix(std::move(y), std::move(nodes));
}

}  // namespace

NetworkSolution solve_network(const YbusMatrix& y_red, std::span<const SourceSpec> sources,
                              std::span<const PvSlot> pvs) {
    Partition p = Partition::build(y_red, static_cast<int>(sources.size()));
    Eigen::VectorXcd v_k(sources.size());
    for (size_t k = 0; k < sources.size(); ++k)
        v_k[k] = sources[k].emf_mag * Complex(std::cos(sources[k].angle), std::sin(sources[k].angle));
    return p.solve(v_k, pvs);
}

// ---------------------------------------------------------------------------

struct TransientSim::Impl {
    Case c;
    Scenario sc;
    SimConfig cfg;
    TripSet trips;
    PowerflowSolution pf;
    std::vector<MachineInit> mach;
    std::vector<double> pm;  // snapped to the engine's own equilibrium

    std::vector<int> ext_buses;  // fixed-phasor boundary buses
    std::vector<Complex> ext_v;

    struct PvRt {
        double p_ref = 0.0, i_max = 0.0;  // system pu
        double v_pin = 0.0;               // steady DC voltage, V
        double g = 1000.0;
        bool tripped = false;
    };
    std::vector<PvRt> pvrt;

    struct Stage {
        Partition part;
        std::vector<PvSlot> slots;       // active units, aligned with slot_unit
        std::vector<int> slot_unit;      // pv index per slot
        Complex y_fault{0.0, 0.0};
        int fault_u = -1;
    };
    Stage st[3];  // pre, fault-on, post
    StageMatrices public_stages;

    std::vector<int> mon_buses;  // monitored (unknown-voltage) bus ids, matrix order
    int n_mach = 0;

    enum StageId { kPre = 0, kFault = 1, kPost = 2 };

    Eigen::VectorXcd source_voltages(std::span<const double> deltas) const {
        Eigen::VectorXcd v(n_mach + static_cast<int>(ext_buses.size()));
        for (int k = 0; k < n_mach; ++k)
            v[k] = mach[k].source.emf_mag * Complex(std::cos(deltas[k]), std::sin(deltas[k]));
        for (size_t e = 0; e < ext_buses.size(); ++e) v[n_mach + e] = ext_v[e];
        return v;
    }

    NetworkSolution netsolve(int stage, std::span<const double> deltas) const {
        return st[stage].part.solve(source_voltages(deltas), st[stage].slots);
    }

    double angle_reference(std::span<const double> deltas) const {
        if (!ext_buses.empty()) {
            double acc = 0.0;
            for (const Complex& v : ext_v) acc += std::arg(v);
            return acc / static_cast<double>(ext_v.size());
        }
        double num = 0.0, den = 0.0;
        for (int k = 0; k < n_mach; ++k) {
            num += c.gens[k].h_sys * deltas[k];
            den += c.gens[k].h_sys;
        }
        return den > 0.0 ? num / den : 0.0;
    }
};

TransientSim::TransientSim(const Case& c, const Scenario& sc, const SimConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
    Impl& im = *impl_;
    im.c = c;
    im.sc = sc;
    im.cfg = cfg;
    im.n_mach = static_cast<int>(c.gens.size());

    if (cfg.dt <= 0.0) raise(ErrorKind::Validation, "dt must be > 0");
    if (sc.t_fault < 0.0) raise(ErrorKind::Validation, "t_fault must be >= 0");
    if (c.bus_index(sc.fault_bus) < 0)
        raise(ErrorKind::Validation, "fault bus " + std::to_string(sc.fault_bus) + " is not in the case");
    if (is_external_bus(c, sc.fault_bus))
        raise(ErrorKind::Validation, "fault at external-grid bus " + std::to_string(sc.fault_bus) +
                                         " is not supported (its voltage is held fixed)");
    im.trips = parse_trips(c, sc);

    im.pf = run_powerflow(c);

    for (int k = 0; k < im.n_mach; ++k) {
        im.mach.push_back(init_classical_gen(c.gens[k], c, im.pf, k));
        im.pm.push_back(im.mach.back().pm);
    }
    for (const Bus& b : c.buses)
        if (is_external_bus(c, b.id)) {
            im.ext_buses.push_back(b.id);
            im.ext_v.push_back(im.pf.v[c.bus_index(b.id)]);
        }

    for (const PvParams& p : c.pvs) {
        Impl::PvRt rt;
        rt.p_ref = pvmodel::unit_p_ref_pu(p, c.base_mva);
        rt.i_max = pvmodel::unit_i_max_pu(p, c.base_mva);
        rt.v_pin = pvmodel::pinned_voltage(p, c.base_mva);
        im.pvrt.push_back(rt);
    }
    for (int idx : im.trips.pvs) im.pvrt[idx].tripped = true;

    // retained node set, shared by all stages: internals, externals, then the
    // monitored buses (fault bus, machine terminals, PV buses)
    std::set<int> ext_set(im.ext_buses.begin(), im.ext_buses.end());
    std::vector<int> mon;
    auto add_mon = [&](int bus) {
        if (!ext_set.count(bus) && std::find(mon.begin(), mon.end(), bus) == mon.end())
            mon.push_back(bus);
    };
    for (const Bus& b : c.buses) {
        bool want = b.id == sc.fault_bus;
        for (const GenUnit& g : c.gens) want = want || g.bus == b.id;
        for (const PvParams& p : c.pvs) want = want || p.bus == b.id;
        if (want) add_mon(b.id);
    }
    im.mon_buses = mon;

    std::vector<NodeRef> retained;
    for (int k = 0; k < im.n_mach; ++k) retained.push_back({NodeRef::Kind::GenInternal, k});
    for (int b : im.ext_buses) retained.push_back({NodeRef::Kind::Bus, b});
    for (int b : mon) retained.push_back({NodeRef::Kind::Bus, b});
    const int n_k = im.n_mach + static_cast<int>(im.ext_buses.size());

    // constant-impedance load shunts at the solved voltages
    std::vector<std::pair<int, Complex>> load_shunts;
    for (const StaticLoad& l : c.loads) {
        Complex v = im.pf.v[c.bus_index(l.bus)];
        load_shunts.emplace_back(l.bus, std::conj(Complex(l.p, l.q)) / std::norm(v));
    }
    std::unordered_set<int> dropped_loads(im.trips.loads.begin(), im.trips.loads.end());

    auto build_stage = [&](Impl::StageId id) -> std::pair<Impl::Stage, YbusMatrix> {
        TopologyOverlay ov;
        if (id != Impl::kPre) ov.opened_branches = sc.island_branches;
        for (size_t i = 0; i < load_shunts.size(); ++i) {
            if (id != Impl::kPre && dropped_loads.count(static_cast<int>(i))) continue;
            ov.added_shunts.push_back(load_shunts[i]);
        }
        if (id == Impl::kFault && sc.fault_admittance != Complex(0.0, 0.0))
            ov.added_shunts.emplace_back(sc.fault_bus, sc.fault_admittance);

        YbusMatrix reduced = kron_reduce(augment_with_machines(build_ybus(c, ov), c), retained);

        Impl::Stage stg;
        stg.part = Partition::build(reduced, n_k);
        for (size_t u = 0; u < c.pvs.size(); ++u) {
            if (id != Impl::kPre && im.pvrt[u].tripped) continue;
            int node = reduced.index_of({NodeRef::Kind::Bus, c.pvs[u].bus});
            stg.slots.push_back({node, im.pvrt[u].p_ref, im.pvrt[u].i_max});
            stg.slot_unit.push_back(static_cast<int>(u));
        }
        if (id == Impl::kFault) {
            stg.y_fault = sc.fault_admittance;
            stg.fault_u = reduced.index_of({NodeRef::Kind::Bus, sc.fault_bus}) - n_k;
        }
        return {std::move(stg), std::move(reduced)};
    };

    auto [s0, y0] = build_stage(Impl::kPre);
    auto [s1, y1] = build_stage(Impl::kFault);
    auto [s2, y2] = build_stage(Impl::kPost);
    im.st[0] = std::move(s0);
    im.st[1] = std::move(s1);
    im.st[2] = std::move(s2);
    im.public_stages = {std::move(y0), std::move(y1), std::move(y2)};

    // snap pm onto the engine's own equilibrium so an undisturbed run holds
    // the operating point to integrator precision
    std::vector<double> d0(im.n_mach);
    for (int k = 0; k < im.n_mach; ++k) d0[k] = im.mach[k].state.delta;
    NetworkSolution eq = im.netsolve(Impl::kPre, d0);
    for (int k = 0; k < im.n_mach; ++k) im.pm[k] = eq.pe[k];
}

TransientSim::~TransientSim() = default;
TransientSim::TransientSim(TransientSim&&) noexcept = default;

const PowerflowSolution& TransientSim::powerflow() const { return impl_->pf; }
const std::vector<MachineInit>& TransientSim::machines() const { return impl_->mach; }
const StageMatrices& TransientSim::stages() const { return impl_->public_stages; }
int TransientSim::machine_count() const { return impl_->n_mach; }

SimResult TransientSim::run() const { return run(impl_->sc.t_clear, impl_->cfg.t_end); }

SimResult TransientSim::run(double t_clear, double t_end) const {
    const Impl& im = *impl_;
    const int m = im.n_mach;
    const int npv = static_cast<int>(im.pvrt.size());
    const double t_fault = im.sc.t_fault;

    if (t_clear <= t_fault) raise(ErrorKind::Validation, "t_clear must be greater than t_fault");
    if (t_end <= t_clear + im.cfg.t_settle)
        raise(ErrorKind::Validation, "t_end must exceed t_clear + t_settle");

    // state layout: [delta x m, omega_dev x m, v_dc x npv]
    std::vector<double> x(2 * m + npv);
    for (int k = 0; k < m; ++k) {
        x[k] = im.mach[k].state.delta;
        x[m + k] = 0.0;
    }
    for (int u = 0; u < npv; ++u) x[2 * m + u] = im.pvrt[u].v_pin;

    auto rhs = [&](int stage, const std::vector<double>& s, std::vector<double>& ds) {
        std::span<const double> deltas(s.data(), m);
        NetworkSolution net = im.netsolve(stage, deltas);
        for (int k = 0; k < m; ++k) {
            MachineState ms{s[k], s[m + k]};
            SwingDerivative der =
                swing_rhs(ms, im.c.gens[k].h_sys, im.c.gens[k].d, im.pm[k], net.pe[k], im.c.omega_s());
            ds[k] = der.d_delta;
            ds[m + k] = der.d_omega;
        }
        std::fill(ds.begin() + 2 * m, ds.end(), 0.0);
        const Impl::Stage& stg = im.st[stage];
        for (size_t slot = 0; slot < stg.slots.size(); ++slot) {
            int u = stg.slot_unit[slot];
            double vdc = s[2 * m + u];
            double v_bus = std::abs(net.v_bus[stg.slots[slot].node - stg.part.n_k]);
            double p_del_w = std::abs(net.pv_current[slot]) * v_bus * im.c.base_mva * 1e6;
            pvmodel::PvState ps{vdc, im.pvrt[u].g};
            double dv = pvmodel::dc_link_rhs(ps, pvmodel::pv_power(vdc, im.c.pvs[u], im.pvrt[u].g),
                                             p_del_w, im.c.pvs[u]);
            if (vdc <= im.pvrt[u].v_pin && dv < 0.0) dv = 0.0;  // ideal MPPT holds the low side
            ds[2 * m + u] = dv;
        }
    };

    const int nx = static_cast<int>(x.size());
    std::vector<double> k1(nx), k2(nx), k3(nx), k4(nx), tmp(nx);
    auto rk4_step = [&](int stage, double h) {
        rhs(stage, x, k1);
        for (int i = 0; i < nx; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        rhs(stage, tmp, k2);
        for (int i = 0; i < nx; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        rhs(stage, tmp, k3);
        for (int i = 0; i < nx; ++i) tmp[i] = x[i] + h * k3[i];
        rhs(stage, tmp, k4);
        for (int i = 0; i < nx; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (int u = 0; u < npv; ++u)
            x[2 * m + u] = std::max(x[2 * m + u], im.pvrt[u].v_pin);
    };

    SimResult r;
    r.t_clear = t_clear;
    for (int k = 0; k < m; ++k) r.machine_names.push_back("g" + std::to_string(im.c.gens[k].bus));
    for (int b : im.mon_buses) r.bus_names.push_back(im.c.bus_at(b).name);
    r.source_names = r.machine_names;
    for (int u = 0; u < npv; ++u)
        r.source_names.push_back("pv" + std::to_string(u) + "_b" + std::to_string(im.c.pvs[u].bus));
    r.delta.resize(m);
    r.omega_dev.resize(m);
    r.bus_vm.resize(im.mon_buses.size());
    r.source_current.resize(m + npv);

    auto record = [&](double t, int stage) {
        std::span<const double> deltas(x.data(), m);
        NetworkSolution net = im.netsolve(stage, deltas);
        r.time.push_back(t);
        for (int k = 0; k < m; ++k) {
            r.delta[k].push_back(x[k]);
            r.omega_dev[k].push_back(x[m + k]);
            r.source_current[k].push_back(std::abs(net.source_current[k]));
        }
        std::vector<double> pv_mag(npv, 0.0);
        const Impl::Stage& stg = im.st[stage];
        for (size_t slot = 0; slot < stg.slots.size(); ++slot)
            pv_mag[stg.slot_unit[slot]] = std::abs(net.pv_current[slot]);
        for (int u = 0; u < npv; ++u) r.source_current[m + u].push_back(pv_mag[u]);
        for (size_t b = 0; b < im.mon_buses.size(); ++b)
            r.bus_vm[b].push_back(std::abs(net.v_bus[b + 0]));
        double ref = im.angle_reference(deltas);
        double mx = 0.0;
        for (int k = 0; k < m; ++k) mx = std::max(mx, std::abs(x[k] - ref));
        r.max_rel_dev.push_back(mx);
        double fi = 0.0;
        if (stage == Impl::kFault && stg.fault_u >= 0)
            fi = std::abs(stg.y_fault * net.v_bus[stg.fault_u]);
        r.fault_current.push_back(fi);
    };

    struct Segment {
        double t0, t1;
        int stage;
    };
    std::vector<Segment> segs;
    if (t_fault > 0.0) segs.push_back({0.0, t_fault, Impl::kPre});
    segs.push_back({t_fault, t_clear, Impl::kFault});
    segs.push_back({t_clear, t_end, Impl::kPost});

    record(0.0, segs.front().stage);
    bool dead = false;
    for (size_t sgi = 0; sgi < segs.size() && !dead; ++sgi) {
        const Segment& sg = segs[sgi];
        int steps = std::max(1, static_cast<int>(std::llround((sg.t1 - sg.t0) / im.cfg.dt)));
        double h = (sg.t1 - sg.t0) / steps;
        for (int k = 1; k <= steps; ++k) {
            rk4_step(sg.stage, h);
            double t = sg.t0 + k * h;
            bool finite = std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
            if (!finite) {
                r.diverged = true;
                r.diverged_at = t;
                dead = true;
                break;
            }
            int rec_stage = sg.stage;
            if (k == steps && sgi + 1 < segs.size()) rec_stage = segs[sgi + 1].stage;
            record(t, rec_stage);
        }
    }

    for (double v : r.max_rel_dev) r.max_rel_angle_dev = std::max(r.max_rel_angle_dev, v);
    for (double v : r.fault_current) r.peak_fault_current = std::max(r.peak_fault_current, v);
    r.verdict = classify_stability(r, im.cfg);
    return r;
}

StageMatrices stage_matrices(const Case& c, const Scenario& sc) {
    SimConfig cfg;
    TransientSim sim(c, sc, cfg);
    return sim.stages();
}

SimResult simulate(const Case& c, const Scenario& sc, const SimConfig& cfg) {
    TransientSim sim(c, sc, cfg);
    return sim.run();
}

Verdict classify_stability(const SimResult& r, const SimConfig& cfg) {
    if (r.diverged) return Verdict::Unstable;
    if (r.time.empty()) return Verdict::Stable;

    for (size_t k = 0; k < r.time.size(); ++k)
        if (r.time[k] > r.t_clear && r.max_rel_dev[k] > cfg.angle_limit) return Verdict::Unstable;

    if (cfg.v_recover > 0.0) {
        double w0 = r.time.back() - cfg.t_settle;
        for (size_t k = 0; k < r.time.size(); ++k) {
            if (r.time[k] < w0 - 1e-12) continue;
            for (const auto& series : r.bus_vm)
                if (series[k] < cfg.v_recover) return Verdict::Unstable;
        }
    }
    return Verdict::Stable;
}

}  // namespace mgstab
