#include "cctstudy.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

namespace mgstab {

namespace {

// post-clear horizon added beyond the settle window, s; long enough for a
// marginally unstable swing to cross the angle limit
constexpr double kPostMargin = 4.0;

double trial_t_end(double t_clear, const SimConfig& cfg) {
    return t_clear + cfg.t_settle + kPostMargin;
}

Verdict run_trial(const TransientSim& sim, double t_clear, const SimConfig& cfg) {
    return sim.run(t_clear, trial_t_end(t_clear, cfg)).verdict;
}

unsigned effective_threads(unsigned threads) {
    if (threads != 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

double search_horizon(const Scenario& sc) {
    if (sc.t_clear <= sc.t_fault)
        raise(ErrorKind::Validation,
              "scenario t_clear acts as the CCT search horizon and must exceed t_fault");
    return sc.t_clear;
}

std::string format_mw(double mw) {
    std::ostringstream ss;
    ss << mw;
    return ss.str();
}

}  // namespace

CctResult find_cct_sweep(const Case& c, const Scenario& sc, const SimConfig& cfg, double t_step,
                         unsigned threads) {
    if (t_step <= 0.0) raise(ErrorKind::Validation, "t_step must be > 0");
    double horizon = search_horizon(sc);
    TransientSim sim(c, sc, cfg);

    CctResult out;
    out.resolution = t_step;
    int n_trials = static_cast<int>(std::floor((horizon - sc.t_fault) / t_step + 1e-9));
    if (n_trials < 1)
        raise(ErrorKind::Validation, "search horizon shorter than one sweep step");

    unsigned batch = std::max(1u, effective_threads(threads));
    int k = 1;
    int first_unstable = -1;
    while (k <= n_trials && first_unstable < 0) {
        int count = std::min<int>(batch, n_trials - k + 1);
        std::vector<std::future<Verdict>> futs;
        for (int j = 0; j < count; ++j) {
            double tc = sc.t_fault + (k + j) * t_step;
            futs.push_back(std::async(count > 1 ? std::launch::async : std::launch::deferred,
                                      [&sim, tc, &cfg] { return run_trial(sim, tc, cfg); }));
        }
        for (int j = 0; j < count; ++j) {
            double tc = sc.t_fault + (k + j) * t_step;
            Verdict v = futs[j].get();
            out.trials.push_back({tc, v});
            if (v == Verdict::Unstable && first_unstable < 0) first_unstable = k + j;
        }
        k += count;
    }
    // discard speculative results past the boundary
    if (first_unstable > 0)
        out.trials.resize(first_unstable);

    if (first_unstable < 0) {
        out.status = CctStatus::ExceedsHorizon;
        out.bracket_low = sc.t_fault + n_trials * t_step;
        out.bracket_high = out.bracket_low;
        out.cct = out.bracket_low - sc.t_fault;
        return out;
    }
    if (first_unstable == 1) {
        out.status = CctStatus::BelowResolution;
        out.bracket_low = sc.t_fault;
        out.bracket_high = sc.t_fault + t_step;
        out.cct = 0.0;
        return out;
    }
    out.status = CctStatus::Ok;
    out.bracket_low = sc.t_fault + (first_unstable - 1) * t_step;
    out.bracket_high = sc.t_fault + first_unstable * t_step;
    out.cct = out.bracket_low - sc.t_fault;  // last stable clearing instant minus fault instant
    return out;
}

CctResult find_cct_bisect(const Case& c, const Scenario& sc, const SimConfig& cfg,
                          double resolution) {
    if (resolution <= 0.0) raise(ErrorKind::Validation, "resolution must be > 0");
    double horizon = search_horizon(sc);
    TransientSim sim(c, sc, cfg);

    CctResult out;
    out.resolution = resolution;
    // binary search on the resolution grid: trial times land on the same
    // points the plain sweep would visit, so at equal resolution both methods
    // report the identical bracket
    int n = static_cast<int>(std::floor((horizon - sc.t_fault) / resolution + 1e-9));
    if (n < 1) raise(ErrorKind::Validation, "search horizon shorter than one resolution step");
    auto trial = [&](int k) {
        double tc = sc.t_fault + k * resolution;
        Verdict v = run_trial(sim, tc, cfg);
        out.trials.push_back({tc, v});
        return v;
    };

    if (trial(n) == Verdict::Stable) {
        out.status = CctStatus::ExceedsHorizon;
        out.bracket_low = out.bracket_high = sc.t_fault + n * resolution;
        out.cct = n * resolution;
        return out;
    }
    int lo = 1, hi = n;
    if (trial(lo) == Verdict::Unstable) {
        out.status = CctStatus::BelowResolution;
        out.bracket_low = sc.t_fault;
        out.bracket_high = sc.t_fault + resolution;
        out.cct = 0.0;
        return out;
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (trial(mid) == Verdict::Stable)
            lo = mid;
        else
            hi = mid;
    }
    out.status = CctStatus::Ok;
    out.bracket_low = sc.t_fault + lo * resolution;
    out.bracket_high = sc.t_fault + hi * resolution;
    out.cct = out.bracket_low - sc.t_fault;
    return out;
}

namespace {

StudyRow study_row(const Case& variant, const std::string& label, const Scenario& sc,
                   const StudyConfig& study) {
    StudyRow row;
    row.label = label;
    try {
        CctResult cct = study.use_bisection
                            ? find_cct_bisect(variant, sc, study.sim, study.resolution)
                            : find_cct_sweep(variant, sc, study.sim, study.resolution);
        row.status = cct.status;
        row.cct = cct.status == CctStatus::BelowResolution ? 0.0 : cct.cct;

        TransientSim sim(variant, sc, study.sim);
        double probe_clear = sc.t_fault + study.probe_window;
        SimResult probe = sim.run(probe_clear, trial_t_end(probe_clear, study.sim));
        row.peak_fault_current = probe.peak_fault_current;
    } catch (const Error&) {
        row.feasible = false;
        row.cct = std::nan("");
        row.peak_fault_current = std::nan("");
    }
    return row;
}

const PvParams& slot_template(const Case& c, PvParams& storage, int bus) {
    if (!c.pvs.empty()) return c.pvs.front();
    storage = pvmodel::default_unit(bus, 5.0);
    return storage;
}

}  // namespace

std::vector<StudyRow> sweep_pv_share(const Case& c, const std::vector<double>& shares_mw,
                                     int pv_bus, const Scenario& sc, const StudyConfig& study) {
    if (c.bus_index(pv_bus) < 0)
        raise(ErrorKind::Validation, "PV bus " + std::to_string(pv_bus) + " is not in the case");
    PvParams storage;
    const PvParams& tmpl = slot_template(c, storage, pv_bus);

    std::vector<Case> variants;
    for (double mw : shares_mw) {
        Case v = c;
        v.pvs.clear();
        if (mw < 0.0) raise(ErrorKind::Validation, "PV share must be >= 0 MW");
        if (mw > 0.0) v.pvs.push_back(pvmodel::scaled_to_mw(tmpl, pv_bus, mw));
        variants.push_back(std::move(v));
    }

    std::vector<StudyRow> rows(variants.size());
    unsigned nthreads = std::min<unsigned>(effective_threads(study.threads), variants.size());
    if (nthreads <= 1) {
        for (size_t i = 0; i < variants.size(); ++i)
            rows[i] = study_row(variants[i], format_mw(shares_mw[i]), sc, study);
    } else {
        std::vector<std::future<StudyRow>> futs;
        for (size_t i = 0; i < variants.size(); ++i)
            futs.push_back(std::async(std::launch::async, [&, i] {
                return study_row(variants[i], format_mw(shares_mw[i]), sc, study);
            }));
        for (size_t i = 0; i < variants.size(); ++i) rows[i] = futs[i].get();
    }
    return rows;
}

std::vector<StudyRow> compare_topologies(const Case& c, double total_mw, int centralized_bus,
                                         const std::vector<std::pair<int, double>>& layout_bus_mw,
                                         const Scenario& sc, const StudyConfig& study) {
    if (c.bus_index(centralized_bus) < 0)
        raise(ErrorKind::Validation, "centralized bus " + std::to_string(centralized_bus) +
                                         " is not in the case");
    if (layout_bus_mw.empty())
        raise(ErrorKind::Validation, "distributed layout must name at least one unit");
    double sum = 0.0;
    for (const auto& [bus, mw] : layout_bus_mw) {
        if (c.bus_index(bus) < 0)
            raise(ErrorKind::Validation, "layout bus " + std::to_string(bus) + " is not in the case");
        if (mw <= 0.0) raise(ErrorKind::Validation, "layout unit MW must be > 0");
        sum += mw;
    }
    if (std::abs(sum - total_mw) > 1e-6 * std::max(1.0, total_mw))
        raise(ErrorKind::Validation, "distributed layout MW does not sum to total_mw");

    PvParams storage;
    const PvParams& tmpl = slot_template(c, storage, centralized_bus);

    Case cent = c;
    cent.pvs = {pvmodel::scaled_to_mw(tmpl, centralized_bus, total_mw)};
    Case dist = c;
    dist.pvs.clear();
    for (const auto& [bus, mw] : layout_bus_mw)
        dist.pvs.push_back(pvmodel::scaled_to_mw(tmpl, bus, mw));

    std::vector<StudyRow> rows(2);
    if (effective_threads(study.threads) > 1) {
        auto f0 = std::async(std::launch::async,
                             [&] { return study_row(cent, "centralized", sc, study); });
        auto f1 = std::async(std::launch::async,
                             [&] { return study_row(dist, "distributed", sc, study); });
        rows[0] = f0.get();
        rows[1] = f1.get();
    } else {
        rows[0] = study_row(cent, "centralized", sc, study);
        rows[1] = study_row(dist, "distributed", sc, study);
    }
    return rows;
}

ProbeResult fault_current_probe(const Case& c, const Scenario& sc, const SimConfig& cfg) {
    TransientSim sim(c, sc, cfg);
    SimResult r = sim.run(sc.t_clear, std::max(cfg.t_end, trial_t_end(sc.t_clear, cfg)));

    ProbeResult out;
    out.peak = r.peak_fault_current;
    for (size_t s = 0; s < r.source_names.size(); ++s) {
        double mx = 0.0;
        for (size_t k = 0; k < r.time.size(); ++k)
            if (r.time[k] >= sc.t_fault && r.time[k] < r.t_clear)
                mx = std::max(mx, r.source_current[s][k]);
        out.per_source.emplace_back(r.source_names[s], mx);
    }
    return out;
}

}  // namespace mgstab
