#include "levylab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "levylab/conditioned.hpp"
#include "levylab/coupling.hpp"
#include "levylab/estimate_ladder.hpp"
#include "levylab/fluctuation_checks.hpp"
#include "levylab/lamperti.hpp"
#include "levylab/path_engine.hpp"
#include "levylab/rho.hpp"
#include "levylab/stationary.hpp"
#include "levylab/stats.hpp"

namespace levylab {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

LadderData resolve_ladder(const ExperimentConfig& cfg, const LevyModel& model) {
    const std::string source = cfg.get_str("ladder.source", "auto");
    if (source == "file") {
        std::ifstream is(cfg.require_str("ladder.path"));
        if (!is) throw ConfigError("field ladder.path: cannot open");
        std::stringstream ss;
        ss << is.rdbuf();
        return ladder_from_json(ss.str());
    }
    if (source == "estimate") {
        EstimateLadderConfig ec;
        ec.n_paths = cfg.get_int("ladder.n_paths", 100000);
        ec.horizon = cfg.get_num("ladder.horizon", 6.0);
        ec.dt = cfg.get_num("ladder.dt", 1e-3);
        ec.seed = derive_seed(cfg.seed(), 0x1AD);
        ec.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
        return estimate_ladder(model, ec);
    }
    // auto / closed_form
    return closed_form_ladder(model);
}

StationaryConfig stationary_config(const ExperimentConfig& cfg) {
    StationaryConfig sc;
    sc.horizon_back = cfg.get_num("params.horizon_back", 3.0);
    sc.horizon_fwd = cfg.get_num("params.horizon_fwd", 6.0);
    sc.dt = cfg.dt();
    sc.n_paths = cfg.n_paths();
    sc.seed = cfg.seed();
    sc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    sc.zero_start_eps = cfg.get_num("params.zero_start_eps", 0.02);
    return sc;
}

void echo_config(const ExperimentConfig& cfg, ExperimentReport& rep) {
    rep.config_echo.insert(cfg.entries().begin(), cfg.entries().end());
    rep.seed = cfg.seed();
}

void run_simulate(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const long n = cfg.n_paths();
    const double horizon = cfg.get_num("params.horizon", 1.0);
    const double dt = cfg.dt();
    const double x0 = cfg.get_num("params.x0", 0.0);
    const bool dump = cfg.get_bool("params.dump_paths", false);
    const long dump_cap = cfg.get_int("params.dump_max", 16);

    std::vector<double> terminal;
    double jumps = 0.0;
    for (long i = 0; i < n; ++i) {
        const auto path =
            simulate(model, x0, horizon, dt, derive_seed(cfg.seed(), static_cast<std::uint64_t>(i)));
        terminal.push_back(path.terminal());
        jumps += static_cast<double>(path.jump_ledger().size());
        if (dump && i < dump_cap) {
            std::filesystem::create_directories(cfg.out_dir());
            write_path_csv(path, cfg.out_dir() + "/path_" + std::to_string(i) + ".csv");
        }
    }
    const auto ms = mean_stderr(terminal);
    rep.add_info("terminal_mean", ms.mean, ms.stderr_);
    rep.add_info("terminal_sd", std::sqrt(ms.stderr_ * ms.stderr_ * n));
    rep.add_info("jumps_per_path", jumps / static_cast<double>(n));
    rep.n = n;
}

void run_ladder(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    EstimateLadderConfig ec;
    ec.n_paths = cfg.n_paths();
    ec.horizon = cfg.get_num("params.horizon", 6.0);
    ec.dt = cfg.dt();
    ec.seed = cfg.seed();
    ec.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const LadderData lad = estimate_ladder(model, ec);
    rep.n = ec.n_paths;

    rep.add_info("scale_q_over_dt", lad.prov.scale_q / ec.dt);
    rep.add("fit_residual", lad.prov.eq2_residual,
            cfg.get_num("thresholds.fit_residual", 0.25));
    rep.add("mass_vs_renewal_EH", lad.prov.mass_residual,
            cfg.get_num("thresholds.mass_residual", 0.02));
    if (model.has_positive_jumps())
        rep.add("ascending_tail_residual", lad.prov.vigon_residual,
                cfg.get_num("thresholds.vigon_residual", 0.25));

    // closed-form comparison when the family supports it
    try {
        const LadderData ref = closed_form_ladder(model);
        double sup = 0.0;
        for (double x = 0.5; x <= 3.0 + 1e-9; x += 0.25)
            sup = std::max(sup, std::abs(lad.Uplus(x) / ref.Uplus(x) - 1.0));
        rep.add("Uplus_rel_error_[0.5,3]", sup, cfg.get_num("thresholds.uplus_rel", 0.03));
        rep.add("EH_rel_error", std::abs(lad.EH - ref.EH) / ref.EH,
                cfg.get_num("thresholds.eh_rel", 0.05));
    } catch (const UnsupportedFamilyError&) {
    }

    std::filesystem::create_directories(cfg.out_dir());
    write_file(cfg.out_dir() + "/ladder.json", ladder_to_json(lad));
}

void run_rho(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    rep.n = 1;
    rep.add_info("atom_mass", rho.atom_mass());
    rep.add_info("EH", rho.EH());
    const double tol = lad.source == LadderData::Source::ClosedForm
                           ? cfg.get_num("thresholds.mass_error", 1e-8)
                           : cfg.get_num("thresholds.mass_error", 0.02);
    rep.add("total_mass_error", rho.total_mass_error(), tol);

    // pointwise consistency of the overshoot marginal with the descending-side
    // convolution against the exact jump tail
    if (model.has_positive_jumps()) {
        double worst = 0.0;
        const double scale = rho.rho2_density(1e-6);
        for (double y = 0.05; y <= 3.0; y += 0.05) {
            double conv = 0.0;
            const double h = 0.002;
            for (double z = h / 2; z < lad.U_minus.back_x(); z += h)
                conv += (lad.Uminus(z + h / 2) - lad.Uminus(std::max(z - h / 2, 0.0))) *
                        model.upper_tail(z + y);
            conv /= lad.EH;
            worst = std::max(worst, std::abs(conv - rho.rho2_density(y)));
        }
        rep.add("rho2_convolution_residual", worst / std::max(scale, 1e-300),
                cfg.get_num("thresholds.rho2_residual", 0.02));
    }
}

void run_silverstein(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    SilversteinConfig sc;
    sc.x_ref = cfg.get_num("params.x_ref", 1.0);
    sc.n_paths = cfg.n_paths();
    sc.horizon = cfg.get_num("params.horizon", 30.0);
    sc.dt = cfg.dt();
    sc.seed = cfg.seed();
    sc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = silverstein_check(model, lad, sc);
    rep.n = sc.n_paths;
    rep.add("occupation_vs_convolution_sup_rel", r.sup_rel_error,
            cfg.get_num("thresholds.sup_rel", 0.05));
    rep.flags["survivor_fraction"] = r.survivor_fraction;

    if (model.family() == Family::BrownianStandard) {
        // the factorized density must match the killed-path potential exactly
        double worst = 0.0;
        for (double y = 0.1; y <= 3.0; y += 0.1)
            worst = std::max(worst, std::abs(factorized_potential_density(lad, sc.x_ref, y) -
                                             2.0 * std::min(sc.x_ref, y)));
        rep.add("analytic_potential_error", worst, cfg.get_num("thresholds.analytic", 1e-10));
    }
}

void run_duality(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    DualityConfig dc;
    dc.t = cfg.get_num("params.t", 0.5);
    dc.x_max = cfg.get_num("params.x_max", 2.0);
    dc.bins = static_cast<int>(cfg.get_int("params.bins", 10));
    dc.n_total = cfg.get_int("params.n_paths", 1000000);
    dc.dt = cfg.dt();
    dc.seed = cfg.seed();
    dc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = green_duality_check(model, lad, dc);
    rep.n = dc.n_total;
    const double thr = cfg.get_num("thresholds.max_asym",
                                   model.family() == Family::BrownianStandard ? 0.07 : 0.10);
    rep.add("max_rel_asymmetry", r.max_rel_asym, thr);
    rep.add_info("mean_rel_asymmetry", r.mean_rel_asym);
    rep.flags["scored_cells"] = static_cast<double>(r.scored_cells);
    rep.flags["excluded_cells"] = static_cast<double>(r.excluded_cells);
    if (r.closed_form_asym >= 0.0)
        rep.add("closed_form_asymmetry", r.closed_form_asym,
                cfg.get_num("thresholds.closed_form", 1e-8));
}

void run_potential(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    PotentialConfig pc;
    pc.x_max = cfg.get_num("params.x_max", 2.0);
    pc.n_paths = cfg.get_int("params.n_paths", 30000);
    pc.horizon = cfg.get_num("params.horizon", 400.0);
    pc.dt = cfg.dt();
    pc.seed = cfg.seed();
    pc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = potential_identity_check(model, lad, rho, pc);
    rep.n = pc.n_paths;
    rep.add("ratio_max_deviation", std::max(r.max_ratio - 1.0, 1.0 - r.min_ratio),
            cfg.get_num("thresholds.ratio_dev", 0.05));
    rep.flags["passage_miss_fraction"] = r.passage_miss_fraction;
    rep.flags["correction_magnitude"] = r.correction_magnitude;
    if (model.family() == Family::BrownianStandard)
        rep.add("analytic_identity_error", r.analytic_identity_error,
                cfg.get_num("thresholds.analytic", 1e-10));
}

void run_overshoot(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    OvershootLimitConfig oc;
    oc.z_list = cfg.get_list("params.z_list", {2.0, 5.0, 10.0});
    oc.n_paths = cfg.n_paths();
    oc.horizon = cfg.get_num("params.horizon", 2500.0);
    oc.dt = cfg.get_num("params.dt", 1e-2);
    oc.seed = cfg.seed();
    oc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = overshoot_limit_check(model, rho, oc);
    rep.n = oc.n_paths;
    double prev = 1e9;
    bool monotone = true;
    for (const auto& lvl : r.levels) {
        rep.add_info("ks_rho2_z=" + std::to_string(lvl.z), lvl.ks_rho2);
        rep.flags["undetected_z=" + std::to_string(lvl.z)] = lvl.undetected_fraction;
        if (lvl.ks_rho2 > prev + 0.005) monotone = false;
        prev = lvl.ks_rho2;
    }
    if (!r.levels.empty()) {
        rep.add("ks_rho2_final", r.levels.back().ks_rho2,
                cfg.get_num("thresholds.final_ks", 0.02));
        rep.add("ks_joint_final", r.levels.back().ks_joint,
                cfg.get_num("thresholds.final_joint_ks", 0.03));
        rep.add("monotone_decreasing", monotone ? 1.0 : 0.0, 1.0, false);
        if (r.levels.back().ks_overshoot_exp >= 0.0)
            rep.add("ks_overshoot_memoryless", r.levels.back().ks_overshoot_exp,
                    cfg.get_num("thresholds.memoryless_ks", 0.01));
    }
}

void run_stationary(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    const StationaryConfig sc = stationary_config(cfg);
    const double z = cfg.get_num("params.z", 1.0);
    const auto ens = make_stationary_ensemble(model, lad, rho, sc);
    rep.n = sc.n_paths;
    rep.flags["ensemble_ess"] = ens.ess;

    const auto cs = crossing_stationarity_check(ens, rho, z);
    rep.add("crossing_ks_under", cs.ks_under, cfg.get_num("thresholds.crossing_ks", 0.02));
    rep.add("crossing_ks_over", cs.ks_over, cfg.get_num("thresholds.crossing_ks", 0.02));
    rep.add_info("crossing_ks_joint", cs.ks_joint);
    rep.flags["crossing_undetected"] = cs.undetected_fraction;

    ConditionalIndependenceConfig ic;
    const auto ci = conditional_independence_check(ens, z, ic);
    if (ci.degenerate) {
        rep.add_info("cond_indep_degenerate", 1.0);
    } else {
        rep.add("cond_indep_frac_p_below_05", ci.frac_below_05,
                cfg.get_num("thresholds.indep_frac", 0.41));
        if (ci.ks_overshoot_memoryless >= 0.0)
            rep.add("overshoot_memoryless_per_bin", ci.ks_overshoot_memoryless,
                    cfg.get_num("thresholds.memoryless_ks", 0.05));
    }

    const double x_lvl = cfg.get_num("params.x", 1.0);
    const auto probes = cfg.get_list("params.probes", {-0.5, 0.5});
    StationaryConfig sc2 = sc;
    sc2.seed = derive_seed(sc.seed, 0xFEE);
    const auto fresh = make_stationary_ensemble(model, lad, rho, sc2);
    const auto sp = spatial_stationarity_check(ens, fresh, x_lvl, probes);
    for (std::size_t p = 0; p < probes.size(); ++p)
        rep.add("spatial_ks_t=" + std::to_string(probes[p]), sp.probe_ks[p],
                cfg.get_num("thresholds.spatial_ks", 0.03));
    rep.flags["spatial_coverage_shortfall"] = sp.coverage_shortfall;
}

void run_reversal(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    const StationaryConfig sc = stationary_config(cfg);
    const double z = cfg.get_num("params.z", 1.0);
    const auto ens = make_stationary_ensemble(model, lad, rho, sc);
    ReversalConfig rc;
    rc.probes = cfg.get_list("params.probes", {0.1, 0.3});
    rc.oracle_paths = cfg.get_int("params.oracle_paths", 20000);
    rc.oracle_horizon = cfg.get_num("params.oracle_horizon", 7.5);
    const auto r = reversal_check(ens, lad, rho, z, rc);
    rep.n = sc.n_paths;
    rep.add("reversal_max_ks", r.max_ks,
            cfg.get_num("thresholds.reversal_ks",
                        model.family() == Family::BrownianStandard ? 0.03 : 0.05));
    rep.flags["oracle_not_settled"] = r.oracle_not_settled_fraction;
}

void run_williams(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    WilliamsConfig wc;
    wc.x = cfg.get_num("params.x", 1.0);
    wc.n_paths = cfg.n_paths();
    wc.horizon = cfg.get_num("params.horizon", 20.0);
    wc.dt = cfg.dt();
    wc.probes = cfg.get_list("params.probes", {0.1, 0.3});
    wc.seed = cfg.seed();
    wc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = williams_check(model, lad, wc);
    rep.n = wc.n_paths;
    rep.add("duration_ks", r.ks_duration, cfg.get_num("thresholds.duration_ks", 0.02));
    for (std::size_t p = 0; p < r.probe_ks.size(); ++p)
        rep.add("probe_ks_t=" + std::to_string(wc.probes[p]), r.probe_ks[p],
                cfg.get_num("thresholds.probe_ks", 0.03));
    rep.flags["not_settled"] = r.not_settled_fraction;
    rep.flags["undetected"] = r.undetected_fraction;
    rep.flags["continuity_accept_a"] = r.continuity_accept_a;
    rep.flags["continuity_accept_b"] = r.continuity_accept_b;
}

void run_duquesne(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    DuquesneConfig dc;
    dc.x = cfg.get_num("params.x", 1.0);
    dc.n_paths = cfg.n_paths();
    dc.horizon = cfg.get_num("params.horizon", 20.0);
    dc.dt = cfg.dt();
    dc.seed = cfg.seed();
    dc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = duquesne_check(model, lad, dc);
    rep.n = dc.n_paths;
    rep.add("duration_ks", r.ks_duration, cfg.get_num("thresholds.duration_ks", 0.03));
    rep.add("terminal_ks", r.ks_terminal, cfg.get_num("thresholds.terminal_ks", 0.03));
    rep.flags["not_settled"] = r.not_settled_fraction;
}

void run_converge(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);
    StationaryConfig sc = stationary_config(cfg);
    sc.dt = cfg.get_num("params.target_dt", 1e-2);
    const auto target = make_stationary_ensemble(model, lad, rho, sc);
    ConvergenceConfig cc;
    cc.x_list = cfg.get_list("params.x_list", {-2.0, -5.0, -10.0});
    cc.b = cfg.get_num("params.b", -1.0);
    cc.probes = cfg.get_list("params.probes", {0.0, -0.5});
    cc.n_paths = cfg.n_paths();
    cc.horizon = cfg.get_num("params.horizon", 2500.0);
    cc.dt = cfg.get_num("params.dt", 1e-2);
    cc.seed = cfg.seed();
    cc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = convergence_from_minus_infinity(model, target, cc);
    rep.n = cc.n_paths;
    for (const auto& per : r.starts) {
        rep.add_info("probe0_ks_x=" + std::to_string(per.x0), per.probe_ks.front());
        rep.flags["no_entrance_x=" + std::to_string(per.x0)] = per.no_entrance_fraction;
    }
    if (!r.starts.empty()) {
        rep.add("probe0_ks_final", r.starts.back().probe_ks.front(),
                cfg.get_num("thresholds.final_ks", 0.02));
        rep.add("nonincreasing", r.nonincreasing_probe0 ? 1.0 : 0.0, 1.0, false);
        for (std::size_t p = 1; p < cc.probes.size(); ++p)
            if (r.starts.back().probe_ks[p] >= 0.0)
                rep.add("probe_ks_t=" + std::to_string(cc.probes[p]),
                        r.starts.back().probe_ks[p], cfg.get_num("thresholds.negative_ks", 0.05));
    }
}

void run_coupling(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    const LadderData lad = resolve_ladder(cfg, model);
    const RhoLaw rho = build_rho(model, lad);

    CouplingEpsilonConfig ec;
    ec.epsilon = cfg.get_num("params.epsilon", 0.1);
    ec.horizon = cfg.get_num("params.horizon", 1000.0);
    ec.dt = cfg.get_num("params.dt", 1e-2);
    ec.n_samples = cfg.get_int("params.n_samples", 1000);
    ec.seed = cfg.seed();
    ec.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r1 = coupling_epsilon(model, rho, ec);
    rep.add("eps_coupling_success", r1.success_fraction,
            cfg.get_num("thresholds.success", 0.99), false);
    rep.add("eps_gamma_max", r1.max_gamma, ec.epsilon);
    rep.add("eps_post_increment_ks", r1.ks_post_increments,
            cfg.get_num("thresholds.increment_ks", 0.02));

    if (lad.a_plus > 0.0) {
        CouplingExactConfig xc;
        xc.dt = cfg.get_num("params.exact_dt", 1e-3);
        xc.n_samples = cfg.get_int("params.exact_samples", 2000);
        xc.seed = derive_seed(cfg.seed(), 2);
        xc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
        const auto r2 = coupling_exact(model, rho, xc);
        rep.add_info("exact_mean_rounds", r2.mean_rounds);
        rep.add("exact_rounds_log_survival_r2", r2.r2_log_survival,
                cfg.get_num("thresholds.r2", 0.95), false);
        rep.flags["exact_cap_exceeded"] = static_cast<double>(r2.cap_exceeded);
    }
    rep.n = ec.n_samples;
}

void run_lamperti(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    rep.n = cfg.n_paths();
    if (model.family() == Family::BrownianStandard) {
        ClockMassConfig mc;
        mc.n_paths = cfg.n_paths();
        mc.horizon_back = cfg.get_num("params.horizon_back", 50.0);
        mc.dt = cfg.dt();
        mc.seed = cfg.seed();
        mc.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
        const auto cm = brownian_initial_clock_mass(mc);
        const double dev_se = std::abs(cm.mean - cm.expected) / std::max(cm.stderr_, 1e-12);
        rep.add("initial_clock_mass_dev_in_se", dev_se, cfg.get_num("thresholds.se_band", 3.0));
        rep.add_info("initial_clock_mass", cm.mean, cm.stderr_);

        EntranceConfig ecfg;
        ecfg.n_paths = cfg.get_int("params.scaling_paths", 20000);
        ecfg.dt = cfg.dt();
        ecfg.seed = derive_seed(cfg.seed(), 3);
        ecfg.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
        ecfg.clock_rate = cfg.get_num("params.clock_rate", 1.0);
        const auto sr = construction_scaling_check(model, cfg.get_num("params.c", 2.0),
                                                   cfg.get_list("params.probes", {1.0}), ecfg);
        for (std::size_t p = 0; p < sr.probe_ks.size(); ++p)
            rep.add("construction_scaling_ks", sr.probe_ks[p],
                    cfg.get_num("thresholds.scaling_ks", 0.02));
    }
    const auto pr = pssmp_scaling_check(
        model, cfg.get_num("params.x", 1.0), cfg.get_num("params.c", 2.0),
        cfg.get_list("params.probes", {1.0}), cfg.get_int("params.scaling_paths", 20000),
        cfg.dt(), cfg.get_num("params.horizon_fwd", 30.0), derive_seed(cfg.seed(), 4),
        static_cast<int>(cfg.get_int("experiment.workers", 0)));
    for (std::size_t p = 0; p < pr.probe_ks.size(); ++p)
        rep.add("pssmp_scaling_ks", pr.probe_ks[p], cfg.get_num("thresholds.scaling_ks", 0.02));
}

void run_entrance(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const LevyModel model = cfg.make_model();
    EntranceConfig ec;
    ec.x_list = cfg.get_list("params.x_list", {0.5, 0.1, 0.02});
    ec.t_probes = cfg.get_list("params.t_probes", {1.0});
    ec.n_paths = cfg.n_paths();
    ec.dt = cfg.dt();
    ec.seed = cfg.seed();
    ec.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    const auto r = entrance_convergence_check(model, ec);
    rep.n = ec.n_paths;
    for (std::size_t xi = 0; xi < r.x_list.size(); ++xi)
        rep.add_info("ks_x=" + std::to_string(r.x_list[xi]), r.ks[xi].front());
    rep.add("ks_final", r.ks.back().front(), cfg.get_num("thresholds.final_ks", 0.03));
    rep.add("decreasing_in_x", r.decreasing_in_x ? 1.0 : 0.0, 1.0, false);
    rep.flags["construction_censor_fraction"] = r.construction_censor_fraction;
}

void run_selftest(const ExperimentConfig& cfg, ExperimentReport& rep) {
    (void)cfg;
    auto check = [&](const std::string& name, bool ok) {
        rep.add(name, ok ? 1.0 : 0.0, 1.0, false);
    };

    // model layer
    bool cp_guard = false;
    try {
        MixtureJumps mix;
        mix.intensity = 1.0;
        mix.components = {{1.0, 1.0, true}};
        make_custom_mixture(0.0, 0.0, std::move(mix));
    } catch (const CompoundPoissonError&) {
        cp_guard = true;
    }
    check("compound_poisson_guard", cp_guard);

    const auto bm = make_brownian_standard();
    check("brownian_no_tail", levy_tail(bm, 1.0) == 0.0);
    const auto kou = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    check("kou_tail_value", std::abs(levy_tail(kou, 1.0) - 0.5 * std::exp(-2.0)) < 1e-15);
    check("negate_involution", [&] {
        const auto k2 = negate(negate(kou));
        return k2.sigma() == kou.sigma() && k2.drift() == kou.drift() &&
               std::abs(levy_tail(k2, 0.7) - levy_tail(kou, 0.7)) < 1e-15;
    }());
    check("classify_drift_up", classify_ladder_mean(make_brownian_drift(1.0)) ==
                                   LadderMeanClass::FiniteMeanLadder);
    check("classify_drift_down", classify_ladder_mean(make_brownian_drift(-1.0)) ==
                                     LadderMeanClass::InfiniteMeanLadder);
    check("classify_kou_centered",
          classify_ladder_mean(kou) == LadderMeanClass::FiniteMeanLadder);

    // ladder closed forms
    const auto lad = closed_form_ladder(bm);
    check("brownian_ladder_constants",
          std::abs(lad.a_plus - 1.0 / kSqrt2) < 1e-12 && std::abs(lad.EH - 1.0 / kSqrt2) < 1e-12 &&
              std::abs(lad.Uplus(1.0) - kSqrt2) < 1e-12);
    bool eq2 = true;
    for (double y = 0.25; y <= 3.0; y += 0.25)
        eq2 = eq2 && std::abs(factorized_potential_density(lad, 1.0, y) -
                              2.0 * std::min(1.0, y)) < 1e-10;
    check("brownian_factorization_exact", eq2);
    const auto rho = build_rho(bm, lad);
    check("brownian_rho_is_atom", std::abs(rho.atom_mass() - 1.0) < 1e-12);
    check("mass_of_m_equals_EH", std::abs(mass_of_m(bm, lad) - lad.EH) < 1e-12);

    // deterministic path facts
    const auto line = simulate(make_custom_mixture(0.0, -1.0, {}), 1.0, 2.0, 1e-3, 7);
    const auto exit_rec = first_exit_nonpositive(line, false, 7);
    check("line_exit_time", exit_rec.detected && std::abs(exit_rec.time - 1.0) < 1e-9 &&
                                !exit_rec.crossed_by_jump);
    const auto rev = reverse_at(line, 1.0);
    check("line_reversal", std::abs(rev.start_value() - line.left_limit_at(1.0)) < 1e-12);

    // statistics layer
    WeightedSample a, b;
    for (int i = 0; i < 64; ++i) {
        a.values.push_back(i);
        b.values.push_back(i);
    }
    check("ks_identical_zero", ks_two_sample(a, b).statistic == 0.0);
    WeightedSample c;
    for (int i = 0; i < 64; ++i) c.values.push_back(i + 1000.0);
    check("ks_disjoint_one", ks_two_sample(a, c).statistic == 1.0);
    check("w1_point_masses", [&] {
        WeightedSample p, q;
        p.values = {0.0};
        q.values = {3.5};
        return std::abs(w1_distance(p, q) - 3.5) < 1e-12;
    }());
    rep.n = static_cast<long>(rep.statistics.size());
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "simulate", "ladder",   "rho",      "silverstein", "duality",  "potential",
        "overshoot", "stationary", "reversal", "williams",   "duquesne", "converge",
        "coupling", "lamperti", "entrance", "selftest",
    };
    return names;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport rep;
    rep.experiment = cfg.experiment;
    echo_config(cfg, rep);

    const auto t0 = std::chrono::steady_clock::now();
    const std::string& e = cfg.experiment;
    if (e == "simulate") run_simulate(cfg, rep);
    else if (e == "ladder") run_ladder(cfg, rep);
    else if (e == "rho") run_rho(cfg, rep);
    else if (e == "silverstein") run_silverstein(cfg, rep);
    else if (e == "duality") run_duality(cfg, rep);
    else if (e == "potential") run_potential(cfg, rep);
    else if (e == "overshoot") run_overshoot(cfg, rep);
    else if (e == "stationary") run_stationary(cfg, rep);
    else if (e == "reversal") run_reversal(cfg, rep);
    else if (e == "williams") run_williams(cfg, rep);
    else if (e == "duquesne") run_duquesne(cfg, rep);
    else if (e == "converge") run_converge(cfg, rep);
    else if (e == "coupling") run_coupling(cfg, rep);
    else if (e == "lamperti") run_lamperti(cfg, rep);
    else if (e == "entrance") run_entrance(cfg, rep);
    else if (e == "selftest") run_selftest(cfg, rep);
    else throw UnknownExperimentError("unknown experiment: " + e);

    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

}  // namespace levylab
