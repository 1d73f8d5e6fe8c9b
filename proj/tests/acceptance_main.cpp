// Acceptance suite: one pass/fail line per criterion, statistical tolerances
// pinned in code.  Exit status propagates any failure.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "levylab/config.hpp"
#include "levylab/coupling.hpp"
#include "levylab/estimate_ladder.hpp"
#include "levylab/experiments.hpp"
#include "levylab/fluctuation_checks.hpp"
#include "levylab/lamperti.hpp"
#include "levylab/stationary.hpp"

using namespace levylab;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point t_start;

void line(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    const double mins =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count() / 60.0;
    std::printf("[%2d] %s %-34s %s  (t=%.1f min)\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str(), mins);
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

constexpr double kSqrt2 = 1.4142135623730951;

LevyModel kou_model() { return make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0); }

}  // namespace

int main() {
    t_start = std::chrono::steady_clock::now();
    const auto bm = make_brownian_standard();
    const auto kou = kou_model();
    const auto lad_bm = closed_form_ladder(bm);
    const auto lad_kou = closed_form_ladder(kou);
    const auto rho_bm = build_rho(bm, lad_bm);
    const auto rho_kou = build_rho(kou, lad_kou);

    // ----- 1: Brownian ladder constants from calibrated estimation ---------
    LadderData mc_bm;
    {
        EstimateLadderConfig ec;
        ec.n_paths = 100000;
        ec.horizon = 6.0;
        ec.dt = 1e-3;
        ec.seed = 101;
        mc_bm = estimate_ladder(bm, ec);
        double sup = 0.0;
        for (double x = 0.5; x <= 3.0 + 1e-9; x += 0.25)
            sup = std::max(sup, std::abs(mc_bm.Uplus(x) / (kSqrt2 * x) - 1.0));
        line(1, "brownian ladder constants", sup <= 0.03,
             fmt("sup |U+(x)/(sqrt2 x) - 1| = %.4f on [0.5,3] (<= 0.03), scale q/dt = %.3f",
                 sup, mc_bm.prov.scale_q / ec.dt));
    }

    // ----- 2: semigroup duality --------------------------------------------
    {
        DualityConfig dc;
        dc.t = 0.5;
        dc.x_max = 2.0;
        dc.bins = 10;
        dc.n_total = 1000000;
        dc.dt = 1e-3;
        dc.seed = 202;
        const auto rb = green_duality_check(bm, lad_bm, dc);
        const bool pass_bm = rb.max_rel_asym < 0.07 && rb.closed_form_asym < 1e-8;
        dc.seed = 203;
        const auto rk = green_duality_check(kou, lad_kou, dc);
        const bool pass_kou = rk.max_rel_asym < 0.10;
        line(2, "duality identity", pass_bm && pass_kou,
             fmt("max asym: brownian %.4f (<0.07, closed-form %.2e), kou %.4f (<0.10), "
                 "excluded cells %ld/%ld",
                 rb.max_rel_asym, rb.closed_form_asym, rk.max_rel_asym, rb.excluded_cells,
                 rk.excluded_cells));
    }

    // ----- 3: duality-measure representation --------------------------------
    {
        PotentialConfig pc;
        pc.x_max = 2.0;
        pc.x_lo = 0.2;
        pc.n_paths = 30000;
        pc.horizon = 400.0;
        pc.dt = 1e-3;
        pc.seed = 303;
        const auto r = potential_identity_check(bm, lad_bm, rho_bm, pc);
        const bool ratios_ok = r.min_ratio >= 0.95 && r.max_ratio <= 1.05;
        const bool analytic_ok = r.analytic_identity_error <= 1e-10;
        line(3, "conditioned potential identity", ratios_ok && analytic_ok,
             fmt("EH*occupation/U- in [%.3f, %.3f] on [0.2,2] ([0.95,1.05]); U-u+ dev %.1e "
                 "(<=1e-10)",
                 r.min_ratio, r.max_ratio, r.analytic_identity_error));
    }

    // ----- 4: boundary-measure mass and mean ladder height ------------------
    {
        const double mass_bm_cf = mass_of_m(bm, lad_bm);
        const bool cf_ok = std::abs(mass_bm_cf - 1.0 / kSqrt2) < 1e-12;
        const double mass_bm_mc = mass_of_m(bm, mc_bm);
        const bool mc_ok = std::abs(mass_bm_mc - 1.0 / kSqrt2) / (1.0 / kSqrt2) <= 0.02;

        EstimateLadderConfig ec;
        ec.n_paths = 100000;
        ec.horizon = 6.0;
        ec.dt = 1e-3;
        ec.seed = 404;
        const auto mc_kou = estimate_ladder(kou, ec);
        const double mass_kou = mass_of_m(kou, mc_kou);
        const bool kou_ok = std::abs(mass_kou - lad_kou.EH) / lad_kou.EH <= 0.02;

        const bool classify_ok =
            classify_ladder_mean(make_brownian_drift(1.0)) == LadderMeanClass::FiniteMeanLadder &&
            classify_ladder_mean(kou) == LadderMeanClass::FiniteMeanLadder &&
            classify_ladder_mean(make_brownian_drift(-1.0)) ==
                LadderMeanClass::InfiniteMeanLadder;
        line(4, "boundary-measure mass", cf_ok && mc_ok && kou_ok && classify_ok,
             fmt("closed-form dev %.1e; MC brownian %.4f vs %.4f (2%%); MC kou %.4f vs %.4f "
                 "(2%%); classification %s",
                 std::abs(mass_bm_cf - 1.0 / kSqrt2), mass_bm_mc, 1.0 / kSqrt2, mass_kou,
                 lad_kou.EH, classify_ok ? "ok" : "WRONG"));
    }

    // ----- 5: entrance pair limit ------------------------------------------
    {
        OvershootLimitConfig oc;
        oc.z_list = {2.0, 5.0, 10.0};
        oc.n_paths = 100000;
        oc.horizon = 2500.0;
        oc.dt = 1e-2;
        oc.seed = 505;
        const auto r = overshoot_limit_check(kou, rho_kou, oc);
        bool monotone = true;
        double prev = 1e9;
        for (const auto& lvl : r.levels) {
            if (lvl.ks_rho2 > prev + 0.005) monotone = false;
            prev = lvl.ks_rho2;
        }
        const auto& last = r.levels.back();
        const bool pass = monotone && last.ks_rho2 < 0.02 && r.ks_overshoot_exp_pooled >= 0.0 &&
                          r.ks_overshoot_exp_pooled < 0.01;
        line(5, "entrance pair limit", pass,
             fmt("KS(rho2) z=2,5,10: %.4f, %.4f, %.4f (monotone %s, final <0.02); memoryless "
                 "%.4f (<0.01)",
                 r.levels[0].ks_rho2, r.levels[1].ks_rho2, last.ks_rho2,
                 monotone ? "yes" : "NO", r.ks_overshoot_exp_pooled));
    }

    // ----- 6: crossing stationarity under the two-sided law ----------------
    StationaryConfig sc_kou;
    sc_kou.horizon_back = 3.0;
    sc_kou.horizon_fwd = 6.0;
    sc_kou.dt = 1e-3;
    sc_kou.n_paths = 100000;
    sc_kou.seed = 606;
    const auto ens_kou = make_stationary_ensemble(kou, lad_kou, rho_kou, sc_kou);
    {
        const auto r = crossing_stationarity_check(ens_kou, rho_kou, 1.0);
        StationaryConfig sc_bm = sc_kou;
        sc_bm.n_paths = 20000;
        sc_bm.seed = 607;
        const auto ens_bm = make_stationary_ensemble(bm, lad_bm, rho_bm, sc_bm);
        const auto rb = crossing_stationarity_check(ens_bm, rho_bm, 1.0);
        const bool pass = r.ks_under < 0.02 && r.ks_over < 0.02 && rb.ks_under < 1e-9 &&
                          rb.ks_over < 1e-9;
        line(6, "crossing stationarity", pass,
             fmt("kou KS under/over = %.4f/%.4f (<0.02); brownian degenerate %.4f/%.4f",
                 r.ks_under, r.ks_over, rb.ks_under, rb.ks_over));
    }

    // ----- 7: time reversal at the first exit (Williams) -------------------
    {
        WilliamsConfig wc;
        wc.x = 1.0;
        wc.n_paths = 100000;
        wc.horizon = 20.0;
        wc.dt = 1e-4;
        wc.probes = {0.1, 0.3};
        wc.seed = 707;
        const auto r = williams_check(bm, lad_bm, wc);
        const bool pass = r.ks_duration < 0.02 && r.probe_ks.size() == 2 &&
                          r.probe_ks[0] < 0.03 && r.probe_ks[1] < 0.03;
        line(7, "classical time reversal", pass,
             fmt("duration KS %.4f (<0.02); probe KS %.4f, %.4f (<0.03); settled-excluded %.3f",
                 r.ks_duration, r.probe_ks.empty() ? -1.0 : r.probe_ks[0],
                 r.probe_ks.size() < 2 ? -1.0 : r.probe_ks[1], r.not_settled_fraction));
    }

    // ----- 8: spatial stationarity ------------------------------------------
    {
        StationaryConfig sc2 = sc_kou;
        sc2.seed = 808;
        const auto fresh_kou = make_stationary_ensemble(kou, lad_kou, rho_kou, sc2);
        const auto rk = spatial_stationarity_check(ens_kou, fresh_kou, 1.0, {-0.5, 0.5});

        StationaryConfig sb = sc_kou;
        sb.n_paths = 100000;
        sb.seed = 809;
        const auto ens_b = make_stationary_ensemble(bm, lad_bm, rho_bm, sb);
        sb.seed = 810;
        const auto fresh_b = make_stationary_ensemble(bm, lad_bm, rho_bm, sb);
        const auto rb = spatial_stationarity_check(ens_b, fresh_b, 2.0, {-0.5, 0.5});

        bool pass = true;
        for (double k : rk.probe_ks) pass = pass && k >= 0.0 && k < 0.03;
        for (double k : rb.probe_ks) pass = pass && k >= 0.0 && k < 0.03;
        line(8, "spatial stationarity", pass,
             fmt("kou KS(-0.5/+0.5) = %.4f/%.4f, brownian = %.4f/%.4f (<0.03)", rk.probe_ks[0],
                 rk.probe_ks[1], rb.probe_ks[0], rb.probe_ks[1]));
    }

    // ----- 9: convergence from deep starts plus couplings -------------------
    {
        StationaryConfig st = sc_kou;
        st.dt = 1e-2;
        st.n_paths = 100000;
        st.seed = 909;
        const auto target = make_stationary_ensemble(kou, lad_kou, rho_kou, st);
        ConvergenceConfig cc;
        cc.x_list = {-2.0, -5.0, -10.0};
        cc.b = -1.0;
        cc.probes = {0.0, -0.5};
        cc.n_paths = 100000;
        cc.horizon = 2500.0;
        cc.dt = 1e-2;
        cc.seed = 910;
        const auto r = convergence_from_minus_infinity(kou, target, cc);
        const double final0 = r.starts.back().probe_ks.front();
        bool pass = r.nonincreasing_probe0 && final0 < 0.02;

        CouplingEpsilonConfig ce;
        ce.epsilon = 0.1;
        ce.horizon = 1000.0;
        ce.dt = 1e-2;
        ce.n_samples = 1000;
        ce.seed = 911;
        const auto r4 = coupling_epsilon(kou, rho_kou, ce);
        pass = pass && r4.success_fraction > 0.99 && r4.max_gamma <= ce.epsilon;

        CouplingExactConfig cx;
        cx.n_samples = 2000;
        cx.dt = 1e-3;
        cx.seed = 912;
        const auto r5 = coupling_exact(kou, rho_kou, cx);
        pass = pass && r5.r2_log_survival > 0.95;

        line(9, "convergence from -infinity", pass,
             fmt("probe-0 KS: %.4f, %.4f, %.4f (noninc %s, final <0.02); eps-coupling %.3f "
                 "(>0.99); rounds R2 %.3f (>0.95)",
                 r.starts[0].probe_ks[0], r.starts[1].probe_ks[0], final0,
                 r.nonincreasing_probe0 ? "yes" : "NO", r4.success_fraction,
                 r5.r2_log_survival));
    }

    // ----- 10: exponential clock and the entrance construction --------------
    {
        ClockMassConfig mc;
        mc.n_paths = 30000;
        mc.horizon_back = 50.0;
        mc.dt = 1e-3;
        mc.seed = 1001;
        const auto cm = brownian_initial_clock_mass(mc);
        const bool mass_ok = std::abs(cm.mean - 2.0) <= 3.0 * cm.stderr_;

        EntranceConfig ec;
        ec.x_list = {0.5, 0.1, 0.02};
        ec.t_probes = {1.0};
        ec.n_paths = 100000;
        ec.dt = 1e-3;
        ec.horizon_fwd = 50.0;
        ec.seed = 1002;
        const auto er = entrance_convergence_check(bm, ec);
        const bool entr_ok = er.decreasing_in_x && er.ks.back().front() < 0.03;

        EntranceConfig sc2 = ec;
        sc2.n_paths = 40000;
        sc2.seed = 1003;
        const auto sr = construction_scaling_check(bm, 2.0, {1.0}, sc2);
        const bool scale_ok = sr.probe_ks.front() < 0.02;

        line(10, "entrance construction", mass_ok && entr_ok && scale_ok,
             fmt("E I(0) = %.4f +- %.4f (|dev| <= 3 se); entrance KS %.4f -> %.4f -> %.4f "
                 "(final <0.03); scaling KS %.4f (<0.02)",
                 cm.mean, cm.stderr_, er.ks[0][0], er.ks[1][0], er.ks[2][0],
                 sr.probe_ks.front()));
    }

    // ----- 11: determinism and statistic calibration ------------------------
    {
        auto cfg = ExperimentConfig::from_text(R"(
[experiment]
name = stationary
seed = 4242
[model]
family = KouTwoSidedExp
[params]
n_paths = 2000
dt = 0.002
horizon_back = 1.0
horizon_fwd = 3.0
)");
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        bool identical = a.statistics.size() == b.statistics.size();
        for (std::size_t k = 0; identical && k < a.statistics.size(); ++k)
            identical = a.statistics[k].value == b.statistics[k].value &&
                        a.statistics[k].name == b.statistics[k].name;

        // null calibration of the two-sample KS p-value at the 5% level
        Rng rng(4243);
        const int reps = 1000, ns = 500;
        int rejections = 0;
        for (int r = 0; r < reps; ++r) {
            WeightedSample s1, s2;
            for (int i = 0; i < ns; ++i) {
                s1.values.push_back(rng.gaussian());
                s2.values.push_back(rng.gaussian());
            }
            if (ks_two_sample(s1, s2).p_value < 0.05) ++rejections;
        }
        const double rate = rejections / static_cast<double>(reps);
        const bool calib_ok = rate >= 0.04 && rate <= 0.06;
        line(11, "determinism and calibration", identical && calib_ok,
             fmt("bit-identical rerun %s; null rejection rate %.3f (0.05 +- 0.01)",
                 identical ? "yes" : "NO", rate));
    }

    std::printf("%s: %d/11 criteria passed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                11 - failures);
    return failures == 0 ? 0 : 1;
}
