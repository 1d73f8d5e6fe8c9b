#include "levylab/estimate_ladder.hpp"

#include <algorithm>
#include <cmath>

#include "levylab/parallel.hpp"
#include "levylab/path_engine.hpp"
#include "levylab/stats.hpp"
#include "mc_kernels.hpp"

namespace levylab {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct IncrementHist {
    std::vector<double> mass;  // lattice-rounded increment counts
    double h = 0.0;
    double n_increments = 0.0;
    double big_count = 0.0;    // increments above one reference level
    double big_level = 0.0;

    void merge(const IncrementHist& o) {
        if (mass.size() < o.mass.size()) mass.resize(o.mass.size(), 0.0);
        for (std::size_t i = 0; i < o.mass.size(); ++i) mass[i] += o.mass[i];
        n_increments += o.n_increments;
        big_count += o.big_count;
    }
};

struct LadderVisitor {
    IncrementHist* hist;
    double vmax = 0.0;

    void segment(double, double, double, double) {}
    void jump(double, double, double) {}
    bool cell_end(long, double v) {
        if (v > vmax) {
            const double inc = v - vmax;
            const long j = std::lround(inc / hist->h);
            if (j >= 0 && static_cast<std::size_t>(j) < hist->mass.size()) hist->mass[j] += 1.0;
            hist->n_increments += 1.0;
            if (inc > hist->big_level) hist->big_count += 1.0;
            vmax = v;
        }
        return true;
    }
};

// pooled new-maximum increment law of the grid walk
IncrementHist pool_increments(const LevyModel& model, long n_paths, double horizon, double dt,
                              double h, std::size_t n_lattice, double big_level,
                              std::uint64_t seed, int workers) {
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    const long chunk = std::max<long>(1, n_paths / (8 * workers) + 1);
    auto partials = parallel_chunks<IncrementHist>(
        n_paths, chunk, workers, [&](long, long lo, long hi) {
            IncrementHist local;
            local.h = h;
            local.mass.assign(n_lattice, 0.0);
            local.big_level = big_level;
            for (long i = lo; i < hi; ++i) {
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
                LadderVisitor vis{&local, 0.0};
                walk_model(model, 0.0, dt, n_cells, rng, vis);
            }
            return local;
        });
    IncrementHist total;
    total.h = h;
    total.big_level = big_level;
    total.mass.assign(n_lattice, 0.0);
    for (const auto& p : partials) total.merge(p);
    return total;
}

// renewal measure on the lattice: r[k] = sum of n-fold convolutions of the
// increment law, r[0] carrying the origin atom
std::vector<double> renewal_measure(const IncrementHist& hist) {
    const std::size_t K = hist.mass.size();
    std::vector<double> f(K, 0.0);
    if (hist.n_increments <= 0.0) throw CalibrationError("no ladder increments observed");
    for (std::size_t k = 0; k < K; ++k) f[k] = hist.mass[k] / hist.n_increments;
    const double f0 = f[0];
    if (f0 > 0.5) throw CalibrationError("increment lattice too coarse (mass at zero)");
    std::vector<double> r(K, 0.0);
    r[0] = 1.0 / (1.0 - f0);
    for (std::size_t k = 1; k < K; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += f[j] * r[k - j];
        r[k] = s / (1.0 - f0);
    }
    return r;
}

// factorization convolution on the lattice: density in y of the potential
// started at x, built from the two renewal measures (unit scale)
double lattice_conv(const std::vector<double>& r_minus, const std::vector<double>& r_plus,
                    double h, double x, double y) {
    const long jx = std::lround(x / h);
    const long jy = std::lround(y / h);
    const long lo = std::max<long>(jx - jy, 0);
    double s = 0.0;
    for (long j = lo; j <= jx; ++j) {
        const long arg = jy + j - jx;
        if (arg < 0 || static_cast<std::size_t>(arg) >= r_plus.size()) continue;
        if (static_cast<std::size_t>(j) >= r_minus.size()) break;
        s += r_minus[static_cast<std::size_t>(j)] * r_plus[static_cast<std::size_t>(arg)];
    }
    return s / h;
}

}  // namespace

LadderData estimate_ladder(const LevyModel& model, const EstimateLadderConfig& cfg) {
    const auto cls = classify_ladder_mean(model);
    if (cls != LadderMeanClass::FiniteMeanLadder)
        throw InfiniteMeanLadderError("estimate_ladder: model classified " +
                                      ladder_mean_class_name(cls));

    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    const double step_scale =
        std::max(model.sigma() * std::sqrt(cfg.dt), 0.05 * std::sqrt(cfg.dt));
    double h = std::clamp(0.05 * step_scale, cfg.x_top / 40000.0, cfg.x_top / 2000.0);
    const std::size_t K = static_cast<std::size_t>(std::ceil(cfg.x_top / h)) + 1;
    h = cfg.x_top / static_cast<double>(K - 1);

    const double big_level = model.has_positive_jumps() ? 0.5 : 1e18;

    const LevyModel dual = negate(model);
    const auto hist_up = pool_increments(model, cfg.n_paths, cfg.horizon, cfg.dt, h, K, big_level,
                                         derive_seed(cfg.seed, 1), workers);
    const auto hist_dn = pool_increments(dual, cfg.n_paths, cfg.horizon, cfg.dt, h, K, 1e18,
                                         derive_seed(cfg.seed, 2), workers);

    const auto r_plus = renewal_measure(hist_up);
    const auto r_minus = renewal_measure(hist_dn);

    // --- pin the product of the side scales against an occupation estimate ---
    const std::size_t n_ybins = 48;
    const double hy = cfg.y_top / static_cast<double>(n_ybins);
    const long n_occ = cfg.occupation_paths > 0 ? cfg.occupation_paths : cfg.n_paths;
    const auto occ = kernels::run_occupation(model, cfg.x_ref, cfg.occupation_horizon, cfg.dt, hy, n_ybins,
                                    n_occ, derive_seed(cfg.seed, 3), workers);
    const double p_surv = occ.survivors / occ.n_paths;
    const double x_flat = cfg.x_top;  // proxy for the renewal-limit profile

    double num = 0.0, den = 0.0;
    std::vector<double> fitted_g(n_ybins), observed(n_ybins);
    for (std::size_t b = 0; b < n_ybins; ++b) {
        const double y = (static_cast<double>(b) + 0.5) * hy;
        const double conv = lattice_conv(r_minus, r_plus, h, cfg.x_ref, y);
        const double conv_flat = lattice_conv(r_minus, r_plus, h, x_flat, y);
        const double g = conv - p_surv * conv_flat;
        const double obs = occ.time_in_bin[b] / (occ.n_paths * hy);
        fitted_g[b] = g;
        observed[b] = obs;
        num += obs * g;
        den += g * g;
    }
    if (den <= 0.0) throw CalibrationError("degenerate occupation fit");
    const double q = num / den;
    double resid2 = 0.0, norm2 = 0.0;
    for (std::size_t b = 0; b < n_ybins; ++b) {
        const double e = observed[b] - q * fitted_g[b];
        resid2 += e * e;
        norm2 += observed[b] * observed[b];
    }
    const double eq2_residual = std::sqrt(resid2 / std::max(norm2, 1e-300));
    if (eq2_residual > cfg.residual_gate)
        throw CalibrationError("occupation fit residual " + std::to_string(eq2_residual) +
                               " exceeds gate");
    if (q <= 0.0) throw CalibrationError("non-positive scale from occupation fit");

    const double s_plus = std::sqrt(q);   // equal-drift split of the product
    const double s_minus = std::sqrt(q);

    // --- tabulate renewal functions on a coarser output grid ---
    const std::size_t out_n = 800;
    auto cum_tab = [&](const std::vector<double>& r, double scale) {
        std::vector<double> cum(r.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            acc += r[k];
            cum[k] = acc * scale;
        }
        auto grid = linspace(0.0, cfg.x_top, out_n);
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double pos = grid[i] / h;
            const std::size_t k = std::min(static_cast<std::size_t>(pos), r.size() - 1);
            vals[i] = cum[k];
        }
        // linear tail from the top decile
        const double slope = (vals.back() - vals[out_n - out_n / 10]) /
                             (grid.back() - grid[out_n - out_n / 10]);
        return TabulatedFunction(std::move(grid), std::move(vals),
                                 TabulatedFunction::Interp::Linear,
                                 TailModel::linear(slope, vals.back() - slope * cfg.x_top));
    };
    LadderData L;
    L.source = LadderData::Source::MonteCarloCalibrated;
    L.U_plus = cum_tab(r_plus, s_plus);
    L.U_minus = cum_tab(r_minus, s_minus);

    // ascending renewal density by symmetric difference quotient
    {
        const double dlt = std::max(0.02, 3.0 * h);
        auto grid = linspace(0.0, cfg.x_top, out_n);
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid[i];
            const double lo = std::max(x - dlt, 0.0);
            const double hi2 = std::min(x + dlt, cfg.x_top);
            vals[i] = (L.U_plus(hi2) - L.U_plus(lo)) / (hi2 - lo);
        }
        L.u_plus = TabulatedFunction(std::move(grid), std::move(vals),
                                     TabulatedFunction::Interp::Linear, TailModel::none());
    }

    // --- ascending drift from continuous dual exits at small starts ---
    double a_plus = 0.0;
    {
        double acc = 0.0;
        int used = 0;
        for (std::size_t pi = 0; pi < cfg.drift_probe_x.size(); ++pi) {
            const double x = cfg.drift_probe_x[pi];
            const auto res =
                kernels::exit_kind_fractions(dual, x, cfg.drift_probe_horizon, cfg.dt,
                                    cfg.drift_probe_paths,
                                    derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(pi)),
                                    workers);
            const double detected = res.continuous + res.jump;
            if (detected <= 0.0) continue;
            const double frac = res.continuous / detected;
            const double u = L.u_plus(x);
            if (u > 0.0) {
                acc += frac / u;
                ++used;
            }
        }
        if (used == 0) throw CalibrationError("ascending drift probes all failed");
        a_plus = acc / used;
    }
    L.a_plus = a_plus;
    L.a_minus = a_plus;  // equal-drift convention

    // --- ascending jump tail from the descending side and the exact jump tail ---
    {
        auto grid = linspace(0.0, cfg.x_top, out_n);
        std::vector<double> vals(grid.size(), 0.0);
        double slowest = 0.0;
        const auto tails = model.positive_exp_tails();
        for (const auto& t : tails) slowest = slowest == 0.0 ? t.alpha : std::min(slowest, t.alpha);
        if (model.has_positive_jumps()) {
            // linear extension of U_minus beyond the lattice
            const double slope_m = L.U_minus.tail().slope;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double y = grid[i];
                double s = 0.0;
                for (std::size_t j = 0; j < r_minus.size(); ++j) {
                    const double z = static_cast<double>(j) * h;
                    const double arg = z + y;
                    if (arg <= 0.0) continue;
                    s += s_minus * r_minus[j] * model.upper_tail(arg);
                }
                // tail remainder with the linear slope
                for (const auto& t : tails)
                    s += slope_m * t.rate * std::exp(-t.alpha * (cfg.x_top + y)) / t.alpha;
                vals[i] = s;
            }
        }
        TailModel tail = TailModel::none();
        if (model.has_positive_jumps() && slowest > 0.0)
            tail = TailModel::exponential(vals.back() * std::exp(slowest * cfg.x_top), slowest);
        L.mu_plus_tail = TabulatedFunction(std::move(grid), std::move(vals),
                                           TabulatedFunction::Interp::Linear, tail);
    }

    // --- mass of m, Lemma-2 bookkeeping and residuals ---
    L.EH = mass_of_m(model, L);
    const double slope_plus = L.U_plus.tail().slope;
    const double eh_renewal = slope_plus > 0.0 ? 1.0 / slope_plus : 0.0;
    L.prov.mass_residual = eh_renewal > 0.0 ? std::abs(L.EH - eh_renewal) / L.EH : 0.0;

    double vigon_residual = 0.0;
    if (model.has_positive_jumps() && hist_up.n_increments > 0.0) {
        // independent check: rate of large new-max increments per unit local time
        const double p_big = hist_up.big_count / hist_up.n_increments;
        const double mu_ind = p_big / s_plus;
        const double mu_conv = L.mu_plus_tail(big_level);
        const double mu0 = L.mu_plus_tail(0.0);
        if (mu0 > 0.0) vigon_residual = std::abs(mu_ind - mu_conv) / mu0;
        if (vigon_residual > cfg.residual_gate)
            throw CalibrationError("ascending-tail consistency residual " +
                                   std::to_string(vigon_residual) + " exceeds gate");
    }

    L.prov.seed = cfg.seed;
    L.prov.n_paths = cfg.n_paths;
    L.prov.dt = cfg.dt;
    L.prov.horizon = cfg.horizon;
    L.prov.scale_q = q;
    L.prov.eq2_residual = eq2_residual;
    L.prov.vigon_residual = vigon_residual;

    if (!L.monotone_ok()) throw CalibrationError("estimated renewal functions not monotone");
    return L;
}

}  // namespace levylab
