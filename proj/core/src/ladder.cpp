#include "levylab/ladder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "levylab/errors.hpp"

namespace levylab {

double ExpSumFn::operator()(double x) const {
    double v = lin * x + cst;
    for (const auto& [coef, rate] : exps) v += coef * std::exp(-rate * x);
    return v;
}

double ExpSumFn::integral(double x) const {
    double v = 0.5 * lin * x * x + cst * x;
    for (const auto& [coef, rate] : exps) v += coef * (1.0 - std::exp(-rate * x)) / rate;
    return v;
}

double ExpSumFn::laplace_like(double a) const {
    if (a <= 0.0) throw DomainError("laplace_like requires a > 0");
    double v = lin / (a * a) + cst / a;
    for (const auto& [coef, rate] : exps) v += coef / (a + rate);
    return v;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double eval_cubic(const std::array<double, 4>& c, double x) {
    return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw CalibrationError("root bracketing failed");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// One ladder side of a rational factorization: exponent
// kappa(theta) = c (theta + s1)(theta + s2) / (theta + alpha), s1 <= s2.
struct RationalSide {
    double c, s1, s2, alpha;

    double drift() const { return c; }
    double killing() const { return c * s1 * s2 / alpha; }
    double mu_tail_coef() const { return (c / alpha) * (alpha - s1) * (s2 - alpha); }

    ExpSumFn renewal_density() const {
        const double A = (alpha - s1) / (s2 - s1);
        const double B = (s2 - alpha) / (s2 - s1);
        ExpSumFn f;
        if (s1 < 1e-14) {
            f.cst = A / c;
        } else {
            f.exps.push_back({A / c, s1});
        }
        f.exps.push_back({B / c, s2});
        return f;
    }

    ExpSumFn renewal_function() const {
        const ExpSumFn d = renewal_density();
        ExpSumFn F;
        F.lin = d.cst;
        for (const auto& [coef, rate] : d.exps) {
            F.cst += coef / rate;
            F.exps.push_back({-coef / rate, rate});
        }
        return F;
    }
};

TabulatedFunction tabulate(const ExpSumFn& f, const LadderGrid& g, TailModel tail) {
    auto grid = linspace(0.0, g.x_max, g.cells);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
    return TabulatedFunction(std::move(grid), std::move(v), TabulatedFunction::Interp::Linear, tail);
}

TailModel renewal_tail(const ExpSumFn& F) {
    if (F.lin > 0.0) return TailModel::linear(F.lin, F.cst);
    return TailModel::none();
}

LadderData from_sides(const RationalSide& up, const RationalSide& down, double mu_rate_up) {
    if (up.killing() > 1e-12)
        throw InfiniteMeanLadderError("ascending ladder is defective: the process tends to -infinity");

    LadderData L;
    L.a_plus = up.drift();
    L.a_minus = down.drift();
    L.kill_plus = 0.0;
    L.kill_minus = down.killing();
    L.U_plus_exact = up.renewal_function();
    L.U_minus_exact = down.renewal_function();
    L.u_plus_exact = up.renewal_density();
    L.u_minus_exact = down.renewal_density();

    ExpSumFn mu;
    const double C = up.mu_tail_coef();
    if (C > 1e-15) mu.exps.push_back({C, mu_rate_up});
    L.mu_plus_exact = mu;
    L.EH = L.a_plus + (C > 1e-15 ? C / mu_rate_up : 0.0);
    L.source = LadderData::Source::ClosedForm;
    return L;
}

}  // namespace

void tabulate_closed_form(LadderData& L, const LadderGrid& grid) {
    if (!L.U_plus_exact) throw DomainError("tabulate_closed_form needs exact evaluators");
    L.U_plus = tabulate(*L.U_plus_exact, grid, renewal_tail(*L.U_plus_exact));
    L.U_minus = tabulate(*L.U_minus_exact, grid, renewal_tail(*L.U_minus_exact));
    L.u_plus = tabulate(*L.u_plus_exact, grid, TailModel::none());
    if (!L.mu_plus_exact->exps.empty()) {
        const auto& [coef, rate] = L.mu_plus_exact->exps.front();
        L.mu_plus_tail = tabulate(*L.mu_plus_exact, grid, TailModel::exponential(coef, rate));
    } else {
        L.mu_plus_tail = tabulate(*L.mu_plus_exact, grid, TailModel::none());
    }
}

LadderData closed_form_ladder(const LevyModel& m) {
    const Family fam = m.family();
    LadderGrid grid;

    if (fam == Family::BrownianStandard ||
        (fam == Family::BrownianDrift && std::abs(m.drift()) < 1e-14)) {
        LadderData L;
        L.a_plus = L.a_minus = 1.0 / kSqrt2;
        L.EH = 1.0 / kSqrt2;
        ExpSumFn U;
        U.lin = kSqrt2;
        ExpSumFn u;
        u.cst = kSqrt2;
        L.U_plus_exact = L.U_minus_exact = U;
        L.u_plus_exact = L.u_minus_exact = u;
        L.mu_plus_exact = ExpSumFn{};
        L.source = LadderData::Source::ClosedForm;
        tabulate_closed_form(L, grid);
        return L;
    }

    if (fam == Family::BrownianDrift) {
        const double b = m.drift();
        if (b < 0.0)
            throw InfiniteMeanLadderError("BrownianDrift with b < 0 tends to -infinity");
        LadderData L;
        L.a_plus = L.a_minus = 1.0 / kSqrt2;
        L.EH = 1.0 / kSqrt2;
        L.kill_minus = kSqrt2 * b;
        ExpSumFn Up;
        Up.lin = kSqrt2;
        ExpSumFn up;
        up.cst = kSqrt2;
        ExpSumFn Um;  // (1 - exp(-2bx)) / (sqrt2 b)
        Um.cst = 1.0 / (kSqrt2 * b);
        Um.exps.push_back({-1.0 / (kSqrt2 * b), 2.0 * b});
        ExpSumFn um;
        um.exps.push_back({kSqrt2, 2.0 * b});
        L.U_plus_exact = Up;
        L.u_plus_exact = up;
        L.U_minus_exact = Um;
        L.u_minus_exact = um;
        L.mu_plus_exact = ExpSumFn{};
        L.source = LadderData::Source::ClosedForm;
        tabulate_closed_form(L, grid);
        return L;
    }

    if (fam == Family::KouTwoSidedExp) {
        const double s2 = 0.5 * m.sigma() * m.sigma();
        const double b = m.drift();
        const double lam = m.mixture().intensity;
        double p = 0.0, ap = 1.0, q = 0.0, am = 1.0;
        for (const auto& c : m.mixture().components) {
            if (c.upward) {
                p = c.weight;
                ap = c.rate;
            } else {
                q = c.weight;
                am = c.rate;
            }
        }
        const double mean = mean_increment(m).value;
        if (mean < -1e-12) throw InfiniteMeanLadderError("Kou model tends to -infinity");

        // Laplace exponent as a rational function: the zeros besides 0 are
        // the roots of this cubic.
        const std::array<double, 4> c = {
            b * ap * am - lam * (ap - am) + lam * (p * ap - q * am),
            s2 * ap * am + b * (ap - am) + lam,
            s2 * (ap - am) - b,
            -s2,
        };
        auto f = [&](double x) { return eval_cubic(c, x); };

        double hi = ap + 1.0;
        while (f(hi) > 0.0) hi *= 2.0;
        const double beta = bisect_root(f, ap * (1.0 + 1e-12), hi);

        double lo = -am - 1.0;
        while (f(lo) < 0.0) lo *= 2.0;
        const double gamma = -bisect_root(f, lo, -am * (1.0 + 1e-12));

        double mid = 0.0;
        if (std::abs(mean) > 1e-12) {
            mid = mean > 0.0 ? bisect_root(f, -am * (1.0 - 1e-12), 0.0)
                             : bisect_root(f, 0.0, ap * (1.0 - 1e-12));
        }

        const double cc = m.sigma() / kSqrt2;  // equal-drift split of the normalization
        RationalSide up_side, down_side;
        if (mid <= 0.0) {
            up_side = {cc, 0.0, beta, ap};
            down_side = {cc, -mid, gamma, am};
        } else {
            up_side = {cc, mid, beta, ap};
            down_side = {cc, 0.0, gamma, am};
        }
        LadderData L = from_sides(up_side, down_side, ap);
        tabulate_closed_form(L, grid);
        return L;
    }

    if (fam == Family::SpectrallyNegativeExp) {
        const double s2 = 0.5 * m.sigma() * m.sigma();
        const double b = m.drift();
        const double lam = m.mixture().intensity;
        const double al = m.mixture().components.front().rate;
        const double mean = b - lam / al;
        if (mean < -1e-12)
            throw InfiniteMeanLadderError("spectrally negative model tends to -infinity");

        LadderData L;
        L.source = LadderData::Source::ClosedForm;
        L.mu_plus_exact = ExpSumFn{};  // no positive jumps: ascending ladder is pure drift

        if (s2 > 0.0) {
            const double a_up = m.sigma() / kSqrt2;
            // zeros of s2 th^2 + (s2 al + b) th + (b al - lam)
            const double B = s2 * al + b, C = b * al - lam;
            const double disc = std::sqrt(B * B - 4.0 * s2 * C);
            double t1 = (B - disc) / (2.0 * s2);
            const double t2 = (B + disc) / (2.0 * s2);
            if (std::abs(mean) <= 1e-12) t1 = 0.0;
            RationalSide down{s2 / a_up, t1, t2, al};
            L.a_plus = a_up;
            L.a_minus = down.drift();
            L.kill_minus = down.killing();
            L.U_minus_exact = down.renewal_function();
            L.u_minus_exact = down.renewal_density();
        } else {
            const double a_up = 1.0;
            L.a_plus = a_up;
            L.a_minus = 0.0;
            L.kill_minus = mean / a_up;
            L.atom_minus = a_up / b;
            const double t = al - lam / b;
            ExpSumFn um;  // density part of the descending renewal measure
            um.exps.push_back({a_up * lam / (b * b), std::max(t, 0.0)});
            if (t <= 1e-14) {
                um.exps.clear();
                um.cst = a_up * lam / (b * b);
            }
            ExpSumFn Um;
            Um.cst = L.atom_minus;
            if (um.cst > 0.0) {
                Um.lin = um.cst;
            } else {
                const auto& [coef, rate] = um.exps.front();
                Um.cst += coef / rate;
                Um.exps.push_back({-coef / rate, rate});
            }
            L.U_minus_exact = Um;
            L.u_minus_exact = um;
        }
        ExpSumFn Up;
        Up.lin = 1.0 / L.a_plus;
        ExpSumFn up;
        up.cst = 1.0 / L.a_plus;
        L.U_plus_exact = Up;
        L.u_plus_exact = up;
        L.EH = L.a_plus;
        tabulate_closed_form(L, grid);
        return L;
    }

    throw UnsupportedFamilyError("closed_form_ladder: unsupported family " + family_name(fam) +
                                 "; use estimate_ladder");
}

double LadderData::Uplus(double x) const {
    if (x <= 0.0) return x == 0.0 ? atom_plus : 0.0;
    return U_plus_exact ? (*U_plus_exact)(x) : U_plus(x);
}
double LadderData::Uminus(double x) const {
    if (x <= 0.0) return x == 0.0 ? atom_minus : 0.0;
    return U_minus_exact ? (*U_minus_exact)(x) : U_minus(x);
}
double LadderData::uplus(double x) const {
    return u_plus_exact ? (*u_plus_exact)(std::max(x, 0.0)) : u_plus(std::max(x, 0.0));
}
double LadderData::uminus(double x) const {
    if (u_minus_exact) return (*u_minus_exact)(std::max(x, 0.0));
    // difference quotient on the tabulation
    const double h = (U_minus.back_x() - U_minus.front_x()) / (2.0 * U_minus.size());
    return (Uminus(x + h) - Uminus(std::max(x - h, 0.0))) / (h + std::min(x, h));
}
double LadderData::mu_plus(double y) const {
    if (mu_plus_exact) return (*mu_plus_exact)(std::max(y, 0.0));
    return mu_plus_tail(std::max(y, 0.0));
}

bool LadderData::monotone_ok() const {
    return U_plus.is_nondecreasing(1e-12) && U_minus.is_nondecreasing(1e-12);
}

double mass_of_m(const LevyModel& model, const LadderData& ladder, double* quad_error) {
    if (quad_error) *quad_error = 0.0;
    double mass = ladder.a_plus;
    if (!model.has_positive_jumps()) return mass;

    const auto tails = model.positive_exp_tails();
    if (!tails.empty() && ladder.U_minus_exact) {
        for (const auto& t : tails) mass += t.rate * ladder.U_minus_exact->laplace_like(t.alpha);
        return mass;
    }

    // quadrature on the tabulated U_minus with an analytic linear-tail remainder
    const double x_top = ladder.U_minus.back_x();
    const std::size_t n = 4000;
    const double h = x_top / n;
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double tail = x > 0 ? model.upper_tail(x) : model.upper_tail(1e-12);
        acc += w * tail * ladder.Uminus(x);
    }
    mass += acc * h;
    // remainder: extend U_minus linearly beyond the grid
    const double slope = (ladder.Uminus(x_top) - ladder.Uminus(0.8 * x_top)) / (0.2 * x_top);
    const double u_top = ladder.Uminus(x_top);
    double rem = 0.0;
    for (const auto& t : model.positive_exp_tails()) {
        const double e = std::exp(-t.alpha * x_top);
        rem += t.rate * e * (u_top / t.alpha + slope / (t.alpha * t.alpha));
    }
    mass += rem;
    if (quad_error) *quad_error = std::abs(rem) * 0.5 + mass * 1e-6;
    return mass;
}

double factorized_potential_density(const LadderData& L, double x, double y) {
    if (x <= 0.0 || y <= 0.0) return 0.0;
    const double lo = std::max(x - y, 0.0);
    double out = 0.0;
    if (L.atom_minus > 0.0 && lo == 0.0) out += L.atom_minus * L.uplus(y - x);

    if (L.u_minus_exact && L.u_plus_exact) {
        // expand both densities as sums of exponentials (constants have rate 0)
        auto terms = [](const ExpSumFn& f) {
            std::vector<std::pair<double, double>> t = f.exps;
            if (f.cst != 0.0) t.push_back({f.cst, 0.0});
            return t;
        };
        for (const auto& [ci, ri] : terms(*L.u_minus_exact)) {
            for (const auto& [dj, qj] : terms(*L.u_plus_exact)) {
                const double pref = ci * dj * std::exp(-qj * (y - x));
                const double r = ri + qj;
                double seg;
                if (r < 1e-14) {
                    seg = x - lo;
                } else {
                    seg = (std::exp(-r * lo) - std::exp(-r * x)) / r;
                }
                out += pref * seg;
            }
        }
        return out;
    }

    // Stieltjes sum over the tabulation cells of U_minus
    const auto& g = L.U_minus.grid();
    double prev_x = lo;
    double prev_U = L.Uminus(lo);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double z1 = g[k + 1];
        if (z1 <= lo) continue;
        const double z = std::min(z1, x);
        const double U1 = L.Uminus(z);
        const double mid = 0.5 * (prev_x + z);
        out += (U1 - prev_U) * L.uplus(y + mid - x);
        prev_x = z;
        prev_U = U1;
        if (z >= x) break;
    }
    if (prev_x < x) {
        const double mid = 0.5 * (prev_x + x);
        out += (L.Uminus(x) - prev_U) * L.uplus(y + mid - x);
    }
    return out;
}

namespace {

using nlohmann::json;

json tab_to_json(const TabulatedFunction& f) {
    json j;
    j["grid"] = f.grid();
    j["values"] = f.values();
    j["interp"] = f.interp() == TabulatedFunction::Interp::Linear ? "linear" : "step";
    const auto& t = f.tail();
    switch (t.kind) {
        case TailModel::Kind::None: j["tail"] = {{"kind", "none"}}; break;
        case TailModel::Kind::Exponential:
            j["tail"] = {{"kind", "exponential"}, {"coef", t.coef}, {"rate", t.rate}};
            break;
        case TailModel::Kind::Linear:
            j["tail"] = {{"kind", "linear"}, {"slope", t.slope}, {"intercept", t.intercept}};
            break;
    }
    return j;
}

TabulatedFunction tab_from_json(const json& j) {
    TailModel tail;
    const auto& t = j.at("tail");
    const std::string kind = t.at("kind");
    if (kind == "exponential") tail = TailModel::exponential(t.at("coef"), t.at("rate"));
    else if (kind == "linear") tail = TailModel::linear(t.at("slope"), t.at("intercept"));
    const auto interp = j.at("interp") == "step" ? TabulatedFunction::Interp::Step
                                                 : TabulatedFunction::Interp::Linear;
    return TabulatedFunction(j.at("grid").get<std::vector<double>>(),
                             j.at("values").get<std::vector<double>>(), interp, tail);
}

}  // namespace

std::string ladder_to_json(const LadderData& L) {
    json j;
    j["schema"] = "levylab-ladder/1";
    j["a_plus"] = L.a_plus;
    j["a_minus"] = L.a_minus;
    j["kill_plus"] = L.kill_plus;
    j["kill_minus"] = L.kill_minus;
    j["atom_plus"] = L.atom_plus;
    j["atom_minus"] = L.atom_minus;
    j["EH"] = L.EH;
    j["source"] = L.source == LadderData::Source::ClosedForm ? "closed_form" : "mc_calibrated";
    j["U_plus"] = tab_to_json(L.U_plus);
    j["U_minus"] = tab_to_json(L.U_minus);
    j["u_plus"] = tab_to_json(L.u_plus);
    j["mu_plus_tail"] = tab_to_json(L.mu_plus_tail);
    j["provenance"] = {
        {"seed", L.prov.seed},       {"n_paths", L.prov.n_paths},
        {"dt", L.prov.dt},           {"horizon", L.prov.horizon},
        {"scale_q", L.prov.scale_q}, {"eq2_residual", L.prov.eq2_residual},
        {"vigon_residual", L.prov.vigon_residual}, {"mass_residual", L.prov.mass_residual},
    };
    return j.dump(2);
}

LadderData ladder_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema") != "levylab-ladder/1") throw ConfigError("unknown ladder schema");
    LadderData L;
    L.a_plus = j.at("a_plus");
    L.a_minus = j.at("a_minus");
    L.kill_plus = j.at("kill_plus");
    L.kill_minus = j.at("kill_minus");
    L.atom_plus = j.at("atom_plus");
    L.atom_minus = j.at("atom_minus");
    L.EH = j.at("EH");
    L.source = j.at("source") == "closed_form" ? LadderData::Source::ClosedForm
                                               : LadderData::Source::MonteCarloCalibrated;
    L.U_plus = tab_from_json(j.at("U_plus"));
    L.U_minus = tab_from_json(j.at("U_minus"));
    L.u_plus = tab_from_json(j.at("u_plus"));
    L.mu_plus_tail = tab_from_json(j.at("mu_plus_tail"));
    const auto& p = j.at("provenance");
    L.prov.seed = p.at("seed");
    L.prov.n_paths = p.at("n_paths");
    L.prov.dt = p.at("dt");
    L.prov.horizon = p.at("horizon");
    L.prov.scale_q = p.at("scale_q");
    L.prov.eq2_residual = p.at("eq2_residual");
    L.prov.vigon_residual = p.at("vigon_residual");
    L.prov.mass_residual = p.at("mass_residual");
    return L;
}

}  // namespace levylab
