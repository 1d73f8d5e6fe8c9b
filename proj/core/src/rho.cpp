#include "levylab/rho.hpp"

#include <algorithm>
#include <cmath>

#include "levylab/errors.hpp"

namespace levylab {

double RhoLaw::upper_tail_safe(double x) const {
    return x <= 0.0 ? model_.jump_rate() : model_.upper_tail(x);
}

double RhoLaw::rho1_density(double x) const {
    if (x <= 0.0 || !model_.has_positive_jumps()) return 0.0;
    return ladder_copy_.Uminus(x) * model_.upper_tail(x) / eh_;
}

double RhoLaw::rho2_density(double y) const {
    if (y < 0.0 || !model_.has_positive_jumps()) return 0.0;
    return ladder_copy_.mu_plus(y) / eh_;
}

double RhoLaw::joint_density(double x, double y) const {
    if (x <= 0.0 || y <= 0.0 || !model_.has_positive_jumps()) return 0.0;
    double pi = 0.0;
    for (const auto& t : pos_tails_) pi += t.rate * t.alpha * std::exp(-t.alpha * (x + y));
    return ladder_copy_.Uminus(x) * pi / eh_;
}

double RhoLaw::rho1_cdf(double x) const {
    if (x < 0.0) return 0.0;
    if (x_grid_.empty()) return 1.0;
    auto it = std::upper_bound(x_grid_.begin(), x_grid_.end(), x);
    if (it == x_grid_.begin()) return atom_;
    const std::size_t hi = static_cast<std::size_t>(it - x_grid_.begin());
    if (hi >= x_grid_.size()) return atom_ + x_cdf_.back();
    const std::size_t lo = hi - 1;
    const double w = (x - x_grid_[lo]) / (x_grid_[hi] - x_grid_[lo]);
    return atom_ + x_cdf_[lo] + w * (x_cdf_[hi] - x_cdf_[lo]);
}

double RhoLaw::rho2_cdf(double y) const {
    if (y < 0.0) return 0.0;
    if (y_grid_.empty()) return 1.0;
    auto it = std::upper_bound(y_grid_.begin(), y_grid_.end(), y);
    if (it == y_grid_.begin()) return atom_;
    const std::size_t hi = static_cast<std::size_t>(it - y_grid_.begin());
    if (hi >= y_grid_.size()) return std::min(1.0, atom_ + y_cum_.back());
    const std::size_t lo = hi - 1;
    const double w = (y - y_grid_[lo]) / (y_grid_[hi] - y_grid_[lo]);
    return atom_ + y_cum_[lo] + w * (y_cum_[hi] - y_cum_[lo]);
}

double RhoLaw::joint_cdf(double x, double y) const {
    if (x < 0.0 || y < 0.0) return 0.0;
    if (!model_.has_positive_jumps()) return 1.0;
    // atom + int_0^x U_-(s) (tail(s) - tail(s+y)) ds / EH
    const std::size_t n = 600;
    const double hi = std::min(x, x_grid_.empty() ? x : x_grid_.back());
    if (hi <= 0.0) return atom_;
    const double h = hi / n;
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double tails = upper_tail_safe(s) - upper_tail_safe(s + y);
        acc += w * ladder_copy_.Uminus(s) * tails;
    }
    return atom_ + acc * h / eh_;
}

double RhoLaw::sample_overshoot_given(double x, Rng& rng) const {
    if (x == 0.0 || !model_.has_positive_jumps()) return 0.0;
    // restart the exponential mixture at level x
    const double tail_x = upper_tail_safe(x);
    double pick = rng.uniform() * tail_x;
    for (const auto& t : pos_tails_) {
        const double c = t.rate * std::exp(-t.alpha * x);
        if (pick < c) return rng.exponential(t.alpha);
        pick -= c;
    }
    if (!pos_tails_.empty()) return rng.exponential(pos_tails_.back().alpha);
    // generic fallback: numeric inversion of the conditional tail ratio
    const double v = rng.uniform();
    double lo = 0.0, hi2 = 1.0;
    while (model_.upper_tail(x + hi2) / tail_x > v && hi2 < 1e6) hi2 *= 2.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi2);
        if (model_.upper_tail(x + mid) / tail_x > v)
            lo = mid;
        else
            hi2 = mid;
    }
    return 0.5 * (lo + hi2);
}

std::pair<double, double> RhoLaw::sample(Rng& rng) const {
    if (!model_.has_positive_jumps() || rng.uniform() < atom_) return {0.0, 0.0};
    // x from the density part by inverse cdf
    const double u = rng.uniform() * density_total_;
    auto it = std::lower_bound(x_cdf_.begin(), x_cdf_.end(), u);
    double x;
    if (it == x_cdf_.begin()) {
        x = x_grid_.front();
    } else if (it == x_cdf_.end()) {
        x = x_grid_.back();
    } else {
        const std::size_t hi = static_cast<std::size_t>(it - x_cdf_.begin());
        const std::size_t lo = hi - 1;
        const double w = (u - x_cdf_[lo]) / std::max(x_cdf_[hi] - x_cdf_[lo], 1e-300);
        x = x_grid_[lo] + w * (x_grid_[hi] - x_grid_[lo]);
    }
    if (x <= 0.0) x = 0.5 * (x_grid_[0] + x_grid_[1]);
    return {x, sample_overshoot_given(x, rng)};
}

RhoLaw build_rho(const LevyModel& model, const LadderData& ladder) {
    if (!(ladder.EH > 0.0) || !std::isfinite(ladder.EH))
        throw DomainError("build_rho: EH must be finite and positive");

    RhoLaw rho;
    rho.model_ = model;
    rho.ladder_copy_ = ladder;
    rho.eh_ = ladder.EH;
    rho.a_plus_ = ladder.a_plus;
    rho.atom_ = ladder.a_plus / ladder.EH;
    rho.pos_tails_ = model.positive_exp_tails();
    std::sort(rho.pos_tails_.begin(), rho.pos_tails_.end(),
              [](const auto& a, const auto& b) { return a.alpha < b.alpha; });

    if (!model.has_positive_jumps()) {
        rho.atom_ = 1.0;
        rho.mass_error_ = std::abs(ladder.a_plus / ladder.EH - 1.0);
        rho.density_total_ = 0.0;
        return rho;
    }

    // range where the density part lives
    double alpha_min = rho.pos_tails_.empty() ? 1.0 : rho.pos_tails_.front().alpha;
    if (model.jump_kind() == JumpKind::TruncatedSpectral) alpha_min = 0.05;
    double X = 10.0 / alpha_min;
    while (X < 2000.0 &&
           ladder.Uminus(X) * model.upper_tail(X) / ladder.EH > 1e-13 * (1.0 + X)) {
        X *= 1.5;
    }

    const std::size_t n = 8192;
    rho.x_grid_.resize(n + 1);
    rho.x_cdf_.resize(n + 1);
    const double h = X / n;
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = i * h;
        const double d = x > 0.0 ? ladder.Uminus(x) * model.upper_tail(x) / ladder.EH : 0.0;
        if (i > 0) acc += 0.5 * (prev + d) * h;
        prev = d;
        rho.x_grid_[i] = x;
        rho.x_cdf_[i] = acc;
    }
    rho.density_total_ = acc;
    if (ladder.U_minus_exact && model.jump_kind() == JumpKind::Mixture) {
        // exact density mass: integral of U_-(x) tail(x) dx via the Laplace form
        double exact = 0.0;
        for (const auto& t : model.positive_exp_tails())
            exact += t.rate * ladder.U_minus_exact->laplace_like(t.alpha);
        rho.mass_error_ = std::abs(rho.atom_ + exact / ladder.EH - 1.0);
    } else {
        rho.mass_error_ = std::abs(rho.atom_ + acc - 1.0);
    }

    // rho2 cumulative from the ascending jump tail
    const std::size_t ny = 4096;
    const double Y = X;
    rho.y_grid_.resize(ny + 1);
    rho.y_cum_.resize(ny + 1);
    const double hy = Y / ny;
    double acy = 0.0, prevy = ladder.mu_plus(0.0) / ladder.EH;
    rho.y_grid_[0] = 0.0;
    rho.y_cum_[0] = 0.0;
    for (std::size_t i = 1; i <= ny; ++i) {
        const double y = i * hy;
        const double d = ladder.mu_plus(y) / ladder.EH;
        acy += 0.5 * (prevy + d) * hy;
        prevy = d;
        rho.y_grid_[i] = y;
        rho.y_cum_[i] = acy;
    }
    rho.mu_total_ = acy;
    return rho;
}

}  // namespace levylab
