#include "levylab/tabulated.hpp"

#include <algorithm>
#include <cmath>

namespace levylab {

TailModel TailModel::exponential(double coef, double rate) {
    TailModel t;
    t.kind = Kind::Exponential;
    t.coef = coef;
    t.rate = rate;
    return t;
}

TailModel TailModel::linear(double slope, double intercept) {
    TailModel t;
    t.kind = Kind::Linear;
    t.slope = slope;
    t.intercept = intercept;
    return t;
}

TabulatedFunction::TabulatedFunction(std::vector<double> grid, std::vector<double> values,
                                     Interp interp, TailModel tail)
    : grid_(std::move(grid)), values_(std::move(values)), interp_(interp), tail_(tail) {
    if (grid_.size() != values_.size() || grid_.empty())
        throw DomainError("tabulated function: grid/values size mismatch or empty");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1]))
            throw DomainError("tabulated function: grid not strictly increasing");
}

double TabulatedFunction::operator()(double x) const {
    if (x <= grid_.front()) {
        if (x == grid_.front()) return values_.front();
        if (grid_.front() > 0.0 && x >= 0.0)
            return values_.front() * (x / grid_.front());
        return values_.front();
    }
    if (x >= grid_.back()) {
        switch (tail_.kind) {
            case TailModel::Kind::Exponential:
                return tail_.coef * std::exp(-tail_.rate * x);
            case TailModel::Kind::Linear:
                return tail_.slope * x + tail_.intercept;
            case TailModel::Kind::None:
                return values_.back();
        }
    }
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - grid_.begin());
    const std::size_t lo = hi - 1;
    if (interp_ == Interp::Step) return values_[lo];
    const double w = (x - grid_[lo]) / (grid_[hi] - grid_[lo]);
    return values_[lo] + w * (values_[hi] - values_[lo]);
}

bool TabulatedFunction::is_nondecreasing(double tol) const {
    for (std::size_t i = 1; i < values_.size(); ++i)
        if (values_[i] < values_[i - 1] - tol) return false;
    return true;
}

double TabulatedFunction::integrate(double a, double b) const {
    if (b < a) return -integrate(b, a);
    if (b > grid_.back() && tail_.kind == TailModel::Kind::Linear)
        throw DomainError("tabulated function: linear tail cannot be integrated to b beyond grid");
    double total = 0.0;
    const double hi_grid = std::min(b, grid_.back());
    if (a < hi_grid) {
        // trapezoid on grid cells clipped to [a, hi_grid]
        auto it = std::upper_bound(grid_.begin(), grid_.end(), a);
        std::size_t k = (it == grid_.begin()) ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
        double x0 = std::max(a, grid_.front());
        if (a < grid_.front()) {
            // linear ramp below the first node
            const double x1 = std::min(hi_grid, grid_.front());
            total += 0.5 * ((*this)(a) + (*this)(x1)) * (x1 - a);
            x0 = x1;
            k = 0;
        }
        while (x0 < hi_grid && k + 1 < grid_.size()) {
            const double x1 = std::min(grid_[k + 1], hi_grid);
            if (x1 > x0) total += 0.5 * ((*this)(x0) + (*this)(x1)) * (x1 - x0);
            x0 = x1;
            ++k;
        }
    }
    if (b > grid_.back()) {
        const double lo = std::max(a, grid_.back());
        if (tail_.kind == TailModel::Kind::Exponential && tail_.rate > 0.0) {
            total += tail_.coef / tail_.rate *
                     (std::exp(-tail_.rate * lo) - std::exp(-tail_.rate * b));
        } else {
            total += values_.back() * (b - lo);
        }
    }
    return total;
}

std::vector<double> linspace(double a, double b, std::size_t n_cells) {
    std::vector<double> g(n_cells + 1);
    for (std::size_t i = 0; i <= n_cells; ++i)
        g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_cells);
    g.back() = b;
    return g;
}

}  // namespace levylab
