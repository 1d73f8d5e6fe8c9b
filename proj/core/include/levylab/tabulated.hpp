#pragma once

#include <cstddef>
#include <vector>

#include "levylab/errors.hpp"

namespace levylab {

// Tail extrapolation beyond the last grid node.
struct TailModel {
    enum class Kind { None, Exponential, Linear };
    Kind kind = Kind::None;
    // Exponential: f(x) = coef * exp(-rate * x)
    // Linear:      f(x) = slope * x + intercept   (renewal-function asymptote)
    double coef = 0.0;
    double rate = 0.0;
    double slope = 0.0;
    double intercept = 0.0;

    static TailModel none() { return {}; }
    static TailModel exponential(double coef, double rate);
    static TailModel linear(double slope, double intercept);
};

// Piecewise carrier for renewal functions, densities and tails.
class TabulatedFunction {
  public:
    enum class Interp { Linear, Step };

    TabulatedFunction() = default;
    TabulatedFunction(std::vector<double> grid, std::vector<double> values,
                      Interp interp = Interp::Linear, TailModel tail = TailModel::none());

    double operator()(double x) const;

    // left endpoint value; for x below the grid the function is extended
    // linearly through (grid[0], values[0]) from (0,0) when grid[0] > 0
    double front_x() const { return grid_.front(); }
    double back_x() const { return grid_.back(); }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const TailModel& tail() const { return tail_; }
    Interp interp() const { return interp_; }
    std::size_t size() const { return grid_.size(); }

    bool is_nondecreasing(double tol = 0.0) const;

    // trapezoid integral of f over [a, b] on the tabulation (tail-aware for
    // exponential tails; throws for linear tails, which do not integrate)
    double integrate(double a, double b) const;

  private:
    std::vector<double> grid_;
    std::vector<double> values_;
    Interp interp_ = Interp::Linear;
    TailModel tail_;
};

// Uniform grid helper: n+1 nodes on [a, b].
std::vector<double> linspace(double a, double b, std::size_t n_cells);

}  // namespace levylab
