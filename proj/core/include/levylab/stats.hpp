#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "levylab/errors.hpp"

namespace levylab {

// Neumaier-compensated accumulator; merging partials in a fixed order keeps
// threaded reductions bit-reproducible.
class KahanSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const KahanSum& o) {
        add(o.sum_);
        add(o.comp_);
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;  // empty = unweighted

    std::size_t size() const { return values.size(); }
    bool weighted() const { return !weights.empty(); }
    double effective_size() const;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double n_effective = 0.0;
};

// two-sample Kolmogorov-Smirnov; weighted samples get their p-value from the
// effective sample sizes plugged into the asymptotic law
KsResult ks_two_sample(const WeightedSample& a, const WeightedSample& b);

// one-sample KS against a cdf
KsResult ks_one_sample(const WeightedSample& a, const std::function<double(double)>& cdf);

// permutation p-value for the two-sample statistic (used for weighted data
// where the asymptotic law is only an approximation)
double ks_permutation_p(const WeightedSample& a, const WeightedSample& b, int n_perm,
                        std::uint64_t seed);

// survival function of the Kolmogorov distribution with finite-n correction
double kolmogorov_p(double statistic, double n_effective);

// empirical 1-Wasserstein distance (quantile alignment for weighted samples)
double w1_distance(const WeightedSample& a, const WeightedSample& b);

// distance correlation plus permutation p-value
struct DcorResult {
    double dcor = 0.0;
    double p_value = 1.0;
    int n = 0;
};
DcorResult distance_correlation_test(const std::vector<double>& x, const std::vector<double>& y,
                                     int n_perm, std::uint64_t seed);

// two-dimensional KS-type distance: sup over a quantile grid of the absolute
// difference between the empirical joint cdf and a reference cdf
double ks2d_vs_cdf(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::vector<double>& weights,
                   const std::function<double(double, double)>& cdf, int grid_per_axis = 48);

// regularized upper incomplete gamma Q(a, x); chi-square tail = Q(k/2, x/2)
double gamma_q(double a, double x);
double chi_square_tail(double stat, int dof);

// ordinary least squares R^2 of y against x
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

// Freedman-Diaconis bin width
double fd_bin_width(std::vector<double> sample);

// weighted mean / stderr of the mean
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);
MeanStderr weighted_mean_stderr(const std::vector<double>& values,
                                const std::vector<double>& weights);

}  // namespace levylab
