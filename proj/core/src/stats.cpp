#include "levylab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "levylab/rng.hpp"

namespace levylab {

double WeightedSample::effective_size() const {
    if (values.empty()) return 0.0;
    if (!weighted()) return static_cast<double>(values.size());
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    if (s2 <= 0.0) return 0.0;
    return s * s / s2;
}

namespace {

struct OrderedSample {
    std::vector<double> v;  // sorted values
    std::vector<double> w;  // normalized weights in the same order

    static OrderedSample of(const WeightedSample& s) {
        if (s.values.empty()) throw EmptySampleError();
        std::vector<std::size_t> idx(s.values.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return s.values[i] < s.values[j]; });
        OrderedSample o;
        o.v.reserve(idx.size());
        o.w.reserve(idx.size());
        double tot = 0.0;
        if (s.weighted()) {
            for (std::size_t i : idx) tot += s.weights[i];
        } else {
            tot = static_cast<double>(idx.size());
        }
        if (tot <= 0.0) throw EmptySampleError();
        for (std::size_t i : idx) {
            o.v.push_back(s.values[i]);
            o.w.push_back((s.weighted() ? s.weights[i] : 1.0) / tot);
        }
        return o;
    }
};

}  // namespace

double kolmogorov_p(double statistic, double n_effective) {
    if (n_effective <= 0.0) return 1.0;
    const double rn = std::sqrt(n_effective);
    const double lambda = (rn + 0.12 + 0.11 / rn) * statistic;
    if (lambda < 0.2) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(const WeightedSample& a, const WeightedSample& b) {
    const OrderedSample sa = OrderedSample::of(a);
    const OrderedSample sb = OrderedSample::of(b);
    double d = 0.0;
    double fa = 0.0, fb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < sa.v.size() || j < sb.v.size()) {
        double x;
        if (j >= sb.v.size() || (i < sa.v.size() && sa.v[i] <= sb.v[j])) {
            x = sa.v[i];
        } else {
            x = sb.v[j];
        }
        while (i < sa.v.size() && sa.v[i] <= x) fa += sa.w[i++];
        while (j < sb.v.size() && sb.v[j] <= x) fb += sb.w[j++];
        d = std::max(d, std::abs(fa - fb));
    }
    const double na = a.effective_size();
    const double nb = b.effective_size();
    const double ne = na * nb / (na + nb);
    return {d, kolmogorov_p(d, ne), ne};
}

KsResult ks_one_sample(const WeightedSample& a, const std::function<double(double)>& cdf) {
    const OrderedSample sa = OrderedSample::of(a);
    double d = 0.0;
    double f = 0.0;
    for (std::size_t i = 0; i < sa.v.size(); ++i) {
        // left limits are compared with left limits so reference atoms at
        // sample points (the crossing laws carry one at 0) are not miscounted
        const double eps = std::max(1e-12, 1e-9 * std::abs(sa.v[i]));
        const double c_before = cdf(sa.v[i] - eps);
        const double c_at = cdf(sa.v[i]);
        d = std::max(d, std::abs(f - c_before));
        f += sa.w[i];
        while (i + 1 < sa.v.size() && sa.v[i + 1] == sa.v[i]) f += sa.w[++i];
        d = std::max(d, std::abs(f - c_at));
    }
    const double ne = a.effective_size();
    return {d, kolmogorov_p(d, ne), ne};
}

double ks_permutation_p(const WeightedSample& a, const WeightedSample& b, int n_perm,
                        std::uint64_t seed) {
    const double observed = ks_two_sample(a, b).statistic;
    // pool values with their weights; permute group labels
    std::vector<double> vals(a.values);
    vals.insert(vals.end(), b.values.begin(), b.values.end());
    std::vector<double> wts;
    wts.reserve(vals.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
        wts.push_back(a.weighted() ? a.weights[i] : 1.0);
    for (std::size_t i = 0; i < b.values.size(); ++i)
        wts.push_back(b.weighted() ? b.weights[i] : 1.0);

    Rng rng(derive_seed(seed, 0, 0x5EAF00D));
    const std::size_t na = a.values.size();
    std::vector<std::size_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0);
    int worse = 0;
    for (int p = 0; p < n_perm; ++p) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.below(i)]);
        WeightedSample pa, pb;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto& dst = (i < na) ? pa : pb;
            dst.values.push_back(vals[idx[i]]);
            dst.weights.push_back(wts[idx[i]]);
        }
        if (ks_two_sample(pa, pb).statistic >= observed) ++worse;
    }
    return (worse + 1.0) / (n_perm + 1.0);
}

double w1_distance(const WeightedSample& a, const WeightedSample& b) {
    const OrderedSample sa = OrderedSample::of(a);
    const OrderedSample sb = OrderedSample::of(b);
    // integrate |Fa^-1(u) - Fb^-1(u)| du by walking both quantile functions
    double w1 = 0.0;
    std::size_t i = 0, j = 0;
    double u = 0.0;
    double ca = sa.w[0], cb = sb.w[0];
    while (true) {
        const double next = std::min(ca, cb);
        w1 += (next - u) * std::abs(sa.v[i] - sb.v[j]);
        u = next;
        if (u >= 1.0 - 1e-15) break;
        if (ca <= cb) {
            if (++i >= sa.v.size()) break;
            ca += sa.w[i];
        } else {
            if (++j >= sb.v.size()) break;
            cb += sb.w[j];
        }
    }
    return w1;
}

DcorResult distance_correlation_test(const std::vector<double>& x, const std::vector<double>& y,
                                     int n_perm, std::uint64_t seed) {
    const int n = static_cast<int>(x.size());
    if (n < 4 || y.size() != x.size()) throw EmptySampleError();

    auto centered = [&](const std::vector<double>& v) {
        std::vector<double> m(static_cast<std::size_t>(n) * n);
        std::vector<double> row(n, 0.0);
        double grand = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double d = std::abs(v[i] - v[j]);
                m[i * n + j] = d;
                row[i] += d;
            }
        for (int i = 0; i < n; ++i) {
            row[i] /= n;
            grand += row[i];
        }
        grand /= n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m[i * n + j] += grand - row[i] - row[j];
        return m;
    };

    const auto A = centered(x);
    const auto B = centered(y);

    auto dcov2 = [&](const std::vector<int>& perm) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += A[i * n + j] * B[perm[i] * n + perm[j]];
        return s / (static_cast<double>(n) * n);
    };

    std::vector<int> id(n);
    std::iota(id.begin(), id.end(), 0);
    const double vxy = dcov2(id);
    double vxx = 0.0, vyy = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            vxx += A[i * n + j] * A[i * n + j];
            vyy += B[i * n + j] * B[i * n + j];
        }
    vxx /= static_cast<double>(n) * n;
    vyy /= static_cast<double>(n) * n;

    DcorResult out;
    out.n = n;
    const double denom = std::sqrt(vxx * vyy);
    out.dcor = denom > 0.0 ? std::sqrt(std::max(vxy, 0.0) / denom) : 0.0;

    Rng rng(derive_seed(seed, 0, 0xDC0));
    std::vector<int> perm = id;
    int worse = 0;
    for (int p = 0; p < n_perm; ++p) {
        for (int i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[static_cast<int>(rng.below(static_cast<std::uint64_t>(i)))]);
        if (dcov2(perm) >= vxy) ++worse;
    }
    out.p_value = (worse + 1.0) / (n_perm + 1.0);
    return out;
}

double ks2d_vs_cdf(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::vector<double>& weights,
                   const std::function<double(double, double)>& cdf, int grid_per_axis) {
    if (xs.empty() || xs.size() != ys.size()) throw EmptySampleError();
    const std::size_t n = xs.size();
    std::vector<double> qx(xs), qy(ys);
    std::sort(qx.begin(), qx.end());
    std::sort(qy.begin(), qy.end());
    std::vector<double> gx, gy;
    for (int i = 1; i <= grid_per_axis; ++i) {
        const std::size_t k = std::min(n - 1, n * static_cast<std::size_t>(i) / (grid_per_axis + 1));
        gx.push_back(qx[k]);
        gy.push_back(qy[k]);
    }
    gx.erase(std::unique(gx.begin(), gx.end()), gx.end());
    gy.erase(std::unique(gy.begin(), gy.end()), gy.end());

    double tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) tot += weights.empty() ? 1.0 : weights[i];

    double d = 0.0;
    for (double ax : gx)
        for (double ay : gy) {
            double f = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (xs[i] <= ax && ys[i] <= ay) f += weights.empty() ? 1.0 : weights[i];
            d = std::max(d, std::abs(f / tot - cdf(ax, ay)));
        }
    return d;
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q domain");
    if (x == 0.0) return 1.0;
    auto gammln = [](double z) { return std::lgamma(z); };
    if (x < a + 1.0) {
        // series for P(a,x)
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - gammln(a));
        return 1.0 - p;
    }
    // continued fraction for Q(a,x)
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gammln(a)) * h;
}

double chi_square_tail(double stat, int dof) {
    return gamma_q(0.5 * dof, 0.5 * stat);
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n) throw EmptySampleError();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return (sxy * sxy) / (sxx * syy);
}

double fd_bin_width(std::vector<double> sample) {
    if (sample.size() < 4) throw EmptySampleError();
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    const double q1 = sample[n / 4];
    const double q3 = sample[(3 * n) / 4];
    const double iqr = std::max(q3 - q1, 1e-12);
    return 2.0 * iqr / std::cbrt(static_cast<double>(n));
}

MeanStderr mean_stderr(const std::vector<double>& values) {
    if (values.empty()) throw EmptySampleError();
    KahanSum s;
    for (double v : values) s.add(v);
    const double m = s.value() / values.size();
    KahanSum s2;
    for (double v : values) s2.add((v - m) * (v - m));
    const double var = s2.value() / (values.size() > 1 ? values.size() - 1 : 1);
    return {m, std::sqrt(var / values.size())};
}

MeanStderr weighted_mean_stderr(const std::vector<double>& values,
                                const std::vector<double>& weights) {
    if (values.empty() || values.size() != weights.size()) throw EmptySampleError();
    KahanSum sw, swv;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw.add(weights[i]);
        swv.add(weights[i] * values[i]);
    }
    const double W = sw.value();
    if (W <= 0.0) throw EmptySampleError();
    const double m = swv.value() / W;
    double s2 = 0.0, w2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s2 += weights[i] * weights[i] * (values[i] - m) * (values[i] - m);
        w2 += weights[i] * weights[i];
    }
    (void)w2;
    return {m, std::sqrt(s2) / W};
}

}  // namespace levylab
