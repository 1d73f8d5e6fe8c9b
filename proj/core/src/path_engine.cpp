#include "levylab/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace levylab {

PathSkeleton::PathSkeleton(double start_value, double dt, std::vector<double> grid_values,
                           std::vector<JumpEvent> jumps, double continuous_sigma)
    : dt_(dt), sigma_(continuous_sigma), grid_values_(std::move(grid_values)),
      jumps_(std::move(jumps)) {
    if (dt_ <= 0.0) throw DomainError("PathSkeleton: dt must be > 0");
    if (grid_values_.empty() || grid_values_.front() != start_value)
        throw DomainError("PathSkeleton: grid must start at start_value");
    for (std::size_t i = 1; i < jumps_.size(); ++i)
        if (!(jumps_[i].time > jumps_[i - 1].time))
            throw DomainError("PathSkeleton: jump times must be strictly increasing");
}

double PathSkeleton::reconstruct(double t, bool include_jump_at_t) const {
    const double H = horizon();
    if (t <= 0.0) return grid_values_.front();
    if (t > H + 1e-12) throw DomainError("PathSkeleton: time beyond horizon");
    t = std::min(t, H);

    const double kf = t / dt_;
    std::size_t k = static_cast<std::size_t>(kf);
    if (k >= n_cells()) k = n_cells() - 1;
    const double t0 = dt_ * static_cast<double>(k);
    const double t1 = dt_ * static_cast<double>(k + 1);

    // jumps inside (t0, t1]
    auto lo = std::lower_bound(jumps_.begin(), jumps_.end(), t0,
                               [](const JumpEvent& j, double x) { return j.time <= x; });
    auto hi = std::lower_bound(jumps_.begin(), jumps_.end(), t1,
                               [](const JumpEvent& j, double x) { return j.time <= x; });

    // walk the exact sub-segments anchored at the ledgered jump values
    double seg_t = t0;
    double seg_v = grid_values_[k];
    for (auto it = lo; it != hi; ++it) {
        if (t < it->time) {
            const double w = (t - seg_t) / (it->time - seg_t);
            return seg_v + w * (it->left_limit - seg_v);
        }
        if (t == it->time)
            return include_jump_at_t ? it->left_limit + it->size : it->left_limit;
        seg_t = it->time;
        seg_v = it->left_limit + it->size;
    }
    if (t1 <= seg_t) return seg_v;
    const double w = (t - seg_t) / (t1 - seg_t);
    return seg_v + w * (grid_values_[k + 1] - seg_v);
}

double PathSkeleton::value_at(double t) const { return reconstruct(t, true); }
double PathSkeleton::left_limit_at(double t) const { return reconstruct(t, false); }

double PathSkeleton::jump_total_variation() const {
    double tv = 0.0;
    for (const auto& j : jumps_) tv += std::abs(j.size);
    return tv;
}

namespace {

struct Materializer {
    std::vector<double> grid;
    std::vector<JumpEvent> jumps;

    void segment(double, double, double, double) {}
    void jump(double t, double left, double size) { jumps.push_back({t, left, size}); }
    bool cell_end(long, double v) {
        grid.push_back(v);
        return true;
    }
};

}  // namespace

PathSkeleton simulate(const LevyModel& model, double x0, double horizon, double dt,
                      std::uint64_t seed, long jump_cap) {
    if (dt <= 0.0 || horizon < dt) throw DomainError("simulate: need 0 < dt <= horizon");
    const long n_cells = static_cast<long>(std::floor(horizon / dt + 1e-9));
    Rng rng(seed);
    Materializer mat;
    mat.grid.reserve(static_cast<std::size_t>(n_cells) + 1);
    mat.grid.push_back(x0);
    walk_model(model, x0, dt, n_cells, rng, mat, jump_cap);
    return PathSkeleton(x0, dt, std::move(mat.grid), std::move(mat.jumps), model.sigma());
}

bool BarrierDetector::on_segment(double t0, double v0, double t1, double v1) {
    const double s = downward ? 1.0 : -1.0;
    const double d0 = s * (v0 - level);
    const double d1 = s * (v1 - level);
    if (d0 <= 0.0) {
        record = {true, t0, 0.0, 0.0, false};
        return true;
    }
    if (d1 <= 0.0) {
        double tc = t1;
        if (v1 != v0) tc = t0 + (t1 - t0) * d0 / (d0 - d1);
        record = {true, tc, 0.0, 0.0, false};
        return true;
    }
    if (bridge_correction && sigma > 0.0 && t1 > t0) {
        const double p = std::exp(-2.0 * d0 * d1 / (sigma * sigma * (t1 - t0)));
        if (bridge_rng->uniform() < p) {
            record = {true, 0.5 * (t0 + t1), 0.0, 0.0, false};
            return true;
        }
    }
    return false;
}

bool BarrierDetector::on_jump(double t, double left, double size) {
    const double s = downward ? 1.0 : -1.0;
    const double dl = s * (left - level);
    const double da = s * (left + size - level);
    if (dl <= 0.0) {
        record = {true, t, 0.0, 0.0, false};
        return true;
    }
    if (da <= 0.0) {
        record = {true, t, dl, -da, true};
        return true;
    }
    return false;
}

namespace {

struct PassageVisitor {
    BarrierDetector det;
    bool done = false;

    void segment(double t0, double v0, double t1, double v1) {
        if (!done && det.on_segment(t0, v0, t1, v1)) done = true;
    }
    void jump(double t, double left, double size) {
        if (!done && det.on_jump(t, left, size)) done = true;
    }
    bool cell_end(long, double) { return !done; }
};

}  // namespace

PassageRecord first_exit_nonpositive(const PathSkeleton& path, bool bridge_correction,
                                     std::uint64_t seed) {
    if (path.start_value() <= 0.0)
        throw DomainError("first_exit_nonpositive: path must start in (0, infinity)");
    Rng brng(derive_seed(seed, 0, /*tag=*/0xB51D6E));
    PassageVisitor vis;
    vis.det = {0.0, true, path.continuous_sigma(), bridge_correction, &brng, {}};
    replay(path, vis);
    return vis.det.record;
}

PassageRecord first_passage_above(const PathSkeleton& path, double z, bool bridge_correction,
                                  std::uint64_t seed) {
    if (path.start_value() > z) {
        PassageRecord r;
        r.detected = true;
        r.time = 0.0;
        r.undershoot = 0.0;
        r.overshoot = path.start_value() - z;
        r.crossed_by_jump = r.overshoot > 0.0;
        return r;
    }
    Rng brng(derive_seed(seed, 0, /*tag=*/0xB51D6F));
    PassageVisitor vis;
    vis.det = {z, false, path.continuous_sigma(), bridge_correction, &brng, {}};
    replay(path, vis);
    return vis.det.record;
}

namespace {

struct LastBelowVisitor {
    double z;
    double sigma;
    bool bridge;
    Rng* rng;

    bool seen_below = false;
    double last_below = 0.0;

    void segment(double t0, double v0, double t1, double v1) {
        if (v0 < z && v1 < z) {
            seen_below = true;
            last_below = t1;
        } else if (v0 < z && v1 >= z) {
            seen_below = true;
            last_below = (v1 > v0) ? t0 + (t1 - t0) * (z - v0) / (v1 - v0) : t1;
        } else if (v0 >= z && v1 < z) {
            seen_below = true;
            last_below = t1;
        } else if (bridge && sigma > 0.0 && t1 > t0) {
            const double p =
                std::exp(-2.0 * (v0 - z) * (v1 - z) / (sigma * sigma * (t1 - t0)));
            if (rng->uniform() < p) {
                seen_below = true;
                last_below = 0.5 * (t0 + t1);
            }
        }
    }
    void jump(double, double, double) {}
    bool cell_end(long, double) { return true; }
};

}  // namespace

LastExit last_exit_below(const PathSkeleton& path, double z, bool bridge_correction,
                         std::uint64_t seed, double window_frac, double margin) {
    Rng brng(derive_seed(seed, 0, /*tag=*/0x1A57E));
    LastBelowVisitor vis{z, path.continuous_sigma(), bridge_correction, &brng, false, 0.0};
    replay(path, vis);

    // certification: trailing window must stay above z + margin
    const double H = path.horizon();
    const double w0 = H * (1.0 - window_frac);
    double tmin = std::numeric_limits<double>::infinity();
    const auto& g = path.grid_values();
    const std::size_t k0 = static_cast<std::size_t>(std::floor(w0 / path.dt()));
    for (std::size_t k = k0; k < g.size(); ++k) tmin = std::min(tmin, g[k]);
    for (const auto& j : path.jump_ledger())
        if (j.time >= w0) tmin = std::min(tmin, std::min(j.left_limit, j.left_limit + j.size));

    LastExit out;
    out.trailing_min = tmin;
    if (tmin < z + margin || !vis.seen_below || vis.last_below >= w0) {
        out.settled = false;
        out.time = vis.seen_below ? vis.last_below : 0.0;
        return out;
    }
    out.settled = true;
    out.time = vis.last_below;
    return out;
}

PathSkeleton reverse_at(const PathSkeleton& path, double t) {
    if (!(t > 0.0) || t > path.horizon() + 1e-12)
        throw DomainError("reverse_at: t must lie in (0, horizon]");
    t = std::min(t, path.horizon());
    const double dt = path.dt();
    const long n = static_cast<long>(std::floor(t / dt + 1e-9));
    if (n < 1) throw DomainError("reverse_at: t shorter than one grid cell");

    std::vector<double> grid(static_cast<std::size_t>(n) + 1);
    for (long k = 0; k <= n; ++k) {
        const double s = t - dt * static_cast<double>(k);
        grid[static_cast<std::size_t>(k)] = s <= 0.0 ? path.value_at(0.0) : path.left_limit_at(s);
    }

    std::vector<JumpEvent> jumps;
    const auto& orig = path.jump_ledger();
    const double t_lo = t - dt * static_cast<double>(n);
    for (auto it = orig.rbegin(); it != orig.rend(); ++it) {
        if (it->time >= t || it->time <= t_lo) continue;
        JumpEvent j;
        j.time = t - it->time;
        j.left_limit = it->left_limit + it->size;
        j.size = -it->size;
        jumps.push_back(j);
    }
    const double rev_start = grid.front();
    return PathSkeleton(rev_start, dt, std::move(grid), std::move(jumps),
                        path.continuous_sigma());
}

std::optional<ShiftedPath> shift_at_entrance(const PathSkeleton& path, bool bridge_correction,
                                             std::uint64_t seed) {
    if (path.start_value() > 0.0)
        throw DomainError("shift_at_entrance: path must start at or below 0");
    const PassageRecord rec = first_passage_above(path, 0.0, bridge_correction, seed);
    if (!rec.detected) return std::nullopt;
    ShiftedPath s;
    s.entrance_time = rec.time;
    s.base = path;
    return s;
}

void write_path_csv(const PathSkeleton& path, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw Error("cannot open " + file);
    os << "time,value,is_jump,jump_size\n";
    std::size_t ji = 0;
    const auto& jumps = path.jump_ledger();
    for (std::size_t k = 0; k < path.grid_values().size(); ++k) {
        const double t = path.dt() * static_cast<double>(k);
        while (ji < jumps.size() && jumps[ji].time <= t) {
            os << jumps[ji].time << ',' << jumps[ji].left_limit + jumps[ji].size << ",1,"
               << jumps[ji].size << '\n';
            ++ji;
        }
        os << t << ',' << path.grid_values()[k] << ",0,0\n";
    }
}

}  // namespace levylab
