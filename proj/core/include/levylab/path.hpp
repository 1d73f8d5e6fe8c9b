#pragma once

#include <cstdint>
#include <vector>

#include "levylab/errors.hpp"

namespace levylab {

struct JumpEvent {
    double time = 0.0;
    double left_limit = 0.0;  // value just before the jump
    double size = 0.0;        // value after = left_limit + size
};

// Discretized cadlag path: exact values on a uniform grid plus an exact jump
// ledger.  Between recorded points the continuous part is linear; jump
// discontinuities are never grid-rounded.
class PathSkeleton {
  public:
    PathSkeleton() = default;
    PathSkeleton(double start_value, double dt, std::vector<double> grid_values,
                 std::vector<JumpEvent> jumps, double continuous_sigma = 0.0);

    double start_value() const { return grid_values_.empty() ? 0.0 : grid_values_.front(); }
    double dt() const { return dt_; }
    // volatility of the continuous part, carried for bridge corrections
    double continuous_sigma() const { return sigma_; }
    double horizon() const { return dt_ * static_cast<double>(n_cells()); }
    std::size_t n_cells() const { return grid_values_.empty() ? 0 : grid_values_.size() - 1; }
    const std::vector<double>& grid_values() const { return grid_values_; }
    const std::vector<JumpEvent>& jump_ledger() const { return jumps_; }

    double value_at(double t) const;       // right-continuous value
    double left_limit_at(double t) const;  // value just before t

    double terminal() const { return grid_values_.back(); }

    // total variation of the jump ledger
    double jump_total_variation() const;

  private:
    double dt_ = 0.0;
    double sigma_ = 0.0;
    std::vector<double> grid_values_;
    std::vector<JumpEvent> jumps_;

    double reconstruct(double t, bool include_jump_at_t) const;
};

struct PassageRecord {
    bool detected = false;
    double time = 0.0;
    double undershoot = 0.0;  // distance to the barrier just before crossing
    double overshoot = 0.0;   // distance past the barrier at crossing
    bool crossed_by_jump = false;
};

}  // namespace levylab
