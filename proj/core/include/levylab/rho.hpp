#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "levylab/ladder.hpp"
#include "levylab/levy_model.hpp"
#include "levylab/rng.hpp"

namespace levylab {

// Stationary joint law of (undershoot, overshoot) across a high level:
// an atom at (0,0) of mass a_+/EH plus the density U_-(x) pi(x+y) / EH on
// (0,inf)^2.  Marginals: rho1 = normalized m, rho2 = (a_+ delta_0 +
// mu_plus_tail(y) dy) / EH.
class RhoLaw {
  public:
    RhoLaw() = default;

    double atom_mass() const { return atom_; }
    double EH() const { return eh_; }
    double total_mass_error() const { return mass_error_; }

    double rho1_density(double x) const;
    double rho2_density(double y) const;
    double joint_density(double x, double y) const;

    double rho1_cdf(double x) const;
    double rho2_cdf(double y) const;
    double joint_cdf(double x, double y) const;

    // exact draw: atom with probability atom_mass, else x from the density
    // part and y from the overshoot law restarted at x (exponential-mixture
    // memorylessness makes the conditional exact)
    std::pair<double, double> sample(Rng& rng) const;

    // conditional overshoot draw given the undershoot (x = 0 is the atom)
    double sample_overshoot_given(double x, Rng& rng) const;

    friend RhoLaw build_rho(const LevyModel& model, const LadderData& ladder);

  private:
    LevyModel model_;
    double atom_ = 1.0;
    double eh_ = 1.0;
    double a_plus_ = 0.0;
    double mass_error_ = 0.0;

    // x-marginal density part: inverse-cdf table
    std::vector<double> x_grid_, x_cdf_;
    double density_total_ = 0.0;  // integral of the density part (target 1 - atom)

    // rho2 cumulative on a grid (analytic tail appended)
    std::vector<double> y_grid_, y_cum_;
    double mu_total_ = 0.0;

    // joint density ingredients
    std::vector<LevyModel::PosExp> pos_tails_;
    LadderData ladder_copy_;

    double upper_tail_safe(double x) const;
};

// Builds the stationary crossing law from ladder data; requires EH finite and
// positive.
RhoLaw build_rho(const LevyModel& model, const LadderData& ladder);

}  // namespace levylab
