#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levylab/levy_model.hpp"
#include "levylab/tabulated.hpp"

namespace levylab {

// linear + constant + sum of decaying exponentials; closed under the
// convolutions that appear in the renewal identities of this module
struct ExpSumFn {
    double lin = 0.0;
    double cst = 0.0;
    std::vector<std::pair<double, double>> exps;  // (coef, rate), rate > 0

    double operator()(double x) const;
    // integral over [0, x]
    double integral(double x) const;
    // integral of f(x) * exp(-a x) over [0, infinity)
    double laplace_like(double a) const;
};

// Ascending/descending ladder-height data, normalized so that the potential
// of the killed process factorizes through U_- and U_+ with no extra
// constant.  The split of the overall normalization between the two sides is
// a convention; here both drift coefficients are set equal whenever the
// Gaussian coefficient is positive.
struct LadderData {
    enum class Source { ClosedForm, MonteCarloCalibrated };

    double a_plus = 0.0;   // drift of the ascending ladder height
    double a_minus = 0.0;  // drift of the descending ladder height
    double kill_plus = 0.0;
    double kill_minus = 0.0;
    double atom_plus = 0.0;   // renewal-measure mass at 0 (zero-drift sides)
    double atom_minus = 0.0;
    double EH = 0.0;  // mean ascending ladder height per unit local time

    TabulatedFunction U_plus;        // renewal function, ascending
    TabulatedFunction U_minus;       // renewal function, descending
    TabulatedFunction u_plus;        // density of U_plus
    TabulatedFunction mu_plus_tail;  // tail of the ascending jump measure

    Source source = Source::ClosedForm;

    // exact evaluators, present for closed-form families
    std::optional<ExpSumFn> U_plus_exact, U_minus_exact;
    std::optional<ExpSumFn> u_plus_exact, u_minus_exact;
    std::optional<ExpSumFn> mu_plus_exact;

    struct Provenance {
        std::uint64_t seed = 0;
        long n_paths = 0;
        double dt = 0.0;
        double horizon = 0.0;
        double scale_q = 0.0;        // fitted product of the two side scales
        double eq2_residual = 0.0;   // potential-identity fit residual
        double vigon_residual = 0.0; // ascending-tail consistency residual
        double mass_residual = 0.0;  // |mass(m) - EH| / EH at acceptance time
    };
    Provenance prov;

    double Uplus(double x) const;
    double Uminus(double x) const;
    double uplus(double x) const;
    double uminus(double x) const;  // density of U_minus (tabulated fallback: difference quotient)
    double mu_plus(double y) const;

    // sanity checks used by constructors and tests
    bool monotone_ok() const;
};

// Exact ladder data for the supported families; throws UnsupportedFamilyError
// for Custom models and InfiniteMeanLadderError when the process drifts to
// -infinity.
LadderData closed_form_ladder(const LevyModel& model);

// total mass of m(dx) = tail(x) U_-(x) dx + a_+ delta_0 (exact for
// closed-form ladders, quadrature with analytic tails otherwise)
double mass_of_m(const LevyModel& model, const LadderData& ladder, double* quad_error = nullptr);

// density at y of the factorized potential measure started at x:
// integral of U_-(dz) u_+(y + z - x) over z in [(x-y)^+, x]
double factorized_potential_density(const LadderData& ladder, double x, double y);

// JSON round trip (grids, constants, provenance)
std::string ladder_to_json(const LadderData& ladder);
LadderData ladder_from_json(const std::string& text);

// grid used when tabulating closed-form ladders
struct LadderGrid {
    double x_max = 8.0;
    std::size_t cells = 4000;
};
void tabulate_closed_form(LadderData& ladder, const LadderGrid& grid);

}  // namespace levylab
