#pragma once

#include <optional>
#include <string>
#include <vector>

#include "levylab/rng.hpp"

namespace levylab {

enum class Family {
    BrownianStandard,
    BrownianDrift,
    KouTwoSidedExp,
    SpectrallyNegativeExp,
    Custom,
};

std::string family_name(Family f);

// One exponential jump component: density weight * rate * exp(-rate*|x|) on
// the chosen side, relative to the total jump intensity.
struct ExpComponent {
    double weight = 0.0;
    double rate = 1.0;
    bool upward = true;
};

struct MixtureJumps {
    double intensity = 0.0;  // total Poisson rate
    std::vector<ExpComponent> components;
};

// One-sided power-law density c*|x|^{-1-alpha} truncated below at eps.
// Stands in for an infinite-activity spectral component; the discarded
// small-jump variance is reported, not silently dropped.
struct TruncatedSpectralJumps {
    bool upward = true;
    double c = 1.0;
    double alpha = 0.5;   // in (0,2)
    double eps = 1e-3;    // truncation threshold

    double intensity() const;           // c * eps^-alpha / alpha
    double discarded_variance() const;  // integral of x^2 below eps
};

enum class JumpKind { None, Mixture, TruncatedSpectral };

class LevyModel {
  public:
    LevyModel() = default;

    double sigma() const { return sigma_; }
    double drift() const { return drift_; }
    Family family() const { return family_; }
    JumpKind jump_kind() const { return jump_kind_; }
    const MixtureJumps& mixture() const { return mixture_; }
    const TruncatedSpectralJumps& spectral() const { return spectral_; }

    double jump_rate() const;
    bool has_jumps() const { return jump_rate() > 0.0; }
    bool has_positive_jumps() const;
    bool has_negative_jumps() const;
    bool spectrally_negative() const { return !has_positive_jumps(); }

    // draws one jump (signed) conditional on a jump occurring
    double sample_jump(Rng& rng) const;

    // upper tail of the jump measure on (x, infinity), x > 0
    double upper_tail(double x) const;
    // mass of the jump measure on (-infinity, -z), z > 0
    double lower_tail(double z) const;
    // integral of lower_tail over (y, infinity)
    double lower_tail_integral(double y) const;

    // mean of one jump times the intensity; nullopt when not integrable
    std::optional<double> jump_mean_rate() const;

    // positive-side exponential components scaled by intensity, used by the
    // exact overshoot samplers (rate_i, alpha_i)
    struct PosExp {
        double rate;   // Levy-measure mass coefficient: tail contributes rate*exp(-alpha*x)
        double alpha;
    };
    std::vector<PosExp> positive_exp_tails() const;

    std::string describe() const;

    friend LevyModel make_model_impl(Family family, double sigma, double drift,
                                     MixtureJumps mix, TruncatedSpectralJumps spec,
                                     JumpKind kind);

  private:
    double sigma_ = 0.0;
    double drift_ = 0.0;
    JumpKind jump_kind_ = JumpKind::None;
    MixtureJumps mixture_;
    TruncatedSpectralJumps spectral_;
    Family family_ = Family::Custom;
};

// factories (validated)
LevyModel make_brownian_standard();
LevyModel make_brownian_drift(double b);
LevyModel make_kou(double sigma, double drift, double lambda, double p_up,
                   double alpha_plus, double alpha_minus);
LevyModel make_spectrally_negative(double sigma, double drift, double lambda, double alpha);
LevyModel make_custom_mixture(double sigma, double drift, MixtureJumps mix);
LevyModel make_truncated_spectral(double sigma, double drift, TruncatedSpectralJumps spec);

// dual process -xi: drift negated, jump law reflected, sigma unchanged
LevyModel negate(const LevyModel& m);

// upper tail of the jump measure (throws DomainError for x <= 0)
double levy_tail(const LevyModel& m, double x);

struct MeanIncrement {
    bool finite = true;
    double value = 0.0;  // meaningful only when finite
};
MeanIncrement mean_increment(const LevyModel& m);

enum class LadderMeanClass { FiniteMeanLadder, InfiniteMeanLadder, Undetermined };
std::string ladder_mean_class_name(LadderMeanClass c);

struct QuadratureConfig {
    double rtol = 1e-9;
    double x_max = 50.0;       // analytic tail bound beyond this point
    int max_cells = 1 << 16;
    double divergence_cap = 1e8;
};

// Mean-ladder-height finiteness test: positive mean, or zero mean plus the
// convergent tail-ratio integral.  Undetermined is returned when neither
// convergence nor divergence can be bracketed within the budget.
LadderMeanClass classify_ladder_mean(const LevyModel& m, const QuadratureConfig& cfg = {});

}  // namespace levylab
