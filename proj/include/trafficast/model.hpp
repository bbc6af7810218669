#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace trafficast {

/// One interval's request-arrival count.
using Count = std::int64_t;

/// Default prior constants: beta1 = 1 with a small shape approximates the
/// non-informative 1/theta prior while keeping the predictive proper.
inline constexpr double kDefaultAlpha1 = 0.5;
inline constexpr double kDefaultBeta1 = 1.0;

/// Natural log of the Gamma function. Throws std::domain_error for x <= 0.
double log_gamma(double x);

/**
 * Sufficient statistics of the discounted Poisson-Gamma filter.
 *
 * The rate parameter theta is Gamma(alpha, beta) given the history; the
 * discount constant k in (0,1] controls how fast old observations are
 * forgotten (k=1 is the classical stationary filter). States are immutable
 * values: every operation returns a new state, so they are safe to share
 * across threads.
 */
class GammaState {
public:
    GammaState(double alpha, double beta, double k = 1.0, std::int64_t ticks = 0);

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double discount() const { return k_; }
    /// Number of observations absorbed since the initial prior.
    std::int64_t ticks() const { return ticks_; }

    /// Initial prior state before any data.
    static GammaState prior(double alpha1 = kDefaultAlpha1,
                            double beta1 = kDefaultBeta1, double k = 1.0);

private:
    double alpha_;
    double beta_;
    double k_;
    std::int64_t ticks_;
};

/// Conjugate Bayes update: (alpha, beta) -> (alpha + x, beta + 1).
/// Leaves k and the tick count unchanged; decay is a separate step.
GammaState posterior_update(const GammaState& state, Count x);

/// One full filter tick: Bayes update fused with power discounting,
/// alpha' = k(alpha + x), beta' = k(beta + 1), ticks' = ticks + 1.
GammaState discount_step(const GammaState& state, Count x);

/// Closed-form state after absorbing a whole history:
///   alpha = k^t alpha1 + sum_{i=1..t} k^(t+1-i) x_i
///   beta  = k^t beta1  + sum_{i=1..t} k^i
/// evaluated in a single accumulation pass. An empty history returns the
/// prior unchanged. Equal to folding discount_step over the counts.
GammaState state_from_history(std::span<const Count> counts, double alpha1,
                              double beta1, double k);

/// Bayes-optimal one-step point forecast under squared-error loss: the
/// predictive mean alpha/beta (an exponentially weighted moving average of
/// the history when beta1 = 1).
double point_forecast(const GammaState& state);

/// Log of the one-step predictive probability of observing x next:
///   alpha*ln(beta) + lnG(alpha+x) - (alpha+x)*ln(beta+1) - lnG(alpha) - lnG(x+1)
/// (a negative binomial; all arithmetic stays in log space).
double log_predictive_pmf(const GammaState& state, Count x);

/// exp(log_predictive_pmf), in [0, 1].
double predictive_pmf(const GammaState& state, Count x);

/// Smallest q with P(x <= q) >= level under the one-step predictive
/// distribution (one-sided upper predictive limit). Requires 0 < level < 1.
Count predictive_quantile(const GammaState& state, double level);

/// Variance k(1-k)/(alpha+1) of the multiplicative Beta shock driving the
/// rate between ticks. Zero iff k = 1 (stationary model).
double shock_variance(const GammaState& state);

/// The one-step predictive distribution as an explicit negative binomial
/// with r = alpha and success probability p = beta/(beta+1).
struct PredictiveDist {
    double r;
    double p;

    double mean() const { return r * (1.0 - p) / p; }
    double variance() const { return r * (1.0 - p) / (p * p); }
};

PredictiveDist predictive(const GammaState& state);

}  // namespace trafficast
