#include "trafficast/model.hpp"

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trafficast {

namespace {

// Smallest positive normal double. Repeated discounting of a long run of
// zero counts at small k drives alpha -> k^t * alpha1, which underflows to
// exactly zero; clamping here keeps lnGamma(alpha) and alpha*ln(beta) finite
// without perturbing any state reachable in practice.
constexpr double kTiny = DBL_MIN;

void check_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite, got " +
                                    std::to_string(value));
    }
}

void check_count(Count x) {
    if (x < 0) {
        throw std::invalid_argument("count must be non-negative, got " + std::to_string(x));
    }
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("log_gamma requires a positive argument, got " +
                                std::to_string(x));
    }
    return std::lgamma(x);
}

GammaState::GammaState(double alpha, double beta, double k, std::int64_t ticks)
    : alpha_(alpha), beta_(beta), k_(k), ticks_(ticks) {
    check_positive(alpha, "alpha");
    check_positive(beta, "beta");
    check_positive(k, "k");
    if (k > 1.0) {
        throw std::invalid_argument("discount constant k must lie in (0, 1], got " +
                                    std::to_string(k));
    }
    if (ticks < 0) {
        throw std::invalid_argument("ticks must be non-negative, got " + std::to_string(ticks));
    }
}

GammaState GammaState::prior(double alpha1, double beta1, double k) {
    return GammaState(alpha1, beta1, k, 0);
}

GammaState posterior_update(const GammaState& state, Count x) {
    check_count(x);
    return GammaState(state.alpha() + static_cast<double>(x), state.beta() + 1.0,
                      state.discount(), state.ticks());
}

GammaState discount_step(const GammaState& state, Count x) {
    check_count(x);
    const double k = state.discount();
    const double alpha = std::max(k * (state.alpha() + static_cast<double>(x)), kTiny);
    const double beta = std::max(k * (state.beta() + 1.0), kTiny);
    return GammaState(alpha, beta, k, state.ticks() + 1);
}

GammaState state_from_history(std::span<const Count> counts, double alpha1,
                              double beta1, double k) {
    check_positive(alpha1, "alpha1");
    check_positive(beta1, "beta1");
    check_positive(k, "k");
    if (k > 1.0) {
        throw std::invalid_argument("discount constant k must lie in (0, 1], got " +
                                    std::to_string(k));
    }
    const std::size_t n = counts.size();
    if (n == 0) {
        return GammaState(alpha1, beta1, k, 0);
    }
    // alpha: sum_i k^(t+1-i) x_i accumulated backwards so the weight is just
    // a running power of k (weight k for the newest count, k^t for the oldest).
    double alpha_sum = 0.0;
    double weight = k;
    for (std::size_t i = n; i-- > 0;) {
        check_count(counts[i]);
        alpha_sum += weight * static_cast<double>(counts[i]);
        weight *= k;
    }
    // beta: geometric series sum_{i=1..t} k^i by Horner's rule (the exact
    // unroll of beta' = k(beta + 1)).
    double geometric = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        geometric = k * (1.0 + geometric);
    }
    const double decay = std::pow(k, static_cast<double>(n));
    const double alpha = std::max(decay * alpha1 + alpha_sum, kTiny);
    const double beta = std::max(decay * beta1 + geometric, kTiny);
    return GammaState(alpha, beta, k, static_cast<std::int64_t>(n));
}

double point_forecast(const GammaState& state) {
    return state.alpha() / state.beta();
}

double log_predictive_pmf(const GammaState& state, Count x) {
    check_count(x);
    const double alpha = state.alpha();
    const double beta = state.beta();
    const double xd = static_cast<double>(x);
    return alpha * std::log(beta) + log_gamma(alpha + xd) -
           (alpha + xd) * std::log(beta + 1.0) - log_gamma(alpha) - log_gamma(xd + 1.0);
}

double predictive_pmf(const GammaState& state, Count x) {
    return std::exp(log_predictive_pmf(state, x));
}

Count predictive_quantile(const GammaState& state, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("level must lie strictly inside (0, 1), got " +
                                    std::to_string(level));
    }
    const double alpha = state.alpha();
    const double beta = state.beta();
    const PredictiveDist dist = predictive(state);
    // Generous scan ceiling: fifty predictive standard deviations above the
    // mean covers any level representable in double precision.
    const double cap_d = dist.mean() + 50.0 * std::sqrt(dist.variance()) + 50.0;
    const Count cap = static_cast<Count>(cap_d) + 1;
    const double log_one_plus_beta = std::log(beta + 1.0);
    // pmf ratio recurrence in log space: each step multiplies by
    // (alpha + x) / ((x + 1)(beta + 1)); accumulate the CDF linearly.
    double log_pmf = alpha * (std::log(beta) - log_one_plus_beta);
    double cdf = std::exp(log_pmf);
    Count x = 0;
    while (cdf < level && x < cap) {
        log_pmf += std::log(alpha + static_cast<double>(x)) -
                   std::log(static_cast<double>(x) + 1.0) - log_one_plus_beta;
        cdf += std::exp(log_pmf);
        ++x;
    }
    return x;
}

double shock_variance(const GammaState& state) {
    const double k = state.discount();
    return k * (1.0 - k) / (state.alpha() + 1.0);
}

PredictiveDist predictive(const GammaState& state) {
    return PredictiveDist{state.alpha(), state.beta() / (state.beta() + 1.0)};
}

}  // namespace trafficast
