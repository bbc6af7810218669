#include "trafficast/simulate.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "trafficast/estimation.hpp"

namespace trafficast {

namespace {

void check_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
}

// Marsaglia-Tsang squeeze rejection for Gamma(shape, 1), shape >= 1.
double gamma_mt_core(double shape, Xoshiro256pp& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = sample_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double sample_normal(Xoshiro256pp& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_log_gamma(double shape, Xoshiro256pp& rng) {
    check_positive(shape, "shape");
    if (shape >= 1.0) {
        return std::log(gamma_mt_core(shape, rng));
    }
    // Boost for shape < 1: G(shape) = G(shape + 1) * U^(1/shape), composed in
    // log space so arbitrarily small shapes stay finite. For subnormal shapes
    // the division itself can overflow to -inf; clamp so callers that
    // difference two log draws (the beta sampler) never hit inf - inf = NaN.
    const double boosted = gamma_mt_core(shape + 1.0, rng);
    const double u = rng.uniform();
    return std::log(boosted) + std::max(std::log(u) / shape, -DBL_MAX);
}

double sample_gamma(double shape, double rate, Xoshiro256pp& rng) {
    check_positive(rate, "rate");
    const double draw = std::exp(sample_log_gamma(shape, rng) - std::log(rate));
    return std::max(draw, DBL_MIN);
}

double sample_beta(double a, double b, Xoshiro256pp& rng) {
    const double log_ga = sample_log_gamma(a, rng);
    const double log_gb = sample_log_gamma(b, rng);
    // a/(a+b) ratio via the logistic of the log difference; clamped strictly
    // inside (0, 1).
    const double value = 1.0 / (1.0 + std::exp(log_gb - log_ga));
    return std::clamp(value, DBL_MIN, 1.0 - DBL_EPSILON / 2.0);
}

Count sample_poisson(double mean, Xoshiro256pp& rng) {
    check_positive(mean, "mean");
    if (mean < 30.0) {
        // Sequential inversion by uniform products.
        const double floor_p = std::exp(-mean);
        double p = 1.0;
        Count x = -1;
        do {
            ++x;
            p *= rng.uniform();
        } while (p > floor_p);
        return x;
    }
    // Hormann's PTRS transformed rejection.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double candidate = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) {
            return static_cast<Count>(candidate);
        }
        if (candidate < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            candidate * log_mean - mean - std::lgamma(candidate + 1.0)) {
            return static_cast<Count>(candidate);
        }
    }
}

SimResult simulate_traffic(const SimConfig& config) {
    if (config.ticks <= 0) {
        throw std::invalid_argument("ticks must be positive");
    }
    if (config.interval_seconds <= 0) {
        throw std::invalid_argument("interval_seconds must be positive");
    }
    // Validates k/alpha1/beta1 and doubles as the companion filter's prior.
    GammaState state = GammaState::prior(config.alpha1, config.beta1, config.k_true);
    const double k = config.k_true;
    SimResult result;
    result.series.start = config.start;
    result.series.interval_seconds = config.interval_seconds;
    result.series.source = config.source;
    result.series.counts.reserve(static_cast<std::size_t>(config.ticks));
    result.theta_path.reserve(static_cast<std::size_t>(config.ticks));

    Xoshiro256pp init_rng = Xoshiro256pp::for_stream(config.seed, 0);
    double theta = sample_gamma(config.alpha1, config.beta1, init_rng);
    for (std::int64_t t = 1; t <= config.ticks; ++t) {
        Xoshiro256pp tick_rng = Xoshiro256pp::for_stream(config.seed, static_cast<std::uint64_t>(t));
        const Count x = sample_poisson(theta, tick_rng);
        result.series.counts.emplace_back(x);
        result.theta_path.push_back(theta);
        if (k < 1.0) {
            // The shock's shape is the companion filter's pre-decay posterior
            // shape alpha_t + x_t; this coupling makes the filter's Gamma-
            // closure algebra exact on the simulated process.
            const double a_plus = posterior_update(state, x).alpha();
            const double u = sample_beta(k * a_plus, (1.0 - k) * a_plus, tick_rng);
            theta = std::max((u / k) * theta, DBL_MIN);
        }
        state = discount_step(state, x);
    }
    return result;
}

std::string theta_to_csv(const SimResult& result) {
    std::ostringstream out;
    out.precision(17);
    out << "tick,theta\n";
    for (std::size_t i = 0; i < result.theta_path.size(); ++i) {
        out << (i + 1) << ',' << result.theta_path[i] << '\n';
    }
    return out.str();
}

void to_json(nlohmann::json& j, const RecoverySummary& summary) {
    j = nlohmann::json{{"k_true", summary.k_true},
                       {"ticks", summary.ticks},
                       {"n_seeds", summary.n_seeds},
                       {"k_hats", summary.k_hats},
                       {"k_median", summary.k_median},
                       {"k_iqr", summary.k_iqr},
                       {"frac_true_regime", summary.frac_true_regime}};
}

RecoverySummary recovery_experiment(double k_true, std::int64_t ticks, int n_seeds,
                                    double alpha1, double beta1, int grid_size,
                                    std::uint64_t base_seed) {
    if (n_seeds < 1) {
        throw std::invalid_argument("n_seeds must be at least 1");
    }
    RecoverySummary summary;
    summary.k_true = k_true;
    summary.ticks = ticks;
    summary.n_seeds = n_seeds;
    summary.k_hats.reserve(static_cast<std::size_t>(n_seeds));
    int regime_hits = 0;
    for (int i = 1; i <= n_seeds; ++i) {
        SimConfig config;
        config.k_true = k_true;
        config.alpha1 = alpha1;
        config.beta1 = beta1;
        config.ticks = ticks;
        config.seed = base_seed + static_cast<std::uint64_t>(i);
        const SimResult sim = simulate_traffic(config);
        const std::vector<Count> counts = sim.series.observed_counts();
        const FitReport fit = compare_models(counts, alpha1, beta1, grid_size);
        summary.k_hats.push_back(fit.k_hat);
        const bool want_proposed = k_true < 1.0;
        const bool picked_proposed = fit.selected == ModelChoice::proposed;
        if (want_proposed == picked_proposed) {
            ++regime_hits;
        }
    }
    std::vector<double> sorted = summary.k_hats;
    std::sort(sorted.begin(), sorted.end());
    summary.k_median = quantile_sorted(sorted, 0.5);
    summary.k_iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    summary.frac_true_regime =
        static_cast<double>(regime_hits) / static_cast<double>(n_seeds);
    return summary;
}

}  // namespace trafficast
