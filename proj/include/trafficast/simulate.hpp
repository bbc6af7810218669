#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "trafficast/ingest.hpp"
#include "trafficast/model.hpp"
#include "trafficast/rng.hpp"

namespace trafficast {

// ---------------------------------------------------------------------------
// Seed-deterministic samplers (documented algorithms, not platform engines).

/// Gamma(shape, rate) by Marsaglia-Tsang squeeze rejection; shapes below 1
/// use the boost draw(shape+1) * u^(1/shape), applied in log space so tiny
/// shapes cannot underflow to an invalid zero draw.
double sample_gamma(double shape, double rate, Xoshiro256pp& rng);

/// ln of a Gamma(shape, 1) draw; exact for arbitrarily small shapes.
double sample_log_gamma(double shape, Xoshiro256pp& rng);

/// Beta(a, b) as a ratio of Gamma draws, combined in log space so extreme
/// (a, b) still yield a value strictly inside (0, 1).
double sample_beta(double a, double b, Xoshiro256pp& rng);

/// Poisson(mean): sequential inversion below mean 30, Hormann's PTRS
/// transformed rejection at and above it.
Count sample_poisson(double mean, Xoshiro256pp& rng);

/// Standard normal via Box-Muller.
double sample_normal(Xoshiro256pp& rng);

// ---------------------------------------------------------------------------
// The generative model.

struct SimConfig {
    double k_true = 0.8;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    std::int64_t ticks = 288;  ///< number of intervals to generate
    std::uint64_t seed = 1;
    EpochSeconds start = 0;
    std::int64_t interval_seconds = 300;
    std::string source = "simulated";
};

struct SimResult {
    TrafficSeries series;            ///< the observable counts
    std::vector<double> theta_path;  ///< latent rate theta_t, one per tick
};

/**
 * Draws from the model the filter assumes: theta_1 ~ Gamma(alpha1, beta1);
 * each tick t draws x_t ~ Poisson(theta_t), then evolves the rate through
 * the multiplicative Beta shock, theta_{t+1} = (u_t / k) * theta_t with
 * u_t ~ Beta(k * a_t, (1-k) * a_t). The shock's shape a_t is the companion
 * filter's pre-decay posterior shape alpha_t + x_t — the coupling under
 * which the filter's Gamma-closure algebra is exact. With k = 1 the shock
 * is degenerate at 1 and theta stays constant (no Beta draw is made).
 *
 * Reproducibility: tick t consumes only the stream (seed, t); the initial
 * theta draw uses stream (seed, 0).
 */
SimResult simulate_traffic(const SimConfig& config);

/// Optional theta-path CSV (tick, theta) for diagnostics.
std::string theta_to_csv(const SimResult& result);

// ---------------------------------------------------------------------------
// Parameter-recovery experiments.

struct RecoverySummary {
    double k_true = 0.0;
    std::int64_t ticks = 0;
    int n_seeds = 0;
    std::vector<double> k_hats;     ///< one per seed, seed order
    double k_median = 0.0;
    double k_iqr = 0.0;             ///< interquartile range of k_hats
    double frac_true_regime = 0.0;  ///< fraction of seeds where AIC picks the
                                    ///< generating regime (proposed iff k<1)
};

void to_json(nlohmann::json& j, const RecoverySummary& summary);

/// For seeds base_seed+1 .. base_seed+n_seeds: simulate, fit by grid MLE,
/// and select by AIC; summarizes the k_hat distribution.
RecoverySummary recovery_experiment(double k_true, std::int64_t ticks, int n_seeds,
                                    double alpha1, double beta1,
                                    int grid_size = 1000,
                                    std::uint64_t base_seed = 0);

}  // namespace trafficast
