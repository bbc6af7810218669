#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trafficast/model.hpp"

namespace trafficast {

/// Predictive log-likelihood evaluated over a grid of discount constants.
struct LikelihoodCurve {
    std::vector<double> grid;    ///< strictly increasing k values in (0, 1]
    std::vector<double> loglik;  ///< log L(k), same length as grid
    std::size_t argmax_index = 0;
};

enum class ModelChoice { proposed, stationary };

std::string to_string(ModelChoice choice);

/// Result of fitting the discount constant and comparing against the
/// stationary (k = 1) baseline by AIC.
struct FitReport {
    double k_hat = 1.0;
    LikelihoodCurve curve;
    double aic_proposed = 0.0;    ///< AIC with k = k_hat, one fitted parameter
    double aic_stationary = 0.0;  ///< AIC with k = 1, no fitted parameters
    ModelChoice selected = ModelChoice::stationary;
};

void to_json(nlohmann::json& j, const FitReport& report);

/**
 * Predictive log-likelihood of a count sequence under discount constant k:
 * the sum over ticks of the log one-step predictive pmf at the current
 * (pre-decay) state, with the state advanced by discount_step after each
 * term. The first term is the prior predictive under (alpha1, beta1) and is
 * therefore independent of k.
 *
 * Throws std::invalid_argument for an empty sequence.
 */
double log_likelihood(std::span<const Count> counts, double k, double alpha1,
                      double beta1);

/// Akaike information criterion 2*n_params - 2*log_likelihood. Callers use
/// n_params = 1 for the fitted-k model and 0 for the fixed k = 1 baseline.
double aic(std::span<const Count> counts, double k, double alpha1, double beta1,
           int n_params);

/**
 * Grid-search maximum likelihood over k = j/grid_size for j = 1..grid_size
 * (k = 0 excluded as invalid, k = 1 included so the stationary model lies on
 * the grid). Ties break toward the smaller k: underestimating k costs less
 * forecast error than overestimating it. Also fills both AIC values and the
 * selected model, so the returned report is complete.
 */
FitReport mle_k(std::span<const Count> counts, int grid_size = 1000,
                double alpha1 = kDefaultAlpha1, double beta1 = kDefaultBeta1);

/// Fit k by mle_k and select between the proposed and stationary models by
/// AIC (identical to mle_k; kept as the model-selection entry point).
FitReport compare_models(std::span<const Count> counts,
                         double alpha1 = kDefaultAlpha1,
                         double beta1 = kDefaultBeta1, int grid_size = 1000);

/// Two-column CSV (k, loglik) of the likelihood curve, for plotting.
std::string curve_to_csv(const LikelihoodCurve& curve);

}  // namespace trafficast
