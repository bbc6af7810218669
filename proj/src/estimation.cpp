#include "trafficast/estimation.hpp"

#include <sstream>
#include <stdexcept>

namespace trafficast {

std::string to_string(ModelChoice choice) {
    return choice == ModelChoice::proposed ? "proposed" : "stationary";
}

void to_json(nlohmann::json& j, const FitReport& report) {
    j = nlohmann::json{{"k_hat", report.k_hat},
                       {"grid", report.curve.grid},
                       {"loglik", report.curve.loglik},
                       {"aic_proposed", report.aic_proposed},
                       {"aic_stationary", report.aic_stationary},
                       {"selected", to_string(report.selected)}};
}

double log_likelihood(std::span<const Count> counts, double k, double alpha1,
                      double beta1) {
    if (counts.empty()) {
        throw std::invalid_argument("log_likelihood requires a nonempty count sequence");
    }
    GammaState state = GammaState::prior(alpha1, beta1, k);
    double total = 0.0;
    for (const Count x : counts) {
        total += log_predictive_pmf(state, x);
        state = discount_step(state, x);
    }
    return total;
}

double aic(std::span<const Count> counts, double k, double alpha1, double beta1,
           int n_params) {
    if (n_params < 0) {
        throw std::invalid_argument("n_params must be non-negative");
    }
    return 2.0 * n_params - 2.0 * log_likelihood(counts, k, alpha1, beta1);
}

FitReport mle_k(std::span<const Count> counts, int grid_size, double alpha1,
                double beta1) {
    if (grid_size < 2) {
        throw std::invalid_argument("grid_size must be at least 2");
    }
    FitReport report;
    report.curve.grid.reserve(static_cast<std::size_t>(grid_size));
    report.curve.loglik.reserve(static_cast<std::size_t>(grid_size));
    for (int j = 1; j <= grid_size; ++j) {
        const double k = static_cast<double>(j) / static_cast<double>(grid_size);
        report.curve.grid.push_back(k);
        report.curve.loglik.push_back(log_likelihood(counts, k, alpha1, beta1));
    }
    // Strict > keeps the first (smallest-k) grid point on ties: under-
    // estimating k costs less forecast error than overestimating it.
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.curve.loglik.size(); ++i) {
        if (report.curve.loglik[i] > report.curve.loglik[best]) {
            best = i;
        }
    }
    report.curve.argmax_index = best;
    report.k_hat = report.curve.grid[best];
    report.aic_proposed = 2.0 * 1 - 2.0 * report.curve.loglik[best];
    // k = 1 is the last grid point, so the stationary likelihood is already
    // computed; reuse it bit-identically.
    report.aic_stationary = -2.0 * report.curve.loglik.back();
    report.selected = report.aic_proposed < report.aic_stationary
                          ? ModelChoice::proposed
                          : ModelChoice::stationary;
    return report;
}

FitReport compare_models(std::span<const Count> counts, double alpha1, double beta1,
                         int grid_size) {
    return mle_k(counts, grid_size, alpha1, beta1);
}

std::string curve_to_csv(const LikelihoodCurve& curve) {
    std::ostringstream out;
    out.precision(17);
    out << "k,loglik\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << curve.grid[i] << ',' << curve.loglik[i] << '\n';
    }
    return out.str();
}

}  // namespace trafficast
