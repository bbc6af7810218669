#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trafficast/ingest.hpp"
#include "trafficast/model.hpp"

namespace trafficast {

/// The two one-sided upper predictive levels carried on every record. The
/// field names upper95/upper99 reflect the defaults; both are configurable.
struct ForecastLevels {
    double lo = 0.95;
    double hi = 0.99;
};

/// One interval of a rolling one-step-ahead forecast.
struct ForecastRecord {
    std::int64_t index = 0;  ///< interval index within the evaluation window
    double point = 0.0;      ///< predictive mean (real-valued, not rounded)
    Count upper95 = 0;       ///< upper predictive limit at levels.lo
    Count upper99 = 0;       ///< upper predictive limit at levels.hi
    Count observed = 0;
    double log_score = 0.0;  ///< ln predictive pmf at the observed count
};

/// One evaluation window scored under both the proposed (k = k_used) and
/// stationary (k = 1) models. Coverage fields refer to the proposed arm.
struct EvaluationReport {
    std::vector<ForecastRecord> records;     ///< proposed model
    std::vector<ForecastRecord> stationary;  ///< k = 1 baseline, same window
    double mse_proposed = 0.0;
    double mse_stationary = 0.0;
    double k_used = 1.0;
    double coverage95 = 0.0;
    double coverage99 = 0.0;
};

void to_json(nlohmann::json& j, const EvaluationReport& report);

/**
 * Strict one-step-ahead pass: the record for x_i is computed from the state
 * after absorbing x_1..x_{i-1} only (the first record is the bare prior),
 * then x_i is absorbed via discount_step. Never peeks ahead.
 */
std::vector<ForecastRecord> rolling_forecast(std::span<const Count> counts,
                                             double k, double alpha1, double beta1,
                                             ForecastLevels levels = {});

/// Mean of (point - observed)^2. Throws std::invalid_argument when empty.
double mse(std::span<const ForecastRecord> records);

/// Runs rolling_forecast under k and under k = 1 on the same counts and
/// assembles the full report (MSEs, coverages).
EvaluationReport evaluate(std::span<const Count> counts, double k, double alpha1,
                          double beta1, ForecastLevels levels = {});

/**
 * The fit-on-previous-day protocol: for each day d >= 2, fit k on day d-1
 * by grid-search MLE, then score day d under that k and under k = 1. Each
 * day starts from a fresh prior unless carry_over is set, in which case the
 * proposed-arm state continues across midnight (the fitted k still changes
 * per day). Requires at least two days.
 */
std::vector<EvaluationReport> daily_protocol(std::span<const TrafficSeries> days,
                                             double alpha1, double beta1,
                                             int grid_size = 1000,
                                             ForecastLevels levels = {},
                                             bool carry_over = false);

/// MSE of a rolling forecast for each candidate k, ordered by k.
std::vector<std::pair<double, double>> k_sweep(std::span<const Count> counts,
                                               std::span<const double> ks,
                                               double alpha1, double beta1);

/// One row of an interval-estimate table: both models' point forecasts and
/// upper limits at a single interval, next to the observed count.
struct IntervalReport {
    std::int64_t index = 0;
    double expected_proposed = 0.0;
    Count upper95_proposed = 0;
    Count upper99_proposed = 0;
    double expected_stationary = 0.0;
    Count upper95_stationary = 0;
    Count upper99_stationary = 0;
    Count observed = 0;
};

void to_json(nlohmann::json& j, const IntervalReport& row);

/// Extracts the row at t_star (throws std::out_of_range past the end). By
/// convention callers pass argmax_observed: the busiest interval.
IntervalReport interval_report(const EvaluationReport& report, std::size_t t_star);

/// Index of the record with the largest observed count (first on ties).
std::size_t argmax_observed(std::span<const ForecastRecord> records);

/// CSV with columns index,point_proposed,upper95,upper99,point_stationary,
/// observed — one row per interval, plot-ready.
std::string records_to_csv(const EvaluationReport& report);

}  // namespace trafficast
