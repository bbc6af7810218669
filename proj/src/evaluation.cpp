#include "trafficast/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "trafficast/estimation.hpp"

namespace trafficast {

namespace {

void to_json(nlohmann::json& j, const ForecastRecord& record) {
    j = nlohmann::json{{"index", record.index},       {"point", record.point},
                       {"upper95", record.upper95},   {"upper99", record.upper99},
                       {"observed", record.observed}, {"log_score", record.log_score}};
}

nlohmann::json records_json(const std::vector<ForecastRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& record : records) {
        nlohmann::json j;
        to_json(j, record);
        arr.push_back(std::move(j));
    }
    return arr;
}

double coverage(const std::vector<ForecastRecord>& records, bool hi) {
    if (records.empty()) {
        return 0.0;
    }
    std::size_t covered = 0;
    for (const auto& record : records) {
        const Count limit = hi ? record.upper99 : record.upper95;
        if (record.observed <= limit) {
            ++covered;
        }
    }
    return static_cast<double>(covered) / static_cast<double>(records.size());
}

}  // namespace

void to_json(nlohmann::json& j, const EvaluationReport& report) {
    j = nlohmann::json{{"records", records_json(report.records)},
                       {"stationary", records_json(report.stationary)},
                       {"mse_proposed", report.mse_proposed},
                       {"mse_stationary", report.mse_stationary},
                       {"k_used", report.k_used},
                       {"coverage95", report.coverage95},
                       {"coverage99", report.coverage99}};
}

std::vector<ForecastRecord> rolling_forecast(std::span<const Count> counts, double k,
                                             double alpha1, double beta1,
                                             ForecastLevels levels) {
    std::vector<ForecastRecord> records;
    records.reserve(counts.size());
    GammaState state = GammaState::prior(alpha1, beta1, k);
    std::int64_t index = 0;
    for (const Count x : counts) {
        ForecastRecord record;
        record.index = index++;
        record.point = point_forecast(state);
        record.upper95 = predictive_quantile(state, levels.lo);
        record.upper99 = predictive_quantile(state, levels.hi);
        record.observed = x;
        record.log_score = log_predictive_pmf(state, x);
        records.push_back(record);
        state = discount_step(state, x);
    }
    return records;
}

double mse(std::span<const ForecastRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("mse requires at least one forecast record");
    }
    double total = 0.0;
    for (const auto& record : records) {
        const double err = record.point - static_cast<double>(record.observed);
        total += err * err;
    }
    return total / static_cast<double>(records.size());
}

EvaluationReport evaluate(std::span<const Count> counts, double k, double alpha1,
                          double beta1, ForecastLevels levels) {
    EvaluationReport report;
    report.k_used = k;
    report.records = rolling_forecast(counts, k, alpha1, beta1, levels);
    report.stationary = rolling_forecast(counts, 1.0, alpha1, beta1, levels);
    report.mse_proposed = mse(report.records);
    report.mse_stationary = mse(report.stationary);
    report.coverage95 = coverage(report.records, false);
    report.coverage99 = coverage(report.records, true);
    return report;
}

namespace {

// rolling_forecast continued from an explicit starting state, for the
// carry-over variant of the daily protocol.
std::vector<ForecastRecord> rolling_from_state(std::span<const Count> counts,
                                               GammaState& state,
                                               ForecastLevels levels) {
    std::vector<ForecastRecord> records;
    records.reserve(counts.size());
    std::int64_t index = 0;
    for (const Count x : counts) {
        ForecastRecord record;
        record.index = index++;
        record.point = point_forecast(state);
        record.upper95 = predictive_quantile(state, levels.lo);
        record.upper99 = predictive_quantile(state, levels.hi);
        record.observed = x;
        record.log_score = log_predictive_pmf(state, x);
        records.push_back(record);
        state = discount_step(state, x);
    }
    return records;
}

}  // namespace

std::vector<EvaluationReport> daily_protocol(std::span<const TrafficSeries> days,
                                             double alpha1, double beta1,
                                             int grid_size, ForecastLevels levels,
                                             bool carry_over) {
    if (days.size() < 2) {
        throw std::invalid_argument("daily_protocol requires at least two days");
    }
    for (const auto& day : days) {
        if (day.observed_counts().empty()) {
            throw std::invalid_argument("daily_protocol requires every day to be nonempty");
        }
    }
    std::vector<EvaluationReport> reports;
    reports.reserve(days.size() - 1);
    for (std::size_t d = 1; d < days.size(); ++d) {
        const std::vector<Count> previous = days[d - 1].observed_counts();
        const std::vector<Count> today = days[d].observed_counts();
        const FitReport fit = mle_k(previous, grid_size, alpha1, beta1);
        if (!carry_over) {
            reports.push_back(evaluate(today, fit.k_hat, alpha1, beta1, levels));
            continue;
        }
        // Carry-over: the proposed arm's state continues across midnight
        // (rebuilt from yesterday's data under today's fitted k, since k is
        // fixed per state); the stationary arm carries its own k=1 state.
        EvaluationReport report;
        report.k_used = fit.k_hat;
        GammaState proposed =
            state_from_history(previous, alpha1, beta1, fit.k_hat);
        GammaState stationary = state_from_history(previous, alpha1, beta1, 1.0);
        report.records = rolling_from_state(today, proposed, levels);
        report.stationary = rolling_from_state(today, stationary, levels);
        report.mse_proposed = mse(report.records);
        report.mse_stationary = mse(report.stationary);
        std::size_t cov95 = 0;
        std::size_t cov99 = 0;
        for (const auto& record : report.records) {
            cov95 += record.observed <= record.upper95 ? 1 : 0;
            cov99 += record.observed <= record.upper99 ? 1 : 0;
        }
        report.coverage95 =
            static_cast<double>(cov95) / static_cast<double>(report.records.size());
        report.coverage99 =
            static_cast<double>(cov99) / static_cast<double>(report.records.size());
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<std::pair<double, double>> k_sweep(std::span<const Count> counts,
                                               std::span<const double> ks,
                                               double alpha1, double beta1) {
    std::vector<std::pair<double, double>> result;
    result.reserve(ks.size());
    for (const double k : ks) {
        result.emplace_back(k, mse(rolling_forecast(counts, k, alpha1, beta1)));
    }
    std::sort(result.begin(), result.end());
    return result;
}

void to_json(nlohmann::json& j, const IntervalReport& row) {
    j = nlohmann::json{{"index", row.index},
                       {"expected_proposed", row.expected_proposed},
                       {"upper95_proposed", row.upper95_proposed},
                       {"upper99_proposed", row.upper99_proposed},
                       {"expected_stationary", row.expected_stationary},
                       {"upper95_stationary", row.upper95_stationary},
                       {"upper99_stationary", row.upper99_stationary},
                       {"observed", row.observed}};
}

IntervalReport interval_report(const EvaluationReport& report, std::size_t t_star) {
    if (t_star >= report.records.size() || t_star >= report.stationary.size()) {
        throw std::out_of_range("interval_report index past the end of the records");
    }
    const ForecastRecord& p = report.records[t_star];
    const ForecastRecord& s = report.stationary[t_star];
    IntervalReport row;
    row.index = p.index;
    row.expected_proposed = p.point;
    row.upper95_proposed = p.upper95;
    row.upper99_proposed = p.upper99;
    row.expected_stationary = s.point;
    row.upper95_stationary = s.upper95;
    row.upper99_stationary = s.upper99;
    row.observed = p.observed;
    return row;
}

std::size_t argmax_observed(std::span<const ForecastRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("argmax_observed requires at least one record");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].observed > records[best].observed) {
            best = i;
        }
    }
    return best;
}

std::string records_to_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "index,point_proposed,upper95,upper99,point_stationary,observed\n";
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        const ForecastRecord& p = report.records[i];
        const double stationary_point =
            i < report.stationary.size() ? report.stationary[i].point : 0.0;
        out << p.index << ',' << p.point << ',' << p.upper95 << ',' << p.upper99
            << ',' << stationary_point << ',' << p.observed << '\n';
    }
    return out.str();
}

}  // namespace trafficast
