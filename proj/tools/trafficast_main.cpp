// trafficast: batch front end for the discounted Poisson-Gamma forecasting
// toolkit. Subcommands: ingest, fit, forecast, sweep, simulate, recover.
//
// Exit codes: 0 success, 1 usage/validation error, 2 data error.
// With --json every command prints exactly one JSON document on stdout.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trafficast/estimation.hpp"
#include "trafficast/evaluation.hpp"
#include "trafficast/ingest.hpp"
#include "trafficast/model.hpp"
#include "trafficast/simulate.hpp"

namespace {

using nlohmann::json;
using namespace trafficast;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open for writing: " + path);
    }
    out << content;
    if (!out) {
        throw DataError("failed writing: " + path);
    }
}

/// "+HH:MM", "-HH:MM", "+HHMM" or "Z"/"" (UTC) -> seconds east of UTC.
std::int64_t parse_tz_offset(const std::string& text) {
    if (text.empty() || text == "Z" || text == "z") {
        return 0;
    }
    // Reuse the ISO-8601 designator parser by appending the offset to a
    // fixed instant and differencing.
    const EpochSeconds base = parse_iso8601("2000-01-01T00:00:00Z");
    const EpochSeconds shifted = parse_iso8601("2000-01-01T00:00:00" + text);
    return base - shifted;
}

std::string format_tz_offset(std::int64_t seconds) {
    const char sign = seconds < 0 ? '-' : '+';
    const std::int64_t magnitude = seconds < 0 ? -seconds : seconds;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%c%02lld:%02lld", sign,
                  static_cast<long long>(magnitude / 3600),
                  static_cast<long long>((magnitude / 60) % 60));
    return buf;
}

struct IngestArgs {
    std::vector<std::string> logs;
    std::string out;
    std::int64_t interval = 300;
    std::string window_start;
    std::string window_end;
    std::string config_path;
    std::string status_filter;
    std::string source;
    bool as_json = false;
};

struct FitArgs {
    std::string counts;
    int grid = 1000;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    std::string out_report;
    std::string out_curve;
    bool as_json = false;
};

struct ForecastArgs {
    std::string counts;
    double k = 0.0;
    bool k_given = false;
    bool fit_previous_day = false;
    int grid = 1000;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    std::vector<double> levels = {0.95, 0.99};
    std::string tz_offset = "+00:00";
    bool carry_over = false;
    std::string out_records;
    std::string out_report;
    bool as_json = false;
};

struct SweepArgs {
    std::string counts;
    std::vector<double> ks;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    std::string out;
    bool as_json = false;
};

struct SimulateArgs {
    double k = 0.8;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    std::int64_t ticks = 288;
    std::uint64_t seed = 1;
    std::int64_t interval = 300;
    std::string start = "1970-01-01T00:00:00Z";
    std::string out;
    std::string theta_out;
    std::string source = "simulated";
    bool as_json = false;
};

struct RecoverArgs {
    double k_true = 0.8;
    std::int64_t ticks = 288;
    int seeds = 20;
    double alpha1 = kDefaultAlpha1;
    double beta1 = kDefaultBeta1;
    int grid = 1000;
    std::uint64_t base_seed = 0;
    std::string out;
    bool as_json = false;
};

std::vector<TimeRange> load_maintenance(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config file: " + path);
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("invalid config JSON in " + path + ": " + e.what());
    }
    std::vector<TimeRange> ranges;
    if (doc.contains("maintenance")) {
        for (const auto& entry : doc.at("maintenance")) {
            TimeRange range;
            range.start = parse_iso8601(entry.at("start").get<std::string>());
            range.end = parse_iso8601(entry.at("end").get<std::string>());
            if (range.end <= range.start) {
                throw DataError("maintenance window end precedes start in " + path);
            }
            ranges.push_back(range);
        }
    }
    return ranges;
}

std::vector<Count> load_observed(const std::string& path) {
    const TrafficSeries series = read_counts(path);
    const std::vector<Count> counts = series.observed_counts();
    if (counts.empty()) {
        throw DataError("counts file has no observed intervals: " + path);
    }
    return counts;
}

int run_ingest(const IngestArgs& args) {
    if (args.window_start.empty() != args.window_end.empty()) {
        throw std::invalid_argument("--window-start and --window-end must be given together");
    }
    const StatusFilter filter(args.status_filter);
    std::vector<TimeRange> maintenance;
    if (!args.config_path.empty()) {
        maintenance = load_maintenance(args.config_path);
    }
    ParseStats stats;
    std::vector<EpochSeconds> timestamps;
    for (const std::string& path : args.logs) {
        std::vector<EpochSeconds> part = parse_clf_file(path, stats, filter);
        timestamps.insert(timestamps.end(), part.begin(), part.end());
    }
    std::stable_sort(timestamps.begin(), timestamps.end());
    std::optional<TimeRange> window;
    if (!args.window_start.empty()) {
        window = TimeRange{parse_iso8601(args.window_start), parse_iso8601(args.window_end)};
    }
    TrafficSeries series = bin_counts(timestamps, args.interval, window, maintenance);
    series.source = args.source.empty()
                        ? (args.logs.size() == 1 ? args.logs.front() : "merged logs")
                        : args.source;
    write_counts(args.out, series);
    std::size_t missing = 0;
    for (const auto& cell : series.counts) {
        missing += cell.has_value() ? 0 : 1;
    }
    if (series.counts.empty()) {
        std::cerr << "warning: no parsable arrivals; wrote an empty series\n";
    }
    if (args.as_json) {
        json doc{{"arrivals", series.total()},
                 {"parsed", stats.parsed},
                 {"malformed", stats.malformed},
                 {"filtered", stats.filtered},
                 {"start", series.counts.empty() ? json() : json(format_iso8601(series.start))},
                 {"end", series.counts.empty()
                             ? json()
                             : json(format_iso8601(series.cell_start(series.counts.size())))},
                 {"interval_seconds", series.interval_seconds},
                 {"intervals", series.counts.size()},
                 {"missing", missing},
                 {"log_tz_offset", format_tz_offset(stats.tz_offset_seconds)},
                 {"out", args.out}};
        std::cout << doc.dump(2) << '\n';
        return 0;
    }
    std::cout << "arrivals:  " << series.total() << " counted (" << stats.parsed
              << " parsed, " << stats.malformed << " malformed, " << stats.filtered
              << " filtered)\n";
    if (!series.counts.empty()) {
        std::cout << "range:     " << format_iso8601(series.start) << " .. "
                  << format_iso8601(series.cell_start(series.counts.size()))
                  << " (end exclusive)\n";
    }
    std::cout << "intervals: " << series.counts.size() << " x "
              << series.interval_seconds << " s (" << missing << " missing)\n"
              << "log tz:    " << format_tz_offset(stats.tz_offset_seconds) << '\n'
              << "wrote:     " << args.out << '\n';
    return 0;
}

int run_fit(const FitArgs& args) {
    const std::vector<Count> counts = load_observed(args.counts);
    const FitReport report = mle_k(counts, args.grid, args.alpha1, args.beta1);
    if (!args.out_report.empty()) {
        write_text(args.out_report, json(report).dump(2) + "\n");
    }
    if (!args.out_curve.empty()) {
        write_text(args.out_curve, curve_to_csv(report.curve));
    }
    if (args.as_json) {
        std::cout << json(report).dump(2) << '\n';
        return 0;
    }
    std::cout << "k_hat:          " << report.k_hat << '\n'
              << "max loglik:     " << report.curve.loglik[report.curve.argmax_index]
              << '\n'
              << "aic_proposed:   " << report.aic_proposed << '\n'
              << "aic_stationary: " << report.aic_stationary << '\n'
              << "selected:       " << to_string(report.selected) << '\n';
    return 0;
}

std::string day_records_path(const std::string& base, std::size_t day_index) {
    const std::filesystem::path path(base);
    std::filesystem::path out = path.parent_path() / path.stem();
    out += "_day" + std::to_string(day_index);
    out += path.extension();
    return out.string();
}

int run_forecast(const ForecastArgs& args) {
    if (args.k_given == args.fit_previous_day) {
        throw std::invalid_argument("exactly one of --k and --fit-previous-day is required");
    }
    if (args.levels.size() != 2 || !(args.levels[0] > 0.0) || !(args.levels[0] < 1.0) ||
        !(args.levels[1] > 0.0) || !(args.levels[1] < 1.0) ||
        args.levels[0] >= args.levels[1]) {
        throw std::invalid_argument("--levels needs two values with 0 < first < second < 1");
    }
    const ForecastLevels levels{args.levels[0], args.levels[1]};
    const TrafficSeries series = read_counts(args.counts);

    if (args.k_given) {
        if (!(args.k > 0.0) || args.k > 1.0) {
            throw std::invalid_argument("--k must lie in (0, 1]");
        }
        const std::vector<Count> counts = series.observed_counts();
        if (counts.empty()) {
            throw DataError("counts file has no observed intervals: " + args.counts);
        }
        const EvaluationReport report =
            evaluate(counts, args.k, args.alpha1, args.beta1, levels);
        if (!args.out_records.empty()) {
            write_text(args.out_records, records_to_csv(report));
        }
        if (!args.out_report.empty()) {
            write_text(args.out_report, json(report).dump(2) + "\n");
        }
        if (args.as_json) {
            std::cout << json(report).dump(2) << '\n';
            return 0;
        }
        const std::size_t star = argmax_observed(report.records);
        const IntervalReport row = interval_report(report, star);
        std::cout << "intervals:      " << report.records.size() << '\n'
                  << "k used:         " << report.k_used << '\n'
                  << "mse proposed:   " << report.mse_proposed << '\n'
                  << "mse stationary: " << report.mse_stationary << '\n'
                  << "coverage:       " << report.coverage95 << " at " << levels.lo
                  << ", " << report.coverage99 << " at " << levels.hi << '\n'
                  << "busiest tick:   index " << row.index << " observed " << row.observed
                  << " | proposed " << row.expected_proposed << " <= " << row.upper95_proposed
                  << " <= " << row.upper99_proposed << " | stationary "
                  << row.expected_stationary << " <= " << row.upper95_stationary
                  << " <= " << row.upper99_stationary << '\n';
        return 0;
    }

    const std::vector<TrafficSeries> days =
        split_days(series, parse_tz_offset(args.tz_offset));
    if (days.size() < 2) {
        throw DataError("--fit-previous-day needs at least two days of data");
    }
    const std::vector<EvaluationReport> reports = daily_protocol(
        days, args.alpha1, args.beta1, args.grid, levels, args.carry_over);
    if (!args.out_records.empty()) {
        for (std::size_t d = 0; d < reports.size(); ++d) {
            write_text(day_records_path(args.out_records, d + 2),
                       records_to_csv(reports[d]));
        }
    }
    json all = json::array();
    for (const auto& report : reports) {
        all.push_back(json(report));
    }
    if (!args.out_report.empty()) {
        write_text(args.out_report, all.dump(2) + "\n");
    }
    if (args.as_json) {
        std::cout << all.dump(2) << '\n';
        return 0;
    }
    for (std::size_t d = 0; d < reports.size(); ++d) {
        std::cout << "day " << (d + 2) << ": k=" << reports[d].k_used
                  << " mse_proposed=" << reports[d].mse_proposed
                  << " mse_stationary=" << reports[d].mse_stationary
                  << " coverage=" << reports[d].coverage95 << '/'
                  << reports[d].coverage99 << '\n';
    }
    return 0;
}

int run_sweep(const SweepArgs& args) {
    std::vector<double> ks = args.ks;
    if (ks.empty()) {
        for (int i = 1; i <= 20; ++i) {
            ks.push_back(static_cast<double>(i) * 0.05);
        }
    }
    for (const double k : ks) {
        if (!(k > 0.0) || k > 1.0) {
            throw std::invalid_argument("every k must lie in (0, 1]");
        }
    }
    const std::vector<Count> counts = load_observed(args.counts);
    const auto sweep = k_sweep(counts, ks, args.alpha1, args.beta1);
    std::ostringstream csv;
    csv.precision(17);
    csv << "k,mse\n";
    for (const auto& [k, value] : sweep) {
        csv << k << ',' << value << '\n';
    }
    if (!args.out.empty()) {
        write_text(args.out, csv.str());
    }
    if (args.as_json) {
        json rows = json::array();
        for (const auto& [k, value] : sweep) {
            rows.push_back(json{{"k", k}, {"mse", value}});
        }
        std::cout << json{{"sweep", rows}}.dump(2) << '\n';
        return 0;
    }
    std::cout << csv.str();
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    SimConfig config;
    config.k_true = args.k;
    config.alpha1 = args.alpha1;
    config.beta1 = args.beta1;
    config.ticks = args.ticks;
    config.seed = args.seed;
    config.interval_seconds = args.interval;
    config.start = parse_iso8601(args.start);
    config.source = args.source;
    const SimResult result = simulate_traffic(config);
    write_counts(args.out, result.series);
    if (!args.theta_out.empty()) {
        write_text(args.theta_out, theta_to_csv(result));
    }
    const double mean_count = static_cast<double>(result.series.total()) /
                              static_cast<double>(result.series.counts.size());
    if (args.as_json) {
        json doc{{"ticks", args.ticks},     {"seed", args.seed},
                 {"k_true", args.k},        {"total", result.series.total()},
                 {"mean_count", mean_count}, {"out", args.out}};
        if (!args.theta_out.empty()) {
            doc["theta_out"] = args.theta_out;
        }
        std::cout << doc.dump(2) << '\n';
        return 0;
    }
    std::cout << "simulated " << args.ticks << " intervals (k=" << args.k
              << ", seed=" << args.seed << "): total " << result.series.total()
              << ", mean " << mean_count << "\nwrote: " << args.out << '\n';
    if (!args.theta_out.empty()) {
        std::cout << "wrote: " << args.theta_out << '\n';
    }
    return 0;
}

int run_recover(const RecoverArgs& args) {
    const RecoverySummary summary =
        recovery_experiment(args.k_true, args.ticks, args.seeds, args.alpha1,
                            args.beta1, args.grid, args.base_seed);
    if (!args.out.empty()) {
        write_text(args.out, json(summary).dump(2) + "\n");
    }
    if (args.as_json) {
        std::cout << json(summary).dump(2) << '\n';
        return 0;
    }
    std::cout << "k_true:           " << summary.k_true << '\n'
              << "seeds:            " << summary.n_seeds << " x " << summary.ticks
              << " ticks\n"
              << "k_hat median:     " << summary.k_median << '\n'
              << "k_hat IQR:        " << summary.k_iqr << '\n'
              << "true-regime AIC:  " << summary.frac_true_regime << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discounted Poisson-Gamma forecasting toolkit for request-arrival counts"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    CLI::App* cmd_ingest = app.add_subcommand(
        "ingest", "Bin web-server access logs (NCSA CLF, optionally .gz) into a counts CSV");
    // No ExistingFile check: an unreadable log is a data error (exit 2, like
    // every other unreadable input), not a usage error.
    cmd_ingest->add_option("logs", ingest_args.logs, "access log files")->required();
    cmd_ingest->add_option("--out", ingest_args.out, "output counts CSV")->required();
    cmd_ingest->add_option("--interval", ingest_args.interval, "bin width in seconds")
        ->capture_default_str();
    cmd_ingest->add_option("--window-start", ingest_args.window_start,
                           "restrict to arrivals at/after this ISO-8601 instant");
    cmd_ingest->add_option("--window-end", ingest_args.window_end,
                           "restrict to arrivals before this ISO-8601 instant");
    cmd_ingest->add_option("--config", ingest_args.config_path,
                           "JSON config with maintenance windows");
    cmd_ingest->add_option("--status-filter", ingest_args.status_filter,
                           "keep only lines with this status (e.g. 200 or 2xx)");
    cmd_ingest->add_option("--source", ingest_args.source, "provenance label");
    cmd_ingest->add_flag("--json", ingest_args.as_json, "emit one JSON summary document");

    FitArgs fit_args;
    CLI::App* cmd_fit = app.add_subcommand(
        "fit", "Grid-search the discount constant k by maximum likelihood");
    cmd_fit->add_option("--counts", fit_args.counts, "input counts CSV")->required();
    cmd_fit->add_option("--grid", fit_args.grid, "number of grid points")
        ->capture_default_str();
    cmd_fit->add_option("--alpha1", fit_args.alpha1, "prior shape")->capture_default_str();
    cmd_fit->add_option("--beta1", fit_args.beta1, "prior rate")->capture_default_str();
    cmd_fit->add_option("--out-report", fit_args.out_report, "write the fit report JSON here");
    cmd_fit->add_option("--out-curve", fit_args.out_curve,
                        "write the likelihood curve CSV (k,loglik) here");
    cmd_fit->add_flag("--json", fit_args.as_json, "emit the fit report JSON on stdout");

    ForecastArgs forecast_args;
    CLI::App* cmd_forecast = app.add_subcommand(
        "forecast", "Rolling one-step-ahead point and interval forecasts");
    cmd_forecast->add_option("--counts", forecast_args.counts, "input counts CSV")->required();
    CLI::Option* opt_k =
        cmd_forecast->add_option("--k", forecast_args.k, "discount constant to use");
    cmd_forecast->add_flag("--fit-previous-day", forecast_args.fit_previous_day,
                           "per day, fit k on the previous day's data");
    cmd_forecast->add_option("--grid", forecast_args.grid,
                             "grid size for --fit-previous-day")
        ->capture_default_str();
    cmd_forecast->add_option("--alpha1", forecast_args.alpha1, "prior shape")
        ->capture_default_str();
    cmd_forecast->add_option("--beta1", forecast_args.beta1, "prior rate")
        ->capture_default_str();
    cmd_forecast->add_option("--levels", forecast_args.levels,
                             "two upper predictive levels (default 0.95 0.99)")
        ->expected(2);
    cmd_forecast->add_option("--tz-offset", forecast_args.tz_offset,
                             "timezone offset for day boundaries, e.g. +09:00")
        ->capture_default_str();
    cmd_forecast->add_flag("--carry-over", forecast_args.carry_over,
                           "carry filter state across midnight instead of resetting");
    cmd_forecast->add_option("--out-records", forecast_args.out_records,
                             "write per-interval records CSV here (per day with "
                             "--fit-previous-day)");
    cmd_forecast->add_option("--out-report", forecast_args.out_report,
                             "write the evaluation report JSON here");
    cmd_forecast->add_flag("--json", forecast_args.as_json,
                           "emit the evaluation report JSON on stdout");

    SweepArgs sweep_args;
    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "Rolling-forecast MSE for each candidate k");
    cmd_sweep->add_option("--counts", sweep_args.counts, "input counts CSV")->required();
    cmd_sweep->add_option("--ks", sweep_args.ks,
                          "candidate k values (default 0.05 0.10 .. 1.00)");
    cmd_sweep->add_option("--alpha1", sweep_args.alpha1, "prior shape")->capture_default_str();
    cmd_sweep->add_option("--beta1", sweep_args.beta1, "prior rate")->capture_default_str();
    cmd_sweep->add_option("--out", sweep_args.out, "write the (k,mse) CSV here");
    cmd_sweep->add_flag("--json", sweep_args.as_json, "emit one JSON document");

    SimulateArgs sim_args;
    CLI::App* cmd_simulate = app.add_subcommand(
        "simulate", "Generate synthetic traffic from the generative model");
    cmd_simulate->add_option("--k", sim_args.k, "true discount constant")
        ->capture_default_str();
    cmd_simulate->add_option("--alpha1", sim_args.alpha1, "prior shape")->capture_default_str();
    cmd_simulate->add_option("--beta1", sim_args.beta1, "prior rate")->capture_default_str();
    cmd_simulate->add_option("--ticks", sim_args.ticks, "number of intervals")
        ->capture_default_str();
    cmd_simulate->add_option("--seed", sim_args.seed, "random seed")->capture_default_str();
    cmd_simulate->add_option("--interval", sim_args.interval, "interval seconds")
        ->capture_default_str();
    cmd_simulate->add_option("--start", sim_args.start, "series start (ISO-8601)")
        ->capture_default_str();
    cmd_simulate->add_option("--out", sim_args.out, "output counts CSV")->required();
    cmd_simulate->add_option("--theta-out", sim_args.theta_out,
                             "also write the latent rate path CSV here");
    cmd_simulate->add_option("--source", sim_args.source, "provenance label")
        ->capture_default_str();
    cmd_simulate->add_flag("--json", sim_args.as_json, "emit one JSON summary document");

    RecoverArgs recover_args;
    CLI::App* cmd_recover = app.add_subcommand(
        "recover", "Simulate-and-refit experiment for the discount constant");
    cmd_recover->add_option("--k-true", recover_args.k_true, "generating k")
        ->capture_default_str();
    cmd_recover->add_option("--ticks", recover_args.ticks, "intervals per run")
        ->capture_default_str();
    cmd_recover->add_option("--seeds", recover_args.seeds, "number of seeds")
        ->capture_default_str();
    cmd_recover->add_option("--alpha1", recover_args.alpha1, "prior shape")
        ->capture_default_str();
    cmd_recover->add_option("--beta1", recover_args.beta1, "prior rate")->capture_default_str();
    cmd_recover->add_option("--grid", recover_args.grid, "grid size")->capture_default_str();
    cmd_recover->add_option("--base-seed", recover_args.base_seed,
                            "seeds used are base+1..base+n")
        ->capture_default_str();
    cmd_recover->add_option("--out", recover_args.out, "write the summary JSON here");
    cmd_recover->add_flag("--json", recover_args.as_json, "emit the summary JSON on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    forecast_args.k_given = opt_k->count() > 0;

    try {
        if (cmd_ingest->parsed()) {
            return run_ingest(ingest_args);
        }
        if (cmd_fit->parsed()) {
            return run_fit(fit_args);
        }
        if (cmd_forecast->parsed()) {
            return run_forecast(forecast_args);
        }
        if (cmd_sweep->parsed()) {
            return run_sweep(sweep_args);
        }
        if (cmd_simulate->parsed()) {
            return run_simulate(sim_args);
        }
        if (cmd_recover->parsed()) {
            return run_recover(recover_args);
        }
        std::cerr << "error: usage: no subcommand given\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
