#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trafficast/model.hpp"

namespace trafficast {

/// Raised for unreadable inputs and schema violations in data files, as
/// opposed to invalid argument values. The CLI maps it to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

/// Half-open time range [start, end) in epoch seconds.
struct TimeRange {
    EpochSeconds start = 0;
    EpochSeconds end = 0;
};

// ---------------------------------------------------------------------------
// Calendar plumbing (UTC only; offsets are applied as explicit shifts).

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(EpochSeconds t);

/// Accepts "YYYY-MM-DDTHH:MM:SS" with a trailing "Z", "+HH:MM", "-HH:MM",
/// "+HHMM" or no designator (treated as UTC). Throws DataError on
/// malformed input.
EpochSeconds parse_iso8601(std::string_view text);

// ---------------------------------------------------------------------------
// Access-log parsing (NCSA Common/Combined Log Format).

/// The fields of one successfully parsed log line.
struct ClfRecord {
    EpochSeconds timestamp = 0;          ///< request time converted to UTC
    std::int64_t tz_offset_seconds = 0;  ///< the offset carried by the line
    std::string request;                 ///< e.g. "GET / HTTP/1.0"
    int status = -1;                     ///< -1 when the field is absent
};

/// Parses one log line; std::nullopt means the line is malformed and should
/// be skipped (the caller counts such skips).
std::optional<ClfRecord> parse_clf_line(std::string_view line);

/// Streaming-parse diagnostics.
struct ParseStats {
    std::uint64_t parsed = 0;
    std::uint64_t malformed = 0;
    std::uint64_t filtered = 0;          ///< well-formed but status-rejected
    std::int64_t tz_offset_seconds = 0;  ///< offset of the last parsed line
};

/// Status filter: empty accepts everything; "200" an exact code; "2xx" a
/// class. Throws std::invalid_argument for anything else.
struct StatusFilter {
    explicit StatusFilter(std::string_view pattern = "");
    bool accepts(int status) const;

private:
    int exact_ = -1;
    int klass_ = -1;
};

/// Reads every line of `in`, returning the UTC timestamps of accepted lines
/// in file order. Never aborts on a bad line; throws DataError only if the
/// stream itself fails mid-read.
std::vector<EpochSeconds> parse_clf_stream(std::istream& in, ParseStats& stats,
                                           const StatusFilter& filter = StatusFilter());

/// As above for a log file path; transparently inflates gzip members when
/// the path ends in ".gz". Throws DataError for unreadable files.
std::vector<EpochSeconds> parse_clf_file(const std::string& path, ParseStats& stats,
                                         const StatusFilter& filter = StatusFilter());

// ---------------------------------------------------------------------------
// The binned series.

/**
 * Fixed-interval arrival counts. Cell i covers the half-open interval
 * [start + i*interval_seconds, start + (i+1)*interval_seconds). Cells are
 * dense: a gap is an explicit zero or a flagged-missing entry (nullopt, used
 * for declared maintenance windows), never a silently skipped index.
 */
struct TrafficSeries {
    EpochSeconds start = 0;
    std::int64_t interval_seconds = 300;
    std::vector<std::optional<Count>> counts;
    std::string source;

    /// The present (non-missing) counts, in order; what the likelihood and
    /// forecasting layers consume.
    std::vector<Count> observed_counts() const;

    /// Sum of present counts.
    Count total() const;

    EpochSeconds cell_start(std::size_t i) const {
        return start + static_cast<EpochSeconds>(i) * interval_seconds;
    }

    bool operator==(const TrafficSeries&) const = default;
};

/**
 * Bins timestamps (any order) into fixed intervals. Without an explicit
 * window the range is [floor(min/interval)*interval, max], aligned to wall
 * clock multiples of the interval; with a window, exactly the given range.
 * Bins intersecting a maintenance range are flagged missing and their
 * arrivals are excluded. Empty input yields an empty series.
 */
TrafficSeries bin_counts(std::span<const EpochSeconds> timestamps,
                         std::int64_t interval_seconds,
                         std::optional<TimeRange> window = std::nullopt,
                         std::span<const TimeRange> maintenance = {});

/**
 * Counts CSV: optional "# key: value" comment lines (interval, source),
 * then the header "timestamp,count", then one row per cell with an ISO-8601
 * UTC timestamp; a missing cell has an empty count field. write/read
 * round-trips exactly; read errors carry the offending line number.
 */
void write_counts(std::ostream& out, const TrafficSeries& series);
void write_counts(const std::string& path, const TrafficSeries& series);
TrafficSeries read_counts(std::istream& in, std::string_view name = "<stream>");
TrafficSeries read_counts(const std::string& path);

/// Splits a series at local midnights (local = UTC + tz_offset_seconds).
/// Partial first/last days are kept; callers may drop them.
std::vector<TrafficSeries> split_days(const TrafficSeries& series,
                                      std::int64_t tz_offset_seconds = 0);

}  // namespace trafficast
