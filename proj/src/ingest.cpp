#include "trafficast/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace trafficast {

namespace {

// --- civil calendar <-> days since 1970-01-01 (Howard Hinnant's algorithms) ---

std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = yoe + era * 400;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

bool is_leap(std::int64_t y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(std::int64_t y, int m) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[static_cast<std::size_t>(m - 1)];
}

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len,
                     int& out) {
    if (pos + len > text.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const char c = text[pos + i];
        if (c < '0' || c > '9') {
            return false;
        }
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

constexpr std::array<std::string_view, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

}  // namespace

std::string format_iso8601(EpochSeconds t) {
    const std::int64_t days = floor_div(t, 86400);
    const int secs = static_cast<int>(t - days * 86400);
    std::int64_t y;
    int m, d;
    civil_from_days(days, y, m, d);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04lld-%02d-%02dT%02d:%02d:%02dZ",
                  static_cast<long long>(y), m, d, secs / 3600, (secs / 60) % 60,
                  secs % 60);
    return buf;
}

EpochSeconds parse_iso8601(std::string_view text) {
    const auto fail = [&]() -> EpochSeconds {
        throw DataError("malformed ISO-8601 timestamp: '" + std::string(text) + "'");
    };
    int y4 = 0, y_lo = 0, mo = 0, dy = 0, hh = 0, mi = 0, ss = 0;
    // YYYY-MM-DD[T ]HH:MM:SS
    if (text.size() < 19 || !parse_fixed_int(text, 0, 2, y4) ||
        !parse_fixed_int(text, 2, 2, y_lo) || text[4] != '-' ||
        !parse_fixed_int(text, 5, 2, mo) || text[7] != '-' ||
        !parse_fixed_int(text, 8, 2, dy) || (text[10] != 'T' && text[10] != ' ') ||
        !parse_fixed_int(text, 11, 2, hh) || text[13] != ':' ||
        !parse_fixed_int(text, 14, 2, mi) || text[16] != ':' ||
        !parse_fixed_int(text, 17, 2, ss)) {
        return fail();
    }
    const std::int64_t year = y4 * 100 + y_lo;
    if (mo < 1 || mo > 12 || dy < 1 || dy > days_in_month(year, mo) || hh > 23 ||
        mi > 59 || ss > 59) {
        return fail();
    }
    std::int64_t offset = 0;
    std::string_view rest = text.substr(19);
    if (rest == "Z") {
        // UTC designator
    } else if (!rest.empty()) {
        const char sign_char = rest[0];
        if (sign_char != '+' && sign_char != '-') {
            return fail();
        }
        int oh = 0, om = 0;
        if (rest.size() == 6 && rest[3] == ':') {  // +HH:MM
            if (!parse_fixed_int(rest, 1, 2, oh) || !parse_fixed_int(rest, 4, 2, om)) {
                return fail();
            }
        } else if (rest.size() == 5) {  // +HHMM
            if (!parse_fixed_int(rest, 1, 2, oh) || !parse_fixed_int(rest, 3, 2, om)) {
                return fail();
            }
        } else if (rest.size() == 3) {  // +HH
            if (!parse_fixed_int(rest, 1, 2, oh)) {
                return fail();
            }
        } else {
            return fail();
        }
        if (oh > 23 || om > 59) {
            return fail();
        }
        offset = (sign_char == '-' ? -1 : 1) * (oh * 3600LL + om * 60LL);
    }
    const std::int64_t local =
        days_from_civil(year, mo, dy) * 86400 + hh * 3600LL + mi * 60LL + ss;
    return local - offset;
}

std::optional<ClfRecord> parse_clf_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    const std::size_t lb = line.find('[');
    if (lb == std::string_view::npos) {
        return std::nullopt;
    }
    const std::size_t rb = line.find(']', lb + 1);
    if (rb == std::string_view::npos) {
        return std::nullopt;
    }
    const std::string_view ts = line.substr(lb + 1, rb - lb - 1);
    // dd/Mon/yyyy:HH:MM:SS +ZZZZ (the offset is optional)
    int dy = 0, y4 = 0, y_lo = 0, hh = 0, mi = 0, ss = 0;
    if (ts.size() < 20 || !parse_fixed_int(ts, 0, 2, dy) || ts[2] != '/' ||
        ts[6] != '/' || !parse_fixed_int(ts, 7, 2, y4) ||
        !parse_fixed_int(ts, 9, 2, y_lo) || ts[11] != ':' ||
        !parse_fixed_int(ts, 12, 2, hh) || ts[14] != ':' ||
        !parse_fixed_int(ts, 15, 2, mi) || ts[17] != ':' ||
        !parse_fixed_int(ts, 18, 2, ss)) {
        return std::nullopt;
    }
    const std::string_view mon = ts.substr(3, 3);
    int mo = 0;
    for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
        if (mon == kMonthNames[i]) {
            mo = static_cast<int>(i) + 1;
            break;
        }
    }
    const std::int64_t year = y4 * 100 + y_lo;
    if (mo == 0 || dy < 1 || dy > days_in_month(year, mo) || hh > 23 || mi > 59 ||
        ss > 59) {
        return std::nullopt;
    }
    std::int64_t offset = 0;
    if (ts.size() >= 26 && ts[20] == ' ' && (ts[21] == '+' || ts[21] == '-')) {
        int oh = 0, om = 0;
        if (!parse_fixed_int(ts, 22, 2, oh) || !parse_fixed_int(ts, 24, 2, om) ||
            oh > 23 || om > 59) {
            return std::nullopt;
        }
        offset = (ts[21] == '-' ? -1 : 1) * (oh * 3600LL + om * 60LL);
    } else if (ts.size() != 20) {
        return std::nullopt;
    }
    ClfRecord record;
    record.tz_offset_seconds = offset;
    record.timestamp = days_from_civil(year, mo, dy) * 86400 + hh * 3600LL +
                       mi * 60LL + ss - offset;
    // Optional request string and status code after the bracket.
    std::size_t pos = rb + 1;
    while (pos < line.size() && line[pos] == ' ') {
        ++pos;
    }
    if (pos < line.size() && line[pos] == '"') {
        std::size_t close = pos + 1;
        while (close < line.size() &&
               (line[close] != '"' || line[close - 1] == '\\')) {
            ++close;
        }
        if (close < line.size()) {
            record.request = std::string(line.substr(pos + 1, close - pos - 1));
            pos = close + 1;
        } else {
            pos = line.size();
        }
    }
    while (pos < line.size() && line[pos] == ' ') {
        ++pos;
    }
    std::size_t status_end = pos;
    while (status_end < line.size() && std::isdigit(static_cast<unsigned char>(line[status_end]))) {
        ++status_end;
    }
    if (status_end > pos && (status_end == line.size() || line[status_end] == ' ')) {
        int status = 0;
        std::from_chars(line.data() + pos, line.data() + status_end, status);
        record.status = status;
    }
    return record;
}

StatusFilter::StatusFilter(std::string_view pattern) {
    if (pattern.empty()) {
        return;
    }
    if (pattern.size() == 3 && pattern[0] >= '1' && pattern[0] <= '5' &&
        (pattern.substr(1) == "xx" || pattern.substr(1) == "XX")) {
        klass_ = pattern[0] - '0';
        return;
    }
    int code = 0;
    const auto [ptr, ec] =
        std::from_chars(pattern.data(), pattern.data() + pattern.size(), code);
    if (ec != std::errc() || ptr != pattern.data() + pattern.size() || code < 100 ||
        code > 599) {
        throw std::invalid_argument("status filter must be a code like 200 or a class like 2xx, got '" +
                                    std::string(pattern) + "'");
    }
    exact_ = code;
}

bool StatusFilter::accepts(int status) const {
    if (exact_ < 0 && klass_ < 0) {
        return true;
    }
    if (status < 0) {
        return false;
    }
    if (exact_ >= 0) {
        return status == exact_;
    }
    return status / 100 == klass_;
}

namespace {

void absorb_line(std::string_view line, ParseStats& stats, const StatusFilter& filter,
                 std::vector<EpochSeconds>& out) {
    const std::optional<ClfRecord> record = parse_clf_line(line);
    if (!record) {
        ++stats.malformed;
        return;
    }
    stats.tz_offset_seconds = record->tz_offset_seconds;
    if (!filter.accepts(record->status)) {
        ++stats.filtered;
        return;
    }
    ++stats.parsed;
    out.push_back(record->timestamp);
}

}  // namespace

std::vector<EpochSeconds> parse_clf_stream(std::istream& in, ParseStats& stats,
                                           const StatusFilter& filter) {
    std::vector<EpochSeconds> out;
    std::string line;
    while (std::getline(in, line)) {
        absorb_line(line, stats, filter, out);
    }
    if (in.bad()) {
        throw DataError("log stream failed mid-read");
    }
    return out;
}

std::vector<EpochSeconds> parse_clf_file(const std::string& path, ParseStats& stats,
                                         const StatusFilter& filter) {
    // gzopen reads plain files transparently, so one code path covers both
    // raw and .gz logs.
    gzFile file = gzopen(path.c_str(), "rb");
    if (file == nullptr) {
        throw DataError("cannot open log file: " + path);
    }
    std::vector<EpochSeconds> out;
    std::string pending;
    char buf[1 << 16];
    for (;;) {
        const char* chunk = gzgets(file, buf, sizeof buf);
        if (chunk == nullptr) {
            const bool eof = gzeof(file) != 0;
            int errnum = Z_OK;
            const char* message = gzerror(file, &errnum);
            const std::string detail = message != nullptr ? message : "";
            gzclose(file);
            if (!eof && errnum != Z_OK) {
                throw DataError("failed reading log file " + path + ": " + detail);
            }
            break;
        }
        pending += chunk;
        if (!pending.empty() && pending.back() == '\n') {
            absorb_line(pending, stats, filter, out);
            pending.clear();
        }
    }
    if (!pending.empty()) {
        absorb_line(pending, stats, filter, out);
    }
    return out;
}

std::vector<Count> TrafficSeries::observed_counts() const {
    std::vector<Count> out;
    out.reserve(counts.size());
    for (const auto& cell : counts) {
        if (cell.has_value()) {
            out.push_back(*cell);
        }
    }
    return out;
}

Count TrafficSeries::total() const {
    Count sum = 0;
    for (const auto& cell : counts) {
        if (cell.has_value()) {
            sum += *cell;
        }
    }
    return sum;
}

TrafficSeries bin_counts(std::span<const EpochSeconds> timestamps,
                         std::int64_t interval_seconds,
                         std::optional<TimeRange> window,
                         std::span<const TimeRange> maintenance) {
    if (interval_seconds <= 0) {
        throw std::invalid_argument("interval_seconds must be positive");
    }
    TrafficSeries series;
    series.interval_seconds = interval_seconds;
    EpochSeconds start;
    std::size_t n_bins;
    if (window.has_value()) {
        if (window->end <= window->start) {
            throw std::invalid_argument("window end must be after window start");
        }
        start = window->start;
        n_bins = static_cast<std::size_t>(
            floor_div(window->end - window->start + interval_seconds - 1, interval_seconds));
    } else {
        if (timestamps.empty()) {
            return series;
        }
        const auto [lo_it, hi_it] = std::minmax_element(timestamps.begin(), timestamps.end());
        start = floor_div(*lo_it, interval_seconds) * interval_seconds;
        n_bins = static_cast<std::size_t>(floor_div(*hi_it - start, interval_seconds)) + 1;
    }
    series.start = start;
    series.counts.assign(n_bins, std::optional<Count>(0));
    const EpochSeconds end = start + static_cast<EpochSeconds>(n_bins) * interval_seconds;
    for (const EpochSeconds t : timestamps) {
        if (t < start || t >= end) {
            continue;
        }
        const auto idx = static_cast<std::size_t>((t - start) / interval_seconds);
        ++*series.counts[idx];
    }
    // Bins overlapping a declared maintenance range are flagged missing; the
    // arrivals they held are dropped rather than counted as zeros.
    for (std::size_t i = 0; i < n_bins; ++i) {
        const EpochSeconds a = series.cell_start(i);
        const EpochSeconds b = a + interval_seconds;
        for (const TimeRange& range : maintenance) {
            if (a < range.end && range.start < b) {
                series.counts[i] = std::nullopt;
                break;
            }
        }
    }
    return series;
}

void write_counts(std::ostream& out, const TrafficSeries& series) {
    out << "# interval: " << series.interval_seconds << '\n';
    if (!series.source.empty()) {
        out << "# source: " << series.source << '\n';
    }
    out << "timestamp,count\n";
    for (std::size_t i = 0; i < series.counts.size(); ++i) {
        out << format_iso8601(series.cell_start(i)) << ',';
        if (series.counts[i].has_value()) {
            out << *series.counts[i];
        }
        out << '\n';
    }
}

void write_counts(const std::string& path, const TrafficSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open for writing: " + path);
    }
    write_counts(out, series);
    if (!out) {
        throw DataError("failed writing counts file: " + path);
    }
}

TrafficSeries read_counts(std::istream& in, std::string_view name) {
    TrafficSeries series;
    std::optional<std::int64_t> declared_interval;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t rows = 0;
    std::optional<EpochSeconds> previous;
    const auto fail = [&](const std::string& why) {
        throw DataError(std::string(name) + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            if (header_seen) {
                fail("comment lines are only allowed before the header");
            }
            const std::string_view body = std::string_view(line).substr(1);
            const std::size_t colon = body.find(':');
            if (colon != std::string_view::npos) {
                std::string_view key = body.substr(0, colon);
                std::string_view value = body.substr(colon + 1);
                while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
                while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
                while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
                if (key == "interval") {
                    std::int64_t iv = 0;
                    const auto [ptr, ec] =
                        std::from_chars(value.data(), value.data() + value.size(), iv);
                    if (ec != std::errc() || ptr != value.data() + value.size() || iv <= 0) {
                        fail("invalid interval comment");
                    }
                    declared_interval = iv;
                } else if (key == "source") {
                    series.source = std::string(value);
                }
            }
            continue;
        }
        if (!header_seen) {
            if (line != "timestamp,count") {
                fail("expected header 'timestamp,count', got '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            fail("expected 'timestamp,count' row");
        }
        EpochSeconds t = 0;
        try {
            t = parse_iso8601(std::string_view(line).substr(0, comma));
        } catch (const DataError& e) {
            fail(e.what());
        }
        const std::string_view count_text = std::string_view(line).substr(comma + 1);
        std::optional<Count> cell;
        if (!count_text.empty()) {
            Count value = 0;
            const auto [ptr, ec] = std::from_chars(
                count_text.data(), count_text.data() + count_text.size(), value);
            if (ec != std::errc() || ptr != count_text.data() + count_text.size() ||
                value < 0) {
                fail("count must be a non-negative integer or empty, got '" +
                     std::string(count_text) + "'");
            }
            cell = value;
        }
        if (rows == 0) {
            series.start = t;
        } else {
            const EpochSeconds delta = t - *previous;
            if (declared_interval.has_value()) {
                if (delta != *declared_interval) {
                    fail("timestamp out of order or misspaced (expected step " +
                         std::to_string(*declared_interval) + " s, got " +
                         std::to_string(delta) + " s)");
                }
            } else if (rows == 1) {
                if (delta <= 0) {
                    fail("timestamps must be strictly increasing");
                }
                declared_interval = delta;
            } else if (delta != *declared_interval) {
                fail("timestamp out of order or misspaced (expected step " +
                     std::to_string(*declared_interval) + " s, got " +
                     std::to_string(delta) + " s)");
            }
        }
        previous = t;
        series.counts.push_back(cell);
        ++rows;
    }
    if (in.bad()) {
        throw DataError(std::string(name) + ": stream failed mid-read");
    }
    series.interval_seconds = declared_interval.value_or(300);
    return series;
}

TrafficSeries read_counts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open counts file: " + path);
    }
    return read_counts(in, path);
}

std::vector<TrafficSeries> split_days(const TrafficSeries& series,
                                      std::int64_t tz_offset_seconds) {
    std::vector<TrafficSeries> days;
    std::int64_t current_day = 0;
    for (std::size_t i = 0; i < series.counts.size(); ++i) {
        const EpochSeconds local = series.cell_start(i) + tz_offset_seconds;
        const std::int64_t day = floor_div(local, 86400);
        if (days.empty() || day != current_day) {
            TrafficSeries fresh;
            fresh.start = series.cell_start(i);
            fresh.interval_seconds = series.interval_seconds;
            fresh.source = series.source;
            days.push_back(std::move(fresh));
            current_day = day;
        }
        days.back().counts.push_back(series.counts[i]);
    }
    return days;
}

}  // namespace trafficast
