#include "dast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace dast {

const std::vector<int>& selected_sensor_indices() {
    static const std::vector<int> kept = {2, 3, 4, 7, 8, 9, 11, 12, 13, 14, 15, 17, 20, 21};
    return kept;
}

const std::vector<std::string>& selected_sensor_names() {
    static const std::vector<std::string> names = {
        "T24", "T30", "T50", "P30", "Nf", "Nc", "Ps30",
        "phi", "NRf", "NRc", "BPR", "htBleed", "W31", "W32"};
    return names;
}

// ---- parsing -------------------------------------------------------------

std::vector<EngineSeries> parse_cmapss_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<EngineSeries> series;
    std::string line;
    std::size_t line_no = 0;
    struct Row {
        int unit, cycle;
        std::array<double, 3> settings;
        std::vector<double> sensors;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<double> fields;
        double v;
        while (ls >> v) fields.push_back(v);
        if (fields.empty()) continue;
        if (fields.size() != 2 + 3 + kRawSensorCount)
            throw UsageError(path + ": line " + std::to_string(line_no) +
                             ": expected 26 columns, got " + std::to_string(fields.size()));
        Row r;
        r.unit = static_cast<int>(fields[0]);
        r.cycle = static_cast<int>(fields[1]);
        for (int i = 0; i < 3; ++i) r.settings[static_cast<std::size_t>(i)] = fields[2 + i];
        r.sensors.assign(fields.begin() + 5, fields.end());
        rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.unit != b.unit ? a.unit < b.unit : a.cycle < b.cycle;
    });
    for (const Row& r : rows) {
        if (series.empty() || series.back().unit_id != r.unit) {
            series.push_back({});
            series.back().unit_id = r.unit;
        }
        EngineSeries& s = series.back();
        s.cycles.push_back(r.cycle);
        s.settings.push_back(r.settings);
        s.sensors.push_back(r.sensors);
    }
    for (const EngineSeries& s : series)
        for (std::size_t i = 0; i < s.cycles.size(); ++i)
            if (s.cycles[i] != static_cast<int>(i) + 1)
                throw UsageError(path + ": engine " + std::to_string(s.unit_id) +
                                 " has a gap in its cycle sequence at cycle " +
                                 std::to_string(s.cycles[i]));
    return series;
}

std::vector<double> parse_rul_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> ruls;
    double v;
    while (in >> v) ruls.push_back(v);
    if (!in.eof()) {
        std::string rest;
        in.clear();
        in >> rest;
        throw UsageError(path + ": expected one number per line, found '" + rest + "'");
    }
    return ruls;
}

ParsedDataset parse_cmapss(const std::string& train_file, const std::string& test_file,
                           const std::string& rul_file) {
    ParsedDataset ds;
    ds.train = parse_cmapss_file(train_file);
    ds.test = parse_cmapss_file(test_file);
    ds.test_rul = parse_rul_file(rul_file);
    if (ds.test_rul.size() != ds.test.size())
        throw UsageError(rul_file + ": " + std::to_string(ds.test_rul.size()) +
                         " RUL labels for " + std::to_string(ds.test.size()) + " test engines");
    return ds;
}

// ---- preprocessing -------------------------------------------------------

void select_sensors(std::vector<EngineSeries>& series) {
    for (EngineSeries& s : series)
        for (std::vector<double>& row : s.sensors) {
            if (row.size() != kRawSensorCount)
                throw UsageError("select_sensors: expected 21 sensor columns, got " +
                                 std::to_string(row.size()));
            std::vector<double> kept;
            kept.reserve(kSelectedSensorCount);
            for (int idx : selected_sensor_indices())
                kept.push_back(row[static_cast<std::size_t>(idx - 1)]);
            row = std::move(kept);
        }
}

NormalizationStats fit_normalization(const std::vector<EngineSeries>& train) {
    if (train.empty()) throw UsageError("fit_normalization: empty training split");
    const std::size_t k = train.front().sensors.front().size();
    NormalizationStats st;
    st.min.assign(k, std::numeric_limits<double>::infinity());
    st.max.assign(k, -std::numeric_limits<double>::infinity());
    for (const EngineSeries& s : train)
        for (const std::vector<double>& row : s.sensors)
            for (std::size_t j = 0; j < k; ++j) {
                st.min[j] = std::min(st.min[j], row[j]);
                st.max[j] = std::max(st.max[j], row[j]);
            }
    return st;
}

void normalize(std::vector<EngineSeries>& series, const NormalizationStats& stats) {
    for (EngineSeries& s : series)
        for (std::vector<double>& row : s.sensors)
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double range = stats.max[j] - stats.min[j];
                row[j] = range == 0.0 ? 0.0 : (row[j] - stats.min[j]) / range;
            }
}

std::vector<double> label_rul(const EngineSeries& series, double rul_max) {
    const std::size_t n = series.length();
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        labels[i] = std::min(static_cast<double>(n - 1 - i), rul_max);
    return labels;
}

std::vector<double> statistical_features(const std::vector<double>& window, std::size_t t_w,
                                         std::size_t k) {
    if (t_w < 2) throw UsageError("statistical_features: need at least 2 time steps");
    if (window.size() != t_w * k)
        throw UsageError("statistical_features: window size mismatch");
    std::vector<double> rows(2 * k, 0.0);
    const double tbar = (static_cast<double>(t_w) - 1.0) / 2.0;
    double stt = 0.0;
    for (std::size_t t = 0; t < t_w; ++t) {
        const double d = static_cast<double>(t) - tbar;
        stt += d * d;
    }
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < t_w; ++t) mean += window[t * k + j];
        mean /= static_cast<double>(t_w);
        double sxy = 0.0;
        for (std::size_t t = 0; t < t_w; ++t)
            sxy += (static_cast<double>(t) - tbar) * (window[t * k + j] - mean);
        rows[j] = mean;
        rows[k + j] = sxy / stt;
    }
    return rows;
}

namespace {

WindowSample make_window(const EngineSeries& series, long end_index, std::size_t t_w,
                         std::size_t stat_rows, double label) {
    const std::size_t k = series.sensors.front().size();
    WindowSample w;
    w.rows = t_w + stat_rows;
    w.cols = k;
    w.values.reserve(w.rows * k);
    for (long t = end_index - static_cast<long>(t_w) + 1; t <= end_index; ++t) {
        const std::size_t src = t < 0 ? 0 : static_cast<std::size_t>(t); // left padding
        const std::vector<double>& row = series.sensors[src];
        w.values.insert(w.values.end(), row.begin(), row.end());
    }
    if (stat_rows > 0) {
        std::vector<double> stats = statistical_features(w.values, t_w, k);
        if (stat_rows != 2)
            throw ConfigError("stat_rows must be 0 or 2, got " + std::to_string(stat_rows));
        w.values.insert(w.values.end(), stats.begin(), stats.end());
    }
    w.label = label;
    w.unit_id = series.unit_id;
    w.end_cycle = series.cycles[static_cast<std::size_t>(end_index)];
    return w;
}

} // namespace

std::vector<WindowSample> sliding_windows(const EngineSeries& series,
                                          const std::vector<double>& labels, std::size_t t_w,
                                          std::size_t stat_rows) {
    if (series.length() == 0) throw UsageError("sliding_windows: empty series");
    if (labels.size() != series.length())
        throw UsageError("sliding_windows: label count mismatch");
    std::vector<WindowSample> out;
    const long n = static_cast<long>(series.length());
    const long first_end = std::min<long>(static_cast<long>(t_w) - 1, n - 1);
    for (long end = first_end; end < n; ++end)
        out.push_back(make_window(series, end, t_w, stat_rows,
                                  labels[static_cast<std::size_t>(end)]));
    return out;
}

BuiltDataset build_dataset(ParsedDataset parsed, const DatasetBuildConfig& config) {
    if (parsed.test_rul.size() != parsed.test.size())
        throw UsageError("build_dataset: " + std::to_string(parsed.test_rul.size()) +
                         " RUL labels for " + std::to_string(parsed.test.size()) +
                         " test engines");
    if (!parsed.train.empty() && parsed.train.front().sensors.front().size() == kRawSensorCount) {
        select_sensors(parsed.train);
        select_sensors(parsed.test);
    }
    BuiltDataset ds;
    ds.config = config;
    ds.stats = fit_normalization(parsed.train);
    normalize(parsed.train, ds.stats);
    normalize(parsed.test, ds.stats);

    for (const EngineSeries& s : parsed.train) {
        std::vector<double> labels = label_rul(s, config.rul_max);
        std::vector<WindowSample> ws =
            sliding_windows(s, labels, config.window, config.stat_rows);
        ds.split.train.insert(ds.split.train.end(), ws.begin(), ws.end());
    }
    for (std::size_t i = 0; i < parsed.test.size(); ++i) {
        const EngineSeries& s = parsed.test[i];
        const double label = std::min(parsed.test_rul[i], config.rul_max);
        ds.split.test.push_back(make_window(s, static_cast<long>(s.length()) - 1,
                                            config.window, config.stat_rows, label));
    }

    std::uint64_t h = fnv1a(&config.window, sizeof(config.window));
    h = fnv1a(&config.stat_rows, sizeof(config.stat_rows), h);
    h = fnv1a(&config.rul_max, sizeof(config.rul_max), h);
    auto hash_windows = [&h](const std::vector<WindowSample>& ws) {
        for (const WindowSample& w : ws) {
            h = fnv1a(w.values.data(), w.values.size() * sizeof(double), h);
            h = fnv1a(&w.label, sizeof(w.label), h);
        }
    };
    hash_windows(ds.split.train);
    hash_windows(ds.split.test);
    ds.fingerprint = h;
    return ds;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

// ---- cache ---------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'D', 'A', 'S', 'T', 'C', 'A', 'C', 'H'};
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    write_pod(os, static_cast<std::uint64_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is) {
    std::uint64_t n = 0;
    read_pod(is, n);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

void write_windows(std::ostream& os, const std::vector<WindowSample>& ws) {
    write_pod(os, static_cast<std::uint64_t>(ws.size()));
    for (const WindowSample& w : ws) {
        write_pod(os, static_cast<std::uint64_t>(w.rows));
        write_pod(os, static_cast<std::uint64_t>(w.cols));
        write_pod(os, w.label);
        write_pod(os, static_cast<std::int32_t>(w.unit_id));
        write_pod(os, static_cast<std::int32_t>(w.end_cycle));
        os.write(reinterpret_cast<const char*>(w.values.data()),
                 static_cast<std::streamsize>(w.values.size() * sizeof(double)));
    }
}

std::vector<WindowSample> read_windows(std::istream& is) {
    std::uint64_t n = 0;
    read_pod(is, n);
    std::vector<WindowSample> ws(n);
    for (WindowSample& w : ws) {
        std::uint64_t rows = 0, cols = 0;
        std::int32_t unit = 0, end_cycle = 0;
        read_pod(is, rows);
        read_pod(is, cols);
        read_pod(is, w.label);
        read_pod(is, unit);
        read_pod(is, end_cycle);
        w.rows = rows;
        w.cols = cols;
        w.unit_id = unit;
        w.end_cycle = end_cycle;
        w.values.resize(rows * cols);
        is.read(reinterpret_cast<char*>(w.values.data()),
                static_cast<std::streamsize>(w.values.size() * sizeof(double)));
    }
    return ws;
}

} // namespace

void save_dataset_cache(const BuiltDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path + "'");
    os.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod(os, kCacheVersion);
    write_pod(os, static_cast<std::uint64_t>(ds.config.window));
    write_pod(os, static_cast<std::uint64_t>(ds.config.stat_rows));
    write_pod(os, ds.config.rul_max);
    write_pod(os, ds.fingerprint);
    write_doubles(os, ds.stats.min);
    write_doubles(os, ds.stats.max);
    write_windows(os, ds.split.train);
    write_windows(os, ds.split.test);
    if (!os) throw IoError("write failed for '" + path + "'");
}

BuiltDataset load_dataset_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw IoError("'" + path + "' is not a dataset cache");
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kCacheVersion)
        throw IoError("'" + path + "' has unsupported cache version " + std::to_string(version));
    BuiltDataset ds;
    std::uint64_t window = 0, stat_rows = 0;
    read_pod(is, window);
    read_pod(is, stat_rows);
    read_pod(is, ds.config.rul_max);
    read_pod(is, ds.fingerprint);
    ds.config.window = window;
    ds.config.stat_rows = stat_rows;
    ds.stats.min = read_doubles(is);
    ds.stats.max = read_doubles(is);
    ds.split.train = read_windows(is);
    ds.split.test = read_windows(is);
    if (!is) throw IoError("truncated cache '" + path + "'");
    return ds;
}

} // namespace dast
