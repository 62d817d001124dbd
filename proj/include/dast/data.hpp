#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dast/errors.hpp"

namespace dast {

constexpr int kRawSensorCount = 21;
constexpr int kSelectedSensorCount = 14;
constexpr double kDefaultRulMax = 125.0;

/// 1-based indices of the sensors kept after pruning the constant ones.
const std::vector<int>& selected_sensor_indices();
const std::vector<std::string>& selected_sensor_names();

struct EngineSeries {
    int unit_id = 0;
    std::vector<int> cycles;                      // strictly increasing from 1
    std::vector<std::array<double, 3>> settings;  // per cycle
    std::vector<std::vector<double>> sensors;     // per cycle, 21 then 14 columns

    std::size_t length() const { return cycles.size(); }
};

struct NormalizationStats {
    std::vector<double> min, max;
};

struct WindowSample {
    std::size_t rows = 0, cols = 0;   // (T_w + stat_rows) x k
    std::vector<double> values;       // row-major, time-oriented
    double label = 0.0;
    int unit_id = 0;
    int end_cycle = 0;
};

struct DatasetSplit {
    std::vector<WindowSample> train;
    std::vector<WindowSample> test;   // exactly one per test engine
};

// ---- parsing -------------------------------------------------------------

std::vector<EngineSeries> parse_cmapss_file(const std::string& path);
std::vector<double> parse_rul_file(const std::string& path);

struct ParsedDataset {
    std::vector<EngineSeries> train, test;
    std::vector<double> test_rul;
};

ParsedDataset parse_cmapss(const std::string& train_file, const std::string& test_file,
                           const std::string& rul_file);

// ---- preprocessing -------------------------------------------------------

void select_sensors(std::vector<EngineSeries>& series);

NormalizationStats fit_normalization(const std::vector<EngineSeries>& train);
void normalize(std::vector<EngineSeries>& series, const NormalizationStats& stats);

/// Piecewise label: min(failure_cycle - t, rul_max).
std::vector<double> label_rul(const EngineSeries& series, double rul_max);

/// Per-column mean and least-squares slope of the T_w x k window, as 2 x k rows.
std::vector<double> statistical_features(const std::vector<double>& window, std::size_t t_w,
                                         std::size_t k);

/// Stride-1 windows with the last cycle's label. Series shorter than t_w are
/// left-padded by repeating the first row so exactly one window results.
std::vector<WindowSample> sliding_windows(const EngineSeries& series,
                                          const std::vector<double>& labels, std::size_t t_w,
                                          std::size_t stat_rows);

struct DatasetBuildConfig {
    std::size_t window = 40;
    std::size_t stat_rows = 2;
    double rul_max = kDefaultRulMax;
};

struct BuiltDataset {
    DatasetBuildConfig config;
    NormalizationStats stats;
    DatasetSplit split;
    std::uint64_t fingerprint = 0;
};

/// Runs select -> normalize -> label -> window -> stat features over a parsed
/// dataset. Test labels come from the RUL file, capped at rul_max.
BuiltDataset build_dataset(ParsedDataset parsed, const DatasetBuildConfig& config);

// ---- cache ---------------------------------------------------------------

void save_dataset_cache(const BuiltDataset& ds, const std::string& path);
BuiltDataset load_dataset_cache(const std::string& path);

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ULL);

} // namespace dast
