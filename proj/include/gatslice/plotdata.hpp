#pragma once

// Tidy series for external plotting, derived from a run's metrics.csv.

#include <filesystem>
#include <string>
#include <vector>

namespace gatslice {

struct MetricsTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int column(const std::string& name) const;  // -1 if absent
};

MetricsTable read_metrics_csv(const std::filesystem::path& path);

/// Long-format CSV "algorithm,seed,period,metric,statistic,value". For every
/// period the BS mean of utility, reward, se, each ssr_* and mean_ssr is
/// emitted with statistic "mean", and the trailing `window`-period median of
/// that mean with statistic "median<window>" once a full window exists.
std::string tidy_plot_data(const MetricsTable& table, std::size_t window = 50);

} // namespace gatslice
