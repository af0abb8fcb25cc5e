#include "gatslice/plotdata.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gatslice/format.hpp"
#include "gatslice/trainer.hpp"

namespace gatslice {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

int MetricsTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    MetricsTable t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(path.string() + " is empty");
    t.header = split_csv_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != t.header.size())
            throw std::runtime_error(path.string() + ": row with " + std::to_string(row.size()) + " cells");
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string tidy_plot_data(const MetricsTable& table, std::size_t window) {
    const int period_col = table.column("period");
    const int alg_col = table.column("algorithm");
    const int seed_col = table.column("seed");
    if (period_col < 0 || alg_col < 0 || seed_col < 0) throw std::runtime_error("metrics table lacks period/algorithm/seed");
    std::vector<std::pair<std::string, int>> metrics;
    for (const char* name : {"utility", "reward", "se"})
        if (int c = table.column(name); c >= 0) metrics.emplace_back(name, c);
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i].rfind("ssr_", 0) == 0) metrics.emplace_back(table.header[i], static_cast<int>(i));
    if (int c = table.column("mean_ssr"); c >= 0) metrics.emplace_back("mean_ssr", c);

    // (algorithm, seed) -> period -> per-metric sums and BS count.
    using Sums = std::pair<std::vector<double>, int>;
    std::map<std::pair<std::string, std::string>, std::map<int, Sums>> runs;
    for (const auto& row : table.rows) {
        Sums& s = runs[{row[static_cast<std::size_t>(alg_col)], row[static_cast<std::size_t>(seed_col)]}]
                      [std::stoi(row[static_cast<std::size_t>(period_col)])];
        s.first.resize(metrics.size(), 0.0);
        for (std::size_t k = 0; k < metrics.size(); ++k) s.first[k] += std::stod(row[static_cast<std::size_t>(metrics[k].second)]);
        ++s.second;
    }

    std::ostringstream os;
    os << "algorithm,seed,period,metric,statistic,value\n";
    const std::string median_name = "median" + std::to_string(window);
    for (const auto& [key, periods] : runs) {
        std::vector<int> ids;
        std::vector<std::vector<double>> means(metrics.size());
        for (const auto& [p, s] : periods) {
            ids.push_back(p);
            for (std::size_t k = 0; k < metrics.size(); ++k) means[k].push_back(s.first[k] / s.second);
        }
        for (std::size_t k = 0; k < metrics.size(); ++k) {
            const auto med = rolling_median(means[k], window);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const std::string prefix = key.first + "," + key.second + "," + std::to_string(ids[i]) + "," + metrics[k].first + ",";
                os << prefix << "mean," << format_number(means[k][i]) << '\n';
                if (i + 1 >= window) os << prefix << median_name << ',' << format_number(med[i + 1 - window]) << '\n';
            }
        }
    }
    return os.str();
}

} // namespace gatslice
