#include "scaling/correlation.hpp"

#include "scaling/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace scaling {

std::string_view to_string(BetterDirection d) noexcept { return d == BetterDirection::lower ? "lower" : "higher"; }

BetterDirection parse_better_direction(std::string_view name)
{
    if (name == "lower") return BetterDirection::lower;
    if (name == "higher") return BetterDirection::higher;
    throw ValidationError("better direction must be 'lower' or 'higher', got '" + std::string(name) + "'");
}

void MetricSeries::validate() const
{
    if (pairs.size() < 3) throw ValidationError("metric series '" + metric_name + "' needs at least three pairs");
    for (const auto& p : pairs)
        if (!std::isfinite(p.loss) || !std::isfinite(p.metric))
            throw ValidationError("metric series '" + metric_name + "' contains non-finite values");
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ValidationError("pearson: coordinates differ in length");
    if (x.size() < 3) throw ValidationError("pearson: needs at least three pairs");
    auto constant = [](std::span<const double> v) {
        const auto [lo, hi] = std::ranges::minmax(v);
        return lo == hi;
    };
    if (constant(x) || constant(y)) throw UndefinedCorrelation("correlation undefined: zero variance");

    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0) || !(syy > 0)) throw UndefinedCorrelation("correlation undefined: zero variance");
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

namespace {

void split(const MetricSeries& s, std::vector<double>& loss, std::vector<double>& metric)
{
    for (const auto& p : s.pairs) {
        loss.push_back(p.loss);
        metric.push_back(p.metric);
    }
}

std::vector<double> average_ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double pearson(const MetricSeries& series)
{
    series.validate();
    std::vector<double> loss, metric;
    split(series, loss, metric);
    return pearson(loss, metric);
}

double spearman(const MetricSeries& series)
{
    series.validate();
    std::vector<double> loss, metric;
    split(series, loss, metric);
    return pearson(average_ranks(loss), average_ranks(metric));
}

std::vector<ProxyRow> proxy_report(std::span<const MetricSeries> series, bool rank)
{
    std::vector<ProxyRow> rows;
    for (const auto& s : series) {
        s.validate();
        ProxyRow row;
        row.metric_name = s.metric_name;
        row.n = s.pairs.size();
        row.better_direction = s.better_direction;
        try {
            row.r = rank ? spearman(s) : pearson(s);
            row.direction_consistent = s.better_direction == BetterDirection::lower ? *row.r > 0 : *row.r < 0;
        } catch (const UndefinedCorrelation&) {
            row.r.reset();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

MetricSeries read_metric_csv(std::istream& in, BetterDirection direction, std::optional<std::string> name)
{
    auto cells_of = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t\r");
            const auto last = cell.find_last_not_of(" \t\r");
            cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
        }
        return cells;
    };

    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> loss_col, metric_col;
    MetricSeries series;
    series.better_direction = direction;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        const auto cells = cells_of(line);
        if (!loss_col) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] == "loss") loss_col = i;
            if (!loss_col) throw IngestError("metric CSV header lacks a 'loss' column", line_no, "loss");
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] == "metric") metric_col = i;
            for (std::size_t i = 0; i < cells.size() && !metric_col; ++i)
                if (i != *loss_col) metric_col = i;
            if (!metric_col) throw IngestError("metric CSV header lacks a metric column", line_no);
            series.metric_name = name ? *name : cells[*metric_col];
            continue;
        }
        if (cells.size() <= std::max(*loss_col, *metric_col))
            throw IngestError("row has too few columns", line_no);
        try {
            std::size_t used_l = 0, used_m = 0;
            const double l = std::stod(cells[*loss_col], &used_l);
            const double m = std::stod(cells[*metric_col], &used_m);
            if (used_l != cells[*loss_col].size() || used_m != cells[*metric_col].size()) throw std::invalid_argument("");
            series.pairs.push_back({l, m});
        } catch (const std::exception&) {
            throw IngestError("non-numeric value", line_no);
        }
    }
    if (!loss_col) throw IngestError("metric CSV is empty");
    return series;
}

void write_proxy_table(std::ostream& out, std::span<const ProxyRow> rows)
{
    out << fmt::format("{:<20} {:>10} {:>6} {:>8} {:>11}\n", "metric", "R", "n", "better", "consistent");
    for (const auto& row : rows) {
        const std::string r = row.r ? fmt::format("{:.4f}", *row.r) : std::string("undefined");
        out << fmt::format("{:<20} {:>10} {:>6} {:>8} {:>11}\n", row.metric_name, r, row.n,
                           to_string(row.better_direction), row.direction_consistent ? "yes" : "no");
    }
}

} // namespace scaling
