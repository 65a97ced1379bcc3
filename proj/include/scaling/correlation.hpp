#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scaling {

enum class BetterDirection { lower, higher };

[[nodiscard]] std::string_view to_string(BetterDirection d) noexcept;
[[nodiscard]] BetterDirection parse_better_direction(std::string_view name);

struct MetricPair {
    double loss = 0;
    double metric = 0;
};

struct MetricSeries {
    std::vector<MetricPair> pairs;
    std::string metric_name;
    BetterDirection better_direction = BetterDirection::lower;

    /// At least three pairs, all finite.
    void validate() const;
};

/// Pearson product-moment coefficient, clamped to [-1, 1]. Throws
/// UndefinedCorrelation when either coordinate is constant.
[[nodiscard]] double pearson(std::span<const double> x, std::span<const double> y);
[[nodiscard]] double pearson(const MetricSeries& series);

/// Pearson on average ranks.
[[nodiscard]] double spearman(const MetricSeries& series);

struct ProxyRow {
    std::string metric_name;
    std::optional<double> r; // empty when undefined
    std::size_t n = 0;
    BetterDirection better_direction = BetterDirection::lower;
    /// Lower loss goes with a better metric: R > 0 for lower-is-better
    /// metrics, R < 0 for higher-is-better ones. False when R is undefined.
    bool direction_consistent = false;
};

[[nodiscard]] std::vector<ProxyRow> proxy_report(std::span<const MetricSeries> series, bool rank = false);

/// CSV with a header containing a `loss` column and one metric column. The
/// metric column is named `metric` or, otherwise, the first non-loss column;
/// its header becomes the series name unless `name` is given.
[[nodiscard]] MetricSeries read_metric_csv(std::istream& in, BetterDirection direction,
                                           std::optional<std::string> name = std::nullopt);

void write_proxy_table(std::ostream& out, std::span<const ProxyRow> rows);

} // namespace scaling
