#pragma once

#include "scaling/compute_accounting.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scaling {

/// One logged checkpoint of one training run.
struct RunRecord {
    std::string run_id;
    double n_params = 0;    // trainable parameters N
    double step = 0;        // optimizer updates
    double tokens_seen = 0; // cumulative transformer inputs D
    double loss = 0;        // cross-entropy, nats
    std::optional<double> learning_rate;
    std::optional<double> wall_time_s;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

enum class LogFormat { line_json, csv };
enum class LossUnits { nats, bits };

struct ParseOptions {
    LogFormat format = LogFormat::line_json;
    bool strict = true;
    LossUnits units = LossUnits::nats;
};

struct RecordIssue {
    std::size_t line = 0;
    std::string field;
    std::string message;
};

struct ParseResult {
    std::vector<RunRecord> records;
    std::vector<RecordIssue> issues; // always empty in strict mode
};

/// Reads a training log. Strict mode throws IngestError on the first invalid
/// record; lenient mode skips invalid records and lists them in `issues`.
///
/// Validation per record: required fields present and numeric, counts are
/// non-negative integers, loss finite and positive; per run: tokens_seen
/// strictly increasing and n_params constant (in file order).
[[nodiscard]] ParseResult parse_run_log(std::istream& source, const ParseOptions& options = {});

[[nodiscard]] LogFormat guess_log_format(const std::string& path);

struct Smoothing {
    enum class Kind { none, ema } kind = Kind::none;
    double half_life_tokens = 0;

    [[nodiscard]] static Smoothing none() { return {}; }
    [[nodiscard]] static Smoothing ema(double half_life_tokens) { return {Kind::ema, half_life_tokens}; }

    friend bool operator==(const Smoothing&, const Smoothing&) = default;
};

struct CurvePoint {
    double step = 0;
    double tokens_seen = 0;
    double flops = 0; // 6 * n_params * tokens_seen
    double loss = 0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct TrainingCurve {
    std::string run_id;
    double n_params = 0;
    std::vector<CurvePoint> points; // sorted by tokens_seen
    Smoothing smoothing;

    friend bool operator==(const TrainingCurve&, const TrainingCurve&) = default;
};

/// Curves with distinct model sizes, ordered by n_params.
struct CurveFamily {
    std::vector<TrainingCurve> curves;
    ArchitectureProfile profile;
    std::string label;

    [[nodiscard]] std::size_t point_count() const noexcept;

    friend bool operator==(const CurveFamily&, const CurveFamily&) = default;
};

struct BuildOptions {
    Smoothing smoothing;
    double warmup_tokens = 0; // points with tokens_seen < warmup_tokens are dropped
    ArchitectureProfile profile;
    std::string label;
};

/// Groups records by run, sorts by tokens, annotates FLOPs, truncates warmup and
/// applies smoothing. Runs emptied by warmup truncation are dropped and noted
/// in `warnings`.
///
/// Throws ValidationError on empty input, duplicate (run_id, step), or two runs
/// with the same n_params.
[[nodiscard]] CurveFamily build_curves(std::span<const RunRecord> records, const BuildOptions& options = {},
                                       std::vector<std::string>* warnings = nullptr);

/// EMA in token space: weight of the previous smoothed value is
/// 2^(-(t_i - t_{i-1}) / half_life). The first point is unchanged.
[[nodiscard]] std::vector<double> ema_smooth(std::span<const double> tokens, std::span<const double> losses,
                                             double half_life_tokens);

[[nodiscard]] std::vector<RunRecord> to_records(const CurveFamily& family);

/// Writes records as line-delimited JSON; doubles are printed in shortest
/// round-trip form so a re-parse is bit-identical.
void write_line_json(std::ostream& out, std::span<const RunRecord> records);
void write_line_json(std::ostream& out, const TrainingCurve& curve);

} // namespace scaling
