#pragma once

#include "scaling/curve_store.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace scaling {

struct FlopsLoss {
    double flops = 0;
    double loss = 0;
};

/// The best point in one log-FLOPs bin.
struct EnvelopePoint {
    double c_center = 0;
    std::string run_id;
    double n_params = 0;
    double tokens_seen = 0;
    double flops = 0; // the point's own 6ND, not the bin center
    double loss = 0;
};

struct FrontierEnvelope {
    std::vector<EnvelopePoint> bins; // increasing c_center; empty bins omitted
    int bins_per_decade = 10;
    double flops_min = 0; // over bin centers and envelope points
    double flops_max = 0;

    [[nodiscard]] std::size_t distinct_models() const;
};

/// Bins are aligned to decades: bin k covers [10^(k/bpd), 10^((k+1)/bpd)).
[[nodiscard]] long bin_index(double flops, int bins_per_decade);
[[nodiscard]] double bin_center(long index, int bins_per_decade);

/// Per-bin minimum-loss point over every curve point with positive FLOPs.
/// Ties go to the smaller model, then to fewer tokens. No identifiability
/// checks; see extract_envelope.
[[nodiscard]] FrontierEnvelope build_envelope(const CurveFamily& family, int bins_per_decade = 10);

/// build_envelope plus the checks the frontier method needs: at least two
/// curves whose FLOPs ranges overlap, and at least two distinct model sizes on
/// the envelope. Throws FrontierUnderdetermined otherwise.
[[nodiscard]] FrontierEnvelope extract_envelope(const CurveFamily& family, int bins_per_decade = 10);

/// N_opt = a0 * C^a and D_opt = b0 * C^b.
struct FrontierLaw {
    double a0 = 0, a = 0;
    double b0 = 0, b = 0;
    double r2_n = 0, r2_d = 0;
    std::size_t n_envelope_points = 0;
    std::size_t distinct_models_on_envelope = 0;
    double flops_min = 0, flops_max = 0; // range the law was fitted on

    [[nodiscard]] double n_optimal(double flops) const;
    [[nodiscard]] double d_optimal(double flops) const;
};

/// Ordinary least squares of log10 N and log10 D on log10 C over the envelope
/// points (using each point's own FLOPs). Requires at least three points and
/// two distinct model sizes.
[[nodiscard]] FrontierLaw fit_frontier_laws(const FrontierEnvelope& envelope);

/// (bin center, best loss) pairs, in order.
[[nodiscard]] std::vector<FlopsLoss> envelope_loss_points(const FrontierEnvelope& envelope);

/// Columns: c_center,n_params,tokens_seen,loss.
void write_envelope_csv(std::ostream& out, const FrontierEnvelope& envelope);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

/// Plain OLS of y on x. Throws FitError on fewer than two points or zero
/// variance in x.
[[nodiscard]] LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

} // namespace scaling
