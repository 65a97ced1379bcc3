#pragma once

#include "scaling/curve_store.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/levenberg_marquardt.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace scaling {

enum class FitSpace { raw_loss, log_loss_huber };

[[nodiscard]] std::string_view to_string(FitSpace space) noexcept;
[[nodiscard]] FitSpace parse_fit_space(std::string_view name);

/// One starting point (or one fitted value) of the surface
/// L(N, D) = n_c / N^alpha + d_c / D^beta + e.
struct SurfaceParams {
    double alpha = 0;
    double beta = 0;
    double n_c = 0;
    double d_c = 0;
    double e = 0;

    [[nodiscard]] double loss(double n_params, double tokens) const;

    friend bool operator==(const SurfaceParams&, const SurfaceParams&) = default;
};

struct ParametricLaw {
    double alpha = 0;
    double beta = 0;
    double n_c = 0;
    double d_c = 0;
    double e_irreducible = 0;
    double residual = 0;  // sum of squared loss residuals
    double objective = 0; // the minimised objective (fit-space dependent)
    std::size_t n_points = 0;
    FitSpace fit_space = FitSpace::raw_loss;

    SurfaceParams winning_init;
    double initial_objective = 0; // objective at the winning initialization
    bool converged = false;
    /// False when the data cannot pin down alpha (a single model size).
    bool identifiable = true;
    std::size_t distinct_model_sizes = 0;
    double flops_min = 0, flops_max = 0;

    [[nodiscard]] SurfaceParams params() const { return {alpha, beta, n_c, d_c, e_irreducible}; }
    [[nodiscard]] double loss(double n_params, double tokens) const { return params().loss(n_params, tokens); }
};

struct AllocationExponents {
    double a = 0; // N_opt ~ C^a
    double b = 0; // D_opt ~ C^b
};

/// a = beta / (alpha + beta), b = alpha / (alpha + beta).
[[nodiscard]] AllocationExponents derived_allocation_exponents(double alpha, double beta);
[[nodiscard]] AllocationExponents derived_allocation_exponents(const ParametricLaw& law);

/// Cartesian grid of starting points; e values are fractions of the smallest
/// observed loss.
struct InitGrid {
    std::vector<double> alphas{0.2, 0.4, 0.6, 0.8};
    std::vector<double> betas{0.2, 0.4, 0.6, 0.8};
    std::vector<double> n_cs{1e0, 1e2, 1e4};
    std::vector<double> d_cs{1e0, 1e2, 1e4};
    std::vector<double> e_fractions{0.1, 0.5, 0.9};

    [[nodiscard]] std::vector<SurfaceParams> expand(double min_loss) const;
};

struct ParametricFitOptions {
    FitSpace space = FitSpace::raw_loss;
    InitGrid grid;
    /// Overrides `grid` when set.
    std::optional<std::vector<SurfaceParams>> initializations;
    LmOptions lm;
    double huber_delta = 1e-3;
    std::size_t max_points_per_run = 512;
    /// Worker threads for the multi-start sweep; 0 = hardware concurrency.
    unsigned threads = 0;
};

struct SurfacePoint {
    double n_params = 0;
    double tokens = 0;
    double loss = 0;
};

/// At most `max_per_run` points per curve, picked nearest to log-uniform
/// targets in tokens. Points with zero tokens are skipped.
[[nodiscard]] std::vector<SurfacePoint> subsample_points(const CurveFamily& family, std::size_t max_per_run);

/// Multi-start box-constrained Levenberg-Marquardt fit of the loss surface.
/// Positivity is enforced through exponential transforms. The lowest-objective
/// converged start wins.
///
/// Throws ValidationError on fewer than 10 points or non-positive values and
/// FitError when no start converges. A single model size is fitted but
/// reported with identifiable = false.
[[nodiscard]] ParametricLaw fit_parametric(std::span<const SurfacePoint> points, const ParametricFitOptions& options = {});
[[nodiscard]] ParametricLaw fit_parametric(const CurveFamily& family, const ParametricFitOptions& options = {});

/// Compute-optimal loss curve L(C) = c0 * C^-c + e with c0 >= 0,
/// c in [-1, 1], e >= 0.1.
struct LossLaw {
    static constexpr double e_floor = 0.1;
    static constexpr double c_bound = 1.0;

    double c0 = 0;
    double c = 0;
    double e_irreducible = e_floor;
    double residual = 0;
    std::size_t n_points = 0;
    bool e_at_bound = false; // e clamped to its 0.1 floor
    bool c_at_bound = false; // |c| reached 1
    bool flat = false;       // fitted curve carries no scaling over the data range
    bool converged = false;
    double flops_min = 0, flops_max = 0;

    [[nodiscard]] double predict(double flops) const;
    [[nodiscard]] bool boundary_active() const noexcept { return e_at_bound || c_at_bound; }
};

struct LossLawFitOptions {
    LmOptions lm;
    std::vector<double> c_starts{0.05, 0.1, 0.2, 0.4};
    std::vector<double> e_fractions{0.1, 0.5, 0.9};
};

/// Bounded least squares of the loss law. Needs at least four distinct C.
[[nodiscard]] LossLaw fit_loss_law(std::span<const FlopsLoss> points, const LossLawFitOptions& options = {});

} // namespace scaling
