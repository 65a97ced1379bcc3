#pragma once

#include "scaling/curve_store.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/parametric_fit.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace scaling {

/// Random streams: every run gets its own std::mt19937_64 seeded with
/// splitmix64(seed + stream). Both algorithms are fully specified, and normals
/// come from a hand-rolled Box-Muller transform (std::normal_distribution is
/// implementation-defined), so families are reproducible across toolchains.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;
[[nodiscard]] std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);
/// Uniform on (0, 1) from the top 53 bits.
[[nodiscard]] double uniform_open(std::mt19937_64& rng);
[[nodiscard]] double standard_normal(std::mt19937_64& rng);

struct NoiseModel {
    enum class Kind { none, lognormal } kind = Kind::none;
    double sigma = 0;

    [[nodiscard]] static NoiseModel none() { return {}; }
    [[nodiscard]] static NoiseModel lognormal(double sigma) { return {Kind::lognormal, sigma}; }
};

struct SyntheticSpec {
    SurfaceParams truth;
    std::vector<double> model_sizes;
    std::vector<std::vector<double>> tokens_schedule; // per model, strictly increasing
    NoiseModel noise;
    std::uint64_t seed = 0;

    /// Throws ValidationError on non-positive or repeated model sizes, schedules
    /// that are not strictly increasing, or a non-positive truth.
    void validate() const;
};

/// `count` values log-uniform over [lo, hi], rounded to integers and made
/// strictly increasing.
[[nodiscard]] std::vector<double> log_uniform_counts(double lo, double hi, std::size_t count);

/// Default layout: `n_models` sizes log-uniform over 2.5 decades from
/// `smallest_model`; every run has 64 checkpoints log-uniform over 3 decades
/// from `first_tokens`.
[[nodiscard]] SyntheticSpec default_synthetic_spec(const SurfaceParams& truth, double smallest_model,
                                                   double first_tokens, std::size_t n_models = 6,
                                                   std::uint64_t seed = 0);

/// Layout for frontier studies: model sizes are the true compute-optimal sizes
/// for budgets spanning [flops_lo / 10^margin, flops_hi * 10^margin], and each
/// run is trained across the whole [flops_lo, flops_hi] range, so every model
/// is observed well past its optimum.
[[nodiscard]] SyntheticSpec frontier_covering_spec(const SurfaceParams& truth, double flops_lo, double flops_hi,
                                                   std::size_t n_models = 20, std::size_t points_per_decade = 16,
                                                   double margin_decades = 0.5, std::uint64_t seed = 0);

/// loss = truth(N, D) * exp(sigma * g), g standard normal from the run's
/// substream. Deterministic for a fixed spec.
[[nodiscard]] CurveFamily generate_family(const SyntheticSpec& spec);
[[nodiscard]] std::vector<RunRecord> generate_records(const SyntheticSpec& spec);

struct BruteForceOptimum {
    double n_optimal = 0;
    double loss = 0;
    double log_step = 0; // natural-log spacing of the grid
};

/// Exhaustive scan of L(N, C / 6N) over `grid_points` log-spaced N covering
/// [1, C / 6] widened by three decades on each side.
[[nodiscard]] BruteForceOptimum brute_force_optimal(const SurfaceParams& truth, double flops,
                                                    std::size_t grid_points = 100000);

/// A random law with alpha, beta in [0.2, 0.8], n_c, d_c in [1, 1e4] (log
/// uniform) and e in [0.5, 3].
[[nodiscard]] SurfaceParams random_law(std::uint64_t seed);

struct RoundTripReport {
    ParametricLaw parametric;
    FrontierLaw frontier;
    // |fitted - true| / true for alpha, beta, n_c, d_c, e
    std::array<double, 5> param_errors{};
    double alpha_error = 0;            // absolute
    double beta_error = 0;             // absolute
    double a_parametric_error = 0;     // |beta/(alpha+beta) fitted - true|
    double a_frontier_error = 0;       // |a_frontier - true a|
    double frontier_vs_parametric_gap = 0;

    [[nodiscard]] double max_param_error() const;
};

/// generate -> fit_parametric -> extract_envelope -> fit_frontier_laws, with
/// every recovery error measured against the spec's truth.
[[nodiscard]] RoundTripReport round_trip(const SyntheticSpec& spec, const ParametricFitOptions& options = {},
                                         int bins_per_decade = 10);

} // namespace scaling
