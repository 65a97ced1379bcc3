#include "scaling/synth_oracle.hpp"

#include "scaling/allocator.hpp"
#include "scaling/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace scaling {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream)
{
    return std::mt19937_64(splitmix64(seed + stream * 0x9E3779B97F4A7C15ull));
}

double uniform_open(std::mt19937_64& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng)
{
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SyntheticSpec::validate() const
{
    if (!(truth.alpha > 0 && truth.beta > 0 && truth.n_c > 0 && truth.d_c > 0 && truth.e >= 0))
        throw ValidationError("synthetic truth must have positive alpha, beta, n_c, d_c and non-negative e");
    if (model_sizes.empty()) throw ValidationError("synthetic spec needs at least one model size");
    if (tokens_schedule.size() != model_sizes.size())
        throw ValidationError("one token schedule per model size is required");
    std::set<double> seen;
    for (double n : model_sizes) {
        if (!(n > 0) || !std::isfinite(n)) throw ValidationError("model sizes must be positive");
        if (!seen.insert(n).second) throw ValidationError("model sizes must be distinct");
    }
    for (const auto& schedule : tokens_schedule) {
        if (schedule.empty()) throw ValidationError("empty token schedule");
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            if (!(schedule[i] > 0) || !std::isfinite(schedule[i])) throw ValidationError("token counts must be positive");
            if (i && !(schedule[i] > schedule[i - 1])) throw ValidationError("token schedule must be strictly increasing");
        }
    }
    if (noise.kind == NoiseModel::Kind::lognormal && (!(noise.sigma >= 0) || !std::isfinite(noise.sigma)))
        throw ValidationError("noise sigma must be non-negative");
}

std::vector<double> log_uniform_counts(double lo, double hi, std::size_t count)
{
    if (!(lo >= 1) || !(hi >= lo) || count == 0) throw ValidationError("invalid log-uniform range");
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        double v = std::round(lo * std::pow(hi / lo, t));
        if (!out.empty() && v <= out.back()) v = out.back() + 1;
        out.push_back(v);
    }
    return out;
}

SyntheticSpec default_synthetic_spec(const SurfaceParams& truth, double smallest_model, double first_tokens,
                                     std::size_t n_models, std::uint64_t seed)
{
    SyntheticSpec spec;
    spec.truth = truth;
    spec.seed = seed;
    spec.model_sizes = log_uniform_counts(smallest_model, smallest_model * std::pow(10.0, 2.5), n_models);
    const auto schedule = log_uniform_counts(first_tokens, first_tokens * 1e3, 64);
    spec.tokens_schedule.assign(n_models, schedule);
    return spec;
}

SyntheticSpec frontier_covering_spec(const SurfaceParams& truth, double flops_lo, double flops_hi,
                                     std::size_t n_models, std::size_t points_per_decade, double margin_decades,
                                     std::uint64_t seed)
{
    if (!(flops_hi > flops_lo) || !(flops_lo > 0) || n_models < 2 || points_per_decade == 0)
        throw ValidationError("invalid frontier-covering layout");
    SyntheticSpec spec;
    spec.truth = truth;
    spec.seed = seed;
    const double margin = std::pow(10.0, margin_decades);
    const double c_first = flops_lo / margin, c_last = flops_hi * margin;
    for (std::size_t k = 0; k < n_models; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n_models - 1);
        const double c = c_first * std::pow(c_last / c_first, t);
        double n = std::round(optimal_model_size(truth, c));
        if (!spec.model_sizes.empty() && n <= spec.model_sizes.back()) n = spec.model_sizes.back() + 1;
        spec.model_sizes.push_back(std::max(n, 1.0));
    }
    const auto points = static_cast<std::size_t>(std::ceil(std::log10(flops_hi / flops_lo) * points_per_decade)) + 1;
    for (double n : spec.model_sizes)
        spec.tokens_schedule.push_back(
            log_uniform_counts(std::max(1.0, flops_lo / (6.0 * n)), std::max(1.0, flops_hi / (6.0 * n)), points));
    return spec;
}

std::vector<RunRecord> generate_records(const SyntheticSpec& spec)
{
    spec.validate();
    std::vector<RunRecord> out;
    for (std::size_t k = 0; k < spec.model_sizes.size(); ++k) {
        auto rng = substream(spec.seed, k);
        const double n = spec.model_sizes[k];
        char id[32];
        std::snprintf(id, sizeof id, "run_%03zu", k);
        for (std::size_t i = 0; i < spec.tokens_schedule[k].size(); ++i) {
            const double d = spec.tokens_schedule[k][i];
            double loss = spec.truth.loss(n, d);
            if (spec.noise.kind == NoiseModel::Kind::lognormal) loss *= std::exp(spec.noise.sigma * standard_normal(rng));
            out.push_back({id, n, static_cast<double>(i + 1), d, loss, {}, {}});
        }
    }
    return out;
}

CurveFamily generate_family(const SyntheticSpec& spec)
{
    const auto records = generate_records(spec);
    BuildOptions options;
    options.label = "synthetic";
    return build_curves(records, options);
}

BruteForceOptimum brute_force_optimal(const SurfaceParams& truth, double flops, std::size_t grid_points)
{
    if (grid_points < 1000) throw ValidationError("brute-force scan needs at least 1000 grid points");
    if (!(flops > 0) || !std::isfinite(flops)) throw ValidationError("brute-force scan needs a positive budget");
    const double margin = 3 * std::numbers::ln10;
    const double log_budget = std::log(flops / 6.0);
    const double log_lo = std::min(0.0, log_budget) - margin, log_hi = std::max(0.0, log_budget) + margin;
    BruteForceOptimum best{0, std::numeric_limits<double>::infinity(), (log_hi - log_lo) / static_cast<double>(grid_points - 1)};
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double n = std::exp(log_lo + best.log_step * static_cast<double>(i));
        const double loss = truth.loss(n, flops / (6.0 * n));
        if (loss < best.loss) {
            best.loss = loss;
            best.n_optimal = n;
        }
    }
    return best;
}

SurfaceParams random_law(std::uint64_t seed)
{
    auto rng = substream(seed, 0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * uniform_open(rng); };
    SurfaceParams law;
    law.alpha = between(0.2, 0.8);
    law.beta = between(0.2, 0.8);
    law.n_c = std::pow(10.0, between(0.0, 4.0));
    law.d_c = std::pow(10.0, between(0.0, 4.0));
    law.e = between(0.5, 3.0);
    return law;
}

double RoundTripReport::max_param_error() const { return *std::ranges::max_element(param_errors); }

RoundTripReport round_trip(const SyntheticSpec& spec, const ParametricFitOptions& options, int bins_per_decade)
{
    const CurveFamily family = generate_family(spec);
    RoundTripReport report;
    report.parametric = fit_parametric(family, options);
    report.frontier = fit_frontier_laws(extract_envelope(family, bins_per_decade));

    const SurfaceParams& t = spec.truth;
    const ParametricLaw& f = report.parametric;
    auto rel = [](double fitted, double truth) { return std::abs(fitted - truth) / std::abs(truth); };
    report.param_errors = {rel(f.alpha, t.alpha), rel(f.beta, t.beta), rel(f.n_c, t.n_c), rel(f.d_c, t.d_c),
                           rel(f.e_irreducible, t.e)};
    report.alpha_error = std::abs(f.alpha - t.alpha);
    report.beta_error = std::abs(f.beta - t.beta);
    const double a_true = derived_allocation_exponents(t.alpha, t.beta).a;
    const double a_fit = derived_allocation_exponents(f).a;
    report.a_parametric_error = std::abs(a_fit - a_true);
    report.a_frontier_error = std::abs(report.frontier.a - a_true);
    report.frontier_vs_parametric_gap = std::abs(report.frontier.a - a_fit);
    return report;
}

} // namespace scaling
