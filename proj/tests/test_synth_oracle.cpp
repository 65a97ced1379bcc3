#include "scaling/allocator.hpp"
#include "scaling/errors.hpp"
#include "scaling/synth_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace scaling;

namespace {

const SurfaceParams sym{0.5, 0.5, 100, 1e4, 1.0};

bool within_one_ulp(double a, double b)
{
    return a == b || std::nextafter(a, std::numeric_limits<double>::infinity()) == b ||
           std::nextafter(a, -std::numeric_limits<double>::infinity()) == b;
}

} // namespace

TEST_CASE("splitmix64 reference values")
{
    // The reference generator seeded with 0 yields these first two outputs.
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
    CHECK(splitmix64(0x9E3779B97F4A7C15ull) == 0x6E789E6AA1B965F4ull);
}

TEST_CASE("uniforms stay inside (0, 1) and normals have unit scale")
{
    auto rng = substream(42, 3);
    double sum = 0, sum_sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = uniform_open(rng);
        CHECK_UNARY(u > 0);
        CHECK_UNARY(u < 1);
        const double g = standard_normal(rng);
        sum += g;
        sum_sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum_sq / n - 1) < 0.02);
}

TEST_CASE("noiseless points equal the surface to one ulp")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto truth = random_law(seed);
        const auto family = generate_family(default_synthetic_spec(truth, 1e4, 1e6, 6, seed));
        for (const auto& curve : family.curves)
            for (const auto& p : curve.points) {
                const double expected = truth.n_c / std::pow(curve.n_params, truth.alpha) +
                                        truth.d_c / std::pow(p.tokens_seen, truth.beta) + truth.e;
                CHECK(within_one_ulp(p.loss, expected));
            }
    }
}

TEST_CASE("the same seed gives a bit-identical family; a different seed does not")
{
    auto spec = default_synthetic_spec(sym, 1e5, 1e7, 6, 77);
    spec.noise = NoiseModel::lognormal(0.05);
    CHECK(generate_family(spec) == generate_family(spec));
    auto other = spec;
    other.seed = 78;
    CHECK_FALSE(generate_family(spec) == generate_family(other));
}

TEST_CASE("lognormal noise has the requested scale")
{
    auto spec = default_synthetic_spec(sym, 1e5, 1e7, 200, 5);
    spec.noise = NoiseModel::lognormal(0.01);
    const auto family = generate_family(spec);
    std::vector<double> logs;
    for (const auto& curve : family.curves)
        for (const auto& p : curve.points) logs.push_back(std::log(p.loss / sym.loss(curve.n_params, p.tokens_seen)));
    REQUIRE(logs.size() >= 10000);
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / double(logs.size());
    double ss = 0;
    for (double v : logs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(logs.size() - 1));
    CHECK(std::abs(sd / 0.01 - 1) < 0.10);
}

TEST_CASE("default layout")
{
    const auto spec = default_synthetic_spec(sym, 1e5, 1e7, 6);
    REQUIRE(spec.model_sizes.size() == 6);
    CHECK(spec.model_sizes.front() == 1e5);
    CHECK(spec.model_sizes.back() == doctest::Approx(1e5 * std::pow(10.0, 2.5)).epsilon(1e-6));
    for (const auto& schedule : spec.tokens_schedule) {
        CHECK(schedule.size() == 64);
        CHECK(schedule.front() == 1e7);
        CHECK(schedule.back() == 1e10);
    }
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("invalid specs are rejected")
{
    auto spec = default_synthetic_spec(sym, 1e5, 1e7, 3);
    auto repeated = spec;
    repeated.model_sizes[1] = repeated.model_sizes[0];
    CHECK_THROWS_AS(repeated.validate(), ValidationError);
    auto unsorted = spec;
    std::swap(unsorted.tokens_schedule[0][3], unsorted.tokens_schedule[0][4]);
    CHECK_THROWS_AS(unsorted.validate(), ValidationError);
    auto bad_truth = spec;
    bad_truth.truth.alpha = -0.1;
    CHECK_THROWS_AS(bad_truth.validate(), ValidationError);
    CHECK_THROWS_AS((void)generate_family(bad_truth), ValidationError);
}

TEST_CASE("noiseless losses decrease strictly within each run")
{
    const auto family = generate_family(default_synthetic_spec(random_law(3), 1e5, 1e7, 6, 3));
    for (const auto& curve : family.curves)
        for (std::size_t i = 1; i < curve.points.size(); ++i) CHECK(curve.points[i].loss < curve.points[i - 1].loss);
}

TEST_CASE("brute force finds the symmetric optimum at N = 1")
{
    const auto best = brute_force_optimal({0.5, 0.5, 3, 3, 1}, 6e4);
    CHECK(std::abs(std::log(best.n_optimal / 100)) <= best.log_step);
    const auto unit = brute_force_optimal({0.5, 0.5, 3, 3, 1}, 6);
    CHECK(std::abs(std::log(unit.n_optimal)) <= unit.log_step);
    CHECK_THROWS_AS((void)brute_force_optimal(sym, 6e10, 999), ValidationError);
    CHECK_THROWS_AS((void)brute_force_optimal(sym, 0), ValidationError);
}

TEST_CASE("brute force agrees with the closed form for 100 random laws")
{
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto truth = random_law(seed);
        auto rng = substream(seed, 1);
        const double flops = std::pow(10.0, 15 + 8 * uniform_open(rng));
        const auto brute = brute_force_optimal(truth, flops);
        const double closed = optimal_model_size(truth, flops);
        if (std::abs(std::log(brute.n_optimal / closed)) <= brute.log_step) ++agree;
        CHECK(brute.loss >= truth.loss(closed, flops / (6 * closed)) * (1 - 1e-12));
    }
    CHECK(agree == 100);
}

TEST_CASE("round trips")
{
    SUBCASE("symmetric noiseless")
    {
        const auto report = round_trip(frontier_covering_spec({0.5, 0.5, 1e3, 1e4, 1.0}, 1e14, 1e18, 20, 16, 0.5, 1));
        CHECK(report.max_param_error() < 1e-3);
        CHECK(report.a_frontier_error < 0.03);
        CHECK(report.frontier.a + report.frontier.b == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("asymmetric noiseless")
    {
        const auto report = round_trip(frontier_covering_spec({0.34, 0.66, 1e3, 1e4, 1.0}, 1e14, 1e18, 20, 16, 0.5, 1));
        CHECK(std::abs(derived_allocation_exponents(report.parametric).a - 0.66) < 1e-3);
        CHECK(report.a_parametric_error < 1e-3);
    }
}

TEST_CASE("the envelope of a noiseless symmetric family moves to larger models")
{
    const double offset = std::pow(10.0, 0.025);
    const auto family = generate_family(frontier_covering_spec(sym, 1e13 * offset, 1e19 * offset, 30, 20, 0.5, 0));
    const auto envelope = extract_envelope(family);
    for (std::size_t i = 1; i < envelope.bins.size(); ++i)
        CHECK(envelope.bins[i].n_params >= envelope.bins[i - 1].n_params);
    CHECK(envelope.bins.back().n_params > envelope.bins.front().n_params);
}

TEST_CASE("log-uniform counts are integers and strictly increasing")
{
    const auto counts = log_uniform_counts(1, 20, 50);
    CHECK(counts.size() == 50);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        CHECK(counts[i] == std::round(counts[i]));
        if (i) CHECK(counts[i] > counts[i - 1]);
    }
}
