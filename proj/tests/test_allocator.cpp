#include "scaling/allocator.hpp"
#include "scaling/errors.hpp"
#include "scaling/synth_oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace scaling;

namespace {

FrontierLaw sqrt_law()
{
    FrontierLaw law;
    law.a = 0.5;
    law.b = 0.5;
    law.a0 = 1 / std::sqrt(6.0);
    law.b0 = 1 / std::sqrt(6.0);
    law.flops_min = 1;
    law.flops_max = 1e6;
    return law;
}

ParametricLaw as_law(const SurfaceParams& s)
{
    ParametricLaw law;
    law.alpha = s.alpha;
    law.beta = s.beta;
    law.n_c = s.n_c;
    law.d_c = s.d_c;
    law.e_irreducible = s.e;
    law.flops_min = 1e10;
    law.flops_max = 1e20;
    return law;
}

// Frontier-covering family offset a quarter bin off the decade edges.
CurveFamily covering_family(const SurfaceParams& truth, double lo, double hi)
{
    const double offset = std::pow(10.0, 0.025);
    return generate_family(frontier_covering_spec(truth, lo * offset, hi * offset, 32, 20, 0.5, 3));
}

} // namespace

TEST_CASE("frontier allocation arithmetic")
{
    const auto plan = allocate_from_frontier(sqrt_law(), ComputeBudget{6});
    CHECK(plan.n_optimal() == doctest::Approx(1));
    CHECK(plan.d_optimal() == doctest::Approx(1));
    CHECK(plan.source() == PlanSource::frontier_law);
    REQUIRE(plan.d_law_discrepancy.has_value());
    CHECK(std::abs(*plan.d_law_discrepancy) < 1e-12);
    CHECK_FALSE(plan.predicted_loss.has_value());

    const auto doubled = allocate_from_frontier(sqrt_law(), ComputeBudget{12});
    CHECK(doubled.n_optimal() == doctest::Approx(std::sqrt(2.0)));
    CHECK(doubled.d_optimal() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("extrapolation distance is reported, not refused")
{
    CHECK(extrapolation_decades(1e3, 1e2, 1e4) == 0);
    CHECK(extrapolation_decades(1e6, 1e2, 1e4) == doctest::Approx(2));
    CHECK(extrapolation_decades(1, 1e2, 1e4) == doctest::Approx(2));
    const auto plan = allocate_from_frontier(sqrt_law(), ComputeBudget{6e9});
    CHECK(plan.extrapolation_decades == doctest::Approx(std::log10(6e3)));
}

TEST_CASE("plans enforce the 6ND constraint")
{
    CHECK_NOTHROW(AllocationPlan(ComputeBudget{600}, 10, 10, PlanSource::parametric_law));
    CHECK_THROWS_AS(AllocationPlan(ComputeBudget{600}, 10, 10.01, PlanSource::parametric_law), ValidationError);
    CHECK_THROWS_AS(AllocationPlan(ComputeBudget{600}, -10, -10, PlanSource::parametric_law), ValidationError);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double c = std::pow(10.0, 10 + 0.2 * double(seed));
        const auto plan = allocate_from_parametric(as_law(random_law(seed)), ComputeBudget{c});
        CHECK(6 * plan.n_optimal() * plan.d_optimal() == doctest::Approx(c).epsilon(1e-6));
    }
}

TEST_CASE("symmetric surface allocates sqrt(C/6) to each")
{
    const ParametricLaw law = as_law({0.4, 0.4, 50, 50, 1.0});
    for (double c : {6.0, 6e6, 1.5e19}) {
        const auto plan = allocate_from_parametric(law, ComputeBudget{c});
        CHECK(plan.n_optimal() == doctest::Approx(std::sqrt(c / 6)).epsilon(1e-12));
        CHECK(plan.d_optimal() == doctest::Approx(std::sqrt(c / 6)).epsilon(1e-12));
        CHECK(*plan.predicted_loss == doctest::Approx(law.loss(plan.n_optimal(), plan.d_optimal())));
    }
}

TEST_CASE("closed-form optimum beats 2N and N/2 and matches the brute-force grid")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto truth = random_law(seed);
        const double c = std::pow(10.0, 12 + 0.4 * double(seed));
        const auto plan = allocate_from_parametric(as_law(truth), ComputeBudget{c});
        const double best = *plan.predicted_loss;
        const double n = plan.n_optimal();
        CHECK(best <= truth.loss(2 * n, c / (12 * n)));
        CHECK(best <= truth.loss(n / 2, c / (3 * n)));
        const auto brute = brute_force_optimal(truth, c);
        CHECK(std::abs(std::log(brute.n_optimal / n)) <= brute.log_step);
    }
}

TEST_CASE("loss-law prediction")
{
    LossLaw law;
    law.c0 = 100;
    law.c = 0.1;
    law.e_irreducible = 0.5;
    CHECK(predict_loss(law, ComputeBudget{1e10}) == doctest::Approx(10.5));
    CHECK(predict_loss(law, ComputeBudget{1e300}) == doctest::Approx(0.5).epsilon(1e-6));
    double previous = predict_loss(law, ComputeBudget{1});
    for (double c = 10; c < 1e30; c *= 10) {
        const double next = predict_loss(law, ComputeBudget{c});
        CHECK(next < previous);
        previous = next;
    }
}

TEST_CASE("frontier and parametric allocations agree on a noiseless family")
{
    const SurfaceParams truth{0.5, 0.5, 1e3, 1e4, 1.0};
    const auto family = covering_family(truth, 1e14, 1e18);
    const auto frontier = fit_frontier_laws(extract_envelope(family));
    const auto parametric = fit_parametric(family);
    for (double c : {1e15, 1e16, 1e17}) {
        const auto f = allocate_from_frontier(frontier, ComputeBudget{c});
        const auto p = allocate_from_parametric(parametric, ComputeBudget{c});
        CHECK(std::abs(f.n_optimal() / p.n_optimal() - 1) < 0.05);
    }
}

TEST_CASE("a fitted loss law extrapolates a decade past its range within 2%")
{
    for (const SurfaceParams truth : {SurfaceParams{0.5, 0.5, 1e3, 1e4, 1.0}, SurfaceParams{0.34, 0.28, 400, 1500, 1.7}}) {
        const auto family = covering_family(truth, 1e14, 1e18);
        const auto envelope = extract_envelope(family);
        const auto law = fit_loss_law(envelope_loss_points(envelope));
        const double target = 10 * envelope.flops_max;
        const double n_star = optimal_model_size(truth, target);
        const double truth_loss = truth.loss(n_star, target / (6 * n_star));
        const double predicted = predict_loss(law, ComputeBudget{target});
        CHECK(std::abs(predicted / truth_loss - 1) < 0.02);
        auto plan = allocate_from_frontier(fit_frontier_laws(envelope), ComputeBudget{target}, &law);
        REQUIRE(plan.predicted_loss.has_value());
        CHECK(*plan.predicted_loss == predicted);
        CHECK(plan.extrapolation_decades == doctest::Approx(1));
    }
}
