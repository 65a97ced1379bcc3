#include "scaling/allocator.hpp"

#include "scaling/errors.hpp"

#include <algorithm>
#include <cmath>

namespace scaling {

std::string_view to_string(PlanSource source) noexcept
{
    return source == PlanSource::frontier_law ? "frontier_law" : "parametric_law";
}

AllocationPlan::AllocationPlan(ComputeBudget budget, double n_optimal, double d_optimal, PlanSource source)
    : budget_(budget), n_optimal_(n_optimal), d_optimal_(d_optimal), source_(source)
{
    if (!(budget.flops > 0) || !std::isfinite(budget.flops)) throw ValidationError("budget must be positive and finite");
    if (!(n_optimal > 0) || !(d_optimal > 0) || !std::isfinite(n_optimal) || !std::isfinite(d_optimal))
        throw ValidationError("allocation must be positive and finite");
    const double implied = 6.0 * n_optimal * d_optimal;
    if (std::abs(implied - budget.flops) > 1e-6 * budget.flops)
        throw ValidationError("allocation violates C = 6ND");
}

double extrapolation_decades(double flops, double fitted_min, double fitted_max)
{
    if (flops > fitted_max) return std::log10(flops / fitted_max);
    if (flops < fitted_min) return std::log10(fitted_min / flops);
    return 0.0;
}

AllocationPlan allocate_from_frontier(const FrontierLaw& law, ComputeBudget budget, const LossLaw* loss_law)
{
    const double n = law.n_optimal(budget.flops);
    const double d = budget.flops / (6.0 * n);
    AllocationPlan plan(budget, n, d, PlanSource::frontier_law);
    plan.extrapolation_decades = extrapolation_decades(budget.flops, law.flops_min, law.flops_max);
    plan.d_law_discrepancy = law.d_optimal(budget.flops) / d - 1.0;
    if (loss_law) plan.predicted_loss = predict_loss(*loss_law, budget);
    return plan;
}

double optimal_model_size(const SurfaceParams& s, double flops)
{
    const double sum = s.alpha + s.beta;
    return std::pow((s.alpha * s.n_c) / (s.beta * s.d_c), 1.0 / sum) * std::pow(flops / 6.0, s.beta / sum);
}

AllocationPlan allocate_from_parametric(const ParametricLaw& law, ComputeBudget budget)
{
    const SurfaceParams surface = law.params();
    const double n = optimal_model_size(surface, budget.flops);
    const double d = budget.flops / (6.0 * n);
    AllocationPlan plan(budget, n, d, PlanSource::parametric_law);
    plan.predicted_loss = surface.loss(n, d);
    plan.extrapolation_decades = extrapolation_decades(budget.flops, law.flops_min, law.flops_max);
    return plan;
}

double predict_loss(const LossLaw& law, ComputeBudget budget) { return law.predict(budget.flops); }

} // namespace scaling
