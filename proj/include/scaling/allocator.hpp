#pragma once

#include "scaling/compute_accounting.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/parametric_fit.hpp"

#include <optional>
#include <string_view>

namespace scaling {

enum class PlanSource { frontier_law, parametric_law };

[[nodiscard]] std::string_view to_string(PlanSource source) noexcept;

/// A compute-optimal (N, D) split of a FLOPs budget. Construction enforces
/// 6 * N * D == C to 1e-6 relative.
class AllocationPlan {
public:
    AllocationPlan(ComputeBudget budget, double n_optimal, double d_optimal, PlanSource source);

    [[nodiscard]] ComputeBudget budget() const noexcept { return budget_; }
    [[nodiscard]] double n_optimal() const noexcept { return n_optimal_; }
    [[nodiscard]] double d_optimal() const noexcept { return d_optimal_; }
    [[nodiscard]] PlanSource source() const noexcept { return source_; }

    std::optional<double> predicted_loss;
    /// Decades outside the FLOPs range the law was fitted on; 0 inside it.
    double extrapolation_decades = 0;
    /// Frontier plans only: b0 * C^b / D - 1, the disagreement between the
    /// independently fitted data law and the constraint-derived D.
    std::optional<double> d_law_discrepancy;

private:
    ComputeBudget budget_;
    double n_optimal_;
    double d_optimal_;
    PlanSource source_;
};

[[nodiscard]] double extrapolation_decades(double flops, double fitted_min, double fitted_max);

/// N = a0 * C^a, D = C / (6N). The loss law, when given, fills predicted_loss.
[[nodiscard]] AllocationPlan allocate_from_frontier(const FrontierLaw& law, ComputeBudget budget,
                                                    const LossLaw* loss_law = nullptr);

/// Minimiser of L(N, C / 6N):
/// N* = [(alpha n_c) / (beta d_c)]^(1/(alpha+beta)) * (C/6)^(beta/(alpha+beta)).
[[nodiscard]] double optimal_model_size(const SurfaceParams& surface, double flops);

[[nodiscard]] AllocationPlan allocate_from_parametric(const ParametricLaw& law, ComputeBudget budget);

[[nodiscard]] double predict_loss(const LossLaw& law, ComputeBudget budget);

} // namespace scaling
