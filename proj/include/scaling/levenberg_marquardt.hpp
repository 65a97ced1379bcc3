#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

namespace scaling {

/// Fills residuals (size m) and, when non-null, the m x n Jacobian at `params`.
using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                                      Eigen::MatrixXd* jacobian)>;

struct LmOptions {
    int max_iterations = 500;
    double xtol = 1e-10; // relative parameter change
    double gtol = 1e-16; // inf-norm of the gradient of the objective
    /// When set, minimise a Huber loss with this threshold through iteratively
    /// reweighted normal equations instead of plain least squares.
    std::optional<double> huber_delta;
};

enum class LmStop { small_step, small_gradient, zero_cost, stalled, max_iterations, non_finite_start };

struct LmResult {
    Eigen::VectorXd params;
    double objective = 0;         // 0.5 * sum r^2, or sum huber(r)
    double initial_objective = 0;
    int iterations = 0;
    LmStop stop = LmStop::max_iterations;

    [[nodiscard]] bool converged() const noexcept
    {
        return stop != LmStop::max_iterations && stop != LmStop::non_finite_start;
    }
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and Nielsen's damping
/// update. Only steps that reduce the objective are accepted, so the returned
/// objective never exceeds the starting one.
[[nodiscard]] LmResult minimize_lm(const ResidualFn& fn, Eigen::VectorXd start, Eigen::Index n_residuals,
                                   const LmOptions& options = {});

} // namespace scaling
