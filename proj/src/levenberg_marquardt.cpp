#include "scaling/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

namespace scaling {

namespace {

double huber(double r, double delta)
{
    const double a = std::abs(r);
    return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double objective_of(const Eigen::VectorXd& r, const std::optional<double>& delta)
{
    if (!r.allFinite()) return std::numeric_limits<double>::infinity();
    if (!delta) return 0.5 * r.squaredNorm();
    double sum = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) sum += huber(r[i], *delta);
    return sum;
}

// IRLS weights: psi(r)/r.
Eigen::VectorXd weights_of(const Eigen::VectorXd& r, const std::optional<double>& delta)
{
    Eigen::VectorXd w = Eigen::VectorXd::Ones(r.size());
    if (!delta) return w;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        if (a > *delta) w[i] = *delta / a;
    }
    return w;
}

} // namespace

LmResult minimize_lm(const ResidualFn& fn, Eigen::VectorXd start, Eigen::Index n_residuals, const LmOptions& options)
{
    const Eigen::Index n = start.size();
    LmResult result;
    result.params = std::move(start);

    Eigen::VectorXd r(n_residuals), r_trial(n_residuals);
    Eigen::MatrixXd jac(n_residuals, n);
    fn(result.params, r, &jac);
    double cost = objective_of(r, options.huber_delta);
    result.initial_objective = cost;
    result.objective = cost;
    if (!std::isfinite(cost) || !jac.allFinite()) {
        result.stop = LmStop::non_finite_start;
        return result;
    }

    double lambda = -1;
    double nu = 2;
    bool refresh = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        if (cost == 0) {
            result.stop = LmStop::zero_cost;
            return result;
        }
        if (refresh) {
            fn(result.params, r, &jac);
            refresh = false;
        }
        const Eigen::VectorXd w = weights_of(r, options.huber_delta);
        const Eigen::MatrixXd jw = w.asDiagonal() * jac;
        const Eigen::MatrixXd hessian = jac.transpose() * jw;
        const Eigen::VectorXd gradient = jw.transpose() * r;
        if (gradient.lpNorm<Eigen::Infinity>() <= options.gtol) {
            result.stop = LmStop::small_gradient;
            return result;
        }

        Eigen::VectorXd scale = hessian.diagonal().cwiseMax(1e-300);
        if (lambda < 0) lambda = 1e-3 * scale.maxCoeff();

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = hessian;
            damped.diagonal() += lambda * scale;
            const Eigen::VectorXd step = damped.ldlt().solve(-gradient);

            const double p_norm = result.params.norm();
            if (step.allFinite() && step.norm() <= options.xtol * (p_norm + options.xtol)) {
                result.stop = LmStop::small_step;
                return result;
            }

            const Eigen::VectorXd trial = result.params + step;
            fn(trial, r_trial, nullptr);
            const double trial_cost = objective_of(r_trial, options.huber_delta);
            // Predicted reduction of the local quadratic model.
            const double predicted = 0.5 * step.dot(lambda * scale.cwiseProduct(step) - gradient);
            const double rho = predicted > 0 ? (cost - trial_cost) / predicted : -1;

            if (step.allFinite() && std::isfinite(trial_cost) && trial_cost < cost && rho > 0) {
                result.params = trial;
                r = r_trial;
                cost = trial_cost;
                refresh = true;
                lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                nu = 2;
                accepted = true;
            } else {
                lambda *= nu;
                nu *= 2;
                if (!std::isfinite(lambda) || lambda > 1e40) {
                    result.objective = cost;
                    result.stop = LmStop::stalled;
                    return result;
                }
            }
        }
        result.objective = cost;
    }
    result.objective = cost;
    result.stop = LmStop::max_iterations;
    return result;
}

} // namespace scaling
