#include "scaling/parametric_fit.hpp"

#include "scaling/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

namespace scaling {

namespace {

constexpr std::size_t kSurfaceParams = 5;

// Internal coordinates: (ln alpha, ln beta, A, B, ln e) with
// n_c / N^alpha = exp(A - alpha * (ln N - mean ln N)), likewise for D. Centering
// the logs decorrelates each prefactor from its exponent.
struct SurfaceCoordinates {
    double mean_log_n = 0;
    double mean_log_d = 0;

    [[nodiscard]] Eigen::VectorXd to_internal(const SurfaceParams& p) const
    {
        Eigen::VectorXd q(kSurfaceParams);
        q << std::log(p.alpha), std::log(p.beta), std::log(p.n_c) - p.alpha * mean_log_n,
            std::log(p.d_c) - p.beta * mean_log_d, std::log(p.e);
        return q;
    }

    [[nodiscard]] SurfaceParams from_internal(const Eigen::VectorXd& q) const
    {
        const double alpha = std::exp(q[0]);
        const double beta = std::exp(q[1]);
        return {alpha, beta, std::exp(q[2] + alpha * mean_log_n), std::exp(q[3] + beta * mean_log_d), std::exp(q[4])};
    }
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += threads) fn(i);
        });
}

} // namespace

std::string_view to_string(FitSpace space) noexcept
{
    return space == FitSpace::raw_loss ? "raw_loss" : "log_loss_huber";
}

FitSpace parse_fit_space(std::string_view name)
{
    if (name == "raw_loss") return FitSpace::raw_loss;
    if (name == "log_loss_huber") return FitSpace::log_loss_huber;
    throw ValidationError("unknown fit space '" + std::string(name) + "'");
}

double SurfaceParams::loss(double n_params, double tokens) const
{
    return n_c / std::pow(n_params, alpha) + d_c / std::pow(tokens, beta) + e;
}

AllocationExponents derived_allocation_exponents(double alpha, double beta)
{
    const double sum = alpha + beta;
    return {beta / sum, alpha / sum};
}

AllocationExponents derived_allocation_exponents(const ParametricLaw& law)
{
    return derived_allocation_exponents(law.alpha, law.beta);
}

std::vector<SurfaceParams> InitGrid::expand(double min_loss) const
{
    std::vector<SurfaceParams> out;
    for (double alpha : alphas)
        for (double beta : betas)
            for (double n_c : n_cs)
                for (double d_c : d_cs)
                    for (double frac : e_fractions) out.push_back({alpha, beta, n_c, d_c, frac * min_loss});
    return out;
}

std::vector<SurfacePoint> subsample_points(const CurveFamily& family, std::size_t max_per_run)
{
    if (max_per_run == 0) throw ValidationError("max_points_per_run must be positive");
    std::vector<SurfacePoint> out;
    for (const auto& curve : family.curves) {
        std::vector<const CurvePoint*> usable;
        for (const auto& p : curve.points)
            if (p.tokens_seen > 0) usable.push_back(&p);
        if (usable.size() <= max_per_run) {
            for (const auto* p : usable) out.push_back({curve.n_params, p->tokens_seen, p->loss});
            continue;
        }
        const double lo = std::log(usable.front()->tokens_seen);
        const double hi = std::log(usable.back()->tokens_seen);
        std::set<std::size_t> picked;
        std::size_t cursor = 0;
        for (std::size_t k = 0; k < max_per_run; ++k) {
            const double target = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(max_per_run - 1);
            while (cursor + 1 < usable.size() &&
                   std::abs(std::log(usable[cursor + 1]->tokens_seen) - target) <=
                       std::abs(std::log(usable[cursor]->tokens_seen) - target))
                ++cursor;
            picked.insert(cursor);
        }
        for (std::size_t i : picked) out.push_back({curve.n_params, usable[i]->tokens_seen, usable[i]->loss});
    }
    return out;
}

ParametricLaw fit_parametric(std::span<const SurfacePoint> points, const ParametricFitOptions& options)
{
    if (points.size() < 10) throw ValidationError("parametric fit needs at least 10 points, got " + std::to_string(points.size()));

    std::set<double> sizes;
    SurfaceCoordinates coords;
    double min_loss = std::numeric_limits<double>::infinity();
    double flops_min = std::numeric_limits<double>::infinity(), flops_max = 0;
    for (const auto& p : points) {
        if (!(p.n_params > 0 && p.tokens > 0 && p.loss > 0) || !std::isfinite(p.n_params * p.tokens * p.loss))
            throw ValidationError("parametric fit needs positive, finite N, D and L");
        sizes.insert(p.n_params);
        coords.mean_log_n += std::log(p.n_params);
        coords.mean_log_d += std::log(p.tokens);
        min_loss = std::min(min_loss, p.loss);
        flops_min = std::min(flops_min, 6.0 * p.n_params * p.tokens);
        flops_max = std::max(flops_max, 6.0 * p.n_params * p.tokens);
    }
    const auto m = static_cast<Eigen::Index>(points.size());
    coords.mean_log_n /= static_cast<double>(m);
    coords.mean_log_d /= static_cast<double>(m);

    Eigen::VectorXd x_n(m), x_d(m), observed(m);
    // With one model size, alpha has no data; an exact zero column keeps it at
    // its starting value instead of letting rounding noise drive it.
    if (sizes.size() == 1) coords.mean_log_n = std::log(*sizes.begin());
    for (Eigen::Index i = 0; i < m; ++i) {
        x_n[i] = std::log(points[i].n_params) - coords.mean_log_n;
        x_d[i] = std::log(points[i].tokens) - coords.mean_log_d;
        observed[i] = points[i].loss;
    }
    const bool log_space = options.space == FitSpace::log_loss_huber;
    const Eigen::VectorXd log_observed = observed.array().log();

    const ResidualFn residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double alpha = std::exp(q[0]);
        const double beta = std::exp(q[1]);
        const double e = std::exp(q[4]);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double term_n = std::exp(q[2] - alpha * x_n[i]);
            const double term_d = std::exp(q[3] - beta * x_d[i]);
            const double predicted = term_n + term_d + e;
            const double chain = log_space ? 1.0 / predicted : 1.0;
            r[i] = log_space ? std::log(predicted) - log_observed[i] : predicted - observed[i];
            if (jac) {
                (*jac)(i, 0) = -term_n * x_n[i] * alpha * chain;
                (*jac)(i, 1) = -term_d * x_d[i] * beta * chain;
                (*jac)(i, 2) = term_n * chain;
                (*jac)(i, 3) = term_d * chain;
                (*jac)(i, 4) = e * chain;
            }
        }
    };

    const std::vector<SurfaceParams> starts =
        options.initializations ? *options.initializations : options.grid.expand(min_loss);
    if (starts.empty()) throw ValidationError("empty initialization grid");
    for (const auto& s : starts)
        if (!(s.alpha > 0 && s.beta > 0 && s.n_c > 0 && s.d_c > 0 && s.e > 0))
            throw ValidationError("initializations must be strictly positive");

    LmOptions lm = options.lm;
    if (log_space) lm.huber_delta = options.huber_delta;

    std::vector<LmResult> results(starts.size());
    parallel_for(starts.size(), options.threads, [&](std::size_t i) {
        results[i] = minimize_lm(residuals, coords.to_internal(starts[i]), m, lm);
    });

    std::optional<std::size_t> winner;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].converged() || !std::isfinite(results[i].objective)) continue;
        if (!winner || results[i].objective < results[*winner].objective) winner = i;
    }
    if (!winner) throw FitError("no initialization of the parametric fit converged");

    const LmResult& best = results[*winner];
    const SurfaceParams fitted = coords.from_internal(best.params);
    ParametricLaw law;
    law.alpha = fitted.alpha;
    law.beta = fitted.beta;
    law.n_c = fitted.n_c;
    law.d_c = fitted.d_c;
    law.e_irreducible = fitted.e;
    law.objective = best.objective;
    law.initial_objective = best.initial_objective;
    law.n_points = points.size();
    law.fit_space = options.space;
    law.winning_init = starts[*winner];
    law.converged = true;
    law.distinct_model_sizes = sizes.size();
    law.identifiable = sizes.size() >= 2;
    law.flops_min = flops_min;
    law.flops_max = flops_max;
    for (const auto& p : points) {
        const double diff = fitted.loss(p.n_params, p.tokens) - p.loss;
        law.residual += diff * diff;
    }
    return law;
}

ParametricLaw fit_parametric(const CurveFamily& family, const ParametricFitOptions& options)
{
    const auto points = subsample_points(family, options.max_points_per_run);
    return fit_parametric(points, options);
}

double LossLaw::predict(double flops) const { return c0 * std::pow(flops, -c) + e_irreducible; }

LossLaw fit_loss_law(std::span<const FlopsLoss> points, const LossLawFitOptions& options)
{
    std::set<double> distinct;
    double mean_log_c = 0;
    double min_loss = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (!(p.flops > 0) || !(p.loss > 0) || !std::isfinite(p.flops) || !std::isfinite(p.loss))
            throw ValidationError("loss-law points need positive, finite C and L");
        distinct.insert(p.flops);
        mean_log_c += std::log(p.flops);
        min_loss = std::min(min_loss, p.loss);
    }
    if (distinct.size() < 4)
        throw FitError("loss-law fit needs at least four distinct compute values, got " + std::to_string(distinct.size()));

    const auto m = static_cast<Eigen::Index>(points.size());
    mean_log_c /= static_cast<double>(m);
    Eigen::VectorXd x(m), observed(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        x[i] = std::log(points[i].flops) - mean_log_c;
        observed[i] = points[i].loss;
    }

    // Internal coordinates (k, v, w): c = tanh(v), e = 0.1 + exp(w) and
    // c0 * C^-c = exp(k - c * (ln C - mean ln C)).
    const ResidualFn residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double c = std::tanh(q[1]);
        const double slack = std::exp(q[2]);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double term = std::exp(q[0] - c * x[i]);
            r[i] = term + LossLaw::e_floor + slack - observed[i];
            if (jac) {
                (*jac)(i, 0) = term;
                (*jac)(i, 1) = -term * x[i] * (1.0 - c * c);
                (*jac)(i, 2) = slack;
            }
        }
    };

    // Anchor each start's prefactor on the largest-compute point.
    const auto anchor = std::ranges::max_element(points, {}, &FlopsLoss::flops);
    std::vector<Eigen::VectorXd> starts;
    for (double c : options.c_starts)
        for (double frac : options.e_fractions) {
            const double e = std::max(frac * min_loss, LossLaw::e_floor + 1e-6);
            const double gap = std::max(anchor->loss - e, 1e-6 * anchor->loss);
            Eigen::VectorXd q(3);
            q << std::log(gap) + c * (std::log(anchor->flops) - mean_log_c), std::atanh(std::clamp(c, -0.999, 0.999)),
                std::log(e - LossLaw::e_floor);
            starts.push_back(q);
        }
    if (starts.empty()) throw ValidationError("empty loss-law initialization grid");

    std::optional<LmResult> best;
    for (const auto& q : starts) {
        LmResult r = minimize_lm(residuals, q, m, options.lm);
        if (!r.converged() || !std::isfinite(r.objective)) continue;
        if (!best || r.objective < best->objective) best = std::move(r);
    }
    if (!best) throw FitError("no initialization of the loss-law fit converged");

    const Eigen::VectorXd& q = best->params;
    LossLaw law;
    law.c = std::tanh(q[1]);
    law.c0 = std::exp(q[0] + law.c * mean_log_c);
    const double slack = std::exp(q[2]);
    law.e_irreducible = LossLaw::e_floor + slack;
    law.residual = 2.0 * best->objective;
    law.n_points = points.size();
    law.converged = true;
    law.e_at_bound = slack <= 1e-6;
    law.c_at_bound = LossLaw::c_bound - std::abs(law.c) <= 1e-6;
    law.flops_min = *distinct.begin();
    law.flops_max = *distinct.rbegin();
    const double hi = law.predict(law.flops_min), lo = law.predict(law.flops_max);
    law.flat = std::abs(hi - lo) <= 1e-6 * std::max(std::abs(lo), std::abs(hi));
    return law;
}

} // namespace scaling
