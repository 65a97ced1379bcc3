#include "scaling/frontier_fit.hpp"

#include "scaling/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace scaling {

long bin_index(double flops, int bins_per_decade)
{
    return static_cast<long>(std::floor(std::log10(flops) * bins_per_decade));
}

double bin_center(long index, int bins_per_decade)
{
    return std::pow(10.0, (static_cast<double>(index) + 0.5) / bins_per_decade);
}

std::size_t FrontierEnvelope::distinct_models() const
{
    std::set<double> sizes;
    for (const auto& p : bins) sizes.insert(p.n_params);
    return sizes.size();
}

FrontierEnvelope build_envelope(const CurveFamily& family, int bins_per_decade)
{
    if (bins_per_decade <= 0) throw ValidationError("bins_per_decade must be positive");

    auto better = [](const EnvelopePoint& x, const EnvelopePoint& y) {
        if (x.loss != y.loss) return x.loss < y.loss;
        if (x.n_params != y.n_params) return x.n_params < y.n_params;
        return x.tokens_seen < y.tokens_seen;
    };

    std::map<long, EnvelopePoint> best;
    for (const auto& curve : family.curves) {
        for (const auto& p : curve.points) {
            if (!(p.flops > 0)) continue;
            const long k = bin_index(p.flops, bins_per_decade);
            EnvelopePoint candidate{bin_center(k, bins_per_decade), curve.run_id, curve.n_params, p.tokens_seen, p.flops,
                                    p.loss};
            auto [it, inserted] = best.try_emplace(k, candidate);
            if (!inserted && better(candidate, it->second)) it->second = std::move(candidate);
        }
    }

    FrontierEnvelope envelope;
    envelope.bins_per_decade = bins_per_decade;
    for (auto& [k, point] : best) envelope.bins.push_back(std::move(point));
    if (!envelope.bins.empty()) {
        envelope.flops_min = envelope.flops_max = envelope.bins.front().c_center;
        for (const auto& p : envelope.bins) {
            envelope.flops_min = std::min({envelope.flops_min, p.c_center, p.flops});
            envelope.flops_max = std::max({envelope.flops_max, p.c_center, p.flops});
        }
    }
    return envelope;
}

FrontierEnvelope extract_envelope(const CurveFamily& family, int bins_per_decade)
{
    if (family.curves.size() < 2)
        throw FrontierUnderdetermined("frontier fit needs at least two model sizes; use the parametric fit");

    struct Range {
        double lo, hi;
    };
    std::vector<Range> ranges;
    for (const auto& curve : family.curves) {
        Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& p : curve.points)
            if (p.flops > 0) {
                r.lo = std::min(r.lo, p.flops);
                r.hi = std::max(r.hi, p.flops);
            }
        if (r.lo <= r.hi) ranges.push_back(r);
    }
    bool overlap = false;
    for (std::size_t i = 0; i < ranges.size() && !overlap; ++i)
        for (std::size_t j = i + 1; j < ranges.size() && !overlap; ++j)
            overlap = ranges[i].lo <= ranges[j].hi && ranges[j].lo <= ranges[i].hi;
    if (!overlap)
        throw FrontierUnderdetermined(
            "no two curves overlap in FLOPs (models not trained past their compute-optimal point); "
            "use the parametric fit");

    FrontierEnvelope envelope = build_envelope(family, bins_per_decade);
    if (envelope.distinct_models() < 2)
        throw FrontierUnderdetermined("only one model size reaches the efficient frontier; use the parametric fit");
    return envelope;
}

LinearFit least_squares_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ValidationError("x and y differ in length");
    if (x.size() < 2) throw FitError("line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0)) throw FitError("zero variance in the regressor");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double FrontierLaw::n_optimal(double flops) const { return a0 * std::pow(flops, a); }
double FrontierLaw::d_optimal(double flops) const { return b0 * std::pow(flops, b); }

FrontierLaw fit_frontier_laws(const FrontierEnvelope& envelope)
{
    if (envelope.bins.size() < 3)
        throw FitError("frontier fit needs at least three envelope points, got " +
                       std::to_string(envelope.bins.size()));
    if (envelope.distinct_models() < 2)
        throw FrontierUnderdetermined("envelope spans a single model size; use the parametric fit");

    std::vector<double> log_c, log_n, log_d;
    for (const auto& p : envelope.bins) {
        log_c.push_back(std::log10(p.flops));
        log_n.push_back(std::log10(p.n_params));
        log_d.push_back(std::log10(p.tokens_seen));
    }
    const LinearFit fit_n = least_squares_line(log_c, log_n);
    const LinearFit fit_d = least_squares_line(log_c, log_d);

    FrontierLaw law;
    law.a = fit_n.slope;
    law.a0 = std::pow(10.0, fit_n.intercept);
    law.b = fit_d.slope;
    law.b0 = std::pow(10.0, fit_d.intercept);
    law.r2_n = fit_n.r2;
    law.r2_d = fit_d.r2;
    law.n_envelope_points = envelope.bins.size();
    law.distinct_models_on_envelope = envelope.distinct_models();
    law.flops_min = envelope.flops_min;
    law.flops_max = envelope.flops_max;
    return law;
}

std::vector<FlopsLoss> envelope_loss_points(const FrontierEnvelope& envelope)
{
    std::vector<FlopsLoss> out;
    out.reserve(envelope.bins.size());
    for (const auto& p : envelope.bins) out.push_back({p.c_center, p.loss});
    return out;
}

void write_envelope_csv(std::ostream& out, const FrontierEnvelope& envelope)
{
    const auto old_precision = out.precision(17);
    out << "c_center,n_params,tokens_seen,loss\n";
    for (const auto& p : envelope.bins)
        out << p.c_center << ',' << p.n_params << ',' << p.tokens_seen << ',' << p.loss << '\n';
    out.precision(old_precision);
}

} // namespace scaling
