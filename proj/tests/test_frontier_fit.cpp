#include "scaling/errors.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/synth_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

using namespace scaling;

namespace {

TrainingCurve make_curve(double n, const std::vector<double>& tokens, const std::function<double(double, double)>& loss)
{
    TrainingCurve curve{"n" + std::to_string(static_cast<long long>(n)), n, {}, {}};
    double step = 1;
    for (double d : tokens) curve.points.push_back({step++, d, 6 * n * d, loss(n, d)});
    return curve;
}

std::vector<double> geometric(double lo, double hi, int count)
{
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / (count - 1)));
    return out;
}

// Brute-force oracle: compare each point against explicit decade-aligned
// edges 10^(k/bpd) computed with pow, independent of the library's binning.
std::map<long, const CurvePoint*> oracle_envelope(const CurveFamily& family, int bpd)
{
    std::map<long, const CurvePoint*> best;
    std::map<long, double> best_n;
    for (const auto& curve : family.curves) {
        for (const auto& p : curve.points) {
            long k = static_cast<long>(std::floor(std::log10(p.flops) * bpd)) - 2;
            while (std::pow(10.0, double(k + 1) / bpd) <= p.flops) ++k;
            while (std::pow(10.0, double(k) / bpd) > p.flops) --k;
            auto it = best.find(k);
            if (it == best.end() || p.loss < it->second->loss ||
                (p.loss == it->second->loss && curve.n_params < best_n[k])) {
                best[k] = &p;
                best_n[k] = curve.n_params;
            }
        }
    }
    return best;
}

const SurfaceParams symmetric{0.5, 0.5, 1e3, 1e4, 1.0};

// Checkpoints every 1/20 decade, offset by a quarter bin so that no point sits
// on a bin edge where rounding of the token count would pick the side.
CurveFamily symmetric_family()
{
    const double offset = std::pow(10.0, 0.025);
    return generate_family(frontier_covering_spec(symmetric, 1e12 * offset, 1e18 * offset, 24, 20, 0.5, 7));
}

} // namespace

TEST_CASE("bins are aligned to decades")
{
    CHECK(bin_index(1.0, 10) == 0);
    CHECK(bin_index(10.0, 10) == 10);
    CHECK(bin_index(9.99, 10) == 9);
    CHECK(bin_index(1e20, 10) == 200);
    CHECK(bin_center(0, 10) == doctest::Approx(std::pow(10.0, 0.05)));
    for (long k = -30; k < 300; k += 7) {
        const double c = bin_center(k, 10);
        CHECK(bin_index(c, 10) == k);
    }
}

TEST_CASE("two crossing curves: the envelope switches at the crossing")
{
    // Small model: loss 2 until 1e12 FLOPs then flat; large: starts worse, ends better.
    CurveFamily family;
    const auto small = [](double n, double d) { return 3.0 - 0.1 * std::log10(6 * n * d); };
    const auto large = [](double n, double d) { return 3.6 - 0.15 * std::log10(6 * n * d); };
    // crossing where 3 - .1x = 3.6 - .15x -> x = 12
    family.curves.push_back(make_curve(1e6, geometric(1e4, 1e7, 80), small));  // C in [6e10, 6e13]
    family.curves.push_back(make_curve(1e7, geometric(1e3, 1e6, 80), large));  // C in [6e10, 6e13]
    const auto envelope = extract_envelope(family, 10);
    REQUIRE(envelope.bins.size() >= 20);
    for (const auto& b : envelope.bins) {
        if (b.c_center < 0.8e12) CHECK(b.n_params == 1e6);
        if (b.c_center > 1.3e12) CHECK(b.n_params == 1e7);
    }
    CHECK(envelope.distinct_models() == 2);
}

TEST_CASE("underdetermined frontiers are rejected")
{
    CurveFamily single;
    single.curves.push_back(make_curve(1e6, geometric(1e4, 1e8, 50), [](double, double d) { return 1 + 10 / std::sqrt(d); }));
    CHECK_THROWS_AS((void)extract_envelope(single), FrontierUnderdetermined);

    CurveFamily disjoint;
    disjoint.curves.push_back(make_curve(1e3, geometric(1e2, 1e3, 10), [](double, double) { return 2.0; }));
    disjoint.curves.push_back(make_curve(1e6, geometric(1e4, 1e5, 10), [](double, double) { return 1.0; }));
    CHECK_THROWS_AS((void)extract_envelope(disjoint), FrontierUnderdetermined);

    // One model dominates everywhere -> only one size on the envelope.
    CurveFamily dominated;
    dominated.curves.push_back(make_curve(1e3, geometric(1e4, 1e6, 10), [](double, double) { return 2.0; }));
    dominated.curves.push_back(make_curve(1e4, geometric(1e3, 1e5, 10), [](double, double) { return 1.0; }));
    CHECK_THROWS_AS((void)extract_envelope(dominated), FrontierUnderdetermined);
    CHECK_THROWS_AS((void)fit_frontier_laws(build_envelope(dominated)), FitError);
}

TEST_CASE("envelope matches a brute-force per-bin minimum")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto spec = default_synthetic_spec(random_law(seed), 1e5, 1e6, 7, seed);
        spec.noise = NoiseModel::lognormal(0.03);
        const auto family = generate_family(spec);
        for (int bpd : {5, 10, 20}) {
            const auto envelope = build_envelope(family, bpd);
            const auto oracle = oracle_envelope(family, bpd);
            REQUIRE(envelope.bins.size() == oracle.size());
            std::size_t i = 0;
            for (const auto& [k, p] : oracle) {
                const auto& b = envelope.bins[i++];
                CHECK(b.c_center == doctest::Approx(std::pow(10.0, (k + 0.5) / bpd)).epsilon(1e-12));
                CHECK(b.loss == p->loss);
                CHECK(b.tokens_seen == p->tokens_seen);
                CHECK(b.flops == p->flops);
            }
        }
    }
}

TEST_CASE("ties go to the smaller model")
{
    CurveFamily family;
    family.curves.push_back(make_curve(100, {10, 100}, [](double, double) { return 1.0; }));
    family.curves.push_back(make_curve(200, {5, 50}, [](double, double) { return 1.0; }));
    const auto envelope = build_envelope(family, 10);
    for (const auto& b : envelope.bins) CHECK(b.n_params == 100);
}

TEST_CASE("exact power-law envelope gives exact exponents")
{
    // Envelope points N = D = sqrt(C/6) built directly.
    FrontierEnvelope envelope;
    for (int k = 0; k < 40; ++k) {
        const double c = std::pow(10.0, 10 + 0.25 * k);
        const double n = std::sqrt(c / 6);
        envelope.bins.push_back({c, "r", n, n, 6 * n * n, 1.0});
    }
    const auto law = fit_frontier_laws(envelope);
    CHECK(law.a == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(law.b == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(law.a0 == doctest::Approx(1 / std::sqrt(6.0)).epsilon(1e-9));
    CHECK(law.r2_n == doctest::Approx(1.0));
    CHECK(law.n_envelope_points == 40);
}

TEST_CASE("symmetric synthetic surface gives a near 0.5")
{
    const auto law = fit_frontier_laws(extract_envelope(symmetric_family(), 10));
    CHECK(std::abs(law.a - 0.5) < 0.03);
    CHECK(std::abs(law.b - 0.5) < 0.03);
    CHECK(law.r2_n > 0.99);
}

TEST_CASE("the two frontier laws are complementary")
{
    for (std::uint64_t seed = 11; seed < 16; ++seed) {
        const auto truth = random_law(seed);
        const auto law = fit_frontier_laws(extract_envelope(generate_family(frontier_covering_spec(truth, 1e14, 1e18, 16, 12, 0.5, seed))));
        CHECK(law.a + law.b == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(law.a0 * law.b0 == doctest::Approx(1.0 / 6).epsilon(1e-9));
    }
}

TEST_CASE("scaling every model and token count by k leaves exponents unchanged")
{
    const auto base = symmetric_family();
    const double k = 10;
    CurveFamily scaled = base;
    for (auto& curve : scaled.curves) {
        curve.n_params *= k;
        for (auto& p : curve.points) {
            p.tokens_seen *= k;
            p.flops = 6 * curve.n_params * p.tokens_seen;
        }
    }
    // Bin edges move by k^2 = 10^2, which is a whole number of decades.
    const auto a = fit_frontier_laws(extract_envelope(base));
    const auto b = fit_frontier_laws(extract_envelope(scaled));
    CHECK(b.a == doctest::Approx(a.a).epsilon(1e-9));
    CHECK(b.b == doctest::Approx(a.b).epsilon(1e-9));
}

TEST_CASE("removing a point that is not on the envelope changes nothing")
{
    auto family = symmetric_family();
    const auto before = extract_envelope(family);
    std::set<std::pair<double, double>> on_envelope;
    for (const auto& b : before.bins) on_envelope.insert({b.n_params, b.tokens_seen});
    int removed = 0;
    for (auto& curve : family.curves) {
        for (std::size_t i = 0; i < curve.points.size() && removed < 50; ++i) {
            if (!on_envelope.contains({curve.n_params, curve.points[i].tokens_seen})) {
                curve.points.erase(curve.points.begin() + static_cast<std::ptrdiff_t>(i));
                ++removed;
                break;
            }
        }
    }
    REQUIRE(removed > 0);
    const auto after = extract_envelope(family);
    REQUIRE(after.bins.size() == before.bins.size());
    for (std::size_t i = 0; i < after.bins.size(); ++i) {
        CHECK(after.bins[i].loss == before.bins[i].loss);
        CHECK(after.bins[i].n_params == before.bins[i].n_params);
    }
}

TEST_CASE("envelope loss is non-increasing for monotone curves")
{
    const auto envelope = extract_envelope(symmetric_family());
    const auto points = envelope_loss_points(envelope);
    REQUIRE(points.size() == envelope.bins.size());
    for (std::size_t i = 1; i < points.size(); ++i) {
        CHECK(points[i].flops > points[i - 1].flops);
        CHECK(points[i].loss <= points[i - 1].loss);
    }
}

TEST_CASE("larger budgets select larger models on the envelope")
{
    const auto envelope = extract_envelope(symmetric_family());
    for (std::size_t i = 1; i < envelope.bins.size(); ++i)
        CHECK(envelope.bins[i].n_params >= envelope.bins[i - 1].n_params);
}

TEST_CASE("envelope CSV")
{
    FrontierEnvelope envelope;
    envelope.bins.push_back({1e3, "r", 10, 5, 300, 2.5});
    std::ostringstream out;
    write_envelope_csv(out, envelope);
    CHECK(out.str() == "c_center,n_params,tokens_seen,loss\n1000,10,5,2.5\n");
}

TEST_CASE("least squares line")
{
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 5, 7, 9};
    const auto fit = least_squares_line(x, y);
    CHECK(fit.slope == doctest::Approx(2));
    CHECK(fit.intercept == doctest::Approx(1));
    CHECK(fit.r2 == doctest::Approx(1));
    const std::vector<double> flat{2, 2, 2, 2};
    CHECK_THROWS_AS((void)least_squares_line(flat, y), FitError);
}
