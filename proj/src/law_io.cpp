#include "scaling/law_io.hpp"

#include "scaling/errors.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>

namespace scaling {

using nlohmann::json;

namespace {

double number(const json& doc, const char* key)
{
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) throw ValidationError(std::string("missing numeric field '") + key + "'");
    return it->get<double>();
}

bool flag(const json& doc, const char* key, bool fallback)
{
    auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_boolean()) throw ValidationError(std::string("field '") + key + "' must be a boolean");
    return it->get<bool>();
}

std::size_t count(const json& doc, const char* key)
{
    const double v = number(doc, key);
    if (v < 0) throw ValidationError(std::string("field '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

} // namespace

json to_json(const SurfaceParams& p)
{
    return {{"alpha", p.alpha}, {"beta", p.beta}, {"n_c", p.n_c}, {"d_c", p.d_c}, {"e", p.e}};
}

SurfaceParams surface_params_from_json(const json& doc)
{
    return {number(doc, "alpha"), number(doc, "beta"), number(doc, "n_c"), number(doc, "d_c"), number(doc, "e")};
}

json to_json(const FrontierLaw& law)
{
    return {{"kind", "frontier_law"},
            {"a0", law.a0},
            {"a", law.a},
            {"b0", law.b0},
            {"b", law.b},
            {"r2_n", law.r2_n},
            {"r2_d", law.r2_d},
            {"n_envelope_points", law.n_envelope_points},
            {"distinct_models_on_envelope", law.distinct_models_on_envelope},
            {"flops_range", {law.flops_min, law.flops_max}}};
}

FrontierLaw frontier_law_from_json(const json& doc)
{
    FrontierLaw law;
    law.a0 = number(doc, "a0");
    law.a = number(doc, "a");
    law.b0 = number(doc, "b0");
    law.b = number(doc, "b");
    law.r2_n = number(doc, "r2_n");
    law.r2_d = number(doc, "r2_d");
    law.n_envelope_points = count(doc, "n_envelope_points");
    law.distinct_models_on_envelope = count(doc, "distinct_models_on_envelope");
    const auto& range = doc.at("flops_range");
    law.flops_min = range.at(0).get<double>();
    law.flops_max = range.at(1).get<double>();
    return law;
}

json to_json(const ParametricLaw& law)
{
    const auto exponents = derived_allocation_exponents(law);
    return {{"kind", "parametric_law"},
            {"alpha", law.alpha},
            {"beta", law.beta},
            {"n_c", law.n_c},
            {"d_c", law.d_c},
            {"e_irreducible", law.e_irreducible},
            {"derived", {{"a", exponents.a}, {"b", exponents.b}}},
            {"bounds", {{"alpha", "(0, inf)"}, {"beta", "(0, inf)"}, {"n_c", "(0, inf)"}, {"d_c", "(0, inf)"},
                        {"e_irreducible", "(0, inf)"}}},
            {"residual", law.residual},
            {"objective", law.objective},
            {"initial_objective", law.initial_objective},
            {"n_points", law.n_points},
            {"fit_space", to_string(law.fit_space)},
            {"winning_init", to_json(law.winning_init)},
            {"converged", law.converged},
            {"identifiable", law.identifiable},
            {"distinct_model_sizes", law.distinct_model_sizes},
            {"flops_range", {law.flops_min, law.flops_max}}};
}

ParametricLaw parametric_law_from_json(const json& doc)
{
    ParametricLaw law;
    law.alpha = number(doc, "alpha");
    law.beta = number(doc, "beta");
    law.n_c = number(doc, "n_c");
    law.d_c = number(doc, "d_c");
    law.e_irreducible = number(doc, "e_irreducible");
    law.residual = number(doc, "residual");
    law.objective = number(doc, "objective");
    law.initial_objective = number(doc, "initial_objective");
    law.n_points = count(doc, "n_points");
    law.fit_space = parse_fit_space(doc.at("fit_space").get<std::string>());
    law.winning_init = surface_params_from_json(doc.at("winning_init"));
    law.converged = flag(doc, "converged", true);
    law.identifiable = flag(doc, "identifiable", true);
    law.distinct_model_sizes = count(doc, "distinct_model_sizes");
    const auto& range = doc.at("flops_range");
    law.flops_min = range.at(0).get<double>();
    law.flops_max = range.at(1).get<double>();
    if (!(law.alpha > 0 && law.beta > 0 && law.n_c > 0 && law.d_c > 0 && law.e_irreducible >= 0))
        throw ValidationError("parametric law parameters out of bounds");
    return law;
}

json to_json(const LossLaw& law)
{
    return {{"kind", "loss_law"},
            {"c0", law.c0},
            {"c", law.c},
            {"e_irreducible", law.e_irreducible},
            {"bounds", {{"c0", {0.0, "inf"}}, {"c", {-LossLaw::c_bound, LossLaw::c_bound}}, {"e_irreducible", {LossLaw::e_floor, "inf"}}}},
            {"residual", law.residual},
            {"n_points", law.n_points},
            {"e_at_bound", law.e_at_bound},
            {"c_at_bound", law.c_at_bound},
            {"flat", law.flat},
            {"converged", law.converged},
            {"flops_range", {law.flops_min, law.flops_max}}};
}

LossLaw loss_law_from_json(const json& doc)
{
    LossLaw law;
    law.c0 = number(doc, "c0");
    law.c = number(doc, "c");
    law.e_irreducible = number(doc, "e_irreducible");
    law.residual = number(doc, "residual");
    law.n_points = count(doc, "n_points");
    law.e_at_bound = flag(doc, "e_at_bound", false);
    law.c_at_bound = flag(doc, "c_at_bound", false);
    law.flat = flag(doc, "flat", false);
    law.converged = flag(doc, "converged", true);
    const auto& range = doc.at("flops_range");
    law.flops_min = range.at(0).get<double>();
    law.flops_max = range.at(1).get<double>();
    if (law.c0 < 0 || std::abs(law.c) > LossLaw::c_bound || law.e_irreducible < LossLaw::e_floor)
        throw ValidationError("loss law parameters out of bounds");
    return law;
}

json to_json(const AllocationPlan& plan)
{
    json doc = {{"source", to_string(plan.source())},
                {"budget_flops", plan.budget().flops},
                {"n_optimal", plan.n_optimal()},
                {"d_optimal", plan.d_optimal()},
                {"extrapolation_decades", plan.extrapolation_decades}};
    doc["predicted_loss"] = plan.predicted_loss ? json(*plan.predicted_loss) : json(nullptr);
    doc["d_law_discrepancy"] = plan.d_law_discrepancy ? json(*plan.d_law_discrepancy) : json(nullptr);
    return doc;
}

SyntheticSpec synthetic_spec_from_json(const json& doc)
{
    try {
        SyntheticSpec spec;
        spec.truth = surface_params_from_json(doc.at("truth"));
        spec.model_sizes = doc.at("model_sizes").get<std::vector<double>>();
        if (auto it = doc.find("tokens_schedule"); it != doc.end()) {
            spec.tokens_schedule = it->get<std::vector<std::vector<double>>>();
        } else {
            const auto& t = doc.at("tokens");
            const auto schedule = log_uniform_counts(number(t, "first"), number(t, "last"), count(t, "checkpoints"));
            spec.tokens_schedule.assign(spec.model_sizes.size(), schedule);
        }
        if (auto it = doc.find("noise"); it != doc.end()) {
            const std::string kind = it->at("kind").get<std::string>();
            if (kind == "lognormal") spec.noise = NoiseModel::lognormal(number(*it, "sigma"));
            else if (kind != "none") throw ValidationError("noise kind must be 'none' or 'lognormal'");
        }
        if (auto it = doc.find("seed"); it != doc.end()) spec.seed = it->get<std::uint64_t>();
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid synthetic spec: ") + e.what());
    }
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string file_sha256(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

} // namespace scaling
