#pragma once

#include "scaling/allocator.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/parametric_fit.hpp"
#include "scaling/synth_oracle.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace scaling {

// JSON documents for fitted laws and plans. Readers throw ValidationError on
// missing or mistyped fields.

[[nodiscard]] nlohmann::json to_json(const FrontierLaw& law);
[[nodiscard]] nlohmann::json to_json(const ParametricLaw& law);
[[nodiscard]] nlohmann::json to_json(const LossLaw& law);
[[nodiscard]] nlohmann::json to_json(const AllocationPlan& plan);
[[nodiscard]] nlohmann::json to_json(const SurfaceParams& params);

[[nodiscard]] FrontierLaw frontier_law_from_json(const nlohmann::json& doc);
[[nodiscard]] ParametricLaw parametric_law_from_json(const nlohmann::json& doc);
[[nodiscard]] LossLaw loss_law_from_json(const nlohmann::json& doc);
[[nodiscard]] SurfaceParams surface_params_from_json(const nlohmann::json& doc);

/// Synthetic spec file:
///   {"truth": {"alpha":..,"beta":..,"n_c":..,"d_c":..,"e":..},
///    "model_sizes": [...],
///    "tokens": {"first": D0, "last": D1, "checkpoints": K}   (shared schedule)
///      or "tokens_schedule": [[...], ...]                    (per model),
///    "noise": {"kind": "none"} | {"kind": "lognormal", "sigma": s},
///    "seed": 42}
[[nodiscard]] SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc);

[[nodiscard]] std::string sha256_hex(std::string_view data);
[[nodiscard]] std::string file_sha256(const std::filesystem::path& path);

} // namespace scaling
