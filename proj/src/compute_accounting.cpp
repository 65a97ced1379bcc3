#include "scaling/compute_accounting.hpp"

#include "scaling/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace scaling {

namespace {

void require_count(double value, const char* name)
{
    if (!std::isfinite(value) || value < 0)
        throw ValidationError(std::string(name) + " must be finite and non-negative");
    if (std::floor(value) != value)
        throw ValidationError(std::string(name) + " must be an integer count");
}

void require_non_negative(double value, const char* name)
{
    if (!std::isfinite(value) || value < 0)
        throw ValidationError(std::string(name) + " must be finite and non-negative");
}

} // namespace

std::string_view to_string(ArchitectureKind kind) noexcept
{
    switch (kind) {
    case ArchitectureKind::wm_token: return "wm_token";
    case ArchitectureKind::bc_token: return "bc_token";
    case ArchitectureKind::bc_cnn: return "bc_cnn";
    case ArchitectureKind::plain_lm: return "plain_lm";
    }
    return "unknown";
}

ArchitectureKind parse_architecture_kind(std::string_view name)
{
    if (name == "wm_token") return ArchitectureKind::wm_token;
    if (name == "bc_token") return ArchitectureKind::bc_token;
    if (name == "bc_cnn") return ArchitectureKind::bc_cnn;
    if (name == "plain_lm") return ArchitectureKind::plain_lm;
    throw ValidationError("unknown architecture kind '" + std::string(name) + "'");
}

std::string_view to_string(Task task) noexcept
{
    return task == Task::world_model ? "world_model" : "behavior_clone";
}

Task parse_task(std::string_view name)
{
    if (name == "world_model") return Task::world_model;
    if (name == "behavior_clone") return Task::behavior_clone;
    throw ValidationError("unknown task '" + std::string(name) + "'");
}

void ArchitectureProfile::validate() const
{
    require_count(d_z, "d_z");
    require_count(d_a, "d_a");
    require_count(fixed_encoder_params, "fixed_encoder_params");
    if ((kind == ArchitectureKind::wm_token || kind == ArchitectureKind::bc_token) && d_z <= 0)
        throw ValidationError("tokenized profiles require d_z > 0");
}

ComputeBudget training_flops(double n_params, double tokens)
{
    require_non_negative(n_params, "n_params");
    require_non_negative(tokens, "tokens");
    const double flops = 6.0 * n_params * tokens;
    if (!std::isfinite(flops)) throw ValidationError("training FLOPs overflow");
    return {flops};
}

double tokens_per_pair(const ArchitectureProfile& profile)
{
    profile.validate();
    switch (profile.kind) {
    case ArchitectureKind::wm_token:
    case ArchitectureKind::bc_token: return profile.d_z + profile.d_a;
    case ArchitectureKind::bc_cnn:
    case ArchitectureKind::plain_lm: return 1.0;
    }
    return 1.0;
}

double supervised_fraction(const ArchitectureProfile& profile, Task task)
{
    profile.validate();
    switch (profile.kind) {
    case ArchitectureKind::wm_token:
    case ArchitectureKind::bc_token: {
        const double total = profile.d_z + profile.d_a;
        return task == Task::world_model ? profile.d_z / total : profile.d_a / total;
    }
    case ArchitectureKind::bc_cnn:
        if (task != Task::behavior_clone)
            throw DomainError("bc_cnn profiles only support behavior_clone");
        return 1.0;
    case ArchitectureKind::plain_lm:
        if (task != Task::world_model)
            throw DomainError("plain_lm profiles only support next-token (world_model) prediction");
        return 1.0;
    }
    return 1.0;
}

double compute_per_prediction_ratio(const ArchitectureProfile& a, const ArchitectureProfile& b)
{
    return tokens_per_pair(a) / tokens_per_pair(b);
}

double counted_params(const ArchitectureProfile& profile, double transformer_params)
{
    profile.validate();
    require_non_negative(transformer_params, "transformer_params");
    if (profile.kind == ArchitectureKind::bc_cnn) return transformer_params + profile.fixed_encoder_params;
    return transformer_params;
}

ComputeBudget infinite_data_budget(double n_params, double unique_pairs,
                                   const ArchitectureProfile& profile, double max_epochs)
{
    require_count(n_params, "n_params");
    require_count(unique_pairs, "unique_pairs");
    require_count(max_epochs, "max_epochs");
    const double effective_tokens = unique_pairs * tokens_per_pair(profile) * max_epochs;
    if (!std::isfinite(effective_tokens)) throw ValidationError("effective token count overflow");
    return training_flops(n_params, effective_tokens);
}

} // namespace scaling
