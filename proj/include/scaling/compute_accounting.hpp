#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scaling {

enum class ArchitectureKind { wm_token, bc_token, bc_cnn, plain_lm };
enum class Task { world_model, behavior_clone };

[[nodiscard]] std::string_view to_string(ArchitectureKind kind) noexcept;
[[nodiscard]] ArchitectureKind parse_architecture_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(Task task) noexcept;
[[nodiscard]] Task parse_task(std::string_view name);

/// How an architecture turns one observation-action pair into transformer
/// inputs. Counts are held as doubles so products reach 1e21+ without overflow.
struct ArchitectureProfile {
    ArchitectureKind kind = ArchitectureKind::plain_lm;
    double d_z = 0;                  // tokens per observation
    double d_a = 0;                  // action tokens per step
    double fixed_encoder_params = 0; // added to N for bc_cnn

    // Informational only.
    std::optional<double> vocab_size;
    std::optional<double> image_width;
    std::optional<double> image_height;

    /// Throws ValidationError when a count is negative or non-integral, or
    /// when a tokenized kind has d_z == 0.
    void validate() const;

    friend bool operator==(const ArchitectureProfile&, const ArchitectureProfile&) = default;
};

/// Training compute in FLOPs.
struct ComputeBudget {
    double flops = 0;

    friend auto operator<=>(const ComputeBudget&, const ComputeBudget&) = default;
};

/// C = 6ND.
[[nodiscard]] ComputeBudget training_flops(double n_params, double tokens);

/// Transformer inputs per observation-action pair: d_z + d_a for tokenized
/// architectures, one for bc_cnn and plain language models.
[[nodiscard]] double tokens_per_pair(const ArchitectureProfile& profile);

/// Share of inputs that carry a training target for `task`.
[[nodiscard]] double supervised_fraction(const ArchitectureProfile& profile, Task task);

/// Inputs consumed by `a` per prediction relative to `b`.
[[nodiscard]] double compute_per_prediction_ratio(const ArchitectureProfile& a,
                                                  const ArchitectureProfile& b);

/// Trainable parameter count N: transformer parameters plus the fixed CNN
/// encoder for bc_cnn. Frozen tokenizers are never counted.
[[nodiscard]] double counted_params(const ArchitectureProfile& profile, double transformer_params);

/// FLOPs ceiling of the infinite-data regime: every pair's tokens may be seen
/// up to `max_epochs` times.
[[nodiscard]] ComputeBudget infinite_data_budget(double n_params, double unique_pairs,
                                                 const ArchitectureProfile& profile,
                                                 double max_epochs = 4);

} // namespace scaling
