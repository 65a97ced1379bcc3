#pragma once

#include "scaling/compute_accounting.hpp"
#include "scaling/curve_store.hpp"
#include "scaling/parametric_fit.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace scaling {

/// Everything a `fit` run depends on. Loaded from a `key = value` file;
/// unknown or repeated keys are errors.
struct EngineConfig {
    ArchitectureProfile profile;
    Smoothing smoothing;
    double warmup_tokens = 0;
    int bins_per_decade = 10;
    LossUnits loss_units = LossUnits::nats;
    bool strict_ingest = true;
    ParametricFitOptions fit;
    bool envelope_only = false; // parametric fit on envelope points only
    std::string output_dir;
    std::string label;

    /// Throws ConfigError.
    void validate() const;

    /// Sorted `key = value` lines covering every setting; hashed into artifacts.
    [[nodiscard]] std::string canonical() const;
};

[[nodiscard]] const std::vector<std::string_view>& config_keys();

/// Sets one key from its textual value. Throws ConfigError on unknown keys or
/// unparsable values.
void apply_setting(EngineConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines (blank lines and `#` comments ignored) on top of
/// `base` and validates the result.
[[nodiscard]] EngineConfig parse_config(std::istream& in, EngineConfig base = {});

} // namespace scaling
