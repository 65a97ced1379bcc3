#include "scaling/config.hpp"

#include "scaling/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

namespace scaling {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double to_double(std::string_view key, std::string_view text)
{
    const std::string s = trim(text);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size() || !std::isfinite(v))
        throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
    return v;
}

long to_integer(std::string_view key, std::string_view text)
{
    const double v = to_double(key, text);
    if (std::floor(v) != v) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, text));
    return static_cast<long>(v);
}

std::optional<double> to_optional(std::string_view key, std::string_view text)
{
    if (trim(text) == "none") return std::nullopt;
    return to_double(key, text);
}

bool to_bool(std::string_view key, std::string_view text)
{
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

std::vector<double> to_list(std::string_view key, std::string_view text)
{
    std::vector<double> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError(fmt::format("{}: expected a comma-separated list", key));
    return out;
}

std::string list_text(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{}", v[i]);
    return out;
}

template <typename Fn>
auto rethrow_as_config(std::string_view key, Fn&& fn)
{
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

} // namespace

const std::vector<std::string_view>& config_keys()
{
    static const std::vector<std::string_view> keys{
        "bins_per_decade",       "fit.envelope_only",     "fit.huber_delta",   "fit.init.alpha",
        "fit.init.beta",         "fit.init.d_c",          "fit.init.e_fraction", "fit.init.n_c",
        "fit.max_iterations",    "fit.max_points_per_run", "fit.space",         "fit.threads",
        "fit.xtol",              "ingest.strict",         "label",             "loss_units",
        "output_dir",            "profile.d_a",           "profile.d_z",       "profile.fixed_encoder_params",
        "profile.image_height",  "profile.image_width",   "profile.kind",      "profile.vocab_size",
        "smoothing",             "smoothing.half_life_tokens", "warmup_tokens",
    };
    return keys;
}

void apply_setting(EngineConfig& c, std::string_view key, std::string_view value)
{
    const std::string v = trim(value);
    if (key == "profile.kind") c.profile.kind = rethrow_as_config(key, [&] { return parse_architecture_kind(v); });
    else if (key == "profile.d_z") c.profile.d_z = to_double(key, v);
    else if (key == "profile.d_a") c.profile.d_a = to_double(key, v);
    else if (key == "profile.fixed_encoder_params") c.profile.fixed_encoder_params = to_double(key, v);
    else if (key == "profile.vocab_size") c.profile.vocab_size = to_optional(key, v);
    else if (key == "profile.image_width") c.profile.image_width = to_optional(key, v);
    else if (key == "profile.image_height") c.profile.image_height = to_optional(key, v);
    else if (key == "smoothing") {
        if (v == "none") c.smoothing.kind = Smoothing::Kind::none;
        else if (v == "ema") c.smoothing.kind = Smoothing::Kind::ema;
        else throw ConfigError(fmt::format("smoothing: expected none or ema, got '{}'", v));
    } else if (key == "smoothing.half_life_tokens") c.smoothing.half_life_tokens = to_double(key, v);
    else if (key == "warmup_tokens") c.warmup_tokens = to_double(key, v);
    else if (key == "bins_per_decade") c.bins_per_decade = static_cast<int>(to_integer(key, v));
    else if (key == "loss_units") {
        if (v == "nats") c.loss_units = LossUnits::nats;
        else if (v == "bits") c.loss_units = LossUnits::bits;
        else throw ConfigError(fmt::format("loss_units: expected nats or bits, got '{}'", v));
    } else if (key == "ingest.strict") c.strict_ingest = to_bool(key, v);
    else if (key == "fit.space") c.fit.space = rethrow_as_config(key, [&] { return parse_fit_space(v); });
    else if (key == "fit.init.alpha") c.fit.grid.alphas = to_list(key, v);
    else if (key == "fit.init.beta") c.fit.grid.betas = to_list(key, v);
    else if (key == "fit.init.n_c") c.fit.grid.n_cs = to_list(key, v);
    else if (key == "fit.init.d_c") c.fit.grid.d_cs = to_list(key, v);
    else if (key == "fit.init.e_fraction") c.fit.grid.e_fractions = to_list(key, v);
    else if (key == "fit.max_iterations") c.fit.lm.max_iterations = static_cast<int>(to_integer(key, v));
    else if (key == "fit.xtol") c.fit.lm.xtol = to_double(key, v);
    else if (key == "fit.huber_delta") c.fit.huber_delta = to_double(key, v);
    else if (key == "fit.max_points_per_run") {
        const long n = to_integer(key, v);
        if (n <= 0) throw ConfigError("fit.max_points_per_run must be positive");
        c.fit.max_points_per_run = static_cast<std::size_t>(n);
    } else if (key == "fit.threads") {
        const long n = to_integer(key, v);
        if (n < 0) throw ConfigError("fit.threads must be non-negative");
        c.fit.threads = static_cast<unsigned>(n);
    } else if (key == "fit.envelope_only") c.envelope_only = to_bool(key, v);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "label") c.label = v;
    else throw ConfigError(fmt::format("unknown configuration key '{}'", key));
}

void EngineConfig::validate() const
{
    rethrow_as_config("profile", [&] {
        profile.validate();
        return 0;
    });
    if (smoothing.kind == Smoothing::Kind::ema && !(smoothing.half_life_tokens > 0))
        throw ConfigError("smoothing.half_life_tokens must be positive when smoothing = ema");
    if (!(warmup_tokens >= 0)) throw ConfigError("warmup_tokens must be non-negative");
    if (bins_per_decade <= 0) throw ConfigError("bins_per_decade must be positive");
    if (fit.lm.max_iterations <= 0) throw ConfigError("fit.max_iterations must be positive");
    if (!(fit.lm.xtol > 0)) throw ConfigError("fit.xtol must be positive");
    if (!(fit.huber_delta > 0)) throw ConfigError("fit.huber_delta must be positive");
    auto positive = [](const std::vector<double>& v) {
        return !v.empty() && std::ranges::all_of(v, [](double x) { return x > 0; });
    };
    if (!positive(fit.grid.alphas) || !positive(fit.grid.betas) || !positive(fit.grid.n_cs) ||
        !positive(fit.grid.d_cs) || !positive(fit.grid.e_fractions))
        throw ConfigError("fit.init.* lists must be non-empty and strictly positive");
}

std::string EngineConfig::canonical() const
{
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("none"); };
    std::vector<std::string> lines{
        fmt::format("bins_per_decade = {}", bins_per_decade),
        fmt::format("fit.envelope_only = {}", envelope_only),
        fmt::format("fit.huber_delta = {}", fit.huber_delta),
        fmt::format("fit.init.alpha = {}", list_text(fit.grid.alphas)),
        fmt::format("fit.init.beta = {}", list_text(fit.grid.betas)),
        fmt::format("fit.init.d_c = {}", list_text(fit.grid.d_cs)),
        fmt::format("fit.init.e_fraction = {}", list_text(fit.grid.e_fractions)),
        fmt::format("fit.init.n_c = {}", list_text(fit.grid.n_cs)),
        fmt::format("fit.max_iterations = {}", fit.lm.max_iterations),
        fmt::format("fit.max_points_per_run = {}", fit.max_points_per_run),
        fmt::format("fit.space = {}", to_string(fit.space)),
        fmt::format("fit.xtol = {}", fit.lm.xtol),
        fmt::format("ingest.strict = {}", strict_ingest),
        fmt::format("label = {}", label),
        fmt::format("loss_units = {}", loss_units == LossUnits::nats ? "nats" : "bits"),
        fmt::format("profile.d_a = {}", profile.d_a),
        fmt::format("profile.d_z = {}", profile.d_z),
        fmt::format("profile.fixed_encoder_params = {}", profile.fixed_encoder_params),
        fmt::format("profile.image_height = {}", opt(profile.image_height)),
        fmt::format("profile.image_width = {}", opt(profile.image_width)),
        fmt::format("profile.kind = {}", to_string(profile.kind)),
        fmt::format("profile.vocab_size = {}", opt(profile.vocab_size)),
        fmt::format("smoothing = {}", smoothing.kind == Smoothing::Kind::ema ? "ema" : "none"),
        fmt::format("smoothing.half_life_tokens = {}", smoothing.half_life_tokens),
        fmt::format("warmup_tokens = {}", warmup_tokens),
    };
    std::string out;
    for (const auto& line : lines) out += line + '\n';
    return out;
}

EngineConfig parse_config(std::istream& in, EngineConfig base)
{
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line.substr(0, line.find('#')));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
        const std::string key = trim(std::string_view(text).substr(0, eq));
        if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: '{}' set twice", line_no, key));
        try {
            apply_setting(base, key, std::string_view(text).substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    base.validate();
    return base;
}

} // namespace scaling
