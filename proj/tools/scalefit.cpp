// scalefit: scaling-law analysis from training-curve logs.
//
// Exit codes: 0 success, 2 ingest error, 3 fit error, 4 config error.

#include "scaling/allocator.hpp"
#include "scaling/compute_accounting.hpp"
#include "scaling/config.hpp"
#include "scaling/correlation.hpp"
#include "scaling/curve_store.hpp"
#include "scaling/errors.hpp"
#include "scaling/frontier_fit.hpp"
#include "scaling/law_io.hpp"
#include "scaling/parametric_fit.hpp"
#include "scaling/synth_oracle.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scaling;

namespace {

enum ExitCode : int { ok = 0, ingest_failure = 2, fit_failure = 3, config_failure = 4 };

/// Pins an exception to the exit code of the stage it escaped from.
struct StageFailure {
    ExitCode code;
    std::string message;
};

template <typename Fn>
auto in_stage(ExitCode code, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw StageFailure{config_failure, e.what()};
    } catch (const Error& e) {
        throw StageFailure{code, e.what()};
    } catch (const json::exception& e) {
        throw StageFailure{code, e.what()};
    }
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

fs::path resolve_out_dir(const std::string& flag, const std::string& from_config)
{
    if (!flag.empty()) return flag;
    if (!from_config.empty()) return from_config;
    if (const char* env = std::getenv("SCALEFIT_OUT_DIR"); env && *env) return env;
    return ".";
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageFailure{ingest_failure, "cannot write " + path.string()};
    out << text;
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::vector<std::string> logs;
    std::string config_path;
    std::vector<std::string> settings;
    std::string out_dir;
    bool lenient = false;
};

EngineConfig load_config(const std::string& path, const std::vector<std::string>& settings)
{
    EngineConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        config = parse_config(in);
    }
    for (const auto& s : settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    config.validate();
    return config;
}

int run_fit(const FitArgs& args)
{
    EngineConfig config = in_stage(config_failure, [&] { return load_config(args.config_path, args.settings); });
    if (args.lenient) config.strict_ingest = false;
    const fs::path out_dir = resolve_out_dir(args.out_dir, config.output_dir);

    json inputs = json::array();
    const CurveFamily family = in_stage(ingest_failure, [&] {
        std::vector<RunRecord> records;
        for (const auto& path : args.logs) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw IngestError("cannot open " + path);
            ParseOptions options{guess_log_format(path), config.strict_ingest, config.loss_units};
            ParseResult parsed;
            try {
                parsed = parse_run_log(in, options);
            } catch (const IngestError& e) {
                throw IngestError(path + ": " + e.what());
            }
            for (const auto& issue : parsed.issues) warn(fmt::format("{}:{}: {}", path, issue.line, issue.message));
            records.insert(records.end(), parsed.records.begin(), parsed.records.end());
            inputs.push_back({{"path", path}, {"sha256", file_sha256(path)}, {"records", parsed.records.size()},
                              {"rejected", parsed.issues.size()}});
        }
        std::vector<std::string> warnings;
        BuildOptions build{config.smoothing, config.warmup_tokens, config.profile, config.label};
        CurveFamily built = build_curves(records, build, &warnings);
        for (const auto& w : warnings) warn(w);
        return built;
    });

    const json provenance = {{"tool", "scalefit"},
                             {"label", config.label},
                             {"config_sha256", sha256_hex(config.canonical())},
                             {"inputs", inputs}};

    std::optional<FrontierEnvelope> envelope;
    std::optional<FrontierLaw> frontier;
    try {
        envelope = extract_envelope(family, config.bins_per_decade);
        frontier = fit_frontier_laws(*envelope);
    } catch (const FrontierUnderdetermined& e) {
        warn(std::string("frontier fit skipped: ") + e.what());
    } catch (const FitError& e) {
        warn(std::string("frontier fit skipped: ") + e.what());
    }

    const FrontierEnvelope loss_envelope =
        envelope ? *envelope : in_stage(fit_failure, [&] { return build_envelope(family, config.bins_per_decade); });

    const ParametricLaw parametric = in_stage(fit_failure, [&] {
        if (!config.envelope_only) return fit_parametric(family, config.fit);
        std::vector<SurfacePoint> points;
        for (const auto& p : loss_envelope.bins) points.push_back({p.n_params, p.tokens_seen, p.loss});
        return fit_parametric(points, config.fit);
    });
    if (!parametric.identifiable) warn("parametric fit: a single model size cannot identify alpha; treat exponents as unreliable");

    const LossLaw loss_law = in_stage(fit_failure, [&] { return fit_loss_law(envelope_loss_points(loss_envelope)); });
    if (loss_law.boundary_active()) warn("loss law: a parameter sits on its bound");
    if (loss_law.flat) warn("loss law: fitted curve is flat over the data range");

    fs::create_directories(out_dir);
    auto with_provenance = [&](json doc) {
        doc["provenance"] = provenance;
        return doc.dump(2) + '\n';
    };
    if (frontier) write_text(out_dir / "frontier_law.json", with_provenance(to_json(*frontier)));
    else fs::remove(out_dir / "frontier_law.json");
    write_text(out_dir / "parametric_law.json", with_provenance(to_json(parametric)));
    write_text(out_dir / "loss_law.json", with_provenance(to_json(loss_law)));
    std::ostringstream csv;
    write_envelope_csv(csv, loss_envelope);
    write_text(out_dir / "envelope.csv", csv.str());

    const auto exps = derived_allocation_exponents(parametric);
    std::cout << fmt::format("curves: {}  points: {}\n", family.curves.size(), family.point_count());
    if (frontier)
        std::cout << fmt::format("frontier:   N_opt = {:.4g} C^{:.4f}   D_opt = {:.4g} C^{:.4f}\n", frontier->a0, frontier->a,
                                 frontier->b0, frontier->b);
    std::cout << fmt::format("parametric: alpha={:.4f} beta={:.4f} n_c={:.4g} d_c={:.4g} E={:.4f}  (a={:.4f}, b={:.4f})\n",
                             parametric.alpha, parametric.beta, parametric.n_c, parametric.d_c, parametric.e_irreducible,
                             exps.a, exps.b);
    std::cout << fmt::format("loss law:   L_opt = {:.4g} C^-{:.4f} + {:.4f}\n", loss_law.c0, loss_law.c,
                             loss_law.e_irreducible);
    std::cout << "artifacts written to " << out_dir.string() << '\n';
    return ok;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string artifacts;
    std::vector<double> budgets;
    std::string sweep;
    std::string out_dir;
};

std::vector<double> parse_sweep(const std::string& text)
{
    double lo = 0, hi = 0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || !(lo > 0) || !(hi >= lo) || n < 1)
        throw ConfigError("--sweep expects lo:hi:count with 0 < lo <= hi");
    std::vector<double> out;
    for (long i = 0; i < n; ++i)
        out.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
    return out;
}

int run_predict(const PredictArgs& args)
{
    std::vector<double> budgets = args.budgets;
    if (!args.sweep.empty()) {
        const auto swept = in_stage(config_failure, [&] { return parse_sweep(args.sweep); });
        budgets.insert(budgets.end(), swept.begin(), swept.end());
    }
    if (budgets.empty()) throw StageFailure{config_failure, "predict needs at least one --budget or --sweep"};
    for (double b : budgets)
        if (!(b > 0) || !std::isfinite(b)) throw StageFailure{config_failure, "budgets must be positive"};

    const fs::path dir = args.artifacts;
    std::optional<FrontierLaw> frontier;
    std::optional<ParametricLaw> parametric;
    std::optional<LossLaw> loss_law;
    in_stage(ingest_failure, [&] {
        if (fs::exists(dir / "frontier_law.json")) frontier = frontier_law_from_json(read_json_file(dir / "frontier_law.json"));
        if (fs::exists(dir / "parametric_law.json"))
            parametric = parametric_law_from_json(read_json_file(dir / "parametric_law.json"));
        if (fs::exists(dir / "loss_law.json")) loss_law = loss_law_from_json(read_json_file(dir / "loss_law.json"));
        if (!frontier && !parametric) throw IngestError("no law artifacts in " + dir.string());
        return 0;
    });

    std::vector<AllocationPlan> plans;
    for (double b : budgets) {
        if (frontier) plans.push_back(allocate_from_frontier(*frontier, {b}, loss_law ? &*loss_law : nullptr));
        if (parametric) plans.push_back(allocate_from_parametric(*parametric, {b}));
    }

    json rows = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "source,budget_flops,n_optimal,d_optimal,predicted_loss,extrapolation_decades,d_law_discrepancy\n";
    std::cout << fmt::format("{:<15} {:>12} {:>12} {:>12} {:>10} {:>8}\n", "source", "C", "N_opt", "D_opt", "L_pred",
                             "extrap");
    for (const auto& plan : plans) {
        rows.push_back(to_json(plan));
        csv << to_string(plan.source()) << ',' << plan.budget().flops << ',' << plan.n_optimal() << ','
            << plan.d_optimal() << ',';
        if (plan.predicted_loss) csv << *plan.predicted_loss;
        csv << ',' << plan.extrapolation_decades << ',';
        if (plan.d_law_discrepancy) csv << *plan.d_law_discrepancy;
        csv << '\n';
        std::cout << fmt::format("{:<15} {:>12.4g} {:>12.4g} {:>12.4g} {:>10} {:>8.2f}\n", to_string(plan.source()),
                                 plan.budget().flops, plan.n_optimal(), plan.d_optimal(),
                                 plan.predicted_loss ? fmt::format("{:.4f}", *plan.predicted_loss) : "-",
                                 plan.extrapolation_decades);
    }

    const fs::path out_dir = resolve_out_dir(args.out_dir, args.artifacts);
    fs::create_directories(out_dir);
    write_text(out_dir / "allocations.json", json{{"plans", rows}}.dump(2) + '\n');
    write_text(out_dir / "allocations.csv", csv.str());
    return ok;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const std::string& spec_path, const std::string& out_flag)
{
    const SyntheticSpec spec = in_stage(config_failure, [&] {
        std::ifstream in(spec_path);
        if (!in) throw ConfigError("cannot open spec " + spec_path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(spec_path + ": " + e.what());
        }
        try {
            return synthetic_spec_from_json(doc);
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        }
    });
    const fs::path out_dir = resolve_out_dir(out_flag, "");
    fs::create_directories(out_dir);
    const CurveFamily family = generate_family(spec);
    for (const auto& curve : family.curves) {
        std::ostringstream text;
        write_line_json(text, curve);
        write_text(out_dir / (curve.run_id + ".jsonl"), text.str());
    }
    std::cout << fmt::format("wrote {} run logs to {}\n", family.curves.size(), out_dir.string());
    return ok;
}

// ---------------------------------------------------------------------------
// budget

struct BudgetArgs {
    std::string kind = "wm_token";
    double d_z = 0, d_a = 0, encoder_params = 0;
    double n_params = 0, pairs = 0, epochs = 4;
    bool as_json = false;
};

int run_budget(const BudgetArgs& args)
{
    return in_stage(config_failure, [&] {
        ArchitectureProfile profile;
        profile.kind = parse_architecture_kind(args.kind);
        profile.d_z = args.d_z;
        profile.d_a = args.d_a;
        profile.fixed_encoder_params = args.encoder_params;
        const double per_pair = tokens_per_pair(profile);
        const double n = counted_params(profile, args.n_params);
        const double unique_tokens = args.pairs * per_pair;
        const double effective = unique_tokens * args.epochs;
        const ComputeBudget ceiling = infinite_data_budget(n, args.pairs, profile, args.epochs);
        if (args.as_json) {
            std::cout << json{{"kind", to_string(profile.kind)},
                              {"tokens_per_pair", per_pair},
                              {"n_params", n},
                              {"unique_tokens", unique_tokens},
                              {"effective_tokens", effective},
                              {"max_epochs", args.epochs},
                              {"flops_ceiling", ceiling.flops}}
                             .dump(2)
                      << '\n';
        } else {
            std::cout << fmt::format("tokens per pair:   {}\n", per_pair)
                      << fmt::format("parameters N:      {:.4g}\n", n)
                      << fmt::format("unique tokens:     {:.4g}\n", unique_tokens)
                      << fmt::format("effective tokens:  {:.4g} ({} epochs)\n", effective, args.epochs)
                      << fmt::format("FLOPs ceiling:     {:.4g}\n", ceiling.flops);
        }
        return static_cast<int>(ok);
    });
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateArgs {
    std::vector<std::string> csvs;
    std::vector<std::string> higher_is_better;
    bool rank = false;
    std::string out_dir;
};

int run_correlate(const CorrelateArgs& args)
{
    const auto series = in_stage(ingest_failure, [&] {
        std::vector<MetricSeries> out;
        for (const auto& path : args.csvs) {
            std::ifstream in(path);
            if (!in) throw IngestError("cannot open " + path);
            MetricSeries s = read_metric_csv(in, BetterDirection::lower);
            for (const auto& name : args.higher_is_better)
                if (name == s.metric_name || name == fs::path(path).stem().string())
                    s.better_direction = BetterDirection::higher;
            s.validate();
            out.push_back(std::move(s));
        }
        return out;
    });
    const auto rows = proxy_report(series, args.rank);
    write_proxy_table(std::cout, rows);
    if (!args.out_dir.empty()) {
        json doc = json::array();
        for (const auto& row : rows)
            doc.push_back({{"metric_name", row.metric_name},
                           {"r", row.r ? json(*row.r) : json(nullptr)},
                           {"n", row.n},
                           {"better_direction", to_string(row.better_direction)},
                           {"direction_consistent", row.direction_consistent},
                           {"method", args.rank ? "spearman" : "pearson"}});
        fs::create_directories(args.out_dir);
        write_text(fs::path(args.out_dir) / "correlation.json", json{{"rows", doc}}.dump(2) + '\n');
    }
    return ok;
}

// ---------------------------------------------------------------------------
// report

int run_report(const std::vector<std::string>& dirs)
{
    std::cout << fmt::format("{:<24} {:>14} {:>14} {:>14} {:>14}\n", "", "Frontier fit", "", "Parametric fit", "");
    std::cout << fmt::format("{:<24} {:>14} {:>14} {:>14} {:>14}\n", "Experiment", "N_opt ~ C^a", "D_opt ~ C^b",
                             "N_opt ~ C^a", "D_opt ~ C^b");
    for (const auto& d : dirs) {
        const fs::path dir = d;
        std::string label = dir.filename().string();
        std::string fa = "N/A", fb = "N/A", pa = "N/A", pb = "N/A";
        in_stage(ingest_failure, [&] {
            if (fs::exists(dir / "frontier_law.json")) {
                const json doc = read_json_file(dir / "frontier_law.json");
                const auto law = frontier_law_from_json(doc);
                fa = fmt::format("{:.2f}", law.a);
                fb = fmt::format("{:.2f}", law.b);
                if (doc.contains("provenance") && !doc["provenance"].value("label", "").empty())
                    label = doc["provenance"]["label"].get<std::string>();
            }
            if (fs::exists(dir / "parametric_law.json")) {
                const json doc = read_json_file(dir / "parametric_law.json");
                const auto e = derived_allocation_exponents(parametric_law_from_json(doc));
                pa = fmt::format("{:.2f}", e.a);
                pb = fmt::format("{:.2f}", e.b);
                if (doc.contains("provenance") && !doc["provenance"].value("label", "").empty())
                    label = doc["provenance"]["label"].get<std::string>();
            }
            if (fa == "N/A" && pa == "N/A") throw IngestError("no law artifacts in " + dir.string());
            return 0;
        });
        std::cout << fmt::format("{:<24} {:>14} {:>14} {:>14} {:>14}\n", label, fa, fb, pa, pb);
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"scalefit - fit scaling laws to training-curve logs"};
    app.require_subcommand(1);

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit frontier, parametric and loss laws to run logs");
    fit->add_option("logs", fit_args.logs, "Line-JSON (.jsonl) or CSV (.csv) run logs")->required();
    fit->add_option("-c,--config", fit_args.config_path, "key = value configuration file");
    fit->add_option("--set", fit_args.settings, "Override a configuration key (key=value)");
    fit->add_option("-o,--out", fit_args.out_dir, "Artifact directory");
    fit->add_flag("--lenient", fit_args.lenient, "Skip invalid records instead of failing");

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Compute-optimal allocations from fitted laws");
    predict->add_option("-a,--artifacts", predict_args.artifacts, "Directory written by `fit`")->required();
    predict->add_option("-b,--budget", predict_args.budgets, "FLOPs budget (repeatable)");
    predict->add_option("--sweep", predict_args.sweep, "Log-spaced budgets lo:hi:count");
    predict->add_option("-o,--out", predict_args.out_dir, "Output directory (default: the artifact directory)");

    std::string synth_spec, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate synthetic run logs from a known law");
    synth->add_option("spec", synth_spec, "Synthetic spec (JSON)")->required();
    synth->add_option("-o,--out", synth_out, "Output directory");

    BudgetArgs budget_args;
    auto* budget = app.add_subcommand("budget", "Infinite-data FLOPs ceiling for a dataset");
    budget->add_option("--kind", budget_args.kind, "wm_token | bc_token | bc_cnn | plain_lm");
    budget->add_option("--d-z", budget_args.d_z, "Tokens per observation");
    budget->add_option("--d-a", budget_args.d_a, "Action tokens per step");
    budget->add_option("--encoder-params", budget_args.encoder_params, "Fixed CNN encoder parameters (bc_cnn)");
    budget->add_option("-n,--params", budget_args.n_params, "Transformer parameters")->required();
    budget->add_option("--pairs", budget_args.pairs, "Unique observation-action pairs")->required();
    budget->add_option("--epochs", budget_args.epochs, "Maximum reuse of each token")->capture_default_str();
    budget->add_flag("--json", budget_args.as_json, "Emit JSON");

    CorrelateArgs corr_args;
    auto* correlate = app.add_subcommand("correlate", "Correlate pre-training loss with downstream metrics");
    correlate->add_option("csvs", corr_args.csvs, "CSV files with loss and metric columns")->required();
    correlate->add_option("--higher-is-better", corr_args.higher_is_better, "Metric (or file stem) where higher is better");
    correlate->add_flag("--rank", corr_args.rank, "Use rank (Spearman) correlation");
    correlate->add_option("-o,--out", corr_args.out_dir, "Write correlation.json here");

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "Summarise fitted coefficients across artifact directories");
    report->add_option("dirs", report_dirs, "Directories written by `fit`")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_failure;
    }

    try {
        if (*fit) return run_fit(fit_args);
        if (*predict) return run_predict(predict_args);
        if (*synth) return run_synth(synth_spec, synth_out);
        if (*budget) return run_budget(budget_args);
        if (*correlate) return run_correlate(corr_args);
        if (*report) return run_report(report_dirs);
    } catch (const StageFailure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return ok;
}
