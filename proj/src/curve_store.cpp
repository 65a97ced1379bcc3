#include "scaling/curve_store.hpp"

#include "scaling/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_map>

namespace scaling {

namespace {

using nlohmann::json;

// Python's json module writes NaN/Infinity literals, which are not JSON.
// Quote them so the field-level validation can name the offending field.
std::string quote_non_finite_literals(const std::string& line)
{
    std::string out;
    out.reserve(line.size() + 8);
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < line.size()) out += line[++i];
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            out += c;
            continue;
        }
        bool replaced = false;
        for (const std::string_view literal : {"-Infinity", "Infinity", "NaN"}) {
            if (line.compare(i, literal.size(), literal) == 0) {
                out += '"';
                out += literal;
                out += '"';
                i += literal.size() - 1;
                replaced = true;
                break;
            }
        }
        if (!replaced) out += c;
    }
    return out;
}

bool valid_utf8(std::string_view s)
{
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        if (c < 0x80) extra = 0;
        else if ((c >> 5) == 0x6) extra = 1;
        else if ((c >> 4) == 0xE) extra = 2;
        else if ((c >> 3) == 0x1E) extra = 3;
        else return false;
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k)
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        i += extra + 1;
    }
    return true;
}

struct FieldError {
    std::string field;
    std::string message;
};

double number_from_json(const json& value, const std::string& field)
{
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    throw FieldError{field, "field '" + field + "' must be a number"};
}

double parse_number_text(const std::string& text, const std::string& field)
{
    std::size_t used = 0;
    double value = 0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw FieldError{field, "field '" + field + "' is not a number: '" + text + "'"};
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw FieldError{field, "field '" + field + "' is not a number: '" + text + "'"};
    return value;
}

void check_count(double value, const std::string& field)
{
    if (!std::isfinite(value) || value < 0 || std::floor(value) != value)
        throw FieldError{field, "field '" + field + "' must be a non-negative integer"};
}

void check_record(const RunRecord& r)
{
    if (r.run_id.empty()) throw FieldError{"run_id", "field 'run_id' must be a non-empty string"};
    check_count(r.n_params, "n_params");
    if (r.n_params == 0) throw FieldError{"n_params", "field 'n_params' must be positive"};
    check_count(r.step, "step");
    check_count(r.tokens_seen, "tokens_seen");
    if (!std::isfinite(r.loss) || r.loss <= 0)
        throw FieldError{"loss", "field 'loss' must be finite and positive"};
    if (r.learning_rate && !std::isfinite(*r.learning_rate))
        throw FieldError{"learning_rate", "field 'learning_rate' must be finite"};
}

RunRecord record_from_json_line(const std::string& line)
{
    json doc;
    try {
        doc = json::parse(quote_non_finite_literals(line));
    } catch (const json::parse_error& e) {
        throw FieldError{"", std::string("malformed JSON: ") + e.what()};
    }
    if (!doc.is_object()) throw FieldError{"", "record must be a JSON object"};

    auto required = [&](const char* name) -> const json& {
        auto it = doc.find(name);
        if (it == doc.end()) throw FieldError{name, std::string("missing required field '") + name + "'"};
        return *it;
    };

    RunRecord r;
    const json& id = required("run_id");
    if (id.is_string()) r.run_id = id.get<std::string>();
    else if (id.is_number_integer()) r.run_id = id.dump();
    else throw FieldError{"run_id", "field 'run_id' must be a string"};
    r.n_params = number_from_json(required("n_params"), "n_params");
    r.step = number_from_json(required("step"), "step");
    r.tokens_seen = number_from_json(required("tokens_seen"), "tokens_seen");
    r.loss = number_from_json(required("loss"), "loss");
    if (auto it = doc.find("learning_rate"); it != doc.end() && !it->is_null())
        r.learning_rate = number_from_json(*it, "learning_rate");
    if (auto it = doc.find("wall_time_s"); it != doc.end() && !it->is_null())
        r.wall_time_s = number_from_json(*it, "wall_time_s");
    return r;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else {
            cells.back() += c;
        }
    }
    for (auto& cell : cells) {
        const auto first = cell.find_first_not_of(" \t");
        const auto last = cell.find_last_not_of(" \t");
        cell = first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1);
    }
    return cells;
}

struct CsvLayout {
    std::map<std::string, std::size_t> column;

    [[nodiscard]] const std::string* cell(const std::vector<std::string>& cells, const std::string& name) const
    {
        auto it = column.find(name);
        if (it == column.end() || it->second >= cells.size() || cells[it->second].empty()) return nullptr;
        return &cells[it->second];
    }
};

RunRecord record_from_csv_line(const std::string& line, const CsvLayout& layout)
{
    const auto cells = split_csv(line);
    auto required = [&](const char* name) -> const std::string& {
        const std::string* c = layout.cell(cells, name);
        if (!c) throw FieldError{name, std::string("missing required field '") + name + "'"};
        return *c;
    };
    RunRecord r;
    r.run_id = required("run_id");
    r.n_params = parse_number_text(required("n_params"), "n_params");
    r.step = parse_number_text(required("step"), "step");
    r.tokens_seen = parse_number_text(required("tokens_seen"), "tokens_seen");
    r.loss = parse_number_text(required("loss"), "loss");
    if (const auto* lr = layout.cell(cells, "learning_rate")) r.learning_rate = parse_number_text(*lr, "learning_rate");
    if (const auto* wt = layout.cell(cells, "wall_time_s")) r.wall_time_s = parse_number_text(*wt, "wall_time_s");
    return r;
}

struct RunState {
    double n_params;
    double last_tokens;
};

} // namespace

ParseResult parse_run_log(std::istream& source, const ParseOptions& options)
{
    ParseResult result;
    std::unordered_map<std::string, RunState> runs;
    std::optional<CsvLayout> layout;

    auto fail = [&](std::size_t line_no, const FieldError& e) {
        if (options.strict) throw IngestError(e.message, line_no, e.field);
        result.issues.push_back({line_no, e.field, e.message});
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!valid_utf8(line)) {
            fail(line_no, {"", "line is not valid UTF-8"});
            continue;
        }

        if (options.format == LogFormat::csv && !layout) {
            CsvLayout header;
            const auto names = split_csv(line);
            for (std::size_t i = 0; i < names.size(); ++i) header.column.emplace(names[i], i);
            for (const char* name : {"run_id", "n_params", "step", "tokens_seen", "loss"})
                if (!header.column.contains(name))
                    throw IngestError(std::string("CSV header lacks column '") + name + "'", line_no, name);
            layout = std::move(header);
            continue;
        }

        try {
            RunRecord r = options.format == LogFormat::csv ? record_from_csv_line(line, *layout)
                                                           : record_from_json_line(line);
            if (options.units == LossUnits::bits) r.loss *= std::numbers::ln2;
            check_record(r);

            auto [it, inserted] = runs.try_emplace(r.run_id, RunState{r.n_params, r.tokens_seen});
            if (!inserted) {
                if (it->second.n_params != r.n_params)
                    throw FieldError{"n_params", "n_params changes within run '" + r.run_id + "'"};
                if (!(r.tokens_seen > it->second.last_tokens))
                    throw FieldError{"tokens_seen", "tokens_seen not strictly increasing within run '" + r.run_id + "'"};
                it->second.last_tokens = r.tokens_seen;
            }
            result.records.push_back(std::move(r));
        } catch (const FieldError& e) {
            fail(line_no, e);
        }
    }
    if (options.format == LogFormat::csv && !layout && options.strict)
        throw IngestError("CSV log has no header row");
    return result;
}

LogFormat guess_log_format(const std::string& path)
{
    auto ends_with = [&](std::string_view suffix) {
        return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with(".csv") ? LogFormat::csv : LogFormat::line_json;
}

std::size_t CurveFamily::point_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& c : curves) n += c.points.size();
    return n;
}

std::vector<double> ema_smooth(std::span<const double> tokens, std::span<const double> losses,
                               double half_life_tokens)
{
    if (!(half_life_tokens > 0) || !std::isfinite(half_life_tokens))
        throw ValidationError("EMA half-life must be positive and finite");
    if (tokens.size() != losses.size()) throw ValidationError("tokens and losses differ in length");
    std::vector<double> out(losses.begin(), losses.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double keep = std::exp2(-(tokens[i] - tokens[i - 1]) / half_life_tokens);
        out[i] = keep * out[i - 1] + (1.0 - keep) * losses[i];
    }
    return out;
}

CurveFamily build_curves(std::span<const RunRecord> records, const BuildOptions& options,
                         std::vector<std::string>* warnings)
{
    if (records.empty()) throw ValidationError("no records to build curves from");
    options.profile.validate();
    if (!std::isfinite(options.warmup_tokens) || options.warmup_tokens < 0)
        throw ValidationError("warmup_tokens must be finite and non-negative");

    std::map<std::string, std::vector<const RunRecord*>> grouped;
    std::vector<std::string> order;
    for (const auto& r : records) {
        auto [it, inserted] = grouped.try_emplace(r.run_id);
        if (inserted) order.push_back(r.run_id);
        it->second.push_back(&r);
    }

    CurveFamily family;
    family.profile = options.profile;
    family.label = options.label;

    for (const auto& run_id : order) {
        auto rows = grouped.at(run_id);
        std::set<double> steps;
        for (const auto* r : rows)
            if (!steps.insert(r->step).second)
                throw ValidationError("duplicate step " + std::to_string(static_cast<long long>(r->step)) +
                                      " in run '" + run_id + "'");
        std::ranges::sort(rows, {}, &RunRecord::tokens_seen);

        TrainingCurve curve;
        curve.run_id = run_id;
        curve.n_params = rows.front()->n_params;
        curve.smoothing = options.smoothing;
        for (const auto* r : rows) {
            if (r->n_params != curve.n_params)
                throw ValidationError("n_params changes within run '" + run_id + "'");
            if (r->tokens_seen < options.warmup_tokens) continue;
            curve.points.push_back({r->step, r->tokens_seen, training_flops(r->n_params, r->tokens_seen).flops, r->loss});
        }
        for (std::size_t i = 1; i < curve.points.size(); ++i)
            if (!(curve.points[i].tokens_seen > curve.points[i - 1].tokens_seen))
                throw ValidationError("repeated tokens_seen in run '" + run_id + "'");
        if (curve.points.empty()) {
            if (warnings) warnings->push_back("run '" + run_id + "' dropped: no points beyond warmup");
            continue;
        }
        if (options.smoothing.kind == Smoothing::Kind::ema) {
            std::vector<double> tokens, losses;
            for (const auto& p : curve.points) {
                tokens.push_back(p.tokens_seen);
                losses.push_back(p.loss);
            }
            const auto smoothed = ema_smooth(tokens, losses, options.smoothing.half_life_tokens);
            for (std::size_t i = 0; i < smoothed.size(); ++i) curve.points[i].loss = smoothed[i];
        }
        family.curves.push_back(std::move(curve));
    }

    if (family.curves.empty()) throw ValidationError("every run was dropped by warmup truncation");
    std::ranges::sort(family.curves, {}, &TrainingCurve::n_params);
    for (std::size_t i = 1; i < family.curves.size(); ++i)
        if (family.curves[i].n_params == family.curves[i - 1].n_params)
            throw ValidationError("runs '" + family.curves[i - 1].run_id + "' and '" + family.curves[i].run_id +
                                  "' share n_params; a family needs distinct model sizes");
    return family;
}

std::vector<RunRecord> to_records(const CurveFamily& family)
{
    std::vector<RunRecord> out;
    out.reserve(family.point_count());
    for (const auto& curve : family.curves)
        for (const auto& p : curve.points)
            out.push_back({curve.run_id, curve.n_params, p.step, p.tokens_seen, p.loss, {}, {}});
    return out;
}

void write_line_json(std::ostream& out, std::span<const RunRecord> records)
{
    for (const auto& r : records) {
        json doc = {{"run_id", r.run_id},
                    {"n_params", r.n_params},
                    {"step", r.step},
                    {"tokens_seen", r.tokens_seen},
                    {"loss", r.loss}};
        if (r.learning_rate) doc["learning_rate"] = *r.learning_rate;
        if (r.wall_time_s) doc["wall_time_s"] = *r.wall_time_s;
        out << doc.dump() << '\n';
    }
}

void write_line_json(std::ostream& out, const TrainingCurve& curve)
{
    std::vector<RunRecord> rows;
    rows.reserve(curve.points.size());
    for (const auto& p : curve.points) rows.push_back({curve.run_id, curve.n_params, p.step, p.tokens_seen, p.loss, {}, {}});
    write_line_json(out, rows);
}

} // namespace scaling
