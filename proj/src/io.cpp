/*
 * Copyright 2026 The iwkrr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "iwkrr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "iwkrr/error.hpp"

namespace iwkrr {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

const Json& require(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing key '") + key + "'");
    return *it;
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) throw ValidationError("expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

}  // namespace

Json to_json(const KernelSpec& spec) {
    Json params = Json::object();
    switch (spec.family) {
    case KernelFamily::gaussian:
        params["lengthscale"] = spec.lengthscale;
        break;
    case KernelFamily::polynomial:
        params["degree"] = spec.degree;
        params["offset"] = spec.offset;
        break;
    case KernelFamily::linear:
        break;
    case KernelFamily::matern:
        params["smoothness"] = spec.smoothness;
        params["lengthscale"] = spec.lengthscale;
        break;
    }
    return Json{{"family", to_string(spec.family)}, {"params", params}, {"scale", spec.scale}};
}

KernelSpec kernel_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("kernel must be a JSON object");
    const KernelFamily family = kernel_family_from_string(require(j, "family").get<std::string>());
    const Json params = j.value("params", Json::object());
    KernelSpec spec;
    switch (family) {
    case KernelFamily::gaussian:
        spec = KernelSpec::gaussian(get_or(params, "lengthscale", 1.0));
        break;
    case KernelFamily::polynomial:
        spec = KernelSpec::polynomial(get_or(params, "degree", 1), get_or(params, "offset", 1.0));
        break;
    case KernelFamily::linear:
        spec = KernelSpec::linear();
        break;
    case KernelFamily::matern:
        spec = KernelSpec::matern(get_or(params, "smoothness", 0.5), get_or(params, "lengthscale", 1.0));
        break;
    }
    spec.scale = get_or(j, "scale", 1.0);
    spec.validate();
    return spec;
}

Json to_json(const DensityModel& model) {
    switch (model.family()) {
    case DensityFamily::gaussian1d:
        return Json{{"family", "gaussian1d"}, {"mean", model.mean()(0)}, {"variance", model.variances()(0)}};
    case DensityFamily::gaussian_nd:
        return Json{{"family", "gaussian_nd"}, {"mean", vector_json(model.mean())},
                    {"variances", vector_json(model.variances())}};
    case DensityFamily::uniform_interval:
        return Json{{"family", "uniform_interval"}, {"lo", model.lo()}, {"hi", model.hi()}};
    }
    throw ValidationError("unknown density family");
}

DensityModel density_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("distribution must be a JSON object");
    const std::string family = require(j, "family").get<std::string>();
    if (family == "gaussian1d") {
        const double mean = require(j, "mean").get<double>();
        if (j.contains("variance") && j.contains("sd"))
            throw ValidationError("give either 'variance' or 'sd', not both");
        if (j.contains("sd")) {
            const double sd = j["sd"].get<double>();
            return DensityModel::gaussian1d(mean, sd * sd);
        }
        return DensityModel::gaussian1d(mean, require(j, "variance").get<double>());
    }
    if (family == "gaussian_nd")
        return DensityModel::gaussian_nd(vector_from_json(require(j, "mean")),
                                         vector_from_json(require(j, "variances")));
    if (family == "uniform_interval")
        return DensityModel::uniform_interval(require(j, "lo").get<double>(), require(j, "hi").get<double>());
    throw ValidationError("unknown distribution family '" + family + "'");
}

Json to_json(const FitModel& model) {
    Json support = Json::array();
    for (Eigen::Index i = 0; i < model.support.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < model.support.cols(); ++c) row.push_back(model.support(i, c));
        support.push_back(row);
    }
    Json j{{"kernel", to_json(model.kernel)},
           {"lambda", model.lambda},
           {"support", support},
           {"alpha", vector_json(model.alpha)},
           {"weights_used", vector_json(model.weights_used)},
           {"dropped_zero_weight_count", model.dropped_zero_weight_count},
           {"n_original", model.n_original},
           {"jitter", model.jitter}};
    if (model.primal) j["theta"] = vector_json(*model.primal);
    return j;
}

FitModel fit_model_from_json(const Json& j) {
    FitModel m;
    m.kernel = kernel_from_json(require(j, "kernel"));
    m.lambda = require(j, "lambda").get<double>();
    const Json& support = require(j, "support");
    const auto rows = static_cast<Eigen::Index>(support.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(support[0].size()) : 0;
    m.support.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = support[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged support matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m.support(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    m.alpha = vector_from_json(require(j, "alpha"));
    m.weights_used = vector_from_json(require(j, "weights_used"));
    if (m.alpha.size() != rows || m.weights_used.size() != rows)
        throw ValidationError("alpha and weights_used must match the support size");
    m.dropped_zero_weight_count = get_or<Eigen::Index>(j, "dropped_zero_weight_count", 0);
    m.n_original = get_or<Eigen::Index>(j, "n_original", rows);
    m.jitter = get_or(j, "jitter", 0.0);
    if (j.contains("theta")) m.primal = vector_from_json(j["theta"]);
    return m;
}

Json to_json(const WeightStrategy& strategy) {
    switch (strategy.kind()) {
    case WeightKind::uniform:
        return Json{{"kind", "uniform"}};
    case WeightKind::constant:
        return Json{{"kind", "constant"}, {"value", strategy.constant_value()}};
    case WeightKind::true_iw:
        return Json{{"kind", "iw"}, {"test", to_json(strategy.target())}, {"train", to_json(strategy.train())}};
    case WeightKind::custom:
        return Json{{"kind", "custom"}, {"target", to_json(strategy.target())}, {"train", to_json(strategy.train())}};
    case WeightKind::clipped:
        return Json{{"kind", "clipped"}, {"inner", to_json(strategy.inner())}, {"threshold", strategy.threshold()}};
    }
    throw ValidationError("unknown weight kind");
}

WeightStrategy weight_strategy_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("weights must be a JSON object");
    const std::string kind = require(j, "kind").get<std::string>();
    if (kind == "uniform") return WeightStrategy::uniform();
    if (kind == "constant") return WeightStrategy::constant(require(j, "value").get<double>());
    if (kind == "iw")
        return WeightStrategy::true_iw(density_from_json(require(j, "test")), density_from_json(require(j, "train")));
    if (kind == "custom")
        return WeightStrategy::custom(density_from_json(require(j, "target")), density_from_json(require(j, "train")));
    if (kind == "clipped")
        return WeightStrategy::clipped(weight_strategy_from_json(require(j, "inner")),
                                       get_or(j, "threshold", std::numeric_limits<double>::infinity()));
    throw ValidationError("unknown weight kind '" + kind + "'");
}

Json to_json(const RateParams& p) {
    return Json{{"r", p.r},         {"s", p.s},         {"q", p.q},
                {"W", p.W},         {"sigma", p.sigma}, {"E_s", p.E_s},
                {"delta", p.delta}, {"M", p.M},         {"R", p.R},
                {"fH_norm", p.fH_norm}, {"f_rho_te", p.f_rho_te}, {"fH_te", p.fH_te},
                {"r_p", p.r_p},     {"s_p", p.s_p},     {"q_p", p.q_p},
                {"V", p.V},         {"gamma", p.gamma}, {"E_p", p.E_p},
                {"R_p", p.R_p},     {"fHp_norm", p.fHp_norm}, {"G", p.G}};
}

RateParams rate_params_from_json(const Json& j, RateParams base) {
    if (!j.is_object()) throw ValidationError("params must be a JSON object");
    const std::map<std::string, double*> fields{
        {"r", &base.r},         {"s", &base.s},         {"q", &base.q},
        {"W", &base.W},         {"sigma", &base.sigma}, {"E_s", &base.E_s},
        {"delta", &base.delta}, {"M", &base.M},         {"R", &base.R},
        {"fH_norm", &base.fH_norm}, {"f_rho_te", &base.f_rho_te}, {"fH_te", &base.fH_te},
        {"r_p", &base.r_p},     {"s_p", &base.s_p},     {"q_p", &base.q_p},
        {"V", &base.V},         {"gamma", &base.gamma}, {"E_p", &base.E_p},
        {"R_p", &base.R_p},     {"fHp_norm", &base.fHp_norm}, {"G", &base.G}};
    for (const auto& [key, value] : j.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ValidationError("unknown rate parameter '" + key + "'");
        *it->second = value.get<double>();
    }
    return base;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw ValidationError("CSV row width does not match the header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream out;
    const auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out << ',';
            out << csv_escape(fields[i]);
        }
        out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t i = 0;
    const auto end_record = [&] {
        record.push_back(field);
        records.push_back(record);
        record.clear();
        field.clear();
        field_started = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(field);
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) throw ValidationError("unterminated quoted CSV field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

namespace {

TrainingSet read_columns(const std::filesystem::path& path, bool require_y) {
    const auto records = parse_csv(read_text_file(path));
    if (records.empty()) throw ValidationError("dataset '" + path.string() + "' is empty");
    const auto& header = records.front();
    std::map<int, std::size_t> x_columns;
    std::optional<std::size_t> y_column;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "y") {
            y_column = c;
        } else if (name.size() > 1 && name[0] == 'x') {
            try {
                std::size_t used = 0;
                const int idx = std::stoi(name.substr(1), &used);
                if (used != name.size() - 1 || idx < 1) throw std::invalid_argument(name);
                x_columns[idx] = c;
            } catch (const std::exception&) {
                throw ValidationError("unexpected dataset column '" + name + "'");
            }
        } else {
            throw ValidationError("unexpected dataset column '" + name + "'");
        }
    }
    if (x_columns.empty() || (require_y && !y_column)) throw ValidationError("dataset needs columns x1..xd and y");
    const int d = static_cast<int>(x_columns.size());
    if (x_columns.rbegin()->first != d) throw ValidationError("dataset input columns must be x1..xd");

    TrainingSet data;
    const auto n = static_cast<Eigen::Index>(records.size() - 1);
    data.xs.resize(n, d);
    data.ys = Eigen::VectorXd::Zero(n);
    const auto number = [](const std::string& s) {
        double v = 0.0;
        const char* first = s.data();
        if (!s.empty() && s[0] == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || first == s.data() + s.size())
            throw ValidationError("non-numeric dataset entry '" + s + "'");
        return v;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i) + 1];
        if (rec.size() != header.size())
            throw ValidationError("dataset row " + std::to_string(i + 1) + " has the wrong width");
        for (const auto& [idx, c] : x_columns) data.xs(i, idx - 1) = number(rec[c]);
        if (require_y) data.ys(i) = number(rec[*y_column]);
    }
    if (require_y) data.validate();
    return data;
}

}  // namespace

TrainingSet read_dataset_csv(const std::filesystem::path& path) { return read_columns(path, true); }

Points read_points_csv(const std::filesystem::path& path) { return read_columns(path, false).xs; }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

std::string dump_json(const Json& j) {
    return j.dump(2) + "\n";
}

}  // namespace iwkrr
