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

#ifndef IWKRR_IO_HPP
#define IWKRR_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "iwkrr/density.hpp"
#include "iwkrr/kernel.hpp"
#include "iwkrr/schedule.hpp"
#include "iwkrr/solver.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

using Json = nlohmann::json;

/// {"family": ..., "params": {...}, "scale": ...}
Json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const Json& j);

/// {"family": "gaussian1d", "mean": m, "variance": v} (or "sd"),
/// {"family": "gaussian_nd", "mean": [...], "variances": [...]},
/// {"family": "uniform_interval", "lo": a, "hi": b}.
Json to_json(const DensityModel& model);
DensityModel density_from_json(const Json& j);

/// {"kernel", "lambda", "support", "alpha", "weights_used", ...}
Json to_json(const FitModel& model);
FitModel fit_model_from_json(const Json& j);

/// {"kind": "uniform"} | {"kind": "constant", "value": v} |
/// {"kind": "iw", "test": ..., "train": ...} | {"kind": "custom", "target": ..., "train": ...} |
/// {"kind": "clipped", "inner": {...}, "threshold": D}
Json to_json(const WeightStrategy& strategy);
WeightStrategy weight_strategy_from_json(const Json& j);

/// Every RateParams field by name; missing keys keep `base` values.
Json to_json(const RateParams& params);
RateParams rate_params_from_json(const Json& j, RateParams base = {});

/// Shortest decimal form that round-trips; inf and nan as "inf", "-inf", "nan".
std::string format_double(double v);

/// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);

/// Comma-separated rows with "\n" line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add(std::vector<std::string> row);
    [[nodiscard]] std::string str() const;
    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Splits RFC-4180 text into records; quoted fields may hold commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Reads columns x1..xd and y (any order); throws ValidationError otherwise.
TrainingSet read_dataset_csv(const std::filesystem::path& path);

/// Reads columns x1..xd; a y column is allowed and ignored.
Points read_points_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Sorted keys, two-space indent, trailing newline.
std::string dump_json(const Json& j);

}  // namespace iwkrr

#endif
