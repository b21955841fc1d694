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

#ifndef IWKRR_CLI_HPP
#define IWKRR_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "iwkrr/io.hpp"

namespace iwkrr {

inline constexpr const char* kVersion = "1.0.0";

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 1,  // bad arguments, configs or data
    exit_numerical = 2,
    exit_check_failed = 3,
};

/// Built-in defaults of a subcommand's config; throws on unknown names.
Json default_config(const std::string& subcommand);

/// Overlays `overlay` on `base`. Nested objects merge key by key except the
/// leaf objects (kernel, distributions, target functions) which are replaced
/// whole. Unknown top-level keys raise ValidationError.
Json merge_config(const Json& base, const Json& overlay);

/// Runs one command line (without the program name). `rerun <manifest>`
/// re-executes a recorded run. Outputs and a manifest.json go to --out.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace iwkrr

#endif
