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

#ifndef IWKRR_RANDOM_HPP
#define IWKRR_RANDOM_HPP

#include <cstdint>
#include <random>

namespace iwkrr {

using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of `seed`. Streams are
/// derived by splitmix64 mixing so that (seed, i) and (seed, j) never share
/// a state sequence in practice; no wall-clock entropy is involved.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0);

/// splitmix64 finalizer, exposed for callers that need to derive sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace iwkrr

#endif
