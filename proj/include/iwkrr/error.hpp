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

#ifndef IWKRR_ERROR_HPP
#define IWKRR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace iwkrr {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: parameters out of range, malformed data or configs.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The computation itself broke down (factorization, eigensolver, overflow).
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateDomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidRegularizerError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyEffectiveSampleError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SupportViolationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InsufficientSpectrumError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IllConditionedError : public NumericalError {
public:
    IllConditionedError(const std::string& what, double condition_estimate)
        : NumericalError(what), condition_estimate_(condition_estimate) {}

    [[nodiscard]] double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

}  // namespace iwkrr

#endif
