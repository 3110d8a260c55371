// Copyright 2026 The PAPF Ballbot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PAPF_ERROR_HPP_
#define PAPF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace papf {

// Invalid argument to a pure function (non-positive distance, etc.).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A configuration record violates its invariants. `key` names the offending
// field when one can be identified.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::invalid_argument(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class SynthesisError : public std::runtime_error {
 public:
  SynthesisError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The simulated state became non-finite. Carries a textual frame dump.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

}  // namespace papf

#endif  // PAPF_ERROR_HPP_
