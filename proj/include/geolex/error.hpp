// Copyright 2026 The Geolex Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace geolex {

// Error hierarchy mirrors the CLI exit-code contract:
//   0 success, 2 config error, 3 input error, 4 remote-scorer failure,
//   5 internal invariant breach.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

class RemoteScorerError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

class InternalError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 5; }
};

}  // namespace geolex
