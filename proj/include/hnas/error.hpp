// Copyright 2026 The hnas Authors.
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

#ifndef HNAS_ERROR_HPP_
#define HNAS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hnas {

// Base class for every error raised by the library. The C API maps each
// subclass onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnresolvedReference : public Error {
 public:
  explicit UnresolvedReference(const std::string& id)
      : Error("unresolved module reference: " + id) {}
};

class RecursiveReference : public Error {
 public:
  explicit RecursiveReference(const std::string& id)
      : Error("module references itself transitively: " + id) {}
};

class EmptyLayerSet : public Error {
 public:
  EmptyLayerSet() : Error("layer set is empty") {}
};

class EmptyNotableList : public Error {
 public:
  EmptyNotableList() : Error("notable list is empty") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TableLoadError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hnas

#endif  // HNAS_ERROR_HPP_
