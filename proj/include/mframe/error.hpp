/*
Copyright 2026 The mframe Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef MFRAME_ERROR_HPP
#define MFRAME_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mframe {

enum class ErrorKind {
  Config,       // invalid parameter or configuration
  Structure,    // mismatched shapes / lengths between inputs
  Infeasible,   // step size too small for identical merging
  Contract,     // caller broke a documented precondition
  Checksum,
  Malformed,    // truncated or inconsistent bitstream
  Dimension,    // frame dimensions disagree
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace mframe

#endif  // MFRAME_ERROR_HPP
