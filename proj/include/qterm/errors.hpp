// Copyright 2026 The qterm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qterm {

/// Malformed input: shapes, non-Hermitian matrices, unknown names.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates an operation's precondition.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A result that contradicts its own post-hoc check. Usually a tolerance problem.
struct InconsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Program text error with a 1-based source position.
struct ParseError : ValidationError {
    int line;
    int column;
    ParseError(int line, int column, const std::string &msg)
        : ValidationError(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line(line),
          column(column) {
    }
};

}  // namespace qterm
