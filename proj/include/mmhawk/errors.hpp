// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The mmhawk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace mmhawk {

// Exit-code contract shared by every CLI command.
enum class ExitCode : int { ok = 0, validation = 1, io = 2, internal = 3 };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::internal; }
};

// A configuration, argument or data-shape invariant was violated.
class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw ValidationError(what); }

inline void require(bool ok, const std::string& what)
{
    if (!ok) fail(what);
}

} // namespace detail
} // namespace mmhawk
