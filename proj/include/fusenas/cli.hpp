// Copyright 2026 The fusenas Authors.
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

#ifndef FUSENAS_CLI_HPP_
#define FUSENAS_CLI_HPP_

#include <ostream>

namespace fusenas {

/// Entry point of the fusenas tool. Returns the process exit code: 0 on
/// success, 2 config error, 3 data error, 4 numeric failure, 1 otherwise.
/// Failures print one `error: <kind>: <message>` line to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fusenas

#endif  // FUSENAS_CLI_HPP_
