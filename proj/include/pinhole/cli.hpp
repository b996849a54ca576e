// Copyright 2026 The Pinhole Authors.
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

#ifndef PINHOLE_CLI_HPP_
#define PINHOLE_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace pinhole {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags or configuration
  kExitData = 2,       // unreadable or inconsistent input data
  kExitNumerical = 3,  // undefined computation (singular scatter, ...)
};

/// Entry point of the `pinhole` tool. `args` excludes the program name.
/// Reports go to `out`, diagnostics to `err`. Output files are written
/// atomically; a failing command leaves none behind.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pinhole

#endif  // PINHOLE_CLI_HPP_
