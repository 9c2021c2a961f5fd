// Copyright 2026 The Authors.
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

#ifndef CONSEL_CLI_H_
#define CONSEL_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace consel {

// Runs the command line `args` (without the program name). Returns the exit
// code: 0 ok, 1 usage, 2 missing input, 3 invalid data, 4 numeric failure.
// Failures write one JSON object to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace consel

#endif  // CONSEL_CLI_H_
