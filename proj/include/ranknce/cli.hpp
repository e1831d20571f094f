// Copyright 2026 The RankNCE Authors.
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

#include <iosfwd>
#include <span>
#include <string>

namespace ranknce::cli {

/// Runs one command line (without the program name). Verbs: train, ablate-k,
/// ablate-layers, mi-diagnose, dump-similarity, selftest. Returns 0 iff all
/// requested work succeeded; usage errors return 2.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ranknce::cli
