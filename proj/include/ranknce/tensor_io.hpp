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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ranknce/tensor.hpp"

namespace ranknce {

using NamedTensor = std::pair<std::string, Tensor>;

// Binary container layout (all integers and doubles little-endian):
//   magic "RNCT" | u32 version=1 | u32 count
//   per tensor: u32 name_len | name bytes | u32 rank | u64 dims[rank]
//               | f64 data[numel]
void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

void save_tensors(const std::filesystem::path& path,
                  const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// CSV with one row per leading-axis slice: "index,v0,v1,...". Rank-0 and
// rank-1 tensors are written as a single column "index,value".
void write_tensor_csv(std::ostream& out, const Tensor& t);

}  // namespace ranknce
