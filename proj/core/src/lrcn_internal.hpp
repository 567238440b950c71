// Copyright 2026 The svdetect Authors
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

#include <span>
#include <string>
#include <vector>

#include "svdetect/lrcn.hpp"

namespace svdetect::detail {

/// Parameter tensors in serialization order; spans alias the storage.
std::vector<std::span<double>> tensor_spans(LrcnParams& p);
std::vector<std::string> tensor_names(const LrcnConfig& config);

/// y += a * x, tensor by tensor.
void add_scaled(LrcnParams& y, double a, const LrcnParams& x);
void scale(LrcnParams& y, double a);

}  // namespace svdetect::detail
