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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace svdetect::detail {

bool is_power_of_two(std::size_t n);

/// Real-to-complex DFT of `input` zero-padded to `n`. Returns n/2+1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> input, std::size_t n);

/// Inverse of rfft, including the 1/n scale. `bins` holds n/2+1 values.
std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n);

}  // namespace svdetect::detail
