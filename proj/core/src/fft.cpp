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

#include "fft.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "svdetect/error.hpp"

namespace svdetect::detail {
namespace {

// fftw planning is not thread-safe; execution with the new-array interface
// is. Plans are made once per size and kept for the process lifetime.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  const int size = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(size, real, cplx, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(size, cplx, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(cplx);
  return cache.emplace(n, p).first->second;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<std::complex<double>> rfft(std::span<const double> input, std::size_t n) {
  if (!is_power_of_two(n)) throw UsageError("fft size must be a power of two");
  if (input.size() > n) throw UsageError("fft input longer than transform size");
  const auto& plan = plans_for(n);

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n / 2 + 1));
  std::fill_n(in.get(), n, 0.0);
  std::copy(input.begin(), input.end(), in.get());
  fftw_execute_dft_r2c(plan.forward, in.get(), out.get());

  std::vector<std::complex<double>> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out.get()[k][0], out.get()[k][1]};
  return bins;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n) {
  if (!is_power_of_two(n)) throw UsageError("fft size must be a power of two");
  if (bins.size() != n / 2 + 1) throw UsageError("irfft expects n/2+1 bins");
  const auto& plan = plans_for(n);

  std::unique_ptr<fftw_complex, FftwDeleter> in(fftw_alloc_complex(n / 2 + 1));
  std::unique_ptr<double, FftwDeleter> out(fftw_alloc_real(n));
  for (std::size_t k = 0; k < bins.size(); ++k) {
    in.get()[k][0] = bins[k].real();
    in.get()[k][1] = bins[k].imag();
  }
  // c2r destroys its input; it's a scratch copy.
  fftw_execute_dft_c2r(plan.inverse, in.get(), out.get());

  std::vector<double> result(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : result) v *= scale;
  return result;
}

}  // namespace svdetect::detail
