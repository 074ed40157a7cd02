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

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include <fftw3.h>

#include "errors.hpp"

namespace mmhawk {

// Unit-norm (1/sqrt(N)) forward DFT of a fixed length, backed by an FFTW
// plan. Not shareable across threads; make one per worker.
class UnitFft {
public:
    explicit UnitFft(std::size_t n) : n_(n), scale_(1.0 / std::sqrt(static_cast<double>(n)))
    {
        detail::require(n >= 1, "fft: length must be >= 1");
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!buf_) throw Error("fft: allocation failed");
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    }

    UnitFft(const UnitFft&) = delete;
    UnitFft& operator=(const UnitFft&) = delete;

    ~UnitFft()
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }

    std::size_t size() const noexcept { return n_; }

    // In place; data.size() must equal size(). Elements are read and written
    // with the given stride so matrix columns can be transformed directly.
    void operator()(std::complex<double>* data, std::ptrdiff_t stride = 1)
    {
        for (std::size_t i = 0; i < n_; ++i) {
            const auto v = data[static_cast<std::ptrdiff_t>(i) * stride];
            buf_[i][0] = v.real();
            buf_[i][1] = v.imag();
        }
        fftw_execute(plan_);
        for (std::size_t i = 0; i < n_; ++i)
            data[static_cast<std::ptrdiff_t>(i) * stride] = {buf_[i][0] * scale_, buf_[i][1] * scale_};
    }

    void operator()(std::span<std::complex<double>> data)
    {
        detail::require(data.size() == n_, "fft: length mismatch");
        (*this)(data.data(), 1);
    }

private:
    static std::mutex& planner_mutex()
    {
        static std::mutex m;
        return m;
    }

    std::size_t n_;
    double scale_;
    fftw_complex* buf_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace mmhawk
