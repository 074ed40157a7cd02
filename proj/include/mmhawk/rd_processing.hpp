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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "echo_sim.hpp"
#include "errors.hpp"
#include "fft.hpp"

namespace mmhawk {

enum class Window { rectangular, hann };

struct RdOptions {
    Window range_window = Window::rectangular;
    Window doppler_window = Window::rectangular;
};

// Magnitude spectrum, range bins x Doppler bins. The Doppler axis is
// center-shifted: zero Doppler sits at column dc_bin = floor(L / 2).
struct RangeDopplerMap {
    std::size_t frame_index = 0;
    RealMatrix magnitudes;

    std::size_t range_bins() const noexcept { return static_cast<std::size_t>(magnitudes.rows()); }
    std::size_t doppler_bins() const noexcept { return static_cast<std::size_t>(magnitudes.cols()); }
    std::size_t dc_bin() const noexcept { return doppler_bins() / 2; }
};

inline std::size_t dc_bin_for(std::size_t doppler_bins) noexcept { return doppler_bins / 2; }

namespace detail {

inline std::vector<double> window_taps(Window w, std::size_t n)
{
    std::vector<double> taps(n, 1.0);
    if (w == Window::hann && n > 1) {
        // Scaled to unit RMS so unit-norm FFT energy stays comparable.
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            taps[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
            ss += taps[i] * taps[i];
        }
        const double g = std::sqrt(static_cast<double>(n) / ss);
        for (double& t : taps) t *= g;
    }
    return taps;
}

template <typename M>
void require_finite(const M& m, const char* who)
{
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const auto v = m.data()[i];
        if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v)))
            fail(std::string(who) + ": non-finite input sample");
    }
}

} // namespace detail

// Per-chirp FFT along fast time. Output is chirps x range bins; bin b holds
// beat frequency b * f_s / N_s, i.e. range b * range_bin_size_m.
inline ComplexMatrix range_fft(const Frame& frame, Window window = Window::rectangular)
{
    detail::require(frame.samples.rows() >= 1 && frame.samples.cols() >= 1, "range_fft: empty frame");
    detail::require_finite(frame.samples, "range_fft");
    const auto chirps = static_cast<std::size_t>(frame.samples.rows());
    const auto n = static_cast<std::size_t>(frame.samples.cols());
    const auto taps = detail::window_taps(window, n);
    ComplexMatrix out = frame.samples;
    UnitFft fft(n);
    for (std::size_t l = 0; l < chirps; ++l) {
        Complex* row = out.row(static_cast<Eigen::Index>(l)).data();
        if (window != Window::rectangular)
            for (std::size_t i = 0; i < n; ++i) row[i] *= taps[i];
        fft(row, 1);
    }
    return out;
}

// Per-range-bin FFT along slow time, center-shifted, magnitude taken.
inline RangeDopplerMap doppler_fft(const ComplexMatrix& range_matrix, std::size_t frame_index = 0,
                                   Window window = Window::rectangular)
{
    detail::require(range_matrix.rows() >= 2, "doppler_fft: need at least two chirps");
    detail::require_finite(range_matrix, "doppler_fft");
    const auto chirps = static_cast<std::size_t>(range_matrix.rows());
    const auto bins = static_cast<std::size_t>(range_matrix.cols());
    const auto taps = detail::window_taps(window, chirps);
    const std::size_t dc = dc_bin_for(chirps);

    RangeDopplerMap map;
    map.frame_index = frame_index;
    map.magnitudes.resize(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(chirps));
    UnitFft fft(chirps);
    std::vector<Complex> column(chirps);
    for (std::size_t r = 0; r < bins; ++r) {
        for (std::size_t l = 0; l < chirps; ++l)
            column[l] = range_matrix(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(r)) * taps[l];
        fft(column);
        for (std::size_t k = 0; k < chirps; ++k) {
            // Shifted bin k holds DFT bin (k - dc) mod L.
            const std::size_t src = (k + chirps - dc) % chirps;
            map.magnitudes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = std::abs(column[src]);
        }
    }
    return map;
}

inline RangeDopplerMap range_doppler(const Frame& frame, const RdOptions& opts = {})
{
    return doppler_fft(range_fft(frame, opts.range_window), frame.frame_index, opts.doppler_window);
}

inline std::vector<RangeDopplerMap> range_doppler(const std::vector<Frame>& frames, const RdOptions& opts = {})
{
    std::vector<RangeDopplerMap> maps;
    maps.reserve(frames.size());
    for (const auto& f : frames) maps.push_back(range_doppler(f, opts));
    return maps;
}

// Doppler spectrum of one range bin, as a view into the map.
inline std::span<const double> doppler_row(const RangeDopplerMap& map, std::size_t range_bin)
{
    if (range_bin >= map.range_bins())
        detail::fail("doppler_row: range bin " + std::to_string(range_bin) + " out of [0, " +
                     std::to_string(map.range_bins()) + ")");
    return {map.magnitudes.row(static_cast<Eigen::Index>(range_bin)).data(), map.doppler_bins()};
}

// Range bin carrying the most energy in a map.
inline std::size_t strongest_range_bin(const RangeDopplerMap& map)
{
    Eigen::Index best = 0;
    map.magnitudes.rowwise().squaredNorm().maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

// Spacing, in bins, between the comb peaks of a Doppler row. The strongest
// bin (the body line) is replaced by the row median and the mean removed; a
// comb of period s then shows up in the row's own DFT as lines at k = L / s
// and its multiples. The fundamental is the smallest k in [L / max_spacing,
// L / 2] whose line reaches harmonic_ratio times the strongest line k* and of
// which k* is a multiple (within one bin). A single missing or weak tooth
// barely moves these lines. Empty for rows shorter than 8 bins or without
// variation.
inline std::optional<double> estimate_peak_spacing(std::span<const double> row, double max_spacing = 20.0,
                                                   double harmonic_ratio = 0.5)
{
    const std::size_t n = row.size();
    if (n < 8) return std::nullopt;
    std::vector<double> r(row.begin(), row.end());
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    r[static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin())] = sorted[n / 2];
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    const std::size_t k_min =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) / max_spacing)));
    if (k_min > n / 2) return std::nullopt;
    std::vector<double> line(n / 2 + 1, 0.0);
    for (std::size_t k = k_min; k <= n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += (r[i] - mean) *
                   std::polar(1.0, -2.0 * M_PI * static_cast<double>((k * i) % n) / static_cast<double>(n));
        line[k] = std::abs(acc);
    }
    const auto top = static_cast<std::size_t>(std::max_element(line.begin(), line.end()) - line.begin());
    if (!(line[top] > 1e-12 * (std::abs(mean) + 1.0))) return std::nullopt;
    std::size_t best = top;
    for (std::size_t k = k_min; k < top; ++k) {
        const auto m = static_cast<double>(top) / static_cast<double>(k);
        if (line[k] >= harmonic_ratio * line[top] && std::abs(static_cast<double>(top) - std::round(m) * static_cast<double>(k)) <= 1.0) {
            best = k;
            break;
        }
    }
    return static_cast<double>(n) / static_cast<double>(best);
}

// One line per cell: range_bin,doppler_bin,magnitude.
inline void write_map_csv(std::ostream& os, const RangeDopplerMap& map)
{
    os << "range_bin,doppler_bin,magnitude\n";
    os.precision(9);
    for (std::size_t r = 0; r < map.range_bins(); ++r)
        for (std::size_t d = 0; d < map.doppler_bins(); ++d)
            os << r << ',' << d << ',' << map.magnitudes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d))
               << '\n';
}

} // namespace mmhawk
