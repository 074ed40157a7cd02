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
#include <cstddef>
#include <cstdint>
#include <random>
#include <ostream>
#include <span>
#include <vector>

#include "rd_processing.hpp"
#include "seed.hpp"

namespace mmhawk {

// Spectrum folding. A Doppler row of length L is laid out as an M x j matrix
// (M = floor(L / j), trailing L - M*j bins dropped) and averaged column-wise;
// the folding value is the largest column mean. A comb with period j stacks
// into one column, so its folding value stands out against noise.

struct FoldRange {
    std::size_t j_min = 2;
    std::size_t j_max = 20;
};

struct FoldOutcome {
    double folding_result = 0.0;
    std::size_t best_folding_size = 0;
    std::size_t j_min = 0;
    std::vector<double> per_size_values; // F(j) for j = j_min + i

    double value_at(std::size_t j) const { return per_size_values.at(j - j_min); }
    std::size_t j_max() const { return j_min + per_size_values.size() - 1; }
};

inline double folding_value(std::span<const double> d, std::size_t j)
{
    const std::size_t len = d.size();
    detail::require(len >= 4, "folding_value: Doppler row needs at least 4 bins");
    detail::require(j >= 2, "folding_value: folding size must be >= 2");
    const std::size_t rows = len / j;
    detail::require(rows >= 2, "folding_value: folding size " + std::to_string(j) + " leaves fewer than 2 rows");
    double best = 0.0;
    for (std::size_t k = 0; k < j; ++k) {
        double sum = 0.0;
        for (std::size_t m = 0; m < rows; ++m) sum += d[k + m * j];
        const double mean = sum / static_cast<double>(rows);
        if (k == 0 || mean > best) best = mean;
    }
    return best;
}

// Maximum folding value over [j_min, j_max]. j_max is capped at floor(L/2);
// ties go to the smallest folding size (the fundamental period).
inline FoldOutcome folding_result(std::span<const double> d, FoldRange range = {})
{
    detail::require(range.j_min >= 2, "folding_result: j_min must be >= 2");
    const std::size_t j_max = std::min(range.j_max, d.size() / 2);
    if (range.j_min > j_max)
        detail::fail("folding_result: empty folding range [" + std::to_string(range.j_min) + ", " +
                     std::to_string(j_max) + "]");
    FoldOutcome out;
    out.j_min = range.j_min;
    out.per_size_values.reserve(j_max - range.j_min + 1);
    for (std::size_t j = range.j_min; j <= j_max; ++j) {
        const double f = folding_value(d, j);
        out.per_size_values.push_back(f);
        if (j == range.j_min || f > out.folding_result) {
            out.folding_result = f;
            out.best_folding_size = j;
        }
    }
    return out;
}

// Folding results over range x time (the R-PMM).
struct RPmmDiagram {
    RealMatrix values;                                       // range bins x frames
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> best_sizes;
    std::vector<std::size_t> frame_indices;

    std::size_t range_bins() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t frames() const noexcept { return static_cast<std::size_t>(values.cols()); }
    bool empty() const noexcept { return values.size() == 0; }
};

inline RPmmDiagram build_rpmm(const std::vector<RangeDopplerMap>& maps, FoldRange range = {})
{
    detail::require(!maps.empty(), "build_rpmm: need at least one map");
    const std::size_t bins = maps.front().range_bins();
    const std::size_t dop = maps.front().doppler_bins();
    RPmmDiagram out;
    out.values.resize(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(maps.size()));
    out.best_sizes.resize(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(maps.size()));
    for (std::size_t t = 0; t < maps.size(); ++t) {
        const auto& m = maps[t];
        if (m.range_bins() != bins || m.doppler_bins() != dop)
            detail::fail("build_rpmm: map " + std::to_string(t) + " shape differs from the first map");
        for (std::size_t r = 0; r < bins; ++r) {
            const FoldOutcome f = folding_result(doppler_row(m, r), range);
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = f.folding_result;
            out.best_sizes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
                static_cast<int>(f.best_folding_size);
        }
        out.frame_indices.push_back(m.frame_index);
    }
    return out;
}

// CSV matrix: header "range_bin,<time of frame 0>,...", then one row per bin.
inline void write_rpmm_csv(std::ostream& os, const RPmmDiagram& d, double frame_duration_s)
{
    os.precision(9);
    os << "range_bin";
    for (std::size_t t = 0; t < d.frames(); ++t)
        os << ',' << static_cast<double>(d.frame_indices.at(t)) * frame_duration_s;
    os << '\n';
    for (std::size_t r = 0; r < d.range_bins(); ++r) {
        os << r;
        for (std::size_t t = 0; t < d.frames(); ++t)
            os << ',' << d.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
        os << '\n';
    }
}

// Noise level of a map assuming most cells hold circular Gaussian noise: the
// magnitude median of CN(0, s^2) is s * sqrt(ln 2).
inline double estimate_noise_sigma(const RangeDopplerMap& map)
{
    std::vector<double> v(map.magnitudes.data(), map.magnitudes.data() + map.magnitudes.size());
    detail::require(!v.empty(), "estimate_noise_sigma: empty map");
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2] / std::sqrt(std::log(2.0));
}

struct FoldingStats {
    double mean = 0.0;
    double stddev = 0.0;

    double threshold(double sigmas) const { return mean + sigmas * stddev; }
};

inline FoldingStats summarize(std::span<const double> values)
{
    detail::require(!values.empty(), "summarize: no values");
    FoldingStats s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
}

// Monte-Carlo distribution of the folding result of a pure-noise Doppler row
// (magnitudes of i.i.d. CN(0, sigma^2) bins).
inline FoldingStats noise_folding_stats(double sigma, std::size_t doppler_bins, FoldRange range, std::size_t trials,
                                        std::uint64_t seed)
{
    detail::require(trials >= 2, "noise_folding_stats: need at least 2 trials");
    Rng rng = make_rng(seed, "pmm/noise-calibration");
    std::normal_distribution<double> g(0.0, sigma / std::sqrt(2.0));
    std::vector<double> row(doppler_bins), results(trials);
    for (std::size_t k = 0; k < trials; ++k) {
        for (double& v : row) {
            const double re = g(rng), im = g(rng);
            v = std::hypot(re, im);
        }
        results[k] = folding_result(row, range).folding_result;
    }
    return summarize(results);
}

} // namespace mmhawk
