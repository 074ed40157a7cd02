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
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "pmm.hpp"
#include "seed.hpp"

namespace mmhawk {

struct NoiseProfile {
    std::vector<double> n_of_r;
    double euclidean_norm = 0.0;
    std::string source = "background";
};

namespace detail {

inline NoiseProfile finish_profile(std::vector<double> n, std::string source)
{
    NoiseProfile p;
    double ss = 0.0;
    for (double v : n) ss += v * v;
    p.n_of_r = std::move(n);
    p.euclidean_norm = std::sqrt(ss);
    p.source = std::move(source);
    return p;
}

} // namespace detail

// Time-averaged R-PMM of a capture with no UAV present: N(r) = mean_t N(r, t).
inline NoiseProfile estimate_noise_profile(const RPmmDiagram& background)
{
    detail::require(!background.empty(), "estimate_noise_profile: empty background diagram");
    std::vector<double> n(background.range_bins(), 0.0);
    const double frames = static_cast<double>(background.frames());
    for (std::size_t r = 0; r < n.size(); ++r) {
        double sum = 0.0;
        for (std::size_t t = 0; t < background.frames(); ++t)
            sum += background.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
        n[r] = sum / frames;
    }
    return detail::finish_profile(std::move(n), "background");
}

// Fallback when no background capture exists: per-range median over the
// capture itself. A target that never leaves its bin is partly absorbed.
inline NoiseProfile median_noise_profile(const RPmmDiagram& capture)
{
    detail::require(!capture.empty(), "median_noise_profile: empty diagram");
    std::vector<double> n(capture.range_bins());
    std::vector<double> row(capture.frames());
    for (std::size_t r = 0; r < n.size(); ++r) {
        for (std::size_t t = 0; t < row.size(); ++t)
            row[t] = capture.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
        std::sort(row.begin(), row.end());
        const std::size_t m = row.size() / 2;
        n[r] = row.size() % 2 ? row[m] : 0.5 * (row[m - 1] + row[m]);
    }
    return detail::finish_profile(std::move(n), "capture-median");
}

// Removes the projection of each column onto the noise profile:
// G(t) = sum_r N(r) S(r,t) / |N|^2, S'(r,t) = S(r,t) - G(t) N(r).
// Negative results are kept.
inline RPmmDiagram spectral_subtract(const RPmmDiagram& rpmm, const NoiseProfile& noise)
{
    detail::require(noise.n_of_r.size() == rpmm.range_bins(), "spectral_subtract: profile length differs from range bins");
    if (!(noise.euclidean_norm > 0.0)) detail::fail("spectral_subtract: noise profile has zero norm");
    const double norm2 = noise.euclidean_norm * noise.euclidean_norm;
    RPmmDiagram out = rpmm;
    for (std::size_t t = 0; t < rpmm.frames(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        double dot = 0.0;
        for (std::size_t r = 0; r < noise.n_of_r.size(); ++r)
            dot += noise.n_of_r[r] * rpmm.values(static_cast<Eigen::Index>(r), col);
        const double gain = dot / norm2;
        for (std::size_t r = 0; r < noise.n_of_r.size(); ++r)
            out.values(static_cast<Eigen::Index>(r), col) -= gain * noise.n_of_r[r];
    }
    return out;
}

struct Track {
    std::vector<std::size_t> range_bins;
    std::vector<double> ranges_m;
    std::vector<double> filtered_ranges_m;
    std::vector<double> scores;        // S'(g(t), t) along the path
    std::vector<std::size_t> frame_indices;
    double total_score = 0.0;

    std::size_t size() const noexcept { return range_bins.size(); }
};

// Constrained maximum path through the diagram:
//   theta(r, 0) = S'(r, 0)
//   theta(r, t) = max_{|k| <= K, 0 <= r+k < R} theta(r + k, t - 1) + S'(r, t)
// The end bin is the argmax of theta(., T-1), smallest r on ties. Each step
// stores its best predecessor; on ties the smaller |k| wins, then the
// smaller bin. The path is read back through the stored predecessors.
inline Track dp_max_path(const RPmmDiagram& rpmm, std::size_t k_bins)
{
    detail::require(!rpmm.empty(), "dp_max_path: empty diagram");
    detail::require(k_bins >= 1, "dp_max_path: k_bins must be >= 1");
    const std::size_t bins = rpmm.range_bins();
    const std::size_t frames = rpmm.frames();
    const auto s = [&](std::size_t r, std::size_t t) {
        return rpmm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
    };

    std::vector<double> prev(bins), cur(bins);
    std::vector<std::size_t> back(bins * frames, 0);
    for (std::size_t r = 0; r < bins; ++r) prev[r] = s(r, 0);

    const auto k = static_cast<std::ptrdiff_t>(k_bins);
    for (std::size_t t = 1; t < frames; ++t) {
        for (std::size_t r = 0; r < bins; ++r) {
            const auto ri = static_cast<std::ptrdiff_t>(r);
            std::size_t best_from = r;
            double best = prev[r];
            for (std::ptrdiff_t step = 1; step <= k; ++step) {
                for (std::ptrdiff_t cand : {ri - step, ri + step}) {
                    if (cand < 0 || cand >= static_cast<std::ptrdiff_t>(bins)) continue;
                    if (prev[static_cast<std::size_t>(cand)] > best) {
                        best = prev[static_cast<std::size_t>(cand)];
                        best_from = static_cast<std::size_t>(cand);
                    }
                }
            }
            cur[r] = best + s(r, t);
            back[t * bins + r] = best_from;
        }
        std::swap(prev, cur);
    }

    std::size_t end = 0;
    for (std::size_t r = 1; r < bins; ++r)
        if (prev[r] > prev[end]) end = r;

    Track tr;
    tr.range_bins.resize(frames);
    tr.range_bins[frames - 1] = end;
    for (std::size_t t = frames - 1; t > 0; --t) tr.range_bins[t - 1] = back[t * bins + tr.range_bins[t]];
    tr.total_score = prev[end];
    tr.scores.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) tr.scores[t] = s(tr.range_bins[t], t);
    tr.frame_indices = rpmm.frame_indices;
    if (tr.frame_indices.size() != frames) {
        tr.frame_indices.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) tr.frame_indices[t] = t;
    }

    for (std::size_t t = 1; t < frames; ++t) {
        const auto a = static_cast<std::ptrdiff_t>(tr.range_bins[t]);
        const auto b = static_cast<std::ptrdiff_t>(tr.range_bins[t - 1]);
        if (std::abs(a - b) > k) throw Error("dp_max_path: internal error, path violates the motion constraint");
    }
    return tr;
}

// Bin b is centered on range b * range_bin_size_m.
inline void assign_ranges(Track& track, double range_bin_size_m)
{
    track.ranges_m.resize(track.range_bins.size());
    for (std::size_t t = 0; t < track.range_bins.size(); ++t)
        track.ranges_m[t] = static_cast<double>(track.range_bins[t]) * range_bin_size_m;
}

enum class ResampleScheme { multinomial };

struct ParticleFilterConfig {
    std::size_t particle_count = 5000;
    double process_noise_range_m = 0.0;       // per frame
    double process_noise_velocity_m_per_s = 0.5;
    double measurement_noise_m = 0.0;
    ResampleScheme resample_scheme = ResampleScheme::multinomial;
    std::uint64_t rng_seed = 0;
};

// Defaults scaled to the range grid: process sigma = half a bin, measurement
// sigma = one bin.
inline ParticleFilterConfig default_particle_filter_config(const DerivedParams& d, std::uint64_t seed = 0)
{
    ParticleFilterConfig c;
    c.process_noise_range_m = d.range_bin_size_m / 2.0;
    c.measurement_noise_m = d.range_bin_size_m;
    c.rng_seed = seed;
    return c;
}

inline ParticleFilterConfig validate(ParticleFilterConfig c)
{
    detail::require(c.particle_count >= 100, "particle_filter.particle_count must be >= 100");
    detail::require(c.process_noise_range_m > 0.0 && c.process_noise_velocity_m_per_s > 0.0 && c.measurement_noise_m > 0.0,
                    "particle_filter noise standard deviations must be > 0");
    return c;
}

struct FilterOutput {
    std::vector<double> ranges_m;
    std::size_t degenerate_steps = 0; // steps where all weights vanished and particles were re-seeded
};

// Sequential importance resampling over (range, radial velocity) with a
// constant-velocity model, Gaussian likelihood of the observed range and
// multinomial resampling after every update. The estimate is the weighted
// mean range before resampling.
inline FilterOutput particle_filter(std::span<const double> observed_ranges_m, const ParticleFilterConfig& cfg_in,
                                    const DerivedParams& derived)
{
    const ParticleFilterConfig cfg = validate(cfg_in);
    detail::require(!observed_ranges_m.empty(), "particle_filter: empty track");
    const std::size_t n = cfg.particle_count;
    Rng rng = make_rng(cfg.rng_seed, "tracker/particle-filter");
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double vmax = derived.max_speed_m_per_s;

    std::vector<double> range(n), vel(n), logw(n), w(n), cdf(n), nr(n), nv(n);
    for (std::size_t i = 0; i < n; ++i) {
        range[i] = derived.max_range_m * u01(rng);
        vel[i] = vmax * (2.0 * u01(rng) - 1.0);
    }

    FilterOutput out;
    out.ranges_m.reserve(observed_ranges_m.size());
    const double inv2s2 = 1.0 / (2.0 * cfg.measurement_noise_m * cfg.measurement_noise_m);
    const double kUnderflow = std::log(std::numeric_limits<double>::min());
    for (double z : observed_ranges_m) detail::require(std::isfinite(z), "particle_filter: non-finite observation");
    for (std::size_t t = 0; t < observed_ranges_m.size(); ++t) {
        const double z = observed_ranges_m[t];
        if (t > 0)
            for (std::size_t i = 0; i < n; ++i) {
                range[i] += vel[i] * derived.frame_duration_s + cfg.process_noise_range_m * unit(rng);
                vel[i] += cfg.process_noise_velocity_m_per_s * unit(rng);
            }

        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double e = z - range[i];
            logw[i] = -e * e * inv2s2;
            top = std::max(top, logw[i]);
        }
        double total = 0.0;
        if (top >= kUnderflow)
            for (std::size_t i = 0; i < n; ++i) total += (w[i] = std::exp(logw[i] - top));
        // Degenerate: every weight would underflow to zero in linear form,
        // i.e. the particle cloud lost the target.
        if (!(top >= kUnderflow) || !(total > 0.0) || !std::isfinite(total)) {
            ++out.degenerate_steps;
            for (std::size_t i = 0; i < n; ++i) {
                range[i] = z + cfg.measurement_noise_m * unit(rng);
                vel[i] = vmax * (2.0 * u01(rng) - 1.0);
                w[i] = 1.0;
            }
            total = static_cast<double>(n);
        }

        double est = 0.0;
        for (std::size_t i = 0; i < n; ++i) est += w[i] * range[i];
        out.ranges_m.push_back(est / total);

        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) cdf[i] = (acc += w[i]);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = u01(rng) * acc;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const std::size_t src = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1);
            nr[i] = range[src];
            nv[i] = vel[src];
        }
        std::swap(range, nr);
        std::swap(vel, nv);
    }
    return out;
}

inline FilterOutput particle_filter(Track& track, const ParticleFilterConfig& cfg, const DerivedParams& derived)
{
    if (track.ranges_m.size() != track.range_bins.size()) assign_ranges(track, derived.range_bin_size_m);
    FilterOutput out = particle_filter(track.ranges_m, cfg, derived);
    track.filtered_ranges_m = out.ranges_m;
    return out;
}

// Mean of |truth - tracked| / truth over all timestamps.
inline double relative_range_error(std::span<const double> tracked_m, std::span<const double> truth_m)
{
    detail::require(tracked_m.size() == truth_m.size(), "relative_range_error: length mismatch (" +
                                                            std::to_string(tracked_m.size()) + " vs " +
                                                            std::to_string(truth_m.size()) + ")");
    detail::require(!truth_m.empty(), "relative_range_error: empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth_m.size(); ++i) {
        detail::require(truth_m[i] > 0.0, "relative_range_error: truth range must be > 0");
        sum += std::abs(truth_m[i] - tracked_m[i]) / truth_m[i];
    }
    return sum / static_cast<double>(truth_m.size());
}

// frame_index,time_s,range_bin,range_m,filtered_range_m,score
inline void write_track_csv(std::ostream& os, const Track& tr, double frame_duration_s)
{
    os.precision(10);
    os << "frame_index,time_s,range_bin,range_m,filtered_range_m,score\n";
    for (std::size_t t = 0; t < tr.size(); ++t) {
        const double filtered = t < tr.filtered_ranges_m.size() ? tr.filtered_ranges_m[t] : tr.ranges_m.at(t);
        os << tr.frame_indices.at(t) << ',' << (static_cast<double>(tr.frame_indices[t]) + 0.5) * frame_duration_s
           << ',' << tr.range_bins[t] << ',' << tr.ranges_m.at(t) << ',' << filtered << ',' << tr.scores.at(t) << '\n';
    }
}

} // namespace mmhawk
