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
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "config.hpp"
#include "pmm.hpp"
#include "rd_processing.hpp"
#include "seed.hpp"
#include "tracker.hpp"

namespace mmhawk {

// Doppler spectra at the tracked range bin, one row per frame (T x L).
struct DopplerTimeDiagram {
    RealMatrix columns;
    std::vector<std::size_t> frame_indices;
    std::vector<std::size_t> range_bins;
    bool dc_reference_missing = false; // set by dc_removal when no frame qualified

    std::size_t frames() const noexcept { return static_cast<std::size_t>(columns.rows()); }
    std::size_t doppler_bins() const noexcept { return static_cast<std::size_t>(columns.cols()); }
    std::size_t dc_bin() const noexcept { return dc_bin_for(doppler_bins()); }
    std::span<const double> column(std::size_t t) const
    {
        return {columns.row(static_cast<Eigen::Index>(t)).data(), doppler_bins()};
    }
};

inline DopplerTimeDiagram extract_doppler_time(const std::vector<RangeDopplerMap>& maps, const Track& track)
{
    detail::require(track.size() >= 1, "extract_doppler_time: empty track");
    detail::require(maps.size() == track.size(), "extract_doppler_time: " + std::to_string(maps.size()) +
                                                     " maps for a track of length " + std::to_string(track.size()));
    DopplerTimeDiagram d;
    const std::size_t len = maps.front().doppler_bins();
    d.columns.resize(static_cast<Eigen::Index>(track.size()), static_cast<Eigen::Index>(len));
    for (std::size_t t = 0; t < track.size(); ++t) {
        if (t < track.frame_indices.size() && maps[t].frame_index != track.frame_indices[t])
            detail::fail("extract_doppler_time: map " + std::to_string(t) + " has frame index " +
                         std::to_string(maps[t].frame_index) + ", track expects " + std::to_string(track.frame_indices[t]));
        detail::require(maps[t].doppler_bins() == len, "extract_doppler_time: Doppler bin count changes across maps");
        const auto row = doppler_row(maps[t], track.range_bins[t]);
        std::copy(row.begin(), row.end(), d.columns.row(static_cast<Eigen::Index>(t)).data());
        d.frame_indices.push_back(maps[t].frame_index);
        d.range_bins.push_back(track.range_bins[t]);
    }
    return d;
}

// Body-velocity peak: the column maximum. If the DC bin attains it, DC wins;
// otherwise the maximal bin nearest DC (lower bin on equal distance).
inline std::size_t body_peak(std::span<const double> col, std::size_t dc)
{
    const double top = *std::max_element(col.begin(), col.end());
    if (col[dc] == top) return dc;
    std::size_t best = col.size();
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] != top) continue;
        const auto dist = [dc](std::size_t k) { return k > dc ? k - dc : dc - k; };
        if (best == col.size() || dist(i) < dist(best)) best = i;
    }
    return best;
}

struct DcRemovalOptions {
    std::size_t epsilon_bins = 2; // "not close to DC" means more than this many bins away
};

// Averages the DC bin over frames whose body peak lies more than epsilon
// bins from DC, subtracts that mean from every frame's DC bin and clamps at 0.
// Frames where the body sits on DC keep its energy above the reference.
inline DopplerTimeDiagram dc_removal(DopplerTimeDiagram d, DcRemovalOptions opts = {})
{
    detail::require(d.frames() >= 1, "dc_removal: empty diagram");
    const std::size_t dc = d.dc_bin();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < d.frames(); ++t) {
        const std::size_t b = body_peak(d.column(t), dc);
        const std::size_t dist = b > dc ? b - dc : dc - b;
        if (dist > opts.epsilon_bins) {
            sum += d.columns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(dc));
            ++count;
        }
    }
    if (count == 0) {
        d.dc_reference_missing = true;
        return d;
    }
    d.dc_reference_missing = false;
    const double mean = sum / static_cast<double>(count);
    for (std::size_t t = 0; t < d.frames(); ++t) {
        double& v = d.columns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(dc));
        v = std::max(0.0, v - mean);
    }
    return d;
}

// Shifts one spectrum so its body peak lands on DC. Bins uncovered by the
// shift ramp linearly from the surviving edge value down toward 0.
inline void align_column(std::span<double> col, std::size_t dc)
{
    const std::size_t len = col.size();
    const std::size_t b = body_peak(col, dc);
    if (b == dc) return;
    const std::vector<double> in(col.begin(), col.end());
    const auto shift = static_cast<std::ptrdiff_t>(dc) - static_cast<std::ptrdiff_t>(b);
    const auto n = static_cast<std::ptrdiff_t>(len);
    const std::size_t gap = static_cast<std::size_t>(std::abs(shift));
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t src = i - shift;
        if (src >= 0 && src < n) col[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(src)];
    }
    const double denom = static_cast<double>(gap + 1);
    if (shift > 0) {
        const double edge = in.front();
        for (std::size_t i = 0; i < gap; ++i) {
            const double dist = static_cast<double>(gap - i); // 1 next to the edge
            col[i] = edge * (denom - dist) / denom;
        }
    } else {
        const double edge = in.back();
        for (std::size_t i = len - gap; i < len; ++i) {
            const double dist = static_cast<double>(i - (len - gap) + 1);
            col[i] = edge * (denom - dist) / denom;
        }
    }
}

inline DopplerTimeDiagram feature_alignment(DopplerTimeDiagram d)
{
    const std::size_t dc = d.dc_bin();
    for (std::size_t t = 0; t < d.frames(); ++t)
        align_column({d.columns.row(static_cast<Eigen::Index>(t)).data(), d.doppler_bins()}, dc);
    return d;
}

inline DopplerTimeDiagram preprocess(DopplerTimeDiagram d, DcRemovalOptions opts = {})
{
    return feature_alignment(dc_removal(std::move(d), opts));
}

enum class Label { uav, other, unlabeled };

inline std::string to_string(Label l)
{
    switch (l) {
    case Label::uav: return "uav";
    case Label::other: return "other";
    case Label::unlabeled: return "unlabeled";
    }
    return "?";
}

inline Label label_from_string(const std::string& s)
{
    if (s == "uav") return Label::uav;
    if (s == "other") return Label::other;
    if (s == "unlabeled") return Label::unlabeled;
    detail::fail("unknown label '" + s + "'");
}

struct Segment {
    RealMatrix data; // W x L, time-major
    Label label = Label::unlabeled;
    double max_folding_result = 0.0;
    bool passed_filter = false;
    std::size_t first_frame = 0;
    std::string provenance;

    std::size_t frames() const noexcept { return static_cast<std::size_t>(data.rows()); }
    std::size_t doppler_bins() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

// round(3.6 s / T_d) frames.
inline std::size_t segment_length(const DerivedParams& d, double seconds = 3.6)
{
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(seconds / d.frame_duration_s)));
}

inline double max_folding_result(const RealMatrix& rows, FoldRange range)
{
    double best = 0.0;
    for (Eigen::Index t = 0; t < rows.rows(); ++t) {
        const double f = folding_result({rows.row(t).data(), static_cast<std::size_t>(rows.cols())}, range).folding_result;
        if (t == 0 || f > best) best = f;
    }
    return best;
}

// Non-overlapping windows of W frames (tail dropped). A window passes when
// its largest per-frame folding result reaches the threshold.
inline std::vector<Segment> segment_split_filter(const DopplerTimeDiagram& d, std::size_t window, double threshold,
                                                 FoldRange range = {})
{
    detail::require(window >= 2, "segment_split_filter: window must be >= 2 frames");
    std::vector<Segment> out;
    for (std::size_t start = 0; start + window <= d.frames(); start += window) {
        Segment s;
        s.data = d.columns.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(window));
        s.first_frame = start < d.frame_indices.size() ? d.frame_indices[start] : start;
        s.max_folding_result = max_folding_result(s.data, range);
        s.passed_filter = s.max_folding_result >= threshold;
        out.push_back(std::move(s));
    }
    return out;
}

// Scales a segment so its largest value is 1 (no-op for an all-zero segment).
inline RealMatrix normalize_segment(const RealMatrix& data)
{
    const double top = data.size() ? data.maxCoeff() : 0.0;
    return top > 0.0 ? RealMatrix(data / top) : data;
}

struct ThresholdCalibration {
    double threshold = 0.0;
    FoldingStats noise;
    double sigma = 0.0;
};

// Filter threshold for synthetic data: mean + sigmas * std of the maximum
// folding result of noise-only segments (Rayleigh columns at the given noise
// level, run through the same DC removal and alignment). Every stage is
// positively homogeneous in the noise level, so the statistics are computed
// once at unit level per (bins, window, range, trials, seed) and scaled.
inline ThresholdCalibration calibrate_segment_threshold(double sigma, std::size_t doppler_bins, std::size_t window,
                                                        FoldRange range, std::size_t trials, std::uint64_t seed,
                                                        double sigmas = 5.0)
{
    detail::require(trials >= 2 && window >= 1, "calibrate_segment_threshold: need trials >= 2");
    detail::require(sigma >= 0.0, "calibrate_segment_threshold: sigma must be >= 0");
    using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, std::uint64_t>;
    static std::mutex lock;
    static std::map<Key, FoldingStats> cache;
    const Key key{doppler_bins, window, range.j_min, range.j_max, trials, seed};
    FoldingStats unit;
    {
        std::lock_guard<std::mutex> guard(lock);
        if (auto it = cache.find(key); it != cache.end()) unit = it->second;
    }
    if (unit.mean == 0.0 && unit.stddev == 0.0) {
        Rng rng = make_rng(seed, "identifier/threshold");
        std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(2.0));
        std::vector<double> maxima(trials);
        for (std::size_t k = 0; k < trials; ++k) {
            DopplerTimeDiagram d;
            d.columns.resize(static_cast<Eigen::Index>(window), static_cast<Eigen::Index>(doppler_bins));
            for (Eigen::Index i = 0; i < d.columns.size(); ++i) {
                const double re = g(rng), im = g(rng);
                d.columns.data()[i] = std::hypot(re, im);
            }
            maxima[k] = max_folding_result(preprocess(std::move(d)).columns, range);
        }
        unit = summarize(maxima);
        std::lock_guard<std::mutex> guard(lock);
        cache.emplace(key, unit);
    }
    ThresholdCalibration c;
    c.noise = {unit.mean * sigma, unit.stddev * sigma};
    c.threshold = c.noise.threshold(sigmas);
    c.sigma = sigma;
    return c;
}

} // namespace mmhawk
