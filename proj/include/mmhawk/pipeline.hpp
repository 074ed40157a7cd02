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
#include <array>
#include <functional>
#include <numeric>
#include <utility>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "config.hpp"
#include "echo_sim.hpp"
#include "identifier.hpp"
#include "lstm.hpp"
#include "metrics.hpp"
#include "pmm.hpp"
#include "rd_processing.hpp"
#include "scenario.hpp"
#include "seed.hpp"
#include "tracker.hpp"

namespace mmhawk {

// ---------------------------------------------------------------------------
// Noise calibration for simulated scenes.

// Mean power of the comb lines in the strongest range row of the noiseless
// frame 0, excluding the single largest bin (the body line). The number of
// lines is L divided by the comb spacing of the first UAV. A scene without a
// UAV uses its 20 strongest lines, the largest included, since a static
// target may have no line besides its body.
inline double comb_line_power(const SceneSpec& scene, const RadarConfig& radar)
{
    SceneSpec clean = scene;
    clean.noise_std = 0.0;
    const DerivedParams d = derive(radar);
    const RangeDopplerMap map = range_doppler(synthesize_frame(clean, radar, 0));
    const auto row = doppler_row(map, strongest_range_bin(map));
    std::size_t lines = 20, skip = 0;
    if (const auto* u = first_uav(scene)) {
        skip = 1;
        const double spacing = u->uav.rotor_angular_velocity_rad_per_s / (2.0 * M_PI) / d.doppler_bin_hz;
        lines = static_cast<std::size_t>(std::floor(static_cast<double>(row.size()) / std::max(spacing, 1.0)));
    }
    lines = std::clamp<std::size_t>(lines, 2, row.size());
    std::vector<double> power(row.begin(), row.end());
    for (double& p : power) p *= p;
    std::sort(power.begin(), power.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = skip; i < lines; ++i) sum += power[i];
    return sum / static_cast<double>(lines - skip);
}

// Per-sample noise std giving the requested per-peak SNR (comb-line power
// over noise power per Range-Doppler cell; unit-norm FFTs keep the noise
// power per cell equal to the per-sample noise power).
inline double noise_std_for_snr(const SceneSpec& scene, const RadarConfig& radar, double snr_db)
{
    const double p = comb_line_power(scene, radar);
    detail::require(p > 0.0, "noise_std_for_snr: scene has no reflected power");
    return std::sqrt(p / std::pow(10.0, snr_db / 10.0));
}

// ---------------------------------------------------------------------------
// Tracking: R-PMM, spectral subtraction, constrained DP, particle filter.

struct TrackingOptions {
    FoldRange fold;
    std::optional<std::size_t> k_bins;        // default: derived dp_constraint_bins
    bool use_particle_filter = true;
    std::optional<ParticleFilterConfig> filter; // default: scaled to the range grid
    std::uint64_t seed = 0;
    double confidence_sigmas = 5.0;
    std::size_t calibration_trials = 400;
};

struct TrackConfidence {
    double noise_sigma = 0.0;
    FoldingStats noise_folding;
    double reference = 0.0;          // noise mean + confidence_sigmas * std
    double fraction_above = 0.0;     // frames whose tracked folding result beats the reference
    double max_score = 0.0;          // largest raw folding result along the track
    bool low_confidence = false;
};

struct TrackingResult {
    RPmmDiagram rpmm;
    RPmmDiagram subtracted;
    NoiseProfile noise;
    Track track;
    TrackConfidence confidence;
    std::size_t k_bins = 1;
    std::size_t degenerate_filter_steps = 0;
};

inline TrackConfidence assess_track(const std::vector<RangeDopplerMap>& maps, const RPmmDiagram& rpmm,
                                    const Track& track, const TrackingOptions& opts)
{
    TrackConfidence c;
    double sigma = 0.0;
    for (const auto& m : maps) sigma += estimate_noise_sigma(m);
    c.noise_sigma = sigma / static_cast<double>(maps.size());
    c.noise_folding = noise_folding_stats(c.noise_sigma, maps.front().doppler_bins(), opts.fold,
                                          opts.calibration_trials, opts.seed);
    c.reference = c.noise_folding.threshold(opts.confidence_sigmas);
    std::size_t above = 0;
    for (std::size_t t = 0; t < track.size(); ++t) {
        const double v = rpmm.values(static_cast<Eigen::Index>(track.range_bins[t]), static_cast<Eigen::Index>(t));
        c.max_score = t == 0 ? v : std::max(c.max_score, v);
        if (v > c.reference) ++above;
    }
    c.fraction_above = static_cast<double>(above) / static_cast<double>(track.size());
    c.low_confidence = c.fraction_above < 0.5;
    return c;
}

// maps: the capture; background: an emitter-free capture for the noise
// profile (the per-range median of the capture is used when it is empty).
inline TrackingResult track_capture(const std::vector<RangeDopplerMap>& maps,
                                    const std::vector<RangeDopplerMap>& background, const DerivedParams& derived,
                                    const TrackingOptions& opts = {})
{
    detail::require(!maps.empty(), "track_capture: no frames");
    TrackingResult r;
    r.rpmm = build_rpmm(maps, opts.fold);
    r.noise = background.empty() ? median_noise_profile(r.rpmm) : estimate_noise_profile(build_rpmm(background, opts.fold));
    r.subtracted = r.noise.euclidean_norm > 0.0 ? spectral_subtract(r.rpmm, r.noise) : r.rpmm;
    r.k_bins = opts.k_bins.value_or(derived.dp_constraint_bins);
    r.track = dp_max_path(r.subtracted, r.k_bins);
    assign_ranges(r.track, derived.range_bin_size_m);
    if (opts.use_particle_filter) {
        const ParticleFilterConfig pf = opts.filter.value_or(default_particle_filter_config(derived, opts.seed));
        r.degenerate_filter_steps = particle_filter(r.track, pf, derived).degenerate_steps;
    } else {
        r.track.filtered_ranges_m = r.track.ranges_m;
    }
    r.confidence = assess_track(maps, r.rpmm, r.track, opts);
    return r;
}

// Truth series of the first UAV at frame centers.
inline std::vector<double> truth_ranges(const SceneSpec& scene, const DerivedParams& d, std::size_t frames)
{
    const auto* u = first_uav(scene);
    detail::require(u != nullptr, "truth_ranges: scene has no UAV");
    std::vector<double> out;
    for (std::size_t k = 0; k < frames; ++k)
        out.push_back(u->trajectory.range_at((static_cast<double>(k) + 0.5) * d.frame_duration_s));
    return out;
}

// ---------------------------------------------------------------------------
// Identification.

struct SegmentOptions {
    FoldRange fold;
    std::optional<std::size_t> window;  // default: round(3.6 s / T_d)
    std::optional<double> threshold;    // fixed threshold; otherwise auto-calibrated
    double threshold_sigmas = 5.0;
    std::size_t calibration_trials = 200;
    bool normalize = true;
    DcRemovalOptions dc;
    std::uint64_t seed = 0;
};

struct SegmentBatch {
    std::vector<Segment> segments;
    double threshold = 0.0;
    bool threshold_calibrated = false;
    bool dc_reference_missing = false;
};

// Doppler-Time diagram along the track, DC removal, alignment, fixed-length
// segments and the folding-result filter. Segment data is max-normalized
// when opts.normalize is set (after the filter decision).
inline SegmentBatch build_segments(const std::vector<RangeDopplerMap>& maps, const Track& track,
                                   const DerivedParams& derived, const SegmentOptions& opts = {})
{
    SegmentBatch out;
    const DopplerTimeDiagram dt = preprocess(extract_doppler_time(maps, track), opts.dc);
    out.dc_reference_missing = dt.dc_reference_missing;
    const std::size_t window = opts.window.value_or(segment_length(derived));
    if (opts.threshold) {
        out.threshold = *opts.threshold;
    } else {
        double sigma = 0.0;
        for (const auto& m : maps) sigma += estimate_noise_sigma(m);
        sigma /= static_cast<double>(maps.size());
        out.threshold = calibrate_segment_threshold(sigma, dt.doppler_bins(), window, opts.fold, opts.calibration_trials,
                                                    opts.seed, opts.threshold_sigmas)
                            .threshold;
        out.threshold_calibrated = true;
    }
    out.segments = segment_split_filter(dt, window, out.threshold, opts.fold);
    if (opts.normalize)
        for (auto& s : out.segments) s.data = normalize_segment(s.data);
    return out;
}

template <typename Scalar>
Sequence<Scalar> to_sequence(const Segment& s)
{
    Sequence<Scalar> q;
    q.steps = s.data.cast<Scalar>();
    q.label = s.label == Label::uav ? 1 : 0;
    return q;
}

struct Classification {
    std::vector<Label> predicted;
    std::vector<std::array<double, 2>> scores; // (other, uav)
    std::optional<Confusion> confusion;
    std::optional<Metrics> metrics;
};

// Class index 1 is UAV. Metrics are filled when every segment is labeled.
template <typename Scalar>
Classification classify(const LstmDetector<Scalar>& model, const std::vector<Segment>& segments,
                        std::size_t chunk = 64)
{
    detail::require(!segments.empty(), "classify: no segments");
    Classification c;
    for (std::size_t start = 0; start < segments.size(); start += chunk) {
        std::vector<Sequence<Scalar>> seqs;
        for (std::size_t i = start; i < std::min(segments.size(), start + chunk); ++i)
            seqs.push_back(to_sequence<Scalar>(segments[i]));
        std::vector<const Sequence<Scalar>*> batch;
        for (const auto& s : seqs) batch.push_back(&s);
        const auto scores = LstmRunner<Scalar>::forward(model, batch);
        for (Eigen::Index b = 0; b < scores.cols(); ++b) {
            c.scores.push_back({static_cast<double>(scores(0, b)), static_cast<double>(scores(1, b))});
            c.predicted.push_back(scores(1, b) > scores(0, b) ? Label::uav : Label::other);
        }
    }
    std::vector<Label> truth;
    for (const auto& s : segments) truth.push_back(s.label);
    if (std::none_of(truth.begin(), truth.end(), [](Label l) { return l == Label::unlabeled; })) {
        c.confusion = tally(c.predicted, truth);
        c.metrics = compute_metrics(*c.confusion);
    }
    return c;
}

// Softmax probability of the UAV class from a pair of scores.
inline double uav_probability(const std::array<double, 2>& s)
{
    const double top = std::max(s[0], s[1]);
    const double a = std::exp(s[0] - top), b = std::exp(s[1] - top);
    return b / (a + b);
}

// ---------------------------------------------------------------------------
// Synthetic dataset generation.

// Rotor-rate law of random UAVs. grid: an integer multiple (3 to 10) of the
// Doppler bin width, so the aliased blade harmonics form a clean comb.
// continuous: uniform in [30, 110] Hz; harmonics alias between comb teeth.
enum class RotorRateLaw { grid, continuous };

struct DatasetOptions {
    std::size_t uav_segments = 200;
    std::size_t other_segments = 200;
    std::uint64_t seed = 0;
    double snr_db_min = 0.0;
    double snr_db_max = 12.0;
    std::size_t background_frames = 8;
    double clutter_probability = 0.5;
    RotorRateLaw rotor_rates = RotorRateLaw::grid;
    SegmentOptions segment;
};

struct GeneratedCapture {
    SceneSpec scene;
    std::string provenance;
    Label label = Label::unlabeled;
};

// Random UAV scene: 4 or 6 rotors, 1-2 scatterers per blade, rotor rate per
// the rate law, hover/ascent/descent between 10 and 80 m.
inline GeneratedCapture random_uav_capture(const RadarConfig& radar, std::size_t frames, Rng& rng,
                                           RotorRateLaw law = RotorRateLaw::grid)
{
    const DerivedParams d = derive(radar);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };

    UavConfig u;
    u.rotor_count = u01(rng) < 0.5 ? 4 : 6;
    u.scatterers_per_blade_assembly = u01(rng) < 0.5 ? 1 : 2;
    const double tip = uni(0.12, 0.3);
    const double rate_hz = law == RotorRateLaw::grid
                               ? d.doppler_bin_hz * static_cast<double>(std::uniform_int_distribution<int>(3, 10)(rng))
                               : uni(30.0, 110.0);
    u.rotor_angular_velocity_rad_per_s = 2.0 * M_PI * rate_hz;
    for (std::size_t q = 0; q < u.rotor_count; ++q) {
        const double phase = uni(0.0, 2.0 * M_PI);
        const double tilt = uni(M_PI / 6.0, M_PI / 2.5);
        for (std::size_t p = 0; p < u.scatterers_per_blade_assembly; ++p) {
            u.scatterer_radii_m.push_back(tip * static_cast<double>(p + 1) /
                                          static_cast<double>(u.scatterers_per_blade_assembly));
            u.initial_phases_rad.push_back(phase);
            u.blade_plane_angle_rad.push_back(tilt);
            u.scatterer_reflectivities.push_back(uni(0.3, 0.7));
        }
    }
    u.body_reflectivity = uni(0.5, 1.5);
    u = validate(u);

    const double duration = static_cast<double>(frames) * d.frame_duration_s;
    const double pick = u01(rng);
    const double speed = pick < 1.0 / 3.0 ? 0.0 : uni(0.5, 3.0);
    const double v = pick < 2.0 / 3.0 ? speed : -speed;
    double r0 = uni(10.0, 80.0);
    if (v < 0.0) r0 = std::max(r0, 10.0 - v * duration);
    if (v > 0.0) r0 = std::min(r0, 80.0 - v * duration);
    TrajectorySegment seg;
    seg.start_time_s = 0.0;
    seg.duration_s = duration;
    seg.start_range_m = r0;
    seg.radial_velocity_m_per_s = v;
    seg.kind = v == 0.0 ? SegmentKind::hover : (v > 0.0 ? SegmentKind::ascent : SegmentKind::descent);

    GeneratedCapture g;
    g.scene.emitters.push_back(UavEmitter{u, validate(TrajectorySpec{{seg}}, d.max_range_m)});
    g.label = Label::uav;
    g.provenance = "uav q=" + std::to_string(u.rotor_count) + " rate_hz=" + std::to_string(rate_hz) +
                   " r0=" + std::to_string(r0) + " v=" + std::to_string(v);
    return g;
}

inline GeneratedCapture random_distractor_capture(const RadarConfig& radar, std::size_t frames, Rng& rng)
{
    const DerivedParams d = derive(radar);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
    Distractor dis;
    const double pick = u01(rng);
    dis.kind = pick < 0.4 ? DistractorKind::aperiodic_flapper
                          : (pick < 0.8 ? DistractorKind::slow_oscillator : DistractorKind::static_blob);
    auto& p = dis.params;
    const double duration = static_cast<double>(frames) * d.frame_duration_s;
    p.radial_velocity_m_per_s = dis.kind == DistractorKind::static_blob ? 0.0 : uni(-2.0, 2.0);
    p.range_m = uni(10.0, 80.0);
    p.range_m = std::clamp(p.range_m, 10.0 - std::min(0.0, p.radial_velocity_m_per_s) * duration,
                           80.0 - std::max(0.0, p.radial_velocity_m_per_s) * duration);
    p.body_reflectivity = uni(0.5, 1.5);
    p.part_reflectivity = uni(0.3, 1.5);
    p.amplitude_m = uni(0.03, 0.3);
    p.rate_hz = dis.kind == DistractorKind::slow_oscillator ? uni(2.0, 12.0) : uni(3.0, 20.0);
    p.phase_noise_rad = uni(0.2, 0.8);
    p.drift_fraction = uni(0.3, 0.5);
    p.seed = std::uniform_int_distribution<std::uint64_t>()(rng);

    GeneratedCapture g;
    g.scene.emitters.push_back(dis);
    g.label = Label::other;
    g.provenance = to_string(dis.kind) + " r0=" + std::to_string(p.range_m) + " rate_hz=" + std::to_string(p.rate_hz);
    return g;
}

// Simulates one capture of exactly one segment length, tracks it and returns
// the preprocessed segment labeled with the capture's class.
inline Segment capture_to_segment(GeneratedCapture g, const RadarConfig& radar, const DatasetOptions& opts,
                                  std::uint64_t capture_seed, Rng& rng)
{
    const DerivedParams d = derive(radar);
    const std::size_t window = opts.segment.window.value_or(segment_length(d));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < opts.clutter_probability)
        g.scene.emitters.push_back(StaticClutter{5.0 + 80.0 * u01(rng), 0.5 + 2.0 * u01(rng)});
    const double snr = opts.snr_db_min + (opts.snr_db_max - opts.snr_db_min) * u01(rng);
    g.scene.rng_seed = capture_seed;
    g.scene.noise_std = noise_std_for_snr(g.scene, radar, snr);

    const auto maps = range_doppler(synthesize_capture(g.scene, radar, window));
    SceneSpec bg = background_of(g.scene);
    bg.rng_seed = derive_seed(capture_seed, "dataset/background");
    const auto bg_maps = range_doppler(synthesize_capture(bg, radar, opts.background_frames));

    TrackingOptions topts;
    topts.fold = opts.segment.fold;
    topts.use_particle_filter = false;
    topts.seed = capture_seed;
    topts.calibration_trials = 50;
    const TrackingResult tr = track_capture(maps, bg_maps, d, topts);
    SegmentOptions sopts = opts.segment;
    sopts.window = window;
    SegmentBatch batch = build_segments(maps, tr.track, d, sopts);
    detail::require(batch.segments.size() == 1, "dataset: expected exactly one segment per capture");
    Segment s = std::move(batch.segments.front());
    s.label = g.label;
    s.provenance = g.provenance + " snr_db=" + std::to_string(snr);
    return s;
}

// Balanced synthetic dataset; UAV and distractor captures alternate so a
// prefix of the output is also roughly balanced.
inline std::vector<Segment> generate_dataset(const RadarConfig& radar, const DatasetOptions& opts)
{
    const DerivedParams d = derive(radar);
    const std::size_t window = opts.segment.window.value_or(segment_length(d));
    std::vector<Segment> out;
    std::size_t made_uav = 0, made_other = 0, k = 0;
    while (made_uav < opts.uav_segments || made_other < opts.other_segments) {
        const bool uav = made_uav < opts.uav_segments && (made_other >= opts.other_segments || k % 2 == 0);
        Rng rng = make_rng(opts.seed, "dataset/capture", k);
        GeneratedCapture g = uav ? random_uav_capture(radar, window, rng, opts.rotor_rates)
                                 : random_distractor_capture(radar, window, rng);
        out.push_back(capture_to_segment(std::move(g), radar, opts, derive_seed(opts.seed, "dataset/noise", k), rng));
        (uav ? made_uav : made_other) += 1;
        ++k;
    }
    return out;
}

// Seeded random split; returns (first, second) with round(fraction * n) in first.
inline std::pair<std::vector<Segment>, std::vector<Segment>> split_dataset(const std::vector<Segment>& all,
                                                                           double fraction, std::uint64_t seed)
{
    detail::require(fraction > 0.0 && fraction < 1.0, "split: fraction must be in (0, 1)");
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed, "dataset/split");
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto cut = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(all.size())));
    std::pair<std::vector<Segment>, std::vector<Segment>> out;
    for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? out.first : out.second).push_back(all[idx[i]]);
    return out;
}

} // namespace mmhawk
