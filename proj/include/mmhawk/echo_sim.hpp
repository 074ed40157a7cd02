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
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "config.hpp"
#include "errors.hpp"
#include "seed.hpp"

namespace mmhawk {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One radar frame of beat-signal samples, chirps x samples_per_chirp.
// Sample (l, n) was taken at start_time_s + l * T_c + n / f_s.
struct Frame {
    std::size_t frame_index = 0;
    double start_time_s = 0.0;
    ComplexMatrix samples;
};

struct StaticClutter {
    double range_m = 0.0;
    double reflectivity = 1.0;
};

struct UavEmitter {
    UavConfig uav;
    TrajectorySpec trajectory;
};

enum class DistractorKind { aperiodic_flapper, static_blob, slow_oscillator };

inline std::string to_string(DistractorKind k)
{
    switch (k) {
    case DistractorKind::aperiodic_flapper: return "aperiodic-flapper";
    case DistractorKind::static_blob: return "static-blob";
    case DistractorKind::slow_oscillator: return "slow-oscillator";
    }
    return "?";
}

inline DistractorKind distractor_kind_from_string(const std::string& s)
{
    if (s == "aperiodic-flapper") return DistractorKind::aperiodic_flapper;
    if (s == "static-blob") return DistractorKind::static_blob;
    if (s == "slow-oscillator") return DistractorKind::slow_oscillator;
    detail::fail("distractor.kind: unknown value '" + s + "'");
}

// Non-UAV emitters used as the negative class.
//  aperiodic-flapper: a body plus a part whose displacement phase follows a
//    random walk (no fixed rate), like a flapping wing.
//  static-blob: a few motionless points within +-15 cm of range_m.
//  slow-oscillator: an oscillating part whose rate drifts by drift_fraction
//    between consecutive frames and sweeps linearly inside each frame.
struct DistractorParams {
    double range_m = 30.0;
    double radial_velocity_m_per_s = 0.0;
    double body_reflectivity = 1.0;
    double part_reflectivity = 0.5;
    double amplitude_m = 0.1;
    double rate_hz = 10.0;
    double phase_noise_rad = 0.3;   // per-chirp random-walk step (flapper)
    double drift_fraction = 0.35;   // per-frame rate change (oscillator)
    std::uint64_t seed = 0;
};

struct Distractor {
    DistractorKind kind = DistractorKind::static_blob;
    DistractorParams params;
};

using Emitter = std::variant<UavEmitter, StaticClutter, Distractor>;

// How reflectivities scale with range. inverse_square multiplies each
// amplitude by (reference_range_m / R)^2, R evaluated at the chirp start.
enum class AmplitudeLaw { constant, inverse_square };

struct SceneSpec {
    std::vector<Emitter> emitters;
    double noise_std = 0.0; // per-sample std of circular complex AWGN (E|n|^2 = noise_std^2)
    std::uint64_t rng_seed = 0;
    AmplitudeLaw amplitude_law = AmplitudeLaw::constant;
    double reference_range_m = 10.0;
};

inline DistractorParams validate(DistractorParams p)
{
    using detail::require;
    require(p.range_m > 0.0, "distractor.range_m must be > 0");
    require(p.body_reflectivity >= 0.0 && p.part_reflectivity >= 0.0, "distractor reflectivities must be >= 0");
    require(p.amplitude_m >= 0.0, "distractor.amplitude_m must be >= 0");
    require(p.rate_hz > 0.0, "distractor.rate_hz must be > 0");
    require(p.phase_noise_rad >= 0.0, "distractor.phase_noise_rad must be >= 0");
    require(p.drift_fraction >= 0.0 && p.drift_fraction < 1.0, "distractor.drift_fraction must be in [0, 1)");
    return p;
}

// Radial distance of scatterer p on rotor q at time t:
// R_q(t) + r_pq * cos(w t + phi_pq) * cos(theta_pq).
inline double scatterer_range(const UavConfig& uav, const TrajectorySpec& traj, std::size_t p, std::size_t q,
                              double t)
{
    detail::require(q < uav.rotor_count && p < uav.scatterers_per_blade_assembly,
                    "scatterer_range: scatterer index out of range");
    const std::size_t i = q * uav.scatterers_per_blade_assembly + p;
    const double hub = traj.range_at(t) + uav.rotor_range_offsets_m[q];
    return hub + uav.scatterer_radii_m[i] * std::cos(uav.rotor_angular_velocity_rad_per_s * t + uav.initial_phases_rad[i]) *
                     std::cos(uav.blade_plane_angle_rad[i]);
}

namespace detail {

// Frame-local timing shared by every emitter.
struct FrameClock {
    double start = 0.0;
    double chirp = 0.0;
    double sample = 0.0;
    std::size_t chirps = 0;
    std::size_t samples = 0;
    std::vector<double> wavenumber; // 4 pi (f_c + K tau_n) / c

    FrameClock(const RadarConfig& r, std::size_t frame_index)
        : start(static_cast<double>(frame_index) * static_cast<double>(r.chirps_per_frame) * r.chirp_duration_s),
          chirp(r.chirp_duration_s), sample(1.0 / r.adc_rate_hz), chirps(r.chirps_per_frame),
          samples(r.samples_per_chirp), wavenumber(r.samples_per_chirp)
    {
        for (std::size_t n = 0; n < samples; ++n)
            wavenumber[n] = 4.0 * M_PI * (r.carrier_freq_hz + r.chirp_slope_hz_per_s * static_cast<double>(n) * sample) /
                            r.speed_of_light_m_per_s;
    }

    double time(std::size_t l, std::size_t n) const
    {
        return start + static_cast<double>(l) * chirp + static_cast<double>(n) * sample;
    }
    double end() const { return start + static_cast<double>(chirps) * chirp; }
};

struct AmplitudeModel {
    AmplitudeLaw law = AmplitudeLaw::constant;
    double reference = 1.0;
    double operator()(double amplitude, double range) const
    {
        if (law == AmplitudeLaw::constant) return amplitude;
        const double g = reference / range;
        return amplitude * g * g;
    }
};

// Adds amplitude * exp(j * k_n * R(t)) for one point scatterer. range_fn(l, n, t)
// receives the chirp index, the sample index and the absolute sample time.
template <typename RangeFn>
void accumulate_point(ComplexMatrix& out, const FrameClock& clk, const AmplitudeModel& amp, double amplitude,
                      RangeFn&& range_fn)
{
    if (amplitude == 0.0) return;
    for (std::size_t l = 0; l < clk.chirps; ++l) {
        const double a = amp(amplitude, range_fn(l, std::size_t{0}, clk.time(l, 0)));
        Complex* row = out.row(static_cast<Eigen::Index>(l)).data();
        for (std::size_t n = 0; n < clk.samples; ++n) {
            const double phase = clk.wavenumber[n] * range_fn(l, n, clk.time(l, n));
            row[n] += Complex(a * std::cos(phase), a * std::sin(phase));
        }
    }
}

inline void check_range(double range, double max_range, const std::string& who)
{
    if (!(range > 0.0 && range < max_range))
        fail(who + ": range " + std::to_string(range) + " m outside (0, " + std::to_string(max_range) + ") m");
}

inline void add_uav(ComplexMatrix& out, const FrameClock& clk, const AmplitudeModel& amp, const UavEmitter& e,
                    double max_range)
{
    const auto& u = e.uav;
    const auto& traj = e.trajectory;
    check_range(traj.range_at(clk.start), max_range, "uav");
    check_range(traj.range_at(std::min(clk.end(), traj.end_time())), max_range, "uav");
    if (clk.end() > traj.end_time() + 1e-9)
        fail("uav: frame ends at " + std::to_string(clk.end()) + " s, after the trajectory (" +
             std::to_string(traj.end_time()) + " s)");

    // Same ranges as scatterer_range, evaluated without per-sample trig for
    // the blade angle: the body range is shared by every scatterer and
    // cos(w t + phi) is the real part of a per-chirp phasor times a
    // per-sample rotation.
    const std::size_t samples = clk.samples;
    std::vector<double> body(clk.chirps * samples);
    for (std::size_t l = 0; l < clk.chirps; ++l)
        for (std::size_t n = 0; n < samples; ++n) body[l * samples + n] = traj.range_at(clk.time(l, n));
    accumulate_point(out, clk, amp, u.body_reflectivity,
                     [&](std::size_t l, std::size_t n, double) { return body[l * samples + n]; });

    const double w = u.rotor_angular_velocity_rad_per_s;
    std::vector<Complex> spin(samples);
    for (std::size_t n = 0; n < samples; ++n) spin[n] = std::polar(1.0, w * static_cast<double>(n) * clk.sample);
    std::vector<Complex> chirp_phase(clk.chirps);
    for (std::size_t q = 0; q < u.rotor_count; ++q)
        for (std::size_t p = 0; p < u.scatterers_per_blade_assembly; ++p) {
            const std::size_t i = q * u.scatterers_per_blade_assembly + p;
            const double reach = u.scatterer_radii_m[i] * std::cos(u.blade_plane_angle_rad[i]);
            const double offset = u.rotor_range_offsets_m[q];
            for (std::size_t l = 0; l < clk.chirps; ++l)
                chirp_phase[l] = std::polar(1.0, w * clk.time(l, 0) + u.initial_phases_rad[i]);
            accumulate_point(out, clk, amp, u.scatterer_reflectivities[i], [&](std::size_t l, std::size_t n, double) {
                return body[l * samples + n] + offset + reach * (chirp_phase[l] * spin[n]).real();
            });
        }
}

inline void add_clutter(ComplexMatrix& out, const FrameClock& clk, const AmplitudeModel& amp, const StaticClutter& c,
                        double max_range)
{
    check_range(c.range_m, max_range, "clutter");
    accumulate_point(out, clk, amp, c.reflectivity, [&](std::size_t, std::size_t, double) { return c.range_m; });
}

// Rate of the slow oscillator at the start of each frame, 0..frame_index+1.
inline std::vector<double> oscillator_rates(const DistractorParams& p, std::size_t last_frame)
{
    std::vector<double> f{p.rate_hz};
    const double lo = 0.4 * p.rate_hz, hi = 2.5 * p.rate_hz;
    for (std::size_t k = 0; k <= last_frame; ++k) {
        Rng rng = make_rng(p.seed, "distractor/oscillator", k);
        double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        double next = f.back() * (1.0 + sign * p.drift_fraction);
        if (next < lo || next > hi) next = f.back() * (1.0 - sign * p.drift_fraction);
        f.push_back(next);
    }
    return f;
}

inline void add_distractor(ComplexMatrix& out, const FrameClock& clk, const AmplitudeModel& amp, const Distractor& d,
                           double max_range, std::size_t frame_index)
{
    const DistractorParams p = validate(d.params);
    auto base = [&](double t) { return p.range_m + p.radial_velocity_m_per_s * t; };
    check_range(base(clk.start), max_range, "distractor");
    check_range(base(clk.end()), max_range, "distractor");

    switch (d.kind) {
    case DistractorKind::static_blob: {
        // Three motionless points sharing the body reflectivity; no Doppler.
        const double offsets[3] = {-0.15, 0.0, 0.15};
        for (double off : offsets) {
            const double r = p.range_m + off;
            check_range(r, max_range, "distractor");
            accumulate_point(out, clk, amp, p.body_reflectivity / 3.0,
                             [r](std::size_t, std::size_t, double) { return r; });
        }
        if (p.part_reflectivity > 0.0)
            accumulate_point(out, clk, amp, p.part_reflectivity,
                             [&](std::size_t, std::size_t, double) { return p.range_m + 0.05; });
        break;
    }
    case DistractorKind::aperiodic_flapper: {
        // Displacement phase at each chirp start; linear between knots.
        Rng rng = make_rng(p.seed, "distractor/flapper", frame_index);
        std::normal_distribution<double> step(0.0, p.phase_noise_rad);
        std::uniform_real_distribution<double> start_phase(0.0, 2.0 * M_PI);
        std::vector<double> knots(clk.chirps + 1);
        knots[0] = start_phase(rng);
        for (std::size_t l = 1; l < knots.size(); ++l)
            knots[l] = knots[l - 1] + 2.0 * M_PI * p.rate_hz * clk.chirp + step(rng);
        accumulate_point(out, clk, amp, p.body_reflectivity, [&](std::size_t, std::size_t, double t) { return base(t); });
        accumulate_point(out, clk, amp, p.part_reflectivity, [&](std::size_t l, std::size_t n, double t) {
            const double frac = static_cast<double>(n) * clk.sample / clk.chirp;
            const double psi = knots[l] + frac * (knots[l + 1] - knots[l]);
            return base(t) + p.amplitude_m * std::cos(psi);
        });
        break;
    }
    case DistractorKind::slow_oscillator: {
        const auto rates = oscillator_rates(p, frame_index);
        const double td = clk.end() - clk.start;
        Rng phase_rng = make_rng(p.seed, "distractor/oscillator-phase");
        double phase0 = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(phase_rng);
        for (std::size_t k = 0; k < frame_index; ++k) phase0 += M_PI * (rates[k] + rates[k + 1]) * td;
        const double f0 = rates[frame_index], f1 = rates[frame_index + 1];
        accumulate_point(out, clk, amp, p.body_reflectivity, [&](std::size_t, std::size_t, double t) { return base(t); });
        accumulate_point(out, clk, amp, p.part_reflectivity, [&](std::size_t, std::size_t, double t) {
            const double tau = t - clk.start;
            const double psi = phase0 + 2.0 * M_PI * (f0 * tau + 0.5 * (f1 - f0) * tau * tau / td);
            return base(t) + p.amplitude_m * std::cos(psi);
        });
        break;
    }
    }
}

} // namespace detail

// Noise-free superposition of every emitter for one frame.
inline ComplexMatrix synthesize_clean(const SceneSpec& scene, const RadarConfig& radar_in, std::size_t frame_index)
{
    const RadarConfig radar = validate(radar_in);
    detail::require(scene.noise_std >= 0.0, "scene.noise_std must be >= 0");
    const double max_range = derive(radar).max_range_m;
    const detail::FrameClock clk(radar, frame_index);
    const detail::AmplitudeModel amp{scene.amplitude_law, scene.reference_range_m};
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(radar.chirps_per_frame),
                                            static_cast<Eigen::Index>(radar.samples_per_chirp));
    for (const auto& e : scene.emitters) {
        std::visit(
            [&](const auto& em) {
                using T = std::decay_t<decltype(em)>;
                if constexpr (std::is_same_v<T, UavEmitter>)
                    detail::add_uav(out, clk, amp, em, max_range);
                else if constexpr (std::is_same_v<T, StaticClutter>)
                    detail::add_clutter(out, clk, amp, em, max_range);
                else
                    detail::add_distractor(out, clk, amp, em, max_range, frame_index);
            },
            e);
    }
    return out;
}

// sample(l, n) = sum over emitters of a * exp(j 4 pi (f_c + K tau_n) R(t) / c)
// plus circular complex AWGN. Ranges are evaluated at each sample's absolute
// time. Pure in (scene, radar, frame_index); noise uses a per-frame stream.
inline Frame synthesize_frame(const SceneSpec& scene, const RadarConfig& radar, std::size_t frame_index)
{
    Frame f;
    f.frame_index = frame_index;
    f.start_time_s = detail::FrameClock(radar, frame_index).start;
    f.samples = synthesize_clean(scene, radar, frame_index);
    if (scene.noise_std > 0.0) {
        Rng rng = make_rng(scene.rng_seed, "echo-sim/noise", frame_index);
        std::normal_distribution<double> g(0.0, scene.noise_std / std::sqrt(2.0));
        for (Eigen::Index i = 0; i < f.samples.size(); ++i) {
            const double re = g(rng);
            const double im = g(rng);
            f.samples.data()[i] += Complex(re, im);
        }
    }
    return f;
}

inline std::vector<Frame> synthesize_capture(const SceneSpec& scene, const RadarConfig& radar, std::size_t frames)
{
    std::vector<Frame> out;
    out.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k) out.push_back(synthesize_frame(scene, radar, k));
    return out;
}

// Frame stream for a single distractor on a noiseless background.
inline std::vector<Frame> synthesize_distractor_frames(DistractorKind kind, const DistractorParams& params,
                                                       const RadarConfig& radar, std::size_t frames)
{
    SceneSpec scene;
    scene.emitters.push_back(Distractor{kind, validate(params)});
    scene.rng_seed = params.seed;
    return synthesize_capture(scene, radar, frames);
}

inline std::vector<Frame> synthesize_distractor_frames(const std::string& kind, const DistractorParams& params,
                                                       const RadarConfig& radar, std::size_t frames)
{
    return synthesize_distractor_frames(distractor_kind_from_string(kind), params, radar, frames);
}

// First UAV emitter in the scene, if any (ground truth comes from it).
inline const UavEmitter* first_uav(const SceneSpec& scene)
{
    for (const auto& e : scene.emitters)
        if (const auto* u = std::get_if<UavEmitter>(&e)) return u;
    return nullptr;
}

} // namespace mmhawk
