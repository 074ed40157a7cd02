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
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace mmhawk {

using json = nlohmann::json;

// c is fixed to 3e8 so the derived maximum range reproduces 93.8 m for the
// default radar.
inline constexpr double kSpeedOfLight = 3.0e8;
inline constexpr int kSchemaVersion = 1;

struct RadarConfig {
    double carrier_freq_hz = 60.25e9;
    double chirp_slope_hz_per_s = 9.994e12; // 9.994 MHz/us
    double chirp_duration_s = 900e-6;
    std::size_t chirps_per_frame = 100;     // also the Doppler bin count
    double adc_rate_hz = 6.25e6;
    std::size_t samples_per_chirp = 256;    // power of two, also the range bin count
    std::size_t frames_per_capture = 40;
    double speed_of_light_m_per_s = kSpeedOfLight;
};

struct UavConfig {
    std::size_t rotor_count = 6;
    std::size_t scatterers_per_blade_assembly = 2;
    // Per-scatterer arrays are rotor-major: index q * P + p.
    std::vector<double> scatterer_radii_m;
    double rotor_angular_velocity_rad_per_s = 2.0 * M_PI * 55.6;
    std::vector<double> initial_phases_rad;
    std::vector<double> blade_plane_angle_rad;
    double body_reflectivity = 1.0;
    std::vector<double> scatterer_reflectivities;
    // Radial offset of each rotor hub from the body range.
    std::vector<double> rotor_range_offsets_m;

    std::size_t scatterer_count() const noexcept { return rotor_count * scatterers_per_blade_assembly; }
};

enum class SegmentKind { hover, ascent, descent, constant_velocity };

struct TrajectorySegment {
    double start_time_s = 0.0;
    double duration_s = 0.0;
    double start_range_m = 0.0;
    double radial_velocity_m_per_s = 0.0;
    SegmentKind kind = SegmentKind::hover;
};

struct TrajectorySpec {
    std::vector<TrajectorySegment> segments;

    double start_time() const { return segments.empty() ? 0.0 : segments.front().start_time_s; }
    double end_time() const
    {
        return segments.empty() ? 0.0 : segments.back().start_time_s + segments.back().duration_s;
    }

    const TrajectorySegment& segment_at(double t) const
    {
        constexpr double slack = 1e-9;
        if (segments.empty() || t < start_time() - slack || t > end_time() + slack)
            detail::fail("trajectory: time " + std::to_string(t) + " s outside [" +
                         std::to_string(start_time()) + ", " + std::to_string(end_time()) + "]");
        auto it = std::upper_bound(segments.begin(), segments.end(), t,
                                   [](double v, const TrajectorySegment& s) { return v < s.start_time_s; });
        return it == segments.begin() ? segments.front() : *std::prev(it);
    }

    double range_at(double t) const
    {
        const auto& s = segment_at(t);
        return s.start_range_m + s.radial_velocity_m_per_s * (t - s.start_time_s);
    }

    double velocity_at(double t) const { return segment_at(t).radial_velocity_m_per_s; }
};

// Quantities derived from a validated radar and the assumed maximum target
// speed. dp_constraint_bins is the per-frame range-bin motion bound used by
// the tracker; it is unrelated to the chirp slope.
struct DerivedParams {
    double max_range_m = 0.0;
    double range_bin_size_m = 0.0;
    double frame_duration_s = 0.0;
    double prf_hz = 0.0;
    double doppler_bin_hz = 0.0;
    double doppler_bin_m_per_s = 0.0;
    double max_speed_m_per_s = 0.0;
    std::size_t dp_constraint_bins = 1;
    std::size_t range_bins = 0;
    std::size_t doppler_bins = 0;
    std::size_t dc_bin = 0;
};

inline std::string to_string(SegmentKind k)
{
    switch (k) {
    case SegmentKind::hover: return "hover";
    case SegmentKind::ascent: return "ascent";
    case SegmentKind::descent: return "descent";
    case SegmentKind::constant_velocity: return "constant-velocity";
    }
    return "?";
}

inline SegmentKind segment_kind_from_string(const std::string& s)
{
    if (s == "hover") return SegmentKind::hover;
    if (s == "ascent") return SegmentKind::ascent;
    if (s == "descent") return SegmentKind::descent;
    if (s == "constant-velocity") return SegmentKind::constant_velocity;
    detail::fail("trajectory.kind: unknown value '" + s + "'");
}

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// ceil(v_max * T_d / R_res), never below one bin. The 1e-9 slack keeps exact
// integer ratios from rounding up through floating-point noise.
inline std::size_t constraint_bins(double max_speed_m_per_s, double frame_duration_s, double range_bin_size_m)
{
    detail::require(max_speed_m_per_s > 0.0, "derive: max speed must be > 0");
    detail::require(frame_duration_s > 0.0 && range_bin_size_m > 0.0, "derive: durations and bin size must be > 0");
    const double ratio = max_speed_m_per_s * frame_duration_s / range_bin_size_m;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9)));
}

inline RadarConfig validate(RadarConfig r)
{
    using detail::require;
    require(r.carrier_freq_hz > 0.0, "radar.carrier_freq_hz must be > 0");
    require(r.chirp_slope_hz_per_s > 0.0, "radar.chirp_slope_hz_per_s must be > 0");
    require(r.chirp_duration_s > 0.0, "radar.chirp_duration_s must be > 0");
    require(r.adc_rate_hz > 0.0, "radar.adc_rate_hz must be > 0");
    require(r.speed_of_light_m_per_s > 0.0, "radar.speed_of_light_m_per_s must be > 0");
    require(r.chirps_per_frame >= 2, "radar.chirps_per_frame must be >= 2 (Doppler FFT needs two chirps)");
    require(is_power_of_two(r.samples_per_chirp), "radar.samples_per_chirp must be a power of two");
    require(r.frames_per_capture >= 1, "radar.frames_per_capture must be >= 1");
    const double window = static_cast<double>(r.samples_per_chirp) / r.adc_rate_hz;
    require(window <= r.chirp_duration_s * (1.0 + 1e-12),
            "radar: samples_per_chirp / adc_rate_hz exceeds chirp_duration_s (sampling window must fit in the chirp)");
    return r;
}

inline UavConfig validate(UavConfig u)
{
    using detail::require;
    require(u.rotor_count >= 1, "uav.rotor_count must be >= 1");
    require(u.scatterers_per_blade_assembly >= 1, "uav.scatterers_per_blade_assembly must be >= 1");
    require(u.rotor_angular_velocity_rad_per_s > 0.0, "uav.rotor_angular_velocity_rad_per_s must be > 0");
    require(u.body_reflectivity >= 0.0, "uav.body_reflectivity must be >= 0");
    const std::size_t n = u.scatterer_count();

    // A single value (or an empty array where a default exists) broadcasts to every scatterer.
    auto broadcast = [n](std::vector<double>& v, const char* name, double fallback, bool has_default) {
        if (v.empty()) {
            require(has_default, std::string("uav.") + name + " is required");
            v.assign(n, fallback);
        } else if (v.size() == 1) {
            v.assign(n, v.front());
        }
        require(v.size() == n, std::string("uav.") + name + " must have 1 or rotor_count*scatterers_per_blade_assembly entries");
    };
    if (u.scatterer_radii_m.size() == u.scatterers_per_blade_assembly && n != u.scatterers_per_blade_assembly) {
        // Radii given per blade assembly: same blade geometry on every rotor.
        std::vector<double> all;
        for (std::size_t q = 0; q < u.rotor_count; ++q)
            all.insert(all.end(), u.scatterer_radii_m.begin(), u.scatterer_radii_m.end());
        u.scatterer_radii_m = std::move(all);
    }
    if (u.scatterer_radii_m.empty()) {
        // Default blade: scatterers spread evenly out to a 25 cm tip.
        for (std::size_t q = 0; q < u.rotor_count; ++q)
            for (std::size_t p = 0; p < u.scatterers_per_blade_assembly; ++p)
                u.scatterer_radii_m.push_back(0.25 * static_cast<double>(p + 1) /
                                              static_cast<double>(u.scatterers_per_blade_assembly));
    }
    broadcast(u.scatterer_radii_m, "scatterer_radii_m", 0.25, true);
    if (u.initial_phases_rad.empty()) {
        // Golden-ratio rotor phases; scatterers on one blade share their rotor's
        // phase. An even spread would put rotor pairs half a turn apart, which
        // cancels every odd harmonic and doubles the apparent comb spacing.
        constexpr double golden = 0.6180339887498949;
        u.initial_phases_rad.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = static_cast<double>(i / u.scatterers_per_blade_assembly);
            u.initial_phases_rad[i] = 2.0 * M_PI * (q * golden - std::floor(q * golden));
        }
    }
    broadcast(u.initial_phases_rad, "initial_phases_rad", 0.0, true);
    broadcast(u.blade_plane_angle_rad, "blade_plane_angle_rad", M_PI / 3.0, true);
    broadcast(u.scatterer_reflectivities, "scatterer_reflectivities", 0.5, true);
    if (u.rotor_range_offsets_m.empty()) u.rotor_range_offsets_m.assign(u.rotor_count, 0.0);
    require(u.rotor_range_offsets_m.size() == u.rotor_count, "uav.rotor_range_offsets_m must have rotor_count entries");

    for (double r : u.scatterer_radii_m) require(r >= 0.0 && std::isfinite(r), "uav.scatterer_radii_m must be >= 0");
    for (double b : u.scatterer_reflectivities)
        require(b >= 0.0 && std::isfinite(b), "uav.scatterer_reflectivities must be >= 0");
    for (double p : u.initial_phases_rad) require(std::isfinite(p), "uav.initial_phases_rad must be finite");
    for (double a : u.blade_plane_angle_rad) require(std::isfinite(a), "uav.blade_plane_angle_rad must be finite");
    return u;
}

// Checks time contiguity, kind/velocity consistency, and that the range
// stays inside (0, max_range_m). Pass max_range_m <= 0 to skip the range check.
inline TrajectorySpec validate(TrajectorySpec t, double max_range_m = 0.0)
{
    using detail::require;
    require(!t.segments.empty(), "trajectory.segments must not be empty");
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const auto& s = t.segments[i];
        const std::string at = "trajectory.segments[" + std::to_string(i) + "]";
        require(s.duration_s > 0.0, at + ".duration_s must be > 0");
        require(std::isfinite(s.start_range_m) && std::isfinite(s.radial_velocity_m_per_s) &&
                    std::isfinite(s.start_time_s),
                at + " must be finite");
        if (i > 0) {
            const auto& p = t.segments[i - 1];
            require(std::abs(p.start_time_s + p.duration_s - s.start_time_s) <= 1e-9,
                    at + ".start_time_s must equal the previous segment's end (segments are contiguous)");
        }
        switch (s.kind) {
        case SegmentKind::hover:
            require(s.radial_velocity_m_per_s == 0.0, at + ": hover requires radial_velocity_m_per_s == 0");
            break;
        case SegmentKind::ascent:
            require(s.radial_velocity_m_per_s > 0.0, at + ": ascent requires radial_velocity_m_per_s > 0");
            break;
        case SegmentKind::descent:
            require(s.radial_velocity_m_per_s < 0.0, at + ": descent requires radial_velocity_m_per_s < 0");
            break;
        case SegmentKind::constant_velocity: break;
        }
        const double r0 = s.start_range_m;
        const double r1 = s.start_range_m + s.radial_velocity_m_per_s * s.duration_s;
        require(std::min(r0, r1) > 0.0, at + ": range must stay > 0");
        if (max_range_m > 0.0)
            require(std::max(r0, r1) < max_range_m,
                    at + ": range must stay below the radar's max range " + std::to_string(max_range_m) + " m");
    }
    return t;
}

inline DerivedParams derive(const RadarConfig& radar, double max_speed_m_per_s = 4.0)
{
    const RadarConfig r = validate(radar);
    detail::require(max_speed_m_per_s > 0.0, "derive: max speed must be > 0");
    DerivedParams d;
    const double c = r.speed_of_light_m_per_s;
    d.max_range_m = c * r.adc_rate_hz / (2.0 * r.chirp_slope_hz_per_s);
    d.range_bin_size_m = d.max_range_m / static_cast<double>(r.samples_per_chirp);
    d.frame_duration_s = static_cast<double>(r.chirps_per_frame) * r.chirp_duration_s;
    d.prf_hz = 1.0 / r.chirp_duration_s;
    d.doppler_bin_hz = 1.0 / d.frame_duration_s;
    d.doppler_bin_m_per_s = d.doppler_bin_hz * c / (2.0 * r.carrier_freq_hz);
    d.max_speed_m_per_s = max_speed_m_per_s;
    d.dp_constraint_bins = constraint_bins(max_speed_m_per_s, d.frame_duration_s, d.range_bin_size_m);
    d.range_bins = r.samples_per_chirp;
    d.doppler_bins = r.chirps_per_frame;
    d.dc_bin = r.chirps_per_frame / 2;
    return d;
}

// ---------------------------------------------------------------------------
// JSON schema. Every object is read strictly: unknown keys are rejected with
// the dotted path of the offending key.

class JsonFields {
public:
    JsonFields(const json& j, std::string context) : j_(j), ctx_(std::move(context))
    {
        if (!j_.is_object()) detail::fail(ctx_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T get(const std::string& key, const T& fallback)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) detail::fail(path(key) + ": missing required key");
        return convert<T>(key);
    }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) detail::fail(path(key) + ": missing required key");
        return j_.at(key);
    }

    // Scalar or array, returned as an array.
    std::vector<double> numbers(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return {};
        const json& v = j_.at(key);
        if (v.is_number()) return {v.get<double>()};
        if (!v.is_array()) detail::fail(path(key) + ": expected a number or an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) detail::fail(path(key) + ": expected numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string path(const std::string& key) const { return ctx_.empty() ? key : ctx_ + "." + key; }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) detail::fail(path(it.key()) + ": unknown key");
    }

private:
    template <typename T>
    T convert(const std::string& key) const
    {
        try {
            const json& v = j_.at(key);
            if constexpr (std::is_same_v<T, std::size_t>) {
                if (!v.is_number_integer() || v.get<long long>() < 0)
                    detail::fail(path(key) + ": expected a non-negative integer");
            } else if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number()) detail::fail(path(key) + ": expected a number");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            detail::fail(path(key) + ": " + e.what());
        }
    }

    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

inline void check_schema_version(JsonFields& f)
{
    const int v = f.get<int>("schema_version", kSchemaVersion);
    detail::require(v == kSchemaVersion, f.path("schema_version") + ": unsupported version " + std::to_string(v));
}

inline RadarConfig radar_from_json(const json& j, const std::string& ctx = "radar")
{
    JsonFields f(j, ctx);
    check_schema_version(f);
    RadarConfig r;
    r.carrier_freq_hz = f.get("carrier_freq_hz", r.carrier_freq_hz);
    r.chirp_slope_hz_per_s = f.get("chirp_slope_hz_per_s", r.chirp_slope_hz_per_s);
    r.chirp_duration_s = f.get("chirp_duration_s", r.chirp_duration_s);
    r.chirps_per_frame = f.get("chirps_per_frame", r.chirps_per_frame);
    r.adc_rate_hz = f.get("adc_rate_hz", r.adc_rate_hz);
    r.samples_per_chirp = f.get("samples_per_chirp", r.samples_per_chirp);
    r.frames_per_capture = f.get("frames_per_capture", r.frames_per_capture);
    r.speed_of_light_m_per_s = f.get("speed_of_light_m_per_s", r.speed_of_light_m_per_s);
    f.finish();
    return validate(r);
}

inline json to_json(const RadarConfig& r)
{
    return json{{"schema_version", kSchemaVersion},
                {"carrier_freq_hz", r.carrier_freq_hz},
                {"chirp_slope_hz_per_s", r.chirp_slope_hz_per_s},
                {"chirp_duration_s", r.chirp_duration_s},
                {"chirps_per_frame", r.chirps_per_frame},
                {"adc_rate_hz", r.adc_rate_hz},
                {"samples_per_chirp", r.samples_per_chirp},
                {"frames_per_capture", r.frames_per_capture},
                {"speed_of_light_m_per_s", r.speed_of_light_m_per_s}};
}

inline UavConfig uav_from_json(const json& j, const std::string& ctx = "uav")
{
    JsonFields f(j, ctx);
    UavConfig u;
    u.rotor_count = f.get("rotor_count", u.rotor_count);
    u.scatterers_per_blade_assembly = f.get("scatterers_per_blade_assembly", u.scatterers_per_blade_assembly);
    u.scatterer_radii_m = f.numbers("scatterer_radii_m");
    if (f.has("rotor_rate_hz")) {
        detail::require(!f.has("rotor_angular_velocity_rad_per_s"),
                        ctx + ": give rotor_rate_hz or rotor_angular_velocity_rad_per_s, not both");
        u.rotor_angular_velocity_rad_per_s = 2.0 * M_PI * f.require<double>("rotor_rate_hz");
    } else {
        u.rotor_angular_velocity_rad_per_s =
            f.get("rotor_angular_velocity_rad_per_s", u.rotor_angular_velocity_rad_per_s);
    }
    u.initial_phases_rad = f.numbers("initial_phases_rad");
    u.blade_plane_angle_rad = f.numbers("blade_plane_angle_rad");
    u.body_reflectivity = f.get("body_reflectivity", u.body_reflectivity);
    u.scatterer_reflectivities = f.numbers("scatterer_reflectivities");
    u.rotor_range_offsets_m = f.numbers("rotor_range_offsets_m");
    f.finish();
    return validate(u);
}

inline json to_json(const UavConfig& u)
{
    return json{{"rotor_count", u.rotor_count},
                {"scatterers_per_blade_assembly", u.scatterers_per_blade_assembly},
                {"scatterer_radii_m", u.scatterer_radii_m},
                {"rotor_angular_velocity_rad_per_s", u.rotor_angular_velocity_rad_per_s},
                {"initial_phases_rad", u.initial_phases_rad},
                {"blade_plane_angle_rad", u.blade_plane_angle_rad},
                {"body_reflectivity", u.body_reflectivity},
                {"scatterer_reflectivities", u.scatterer_reflectivities},
                {"rotor_range_offsets_m", u.rotor_range_offsets_m}};
}

inline TrajectorySpec trajectory_from_json(const json& j, const std::string& ctx = "trajectory")
{
    JsonFields f(j, ctx);
    const json& segs = f.raw("segments");
    f.finish();
    detail::require(segs.is_array(), ctx + ".segments: expected an array");
    TrajectorySpec t;
    double next_start = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        JsonFields s(segs[i], ctx + ".segments[" + std::to_string(i) + "]");
        TrajectorySegment seg;
        seg.start_time_s = s.get("start_time_s", next_start);
        seg.duration_s = s.require<double>("duration_s");
        seg.start_range_m = s.require<double>("start_range_m");
        seg.radial_velocity_m_per_s = s.get("radial_velocity_m_per_s", 0.0);
        seg.kind = segment_kind_from_string(
            s.get<std::string>("kind", seg.radial_velocity_m_per_s == 0.0 ? "hover" : "constant-velocity"));
        s.finish();
        next_start = seg.start_time_s + seg.duration_s;
        t.segments.push_back(seg);
    }
    return validate(t);
}

inline json to_json(const TrajectorySpec& t)
{
    json segs = json::array();
    for (const auto& s : t.segments)
        segs.push_back({{"start_time_s", s.start_time_s},
                        {"duration_s", s.duration_s},
                        {"start_range_m", s.start_range_m},
                        {"radial_velocity_m_per_s", s.radial_velocity_m_per_s},
                        {"kind", to_string(s.kind)}});
    return json{{"segments", segs}};
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
}

inline RadarConfig load_radar_config(const std::string& path)
{
    try {
        return radar_from_json(read_json_file(path), "radar");
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

} // namespace mmhawk
