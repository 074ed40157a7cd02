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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "echo_sim.hpp"

namespace mmhawk {

// Scenario file (JSON, all SI):
// {
//   "schema_version": 1,
//   "radar": {...},                 optional, radar config object
//   "frames": 40,
//   "noise_std": 0.5 | "snr_db": 0, per-sample noise or per-peak SNR of the first UAV
//   "seed": 7,                      optional, --seed wins when given
//   "amplitude_law": "constant" | "inverse-square", "reference_range_m": 10,
//   "background_frames": 20,        emitter-free capture for noise estimation
//   "emitters": [
//     {"type": "uav", "uav": {...}, "trajectory": {"segments": [...]}},
//     {"type": "clutter", "range_m": 20, "reflectivity": 2},
//     {"type": "distractor", "kind": "slow-oscillator", "params": {...}}
//   ]
// }
struct Scenario {
    std::optional<RadarConfig> radar;
    std::size_t frames = 40;
    std::optional<double> snr_db;
    std::optional<std::uint64_t> seed;
    std::size_t background_frames = 0;
    SceneSpec scene;
};

inline DistractorParams distractor_params_from_json(const json& j, const std::string& ctx)
{
    JsonFields f(j, ctx);
    DistractorParams p;
    p.range_m = f.get("range_m", p.range_m);
    p.radial_velocity_m_per_s = f.get("radial_velocity_m_per_s", p.radial_velocity_m_per_s);
    p.body_reflectivity = f.get("body_reflectivity", p.body_reflectivity);
    p.part_reflectivity = f.get("part_reflectivity", p.part_reflectivity);
    p.amplitude_m = f.get("amplitude_m", p.amplitude_m);
    p.rate_hz = f.get("rate_hz", p.rate_hz);
    p.phase_noise_rad = f.get("phase_noise_rad", p.phase_noise_rad);
    p.drift_fraction = f.get("drift_fraction", p.drift_fraction);
    p.seed = f.get("seed", p.seed);
    f.finish();
    try {
        return validate(p);
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    }
}

inline Scenario scenario_from_json(const json& j)
{
    JsonFields f(j, "scenario");
    check_schema_version(f);
    Scenario s;
    if (f.has("radar")) s.radar = radar_from_json(f.raw("radar"), "scenario.radar");
    s.frames = f.get("frames", s.frames);
    detail::require(s.frames >= 1, "scenario.frames must be >= 1");
    if (f.has("noise_std") && f.has("snr_db")) detail::fail("scenario: give noise_std or snr_db, not both");
    s.scene.noise_std = f.get("noise_std", 0.0);
    detail::require(s.scene.noise_std >= 0.0, "scenario.noise_std must be >= 0");
    if (f.has("snr_db")) s.snr_db = f.require<double>("snr_db");
    if (f.has("seed")) s.seed = f.require<std::uint64_t>("seed");
    const std::string law = f.get<std::string>("amplitude_law", "constant");
    if (law == "constant")
        s.scene.amplitude_law = AmplitudeLaw::constant;
    else if (law == "inverse-square")
        s.scene.amplitude_law = AmplitudeLaw::inverse_square;
    else
        detail::fail("scenario.amplitude_law: unknown value '" + law + "'");
    s.scene.reference_range_m = f.get("reference_range_m", s.scene.reference_range_m);
    detail::require(s.scene.reference_range_m > 0.0, "scenario.reference_range_m must be > 0");
    s.background_frames = f.get("background_frames", s.background_frames);

    const json& emitters = f.raw("emitters");
    f.finish();
    detail::require(emitters.is_array(), "scenario.emitters: expected an array");
    for (std::size_t i = 0; i < emitters.size(); ++i) {
        const std::string ctx = "scenario.emitters[" + std::to_string(i) + "]";
        JsonFields e(emitters[i], ctx);
        const std::string type = e.require<std::string>("type");
        if (type == "uav") {
            UavEmitter u{uav_from_json(e.raw("uav"), ctx + ".uav"),
                         trajectory_from_json(e.raw("trajectory"), ctx + ".trajectory")};
            s.scene.emitters.emplace_back(std::move(u));
        } else if (type == "clutter") {
            StaticClutter c{e.require<double>("range_m"), e.get("reflectivity", 1.0)};
            detail::require(c.range_m > 0.0, ctx + ".range_m must be > 0");
            detail::require(c.reflectivity >= 0.0, ctx + ".reflectivity must be >= 0");
            s.scene.emitters.emplace_back(c);
        } else if (type == "distractor") {
            Distractor d;
            d.kind = distractor_kind_from_string(e.require<std::string>("kind"));
            if (e.has("params")) d.params = distractor_params_from_json(e.raw("params"), ctx + ".params");
            s.scene.emitters.emplace_back(d);
        } else {
            detail::fail(ctx + ".type: unknown value '" + type + "'");
        }
        e.finish();
    }
    return s;
}

inline Scenario load_scenario(const std::string& path)
{
    try {
        return scenario_from_json(read_json_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// The same scene with UAVs and distractors removed (background capture).
inline SceneSpec background_of(const SceneSpec& scene)
{
    SceneSpec bg = scene;
    bg.emitters.clear();
    for (const auto& e : scene.emitters)
        if (std::holds_alternative<StaticClutter>(e)) bg.emitters.push_back(e);
    return bg;
}

} // namespace mmhawk
