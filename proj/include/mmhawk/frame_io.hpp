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
#include <string>
#include <vector>

#include <json.hpp>

#include "binary.hpp"
#include "config.hpp"
#include "echo_sim.hpp"

namespace mmhawk {

// Raw frame file:
//   header  JSON object {magic, schema_version, L, N_s, f_s, T_c, f_c, K},
//           space-padded so that header + '\n' fills a multiple of 64 bytes
//   body    float32 little-endian (re, im) pairs, row-major
//           [frame][chirp][sample]
// Frames are contiguous in time: frame k starts at k * L * T_c.
inline constexpr const char* kFrameMagic = "MMHAWK-FRAMES";
inline constexpr std::size_t kHeaderBlock = 64;

struct FrameCapture {
    RadarConfig radar;
    std::vector<Frame> frames;
};

inline std::string frame_header(const RadarConfig& r)
{
    nlohmann::json h = {{"magic", kFrameMagic},       {"schema_version", kSchemaVersion},
                        {"L", r.chirps_per_frame},    {"N_s", r.samples_per_chirp},
                        {"f_s", r.adc_rate_hz},       {"T_c", r.chirp_duration_s},
                        {"f_c", r.carrier_freq_hz},   {"K", r.chirp_slope_hz_per_s}};
    std::string text = h.dump();
    const std::size_t total = (text.size() + 1 + kHeaderBlock - 1) / kHeaderBlock * kHeaderBlock;
    text.resize(total - 1, ' ');
    text.push_back('\n');
    return text;
}

inline void write_frame_file(const std::string& path, const RadarConfig& radar, const std::vector<Frame>& frames)
{
    const std::string header = frame_header(radar);
    std::vector<char> buf(header.begin(), header.end());
    buf.reserve(buf.size() + frames.size() * radar.chirps_per_frame * radar.samples_per_chirp * 8);
    for (const auto& f : frames) {
        detail::require(static_cast<std::size_t>(f.samples.rows()) == radar.chirps_per_frame &&
                            static_cast<std::size_t>(f.samples.cols()) == radar.samples_per_chirp,
                        "write_frame_file: frame shape does not match the radar config");
        for (Eigen::Index i = 0; i < f.samples.size(); ++i) {
            detail::put_le(buf, static_cast<float>(f.samples.data()[i].real()));
            detail::put_le(buf, static_cast<float>(f.samples.data()[i].imag()));
        }
    }
    detail::write_file(path, buf);
}

inline RadarConfig parse_frame_header(const std::string& text, const std::string& path)
{
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        throw ValidationError(path + ": corrupt frame header (not JSON)");
    }
    try {
        if (!h.is_object() || h.value("magic", std::string{}) != kFrameMagic)
            throw ValidationError(path + ": corrupt frame header (bad magic)");
        if (h.value("schema_version", -1) != kSchemaVersion)
            throw ValidationError(path + ": unsupported frame schema_version");
        RadarConfig r;
        r.chirps_per_frame = h.at("L").get<std::size_t>();
        r.samples_per_chirp = h.at("N_s").get<std::size_t>();
        r.adc_rate_hz = h.at("f_s").get<double>();
        r.chirp_duration_s = h.at("T_c").get<double>();
        r.carrier_freq_hz = h.at("f_c").get<double>();
        r.chirp_slope_hz_per_s = h.at("K").get<double>();
        return validate(r);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": corrupt frame header (" + e.what() + ")");
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline FrameCapture read_frame_file(const std::string& path)
{
    const std::vector<char> data = detail::read_file(path);
    std::size_t nl = 0;
    while (nl < data.size() && nl < 4096 && data[nl] != '\n') ++nl;
    if (nl >= data.size() || data[nl] != '\n' || (nl + 1) % kHeaderBlock != 0)
        throw ValidationError(path + ": corrupt frame header (missing or misaligned terminator)");
    FrameCapture cap;
    cap.radar = parse_frame_header(std::string(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(nl)), path);
    const std::size_t chirps = cap.radar.chirps_per_frame, samples = cap.radar.samples_per_chirp;
    const std::size_t frame_bytes = chirps * samples * 8;
    const std::size_t body = data.size() - nl - 1;
    if (body % frame_bytes != 0)
        throw IoError(path + ": truncated frame data (" + std::to_string(body) + " bytes is not a whole number of frames)");
    const std::size_t count = body / frame_bytes;
    cap.radar.frames_per_capture = std::max<std::size_t>(1, count);
    const char* p = data.data() + nl + 1;
    for (std::size_t k = 0; k < count; ++k) {
        Frame f;
        f.frame_index = k;
        f.start_time_s = static_cast<double>(k) * static_cast<double>(chirps) * cap.radar.chirp_duration_s;
        f.samples.resize(static_cast<Eigen::Index>(chirps), static_cast<Eigen::Index>(samples));
        for (Eigen::Index i = 0; i < f.samples.size(); ++i, p += 8)
            f.samples.data()[i] = Complex(detail::get_le<float>(p), detail::get_le<float>(p + 4));
        cap.frames.push_back(std::move(f));
    }
    return cap;
}

// Headerless int16 (re, im) capture; the layout comes from the radar config.
inline std::vector<Frame> read_int16_frames(const std::string& path, const RadarConfig& radar_in)
{
    const RadarConfig radar = validate(radar_in);
    const std::vector<char> data = detail::read_file(path);
    const std::size_t chirps = radar.chirps_per_frame, samples = radar.samples_per_chirp;
    const std::size_t frame_bytes = chirps * samples * 4;
    if (data.size() % frame_bytes != 0)
        throw IoError(path + ": size " + std::to_string(data.size()) + " is not a whole number of " +
                      std::to_string(chirps) + "x" + std::to_string(samples) + " int16 frames");
    std::vector<Frame> frames;
    const char* p = data.data();
    for (std::size_t k = 0; k < data.size() / frame_bytes; ++k) {
        Frame f;
        f.frame_index = k;
        f.start_time_s = static_cast<double>(k) * static_cast<double>(chirps) * radar.chirp_duration_s;
        f.samples.resize(static_cast<Eigen::Index>(chirps), static_cast<Eigen::Index>(samples));
        for (Eigen::Index i = 0; i < f.samples.size(); ++i, p += 4)
            f.samples.data()[i] = Complex(detail::get_le<std::int16_t>(p), detail::get_le<std::int16_t>(p + 2));
        frames.push_back(std::move(f));
    }
    return frames;
}

} // namespace mmhawk
