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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "binary.hpp"
#include "identifier.hpp"

namespace mmhawk {

// Segment dataset file: the 8-byte magic "MMHKSEG1", then one record per
// segment: uint32 header length, JSON header {W, L, label, provenance,
// max_folding_result, passed_filter, first_frame}, W*L float32 values
// (time-major). All integers and floats little-endian.
inline constexpr char kSegmentMagic[9] = "MMHKSEG1";

inline void write_segments(const std::string& path, const std::vector<Segment>& segments)
{
    std::vector<char> buf(kSegmentMagic, kSegmentMagic + 8);
    for (const auto& s : segments) {
        const nlohmann::json h = {{"W", s.frames()},
                                  {"L", s.doppler_bins()},
                                  {"label", to_string(s.label)},
                                  {"provenance", s.provenance},
                                  {"max_folding_result", s.max_folding_result},
                                  {"passed_filter", s.passed_filter},
                                  {"first_frame", s.first_frame}};
        const std::string text = h.dump();
        detail::put_le(buf, static_cast<std::uint32_t>(text.size()));
        buf.insert(buf.end(), text.begin(), text.end());
        for (Eigen::Index i = 0; i < s.data.size(); ++i) detail::put_le(buf, static_cast<float>(s.data.data()[i]));
    }
    detail::write_file(path, buf);
}

inline std::vector<Segment> read_segments(const std::string& path)
{
    const std::vector<char> data = detail::read_file(path);
    if (data.size() < 8 || std::string(data.data(), 8) != std::string(kSegmentMagic, 8))
        throw ValidationError(path + ": not a segment dataset (bad magic)");
    std::vector<Segment> out;
    std::size_t pos = 8;
    while (pos < data.size()) {
        if (pos + 4 > data.size()) throw IoError(path + ": truncated record header");
        const auto len = detail::get_le<std::uint32_t>(data.data() + pos);
        pos += 4;
        if (pos + len > data.size()) throw IoError(path + ": truncated record header");
        Segment s;
        std::size_t w = 0, l = 0;
        try {
            const auto h = nlohmann::json::parse(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                                 data.begin() + static_cast<std::ptrdiff_t>(pos + len));
            w = h.at("W").get<std::size_t>();
            l = h.at("L").get<std::size_t>();
            s.label = label_from_string(h.at("label").get<std::string>());
            s.provenance = h.value("provenance", std::string{});
            s.max_folding_result = h.value("max_folding_result", 0.0);
            s.passed_filter = h.value("passed_filter", true);
            s.first_frame = h.value("first_frame", std::size_t{0});
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ": corrupt record header (" + e.what() + ")");
        }
        pos += len;
        if (pos + w * l * 4 > data.size()) throw IoError(path + ": truncated record data");
        s.data.resize(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(l));
        for (Eigen::Index i = 0; i < s.data.size(); ++i, pos += 4) s.data.data()[i] = detail::get_le<float>(data.data() + pos);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace mmhawk
