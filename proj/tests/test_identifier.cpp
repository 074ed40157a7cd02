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


#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "mmhawk/pipeline.hpp"

using namespace mmhawk;
using Catch::Matchers::WithinAbs;

namespace {

DopplerTimeDiagram diagram(const RealMatrix& m)
{
    DopplerTimeDiagram d;
    d.columns = m;
    for (Eigen::Index t = 0; t < m.rows(); ++t) d.frame_indices.push_back(static_cast<std::size_t>(t));
    return d;
}

// Comb of unit teeth every `spacing` bins around `peak`, body of height 5 at
// the peak, on a floor of 0.1.
std::vector<double> comb(std::size_t len, std::size_t peak, std::size_t spacing)
{
    std::vector<double> c(len, 0.1);
    for (std::size_t i = peak % spacing; i < len; i += spacing) c[i] = 1.0;
    c[peak] = 5.0;
    return c;
}

std::vector<std::size_t> peaks_of(std::span<const double> c, double level)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] >= level) out.push_back(i);
    return out;
}

SceneSpec uav_scene(double r0, double v, std::uint64_t seed, double snr_db, const RadarConfig& r)
{
    SceneSpec s;
    s.emitters.push_back(UavEmitter{validate(UavConfig{}),
                                    validate(TrajectorySpec{{{0.0, 8.0, r0, v, v == 0.0 ? SegmentKind::hover
                                                                                        : SegmentKind::ascent}}})});
    s.rng_seed = seed;
    s.noise_std = noise_std_for_snr(s, r, snr_db);
    return s;
}

struct Tracked {
    std::vector<RangeDopplerMap> maps;
    Track track;
};

Tracked simulate_and_track(const SceneSpec& s, const RadarConfig& r, std::size_t frames)
{
    Tracked out;
    out.maps = range_doppler(synthesize_capture(s, r, frames));
    const auto bg = range_doppler(synthesize_capture(background_of(s), r, 8));
    TrackingOptions o;
    o.use_particle_filter = false;
    o.calibration_trials = 50;
    out.track = track_capture(out.maps, bg, derive(r), o).track;
    return out;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

} // namespace

TEST_CASE("doppler-time diagram follows the track", "[identifier]")
{
    const RadarConfig r;
    SceneSpec s = uav_scene(30.0, 0.0, 3, 10.0, r);
    const auto maps = range_doppler(synthesize_capture(s, r, 3));
    Track t;
    t.range_bins = {80, 82, 81};
    t.frame_indices = {0, 1, 2};
    const auto d = extract_doppler_time(maps, t);
    REQUIRE(d.frames() == 3);
    REQUIRE(d.doppler_bins() == 100);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto row = doppler_row(maps[k], t.range_bins[k]);
        for (std::size_t i = 0; i < 100; ++i) CHECK(d.column(k)[i] == row[i]);
    }
    CHECK(d.range_bins == t.range_bins);

    Track one;
    one.range_bins = {82};
    one.frame_indices = {0};
    CHECK(extract_doppler_time({maps[0]}, one).frames() == 1);

    Track shifted = t;
    shifted.frame_indices = {1, 2, 3};
    CHECK_THROWS_AS(extract_doppler_time(maps, shifted), ValidationError);
    CHECK_THROWS_AS(extract_doppler_time({maps[0], maps[1]}, t), ValidationError);
    CHECK_THROWS_AS(extract_doppler_time({}, Track{}), ValidationError);
}

TEST_CASE("every column of a hover track shows the rotor comb", "[identifier]")
{
    const RadarConfig r;
    SceneSpec s = uav_scene(48.0, 0.0, 5, 0.0, r);
    s.noise_std = 0.0;
    const auto tr = simulate_and_track(s, r, 10);
    const auto d = extract_doppler_time(tr.maps, tr.track);
    for (std::size_t t = 0; t < d.frames(); ++t) {
        const auto spacing = estimate_peak_spacing(d.column(t));
        REQUIRE(spacing);
        CHECK(std::abs(*spacing - 5.0) <= 1.0);
    }
}

TEST_CASE("body peak tie rules", "[identifier]")
{
    CHECK(body_peak(std::vector<double>{1, 1, 1, 1, 1}, 2) == 2);
    CHECK(body_peak(std::vector<double>{3, 0, 0, 0, 3}, 2) == 0);
    CHECK(body_peak(std::vector<double>{0, 3, 0, 3, 0, 0}, 3) == 3);
    CHECK(body_peak(std::vector<double>{0, 1, 0, 0, 0, 2}, 3) == 5);
}

TEST_CASE("dc removal by hand", "[identifier]")
{
    // Bodies at dc + 5 in frames 0-2; frame 3 hovers on DC and is not
    // averaged but is still corrected.
    RealMatrix m = RealMatrix::Zero(4, 10);
    const Eigen::Index dc = 5;
    m(0, 0) = 9.0;
    m(1, 0) = 9.0;
    m(2, 0) = 9.0;
    m(0, dc) = 1.0;
    m(1, dc) = 2.0;
    m(2, dc) = 3.0;
    m(3, dc) = 8.0;
    const auto out = dc_removal(diagram(m));
    CHECK_FALSE(out.dc_reference_missing);
    CHECK(out.columns(0, dc) == 0.0); // 1 - 2 clamped
    CHECK(out.columns(1, dc) == 0.0);
    CHECK(out.columns(2, dc) == 1.0);
    CHECK(out.columns(3, dc) == 6.0);
    // Nothing but the DC bin changes.
    RealMatrix rest = out.columns - m;
    rest.col(dc).setZero();
    CHECK(rest.isZero());
}

TEST_CASE("dc removal epsilon boundary", "[identifier]")
{
    RealMatrix m = RealMatrix::Zero(2, 10);
    m(0, 7) = 4.0; // 2 bins from DC: close
    m(0, 5) = 1.0;
    m(1, 8) = 4.0; // 3 bins: qualifies
    m(1, 5) = 3.0;
    const auto out = dc_removal(diagram(m));
    CHECK(out.columns(0, 5) == 0.0);
    CHECK(out.columns(1, 5) == 0.0);
    const auto wide = dc_removal(diagram(m), {3});
    CHECK(wide.dc_reference_missing);
    CHECK(wide.columns == m);
}

TEST_CASE("dc removal trivial cases", "[identifier]")
{
    const auto zero = dc_removal(diagram(RealMatrix::Zero(3, 8)));
    CHECK(zero.columns.isZero());
    CHECK(zero.dc_reference_missing);

    RealMatrix hover = RealMatrix::Constant(4, 10, 0.2);
    hover.col(5).setConstant(3.0);
    const auto out = dc_removal(diagram(hover));
    CHECK(out.dc_reference_missing);
    CHECK(out.columns == hover);
    CHECK_THROWS_AS(dc_removal(DopplerTimeDiagram{}), ValidationError);
}

TEST_CASE("injected dc offset is removed", "[identifier][property]")
{
    const RadarConfig r;
    SceneSpec s = uav_scene(40.0, 1.5, 9, 10.0, r);
    const auto tr = simulate_and_track(s, r, 12);
    const auto base = extract_doppler_time(tr.maps, tr.track);
    const std::size_t dc = base.dc_bin();
    auto lifted = base;
    const double c = 7.5;
    lifted.columns.col(static_cast<Eigen::Index>(dc)).array() += c;

    const auto a = dc_removal(base);
    const auto b = dc_removal(lifted);
    REQUIRE_FALSE(b.dc_reference_missing);
    for (std::size_t t = 0; t < base.frames(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t), di = static_cast<Eigen::Index>(dc);
        // Input DC went up by c; after removal it matches the offset-free run.
        CHECK_THAT(b.columns(ti, di), WithinAbs(a.columns(ti, di), 1e-9));
        CHECK(lifted.columns(ti, di) - b.columns(ti, di) >= c - 1e-9);
    }
}

TEST_CASE("alignment moves the body to dc and keeps the comb", "[identifier]")
{
    const std::size_t len = 100, dc = 50;
    std::vector<double> col = comb(len, dc + 7, 5);
    const auto before = peaks_of(col, 1.0);
    align_column(col, dc);
    CHECK(body_peak(col, dc) == dc);
    CHECK(col[dc] == 5.0);
    const auto after = peaks_of(col, 1.0);
    // Every tooth that stays in range moves by exactly -7.
    std::vector<std::size_t> expected;
    for (std::size_t p : before)
        if (p >= 7) expected.push_back(p - 7);
    CHECK(after == expected);

    std::vector<double> at_dc = comb(len, dc, 5);
    const auto copy = at_dc;
    align_column(at_dc, dc);
    CHECK(at_dc == copy);

    std::vector<double> flat(len, 2.0);
    align_column(flat, dc);
    CHECK(flat == std::vector<double>(len, 2.0));
}

TEST_CASE("alignment fills vacated bins with a taper to zero", "[identifier]")
{
    // Peak at 7, dc 5: shift left by 2, the last two bins ramp from the old
    // edge value toward 0.
    std::vector<double> col{0, 1, 2, 3, 4, 5, 6, 9, 8, 6};
    align_column(col, 5);
    const std::vector<double> expected{2, 3, 4, 5, 6, 9, 8, 6, 6.0 * 2.0 / 3.0, 6.0 / 3.0};
    for (std::size_t i = 0; i < col.size(); ++i) CHECK_THAT(col[i], WithinAbs(expected[i], 1e-15));

    // Peak at 1, dc 5: shift right by 4, the first four bins ramp up from 0.
    std::vector<double> right{2, 9, 1, 1, 1, 1, 1, 1, 1, 1};
    align_column(right, 5);
    CHECK_THAT(right[0], WithinAbs(2.0 * 1.0 / 5.0, 1e-15));
    CHECK_THAT(right[3], WithinAbs(2.0 * 4.0 / 5.0, 1e-15));
    CHECK(right[4] == 2.0);
    CHECK(right[5] == 9.0);
}

TEST_CASE("aligned columns always peak at dc", "[identifier][property]")
{
    Rng rng = make_rng(17, "test/alignment");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len_pick(4, 128);
    std::size_t columns = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = len_pick(rng), frames = 1 + trial % 5;
        RealMatrix m(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(len));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        const auto out = preprocess(diagram(m));
        for (std::size_t t = 0; t < frames; ++t, ++columns) {
            const auto c = out.column(t);
            REQUIRE(body_peak(c, out.dc_bin()) == out.dc_bin());
        }
    }
    CHECK(columns > 1000);
}

TEST_CASE("segment split counts and drops the tail", "[identifier]")
{
    const auto d80 = diagram(RealMatrix::Constant(80, 20, 1.0));
    const auto segs = segment_split_filter(d80, 40, 0.0);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].frames() == 40);
    CHECK(segs[1].first_frame == 40);
    CHECK(segment_split_filter(diagram(RealMatrix::Constant(85, 20, 1.0)), 40, 0.0).size() == 2);
    CHECK(segment_split_filter(diagram(RealMatrix::Constant(30, 20, 1.0)), 40, 0.0).empty());
    CHECK_THROWS_AS(segment_split_filter(d80, 1, 0.0), ValidationError);
    CHECK(segment_length(derive(RadarConfig{})) == 40);
}

TEST_CASE("segment filter compares the largest folding result", "[identifier]")
{
    RealMatrix m = RealMatrix::Constant(4, 20, 0.5);
    for (Eigen::Index i = 0; i < 20; i += 5) m(2, i) = 3.0;
    const double top = max_folding_result(m, {});
    CHECK(top == folding_result(std::vector<double>(m.row(2).data(), m.row(2).data() + 20)).folding_result);
    const auto d = diagram(m);
    CHECK(segment_split_filter(d, 4, top)[0].passed_filter);
    CHECK_FALSE(segment_split_filter(d, 4, std::nextafter(top, 1e9))[0].passed_filter);
}

TEST_CASE("threshold calibration scales with the noise level", "[identifier][property]")
{
    const auto a = calibrate_segment_threshold(1.0, 100, 40, {}, 50, 3);
    const auto b = calibrate_segment_threshold(2.5, 100, 40, {}, 50, 3);
    CHECK_THAT(b.threshold, WithinAbs(2.5 * a.threshold, 1e-12 * b.threshold));
    CHECK(a.threshold > a.noise.mean);
}

TEST_CASE("noise-only segments fail the calibrated filter", "[identifier]")
{
    const RadarConfig r;
    const DerivedParams d = derive(r);
    SceneSpec s;
    s.noise_std = 0.8;
    s.rng_seed = 31;
    const auto maps = range_doppler(synthesize_capture(s, r, 400));
    Track t;
    for (std::size_t k = 0; k < maps.size(); ++k) {
        t.range_bins.push_back(100 + k % 3);
        t.frame_indices.push_back(k);
    }
    const auto batch = build_segments(maps, t, d);
    CHECK(batch.threshold_calibrated);
    REQUIRE(batch.segments.size() == 10);
    for (const auto& seg : batch.segments) CHECK_FALSE(seg.passed_filter);
}

TEST_CASE("uav segments at 48 m pass the filter", "[identifier]")
{
    const RadarConfig r;
    const DerivedParams d = derive(r);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto tr = simulate_and_track(uav_scene(48.0, 0.0, seed, 6.0, r), r, 80);
        const auto batch = build_segments(tr.maps, tr.track, d);
        REQUIRE(batch.segments.size() == 2);
        for (const auto& seg : batch.segments) {
            CHECK(seg.passed_filter);
            CHECK_THAT(seg.data.maxCoeff(), WithinAbs(1.0, 1e-15));
        }
    }
}

TEST_CASE("alignment removes the body velocity", "[identifier][property]")
{
    // Same UAV hovering and ascending at 1.5 m/s. The mean aligned spectra
    // agree far better than the raw ones.
    const RadarConfig r;
    const DerivedParams d = derive(r);
    for (std::uint64_t seed : {4, 5, 6}) {
        std::vector<DopplerTimeDiagram> raw, aligned;
        for (double v : {0.0, 1.5}) {
            const auto tr = simulate_and_track(uav_scene(40.0, v, seed, 6.0, r), r, 40);
            raw.push_back(extract_doppler_time(tr.maps, tr.track));
            aligned.push_back(preprocess(raw.back()));
        }
        auto mean = [](const DopplerTimeDiagram& x) { return Eigen::VectorXd(x.columns.colwise().mean().transpose()); };
        const double c_raw = cosine(mean(raw[0]), mean(raw[1]));
        const double c_aligned = cosine(mean(aligned[0]), mean(aligned[1]));
        INFO("seed " << seed << " raw " << c_raw << " aligned " << c_aligned);
        CHECK(c_aligned > 0.85);
        CHECK(c_aligned > c_raw);
        (void)d;
    }
}
