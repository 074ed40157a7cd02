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
#include <sstream>

#include "mmhawk/echo_sim.hpp"
#include "mmhawk/rd_processing.hpp"

using namespace mmhawk;

namespace {

SceneSpec uav_scene(double range, double v, double rate_hz = 55.6)
{
    UavConfig u;
    u.rotor_angular_velocity_rad_per_s = 2.0 * M_PI * rate_hz;
    const SegmentKind kind = v == 0.0 ? SegmentKind::hover : SegmentKind::constant_velocity;
    SceneSpec s;
    s.emitters.push_back(UavEmitter{validate(u), validate(TrajectorySpec{{{0.0, 4.0, range, v, kind}}})});
    return s;
}

Eigen::Index row_argmax(const ComplexMatrix& m, Eigen::Index l)
{
    Eigen::Index best = 0;
    m.row(l).cwiseAbs().maxCoeff(&best);
    return best;
}

} // namespace

TEST_CASE("static point lands in the predicted range bin", "[rd]")
{
    const RadarConfig r;
    SceneSpec s;
    s.emitters.push_back(StaticClutter{30.0, 1.0});
    const ComplexMatrix rm = range_fft(synthesize_frame(s, r, 0));
    // beat frequency 2 K R / c in units of f_s / N_s
    const auto expected = static_cast<Eigen::Index>(std::lround(2.0 * 9.994e12 * 30.0 / 3e8 * 256 / 6.25e6));
    CHECK(expected == 82);
    for (Eigen::Index l = 0; l < rm.rows(); ++l) CHECK(row_argmax(rm, l) == expected);

    const RangeDopplerMap map = doppler_fft(rm);
    Eigen::Index rb = 0, db = 0;
    map.magnitudes.maxCoeff(&rb, &db);
    CHECK(rb == 82);
    CHECK(db == 50);
}

TEST_CASE("zero input gives a zero map", "[rd]")
{
    const RadarConfig r;
    const Frame f{0, 0.0, ComplexMatrix::Zero(100, 256)};
    CHECK(range_fft(f).cwiseAbs().maxCoeff() == 0.0);
    CHECK(range_doppler(f).magnitudes.maxCoeff() == 0.0);
}

TEST_CASE("two points resolve like their single-point runs", "[rd]")
{
    const RadarConfig r;
    SceneSpec a, b, ab;
    a.emitters.push_back(StaticClutter{15.0, 1.0});
    b.emitters.push_back(StaticClutter{70.0, 1.0});
    ab.emitters = {a.emitters[0], b.emitters[0]};
    const auto ra = row_argmax(range_fft(synthesize_frame(a, r, 0)), 0);
    const auto rb = row_argmax(range_fft(synthesize_frame(b, r, 0)), 0);
    const auto map = range_doppler(synthesize_frame(ab, r, 0));
    const auto col = map.magnitudes.col(50);
    std::vector<std::pair<double, Eigen::Index>> peaks;
    for (Eigen::Index i = 0; i < col.size(); ++i) peaks.push_back({col(i), i});
    std::sort(peaks.rbegin(), peaks.rend());
    const Eigen::Index lo = std::min(peaks[0].second, peaks[1].second), hi = std::max(peaks[0].second, peaks[1].second);
    CHECK(lo == ra);
    CHECK(hi == rb);
}

TEST_CASE("moving body peaks at the aliased Doppler offset", "[rd]")
{
    const RadarConfig r;
    const DerivedParams d = derive(r);
    UavConfig u;
    u.scatterer_reflectivities = {0.0};
    SceneSpec s;
    s.emitters.push_back(
        UavEmitter{validate(u), validate(TrajectorySpec{{{0.0, 4.0, 20.0, 1.5, SegmentKind::ascent}}})});
    const auto map = range_doppler(synthesize_frame(s, r, 0));
    Eigen::Index rb = 0, db = 0;
    map.magnitudes.maxCoeff(&rb, &db);
    const double fd = std::remainder(2.0 * 1.5 * 60.25e9 / 3e8, d.prf_hz); // -508.6 Hz
    CHECK(std::abs(fd + 508.6) < 0.1);
    const double predicted = 50.0 + fd / d.doppler_bin_hz;
    CHECK(std::abs(static_cast<double>(db) - predicted) <= 1.0);
}

TEST_CASE("unit-norm transforms conserve energy", "[rd][property]")
{
    const RadarConfig r;
    SceneSpec s = uav_scene(40.0, -1.0);
    s.noise_std = 0.5;
    s.rng_seed = 3;
    const Frame f = synthesize_frame(s, r, 1);
    const double e0 = f.samples.squaredNorm();
    const ComplexMatrix rm = range_fft(f);
    CHECK(std::abs(rm.squaredNorm() - e0) / e0 < 1e-6);
    const auto map = doppler_fft(rm);
    CHECK(std::abs(map.magnitudes.squaredNorm() - e0) / e0 < 1e-6);
    CHECK(map.magnitudes.minCoeff() >= 0.0);
}

TEST_CASE("rotor comb spacing follows the rotation rate", "[rd][property]")
{
    // Rates whose harmonics alias back onto the comb (L * f / PRF integer).
    const RadarConfig r;
    const DerivedParams d = derive(r);
    for (double bins : {4.0, 5.0, 10.0, 20.0}) {
        const double rate = bins * d.doppler_bin_hz;
        const auto maps = range_doppler(synthesize_capture(uav_scene(30.0, 0.0, rate), r, 5));
        for (const auto& m : maps) {
            const auto sp = estimate_peak_spacing(doppler_row(m, 82));
            REQUIRE(sp.has_value());
            CHECK(std::abs(*sp - std::round(rate / d.doppler_bin_hz)) <= 1.0);
        }
    }
}

TEST_CASE("comb in the UAV row, not in an empty row", "[rd]")
{
    const RadarConfig r;
    const auto map = range_doppler(synthesize_frame(uav_scene(30.0, 0.0), r, 0));
    const auto sp = estimate_peak_spacing(doppler_row(map, 82));
    REQUIRE(sp.has_value());
    CHECK(std::abs(*sp - 5.0) <= 1.0);
    // far row: energy orders of magnitude below
    const auto far = doppler_row(map, 200);
    const auto near = doppler_row(map, 82);
    double ef = 0, en = 0;
    for (std::size_t i = 0; i < far.size(); ++i) {
        ef += far[i] * far[i];
        en += near[i] * near[i];
    }
    CHECK(ef < 1e-4 * en);
}

TEST_CASE("spacing estimator on synthetic combs", "[rd]")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (int s : {3, 4, 5, 10, 20}) {
        std::vector<double> row(100);
        for (double& v : row) v = u(rng);
        for (int i = 0; i < 100; i += s) row[static_cast<std::size_t>((i + 7) % 100)] += 1.0;
        row[50] += 10.0; // body line
        const auto sp = estimate_peak_spacing(row);
        REQUIRE(sp.has_value());
        CHECK(std::abs(*sp - s) <= 0.5);
    }
    CHECK(!estimate_peak_spacing(std::vector<double>(100, 1.0)).has_value());
    CHECK(!estimate_peak_spacing(std::vector<double>(4, 1.0)).has_value());
}

TEST_CASE("doppler rows partition the map", "[rd]")
{
    const RadarConfig r;
    SceneSpec s = uav_scene(30.0, 0.0);
    s.noise_std = 0.1;
    const auto map = range_doppler(synthesize_frame(s, r, 0));
    RealMatrix again(map.magnitudes.rows(), map.magnitudes.cols());
    for (std::size_t b = 0; b < map.range_bins(); ++b) {
        const auto row = doppler_row(map, b);
        for (std::size_t k = 0; k < row.size(); ++k)
            again(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = row[k];
    }
    CHECK(again == map.magnitudes);
    CHECK_THROWS_AS(doppler_row(map, map.range_bins()), ValidationError);
}

TEST_CASE("blades leave the body peak in place", "[rd][property]")
{
    const RadarConfig r;
    UavConfig bare;
    bare.scatterer_reflectivities = {0.0};
    UavConfig bladed;
    bladed.scatterer_reflectivities = {0.1};
    const auto traj = validate(TrajectorySpec{{{0.0, 4.0, 30.0, -1.0, SegmentKind::descent}}});
    SceneSpec a, b;
    a.emitters.push_back(UavEmitter{validate(bare), traj});
    b.emitters.push_back(UavEmitter{validate(bladed), traj});
    Eigen::Index ra, da, rb, db;
    range_doppler(synthesize_frame(a, r, 0)).magnitudes.maxCoeff(&ra, &da);
    range_doppler(synthesize_frame(b, r, 0)).magnitudes.maxCoeff(&rb, &db);
    CHECK(ra == rb);
    CHECK(da == db);
}

TEST_CASE("non-finite samples are rejected", "[rd]")
{
    Frame f{0, 0.0, ComplexMatrix::Zero(4, 8)};
    f.samples(1, 2) = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(range_fft(f), ValidationError);
}

TEST_CASE("hann window keeps energy scale", "[rd]")
{
    const RadarConfig r;
    SceneSpec s;
    s.noise_std = 1.0;
    s.rng_seed = 1;
    const Frame f = synthesize_frame(s, r, 0);
    const auto plain = range_doppler(f);
    const auto hann = range_doppler(f, RdOptions{Window::hann, Window::hann});
    const double ratio = hann.magnitudes.squaredNorm() / plain.magnitudes.squaredNorm();
    CHECK(std::abs(ratio - 1.0) < 0.05);
}

TEST_CASE("map csv dump", "[rd]")
{
    RangeDopplerMap m;
    m.magnitudes = RealMatrix::Constant(2, 3, 0.5);
    std::ostringstream os;
    write_map_csv(os, m);
    const std::string text = os.str();
    CHECK(text.rfind("range_bin,doppler_bin,magnitude\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}
