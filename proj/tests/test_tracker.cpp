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
#include <functional>
#include <random>
#include <sstream>

#include "mmhawk/tracker.hpp"

using namespace mmhawk;
using Catch::Matchers::WithinAbs;

namespace {

RPmmDiagram diagram(const RealMatrix& v)
{
    RPmmDiagram d;
    d.values = v;
    d.best_sizes = Eigen::MatrixXi::Zero(v.rows(), v.cols());
    for (Eigen::Index t = 0; t < v.cols(); ++t) d.frame_indices.push_back(static_cast<std::size_t>(t));
    return d;
}

struct Best {
    double score = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> path;
};

// Enumerates every path with |g(t) - g(t-1)| <= k.
Best brute_force(const RealMatrix& v, std::size_t k)
{
    const auto bins = static_cast<std::size_t>(v.rows());
    const auto frames = static_cast<std::size_t>(v.cols());
    Best best;
    std::vector<std::size_t> path(frames);
    std::function<void(std::size_t, double)> walk = [&](std::size_t t, double acc) {
        if (t == frames) {
            if (acc > best.score) {
                best.score = acc;
                best.path = path;
            }
            return;
        }
        for (std::size_t r = 0; r < bins; ++r) {
            if (t > 0 && (r + k < path[t - 1] || r > path[t - 1] + k)) continue;
            path[t] = r;
            walk(t + 1, acc + v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)));
        }
    };
    walk(0, 0.0);
    return best;
}

double rmse(const std::vector<double>& a, double truth)
{
    double s = 0.0;
    for (double v : a) s += (v - truth) * (v - truth);
    return std::sqrt(s / static_cast<double>(a.size()));
}

DerivedParams grid()
{
    return derive(RadarConfig{});
}

} // namespace

TEST_CASE("dp matches exhaustive search", "[tracker][oracle]")
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> rows(1, 8), cols(1, 6), kk(1, 2);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t mismatches = 0;
    for (int c = 0; c < 1000; ++c) {
        RealMatrix v(rows(rng), cols(rng));
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
        const auto k = static_cast<std::size_t>(kk(rng));
        const Track tr = dp_max_path(diagram(v), k);
        const Best b = brute_force(v, k);
        if (tr.total_score != b.score || tr.range_bins != b.path) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("dp trivial cases", "[tracker]")
{
    RealMatrix one(5, 1);
    one << 0.1, 0.7, 0.3, 0.7, 0.2;
    const Track t1 = dp_max_path(diagram(one), 1);
    CHECK(t1.range_bins == std::vector<std::size_t>{1}); // tie goes to the smaller bin

    RealMatrix stair = RealMatrix::Zero(8, 6);
    for (Eigen::Index t = 0; t < 6; ++t) stair(t + 1, t) = 5.0;
    const Track ts = dp_max_path(diagram(stair), 1);
    CHECK(ts.range_bins == std::vector<std::size_t>{1, 2, 3, 4, 5, 6});
    CHECK(ts.total_score == 30.0);
    CHECK(ts.scores == std::vector<double>(6, 5.0));

    CHECK_THROWS_AS(dp_max_path(RPmmDiagram{}, 1), ValidationError);
    CHECK_THROWS_AS(dp_max_path(diagram(stair), 0), ValidationError);
}

TEST_CASE("dp path is invariant to a constant offset", "[tracker][property]")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int c = 0; c < 200; ++c) {
        RealMatrix v(30, 12);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
        const Track a = dp_max_path(diagram(v), 2);
        const Track b = dp_max_path(diagram(v.array() + 3.0), 2);
        CHECK(a.range_bins == b.range_bins);
        for (std::size_t t = 1; t < a.size(); ++t)
            CHECK(std::abs(static_cast<long>(a.range_bins[t]) - static_cast<long>(a.range_bins[t - 1])) <= 2);
    }
}

TEST_CASE("noise profile is the time average", "[tracker]")
{
    std::mt19937_64 rng(10);
    std::exponential_distribution<double> e(1.0);
    RealMatrix v(50, 17);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = e(rng);
    const NoiseProfile p = estimate_noise_profile(diagram(v));
    CHECK(p.source == "background");
    double ss = 0.0;
    for (Eigen::Index r = 0; r < 50; ++r) {
        double sum = 0.0;
        for (Eigen::Index t = 0; t < 17; ++t) sum += v(r, t);
        const double oracle = sum / 17.0;
        CHECK(std::abs(p.n_of_r[static_cast<std::size_t>(r)] - oracle) <= 1e-12 * oracle);
        ss += oracle * oracle;
    }
    CHECK(std::abs(p.euclidean_norm - std::sqrt(ss)) <= 1e-12 * p.euclidean_norm);

    const NoiseProfile c = estimate_noise_profile(diagram(RealMatrix::Constant(4, 3, 2.0)));
    CHECK(c.n_of_r == std::vector<double>(4, 2.0));
    const NoiseProfile one = estimate_noise_profile(diagram(v.col(3)));
    for (Eigen::Index r = 0; r < 50; ++r) CHECK(one.n_of_r[static_cast<std::size_t>(r)] == v(r, 3));
    CHECK_THROWS_AS(estimate_noise_profile(RPmmDiagram{}), ValidationError);

    const NoiseProfile m = median_noise_profile(diagram(v));
    CHECK(m.source == "capture-median");
}

TEST_CASE("spectral subtraction removes the noise direction", "[tracker]")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<double> n(40);
    for (double& x : n) x = u(rng);
    const NoiseProfile p = detail::finish_profile(n, "background");

    RealMatrix collinear(40, 10);
    for (Eigen::Index t = 0; t < 10; ++t)
        for (Eigen::Index r = 0; r < 40; ++r) collinear(r, t) = (1.0 + static_cast<double>(t)) * n[static_cast<std::size_t>(r)];
    const RPmmDiagram out = spectral_subtract(diagram(collinear), p);
    for (Eigen::Index t = 0; t < 10; ++t)
        CHECK(out.values.col(t).squaredNorm() <= 1e-10 * collinear.col(t).squaredNorm());

    // orthogonal column: G = 0, unchanged
    RealMatrix orth = RealMatrix::Zero(40, 1);
    orth(0, 0) = n[1];
    orth(1, 0) = -n[0];
    const RPmmDiagram o = spectral_subtract(diagram(orth), p);
    CHECK((o.values - orth).cwiseAbs().maxCoeff() <= 1e-15);

    CHECK_THROWS_AS(spectral_subtract(diagram(orth), detail::finish_profile(std::vector<double>(40, 0.0), "x")),
                    ValidationError);
    CHECK_THROWS_AS(spectral_subtract(diagram(orth), detail::finish_profile(std::vector<double>(3, 1.0), "x")),
                    ValidationError);
}

TEST_CASE("spectral subtraction uncovers a uav under a ramp", "[tracker]")
{
    // Background ramp peaking at the last bin, scaled per frame; a weaker UAV
    // bump walks across the middle. Before subtraction the ramp top wins.
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 0.05);
    std::uniform_real_distribution<double> gain(0.8, 1.2);
    const Eigen::Index bins = 100, frames = 200;
    std::vector<double> ramp(bins);
    for (Eigen::Index r = 0; r < bins; ++r) ramp[static_cast<std::size_t>(r)] = 1.0 + 3.0 * static_cast<double>(r) / (bins - 1);
    RealMatrix bg(bins, 20), cap(bins, frames);
    for (Eigen::Index t = 0; t < 20; ++t)
        for (Eigen::Index r = 0; r < bins; ++r) bg(r, t) = ramp[static_cast<std::size_t>(r)] * gain(rng) + g(rng);
    std::vector<Eigen::Index> uav(frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
        const double k = gain(rng);
        for (Eigen::Index r = 0; r < bins; ++r) cap(r, t) = ramp[static_cast<std::size_t>(r)] * k + g(rng);
        uav[static_cast<std::size_t>(t)] = 30 + t / 10;
        cap(uav[static_cast<std::size_t>(t)], t) += 1.5;
    }
    const RPmmDiagram out = spectral_subtract(diagram(cap), estimate_noise_profile(diagram(bg)));
    std::size_t eligible = 0, hits = 0;
    for (Eigen::Index t = 0; t < frames; ++t) {
        Eigen::Index pre = 0, post = 0;
        cap.col(t).maxCoeff(&pre);
        out.values.col(t).maxCoeff(&post);
        if (pre != bins - 1 && pre < bins - 3) continue;
        ++eligible;
        if (post == uav[static_cast<std::size_t>(t)]) ++hits;
    }
    REQUIRE(eligible >= 100);
    CHECK(static_cast<double>(hits) >= 0.95 * static_cast<double>(eligible));
}

TEST_CASE("relative range error examples", "[tracker]")
{
    const std::vector<double> g(10, 40.0), t(10, 40.36);
    double oracle = 0.0;
    for (int i = 0; i < 10; ++i) oracle += std::abs(40.0 - 40.36) / 40.0;
    CHECK(relative_range_error(t, g) == oracle / 10.0);
    CHECK_THAT(relative_range_error(t, g), WithinAbs(0.009, 1e-15));
    CHECK(relative_range_error(g, g) == 0.0);
    CHECK_THROWS_AS(relative_range_error(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(relative_range_error(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("particle filter on clean constant velocity", "[tracker]")
{
    const DerivedParams d = grid();
    std::vector<double> obs;
    for (int t = 0; t < 40; ++t) obs.push_back(30.0 + 1.5 * d.frame_duration_s * t);
    const FilterOutput out = particle_filter(obs, default_particle_filter_config(d, 1), d);
    REQUIRE(out.ranges_m.size() == 40);
    double s = 0.0;
    for (std::size_t t = 0; t < 40; ++t) s += (out.ranges_m[t] - obs[t]) * (out.ranges_m[t] - obs[t]);
    CHECK(std::sqrt(s / 40.0) < 0.5 * d.range_bin_size_m);
    CHECK(out.degenerate_steps == 0);
}

TEST_CASE("particle filter damps an outlier spike", "[tracker]")
{
    const DerivedParams d = grid();
    std::vector<double> obs(40, 48.0);
    obs[20] += 5.0 * d.range_bin_size_m;
    const FilterOutput out = particle_filter(obs, default_particle_filter_config(d, 2), d);
    double worst = 0.0;
    for (double r : out.ranges_m) worst = std::max(worst, std::abs(r - 48.0));
    CHECK(worst < 5.0 * d.range_bin_size_m);
}

TEST_CASE("particle filter beats raw jitter across seeds", "[tracker][monte-carlo]")
{
    const DerivedParams d = grid();
    std::size_t better = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_rng(seed, "test/jitter");
        std::normal_distribution<double> jitter(0.0, 1.0);
        std::vector<double> obs;
        for (int t = 0; t < 40; ++t) obs.push_back((131.0 + std::round(jitter(rng))) * d.range_bin_size_m);
        const double truth = 131.0 * d.range_bin_size_m;
        const FilterOutput out = particle_filter(obs, default_particle_filter_config(d, seed), d);
        if (rmse(out.ranges_m, truth) < rmse(obs, truth)) ++better;
    }
    CHECK(better >= 90);
}

TEST_CASE("particle filter determinism and degenerate re-seeding", "[tracker]")
{
    const DerivedParams d = grid();
    std::vector<double> obs(30, 20.0);
    for (std::size_t t = 15; t < 30; ++t) obs[t] = 70.0; // far jump: the cloud loses the target
    const auto cfg = default_particle_filter_config(d, 8);
    const FilterOutput a = particle_filter(obs, cfg, d);
    const FilterOutput b = particle_filter(obs, cfg, d);
    CHECK(a.ranges_m == b.ranges_m);
    CHECK(a.degenerate_steps >= 1);
    CHECK(std::abs(a.ranges_m.back() - 70.0) < d.range_bin_size_m);

    ParticleFilterConfig bad = cfg;
    bad.particle_count = 10;
    CHECK_THROWS_AS(particle_filter(obs, bad, d), ValidationError);
    bad = cfg;
    bad.measurement_noise_m = 0.0;
    CHECK_THROWS_AS(particle_filter(obs, bad, d), ValidationError);
    CHECK_THROWS_AS(particle_filter(std::vector<double>{}, cfg, d), ValidationError);
    CHECK_THROWS_AS(particle_filter(std::vector<double>{1.0, std::nan("")}, cfg, d), ValidationError);
}

TEST_CASE("track csv layout", "[tracker]")
{
    RealMatrix v = RealMatrix::Zero(4, 2);
    v(2, 0) = 1.0;
    v(3, 1) = 2.0;
    Track tr = dp_max_path(diagram(v), 1);
    assign_ranges(tr, 0.5);
    CHECK(tr.ranges_m == std::vector<double>{1.0, 1.5});
    std::ostringstream os;
    write_track_csv(os, tr, 0.09);
    CHECK(os.str() == "frame_index,time_s,range_bin,range_m,filtered_range_m,score\n"
                      "0,0.045,2,1,1,1\n"
                      "1,0.135,3,1.5,1.5,2\n");
}
