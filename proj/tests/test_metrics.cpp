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

#include <vector>

#include "mmhawk/metrics.hpp"
#include "mmhawk/tracker.hpp"

using namespace mmhawk;

TEST_CASE("metrics from a fixed confusion table", "[metrics]")
{
    const Metrics m = compute_metrics({3, 1, 1, 5});
    CHECK(m.accuracy == 8.0 / 10.0);
    CHECK(m.precision == 3.0 / 4.0);
    CHECK(m.recall == 3.0 / 4.0);
    CHECK(m.f1 == 2.0 * 0.75 * 0.75 / 1.5);
    CHECK(m.f1 == 0.75);
    CHECK_FALSE(m.precision_undefined);
    CHECK_FALSE(m.recall_undefined);
    CHECK_FALSE(m.f1_undefined);
}

TEST_CASE("perfect predictions score one everywhere", "[metrics]")
{
    const std::vector<Label> truth{Label::uav, Label::other, Label::uav, Label::other, Label::other};
    const Confusion c = tally(truth, truth);
    CHECK(c.tp == 2);
    CHECK(c.tn == 3);
    CHECK(c.fp + c.fn == 0);
    const Metrics m = compute_metrics(c);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("all-negative predictions flag precision", "[metrics]")
{
    const std::vector<Label> truth{Label::uav, Label::other, Label::uav, Label::other};
    const std::vector<Label> pred(4, Label::other);
    const Confusion c = tally(pred, truth);
    CHECK(c.fn == 2);
    CHECK(c.tn == 2);
    const Metrics m = compute_metrics(c);
    CHECK(m.accuracy == 0.5);
    CHECK(m.precision == 0.0);
    CHECK(m.precision_undefined);
    CHECK(m.recall == 0.0);
    CHECK_FALSE(m.recall_undefined);
    CHECK(m.f1_undefined);
}

TEST_CASE("tally counts each cell and skips unlabeled truth", "[metrics]")
{
    const std::vector<Label> pred{Label::uav, Label::uav, Label::other, Label::other, Label::uav};
    const std::vector<Label> truth{Label::uav, Label::other, Label::uav, Label::other, Label::unlabeled};
    const Confusion c = tally(pred, truth);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.total() == 4);
    CHECK_THROWS_AS(tally(pred, std::vector<Label>(3, Label::uav)), ValidationError);
    CHECK_THROWS_AS(compute_metrics({}), ValidationError);
}

TEST_CASE("metrics json carries every field", "[metrics]")
{
    const Confusion c{3, 1, 1, 5};
    const auto j = to_json(c, compute_metrics(c));
    for (const char* key : {"tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1"}) CHECK(j.contains(key));
    CHECK(j["accuracy"].get<double>() == 0.8);
}

TEST_CASE("average relative range error by hand", "[metrics][tracker]")
{
    const std::vector<double> t{10.0, 20.0, 40.0, 50.0};
    const std::vector<double> truth{10.0, 25.0, 50.0, 50.0};
    // (0 + 5/25 + 10/50 + 0) / 4 = 0.1
    CHECK(relative_range_error(t, truth) == (0.0 + 5.0 / 25.0 + 10.0 / 50.0 + 0.0) / 4.0);
    CHECK(relative_range_error(t, truth) == 0.1);
    CHECK(relative_range_error(truth, truth) == 0.0);
}
