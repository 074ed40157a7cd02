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
#include <span>

#include <json.hpp>

#include "errors.hpp"
#include "identifier.hpp"

namespace mmhawk {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

// accuracy = (TP+TN)/all, precision = TP/(TP+FP), recall = TP/(TP+FN),
// F1 = 2PR/(P+R). An undefined ratio is reported as 0 and flagged.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

inline Metrics compute_metrics(const Confusion& c)
{
    detail::require(c.total() > 0, "metrics: empty confusion table");
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    else
        m.precision_undefined = true;
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    else
        m.recall_undefined = true;
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
        m.f1_undefined = true;
    return m;
}

// UAV is the positive class; unlabeled truth entries are skipped.
inline Confusion tally(std::span<const Label> predicted, std::span<const Label> truth)
{
    detail::require(predicted.size() == truth.size(), "metrics: prediction and truth lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Label::unlabeled) continue;
        const bool p = predicted[i] == Label::uav;
        const bool t = truth[i] == Label::uav;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline nlohmann::json to_json(const Confusion& c, const Metrics& m)
{
    return {{"tp", c.tp},           {"fp", c.fp},
            {"fn", c.fn},           {"tn", c.tn},
            {"accuracy", m.accuracy}, {"precision", m.precision},
            {"recall", m.recall},   {"f1", m.f1},
            {"precision_undefined", m.precision_undefined},
            {"recall_undefined", m.recall_undefined},
            {"f1_undefined", m.f1_undefined}};
}

} // namespace mmhawk
