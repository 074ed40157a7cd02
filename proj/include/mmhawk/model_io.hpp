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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "binary.hpp"
#include "config.hpp"
#include "lstm.hpp"

namespace mmhawk {

// Model = JSON manifest + raw parameter blob. The manifest lists every
// parameter with its shape and element offset into the blob (float64
// little-endian, column-major per parameter), plus the dims, training config
// and seed.
struct ModelInfo {
    LstmShape shape;
    TrainingConfig training;
    std::size_t window = 0;      // frames per segment the model was trained on
    bool normalized_input = true;
    nlohmann::json extra = nlohmann::json::object();
};

template <typename Scalar>
void save_model(const std::string& manifest_path, const LstmDetector<Scalar>& model_in, const ModelInfo& info)
{
    auto model = model_in;
    const std::filesystem::path mpath(manifest_path);
    const std::string blob_name = mpath.stem().string() + ".bin";
    std::vector<char> blob;
    nlohmann::json params = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& p : model.params()) {
        params.push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}, {"count", p.size}});
        for (std::size_t i = 0; i < p.size; ++i) detail::put_le(blob, static_cast<double>(p.data[i]));
        offset += p.size;
    }
    const auto& s = model.shape();
    nlohmann::json manifest = {
        {"schema_version", kSchemaVersion},
        {"kind", "lstm-detector"},
        {"dims", {{"input_dim", s.input_dim}, {"hidden", s.hidden}, {"layers", s.layers}, {"classes", s.classes}}},
        {"window", info.window},
        {"normalized_input", info.normalized_input},
        {"training",
         {{"optimizer", "adam"},
          {"learning_rate", info.training.learning_rate},
          {"batch_size", info.training.batch_size},
          {"beta1", info.training.beta1},
          {"beta2", info.training.beta2},
          {"epsilon", info.training.epsilon},
          {"loss", "cross-entropy"}}},
        {"seed", info.training.seed},
        {"dtype", "float64-le"},
        {"layout", "column-major"},
        {"blob", blob_name},
        {"parameters", params},
        {"extra", info.extra}};
    detail::write_file((mpath.parent_path() / blob_name).string(), blob);
    detail::write_text(manifest_path, manifest.dump(2) + "\n");
}

template <typename Scalar>
LstmDetector<Scalar> load_model(const std::string& manifest_path, ModelInfo* info = nullptr)
{
    const nlohmann::json m = read_json_file(manifest_path);
    ModelInfo mi;
    std::string blob_name;
    nlohmann::json params;
    try {
        if (m.at("schema_version").get<int>() != kSchemaVersion) throw ValidationError("unsupported schema_version");
        const auto& d = m.at("dims");
        mi.shape = {d.at("input_dim").get<std::size_t>(), d.at("hidden").get<std::size_t>(),
                    d.at("layers").get<std::size_t>(), d.at("classes").get<std::size_t>()};
        mi.window = m.value("window", std::size_t{0});
        mi.normalized_input = m.value("normalized_input", true);
        const auto& t = m.at("training");
        mi.training.learning_rate = t.value("learning_rate", mi.training.learning_rate);
        mi.training.batch_size = t.value("batch_size", mi.training.batch_size);
        mi.training.seed = m.value("seed", std::uint64_t{0});
        mi.extra = m.value("extra", nlohmann::json::object());
        if (m.value("dtype", std::string{}) != "float64-le") throw ValidationError("unsupported dtype");
        blob_name = m.at("blob").get<std::string>();
        params = m.at("parameters");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(manifest_path + ": malformed model manifest (" + e.what() + ")");
    } catch (const ValidationError& e) {
        throw ValidationError(manifest_path + ": " + e.what());
    }
    const auto blob_path = std::filesystem::path(manifest_path).parent_path() / blob_name;
    const std::vector<char> blob = detail::read_file(blob_path.string());

    auto model = LstmDetector<Scalar>::zeros(mi.shape);
    auto views = model.params();
    if (params.size() != views.size()) throw ValidationError(manifest_path + ": parameter list does not match dims");
    for (std::size_t k = 0; k < views.size(); ++k) {
        const auto& p = params[k];
        const auto offset = p.at("offset").get<std::size_t>();
        if (p.at("name").get<std::string>() != views[k].name ||
            p.at("shape").get<std::vector<std::size_t>>() != views[k].shape)
            throw ValidationError(manifest_path + ": parameter '" + views[k].name + "' shape or order mismatch");
        if ((offset + views[k].size) * 8 > blob.size()) throw IoError(blob_path.string() + ": truncated parameter blob");
        for (std::size_t i = 0; i < views[k].size; ++i)
            views[k].data[i] = static_cast<Scalar>(detail::get_le<double>(blob.data() + (offset + i) * 8));
    }
    if (info) *info = mi;
    return model;
}

} // namespace mmhawk
