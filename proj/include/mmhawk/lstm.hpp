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
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"
#include "seed.hpp"

namespace mmhawk {

struct LstmShape {
    std::size_t input_dim = 100;
    std::size_t hidden = 128;
    std::size_t layers = 2;
    std::size_t classes = 2;
};

struct TrainingConfig {
    double learning_rate = 5e-5;
    std::size_t batch_size = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

// A labeled input sequence, time-major (rows are time steps).
template <typename Scalar>
struct Sequence {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> steps;
    int label = 0;
};

// Stacked LSTM (input, forget, cell and output gates; sigmoid gates, tanh
// activations) whose last hidden state of the top layer feeds an affine head
// producing one score per class. Gate blocks are stacked [i; f; g; o] in
// every weight matrix. The same type holds gradients and optimizer moments.
template <typename Scalar>
class LstmDetector {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Layer {
        Mat w_x; // 4H x in
        Mat w_h; // 4H x H
        Vec b;   // 4H
    };

    struct ParamView {
        std::string name;
        std::vector<std::size_t> shape;
        Scalar* data;
        std::size_t size;
    };

    LstmDetector() = default;

    static LstmDetector zeros(const LstmShape& shape)
    {
        detail::require(shape.input_dim >= 1 && shape.hidden >= 1 && shape.layers >= 1 && shape.classes >= 2,
                        "lstm: invalid shape");
        LstmDetector m;
        m.shape_ = shape;
        const auto h = static_cast<Eigen::Index>(shape.hidden);
        for (std::size_t l = 0; l < shape.layers; ++l) {
            const auto in = static_cast<Eigen::Index>(l == 0 ? shape.input_dim : shape.hidden);
            m.layers_.push_back({Mat::Zero(4 * h, in), Mat::Zero(4 * h, h), Vec::Zero(4 * h)});
        }
        m.head_w_ = Mat::Zero(static_cast<Eigen::Index>(shape.classes), h);
        m.head_b_ = Vec::Zero(static_cast<Eigen::Index>(shape.classes));
        return m;
    }

    // Weights uniform in +-1/sqrt(hidden); biases zero except the forget
    // gate, which starts at 1.
    static LstmDetector initialize(const LstmShape& shape, std::uint64_t seed)
    {
        LstmDetector m = zeros(shape);
        Rng rng = make_rng(seed, "lstm/init");
        const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto fill = [&](Mat& w) {
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(u(rng));
        };
        const auto h = static_cast<Eigen::Index>(shape.hidden);
        for (auto& layer : m.layers_) {
            fill(layer.w_x);
            fill(layer.w_h);
            layer.b.segment(h, h).setConstant(Scalar(1));
        }
        fill(m.head_w_);
        return m;
    }

    LstmDetector zeros_like() const { return zeros(shape_); }

    const LstmShape& shape() const noexcept { return shape_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    Mat& head_w() noexcept { return head_w_; }
    const Mat& head_w() const noexcept { return head_w_; }
    Vec& head_b() noexcept { return head_b_; }
    const Vec& head_b() const noexcept { return head_b_; }

    // Every parameter array in a fixed order, with its name and shape.
    // Matrix data is column-major (Eigen default).
    std::vector<ParamView> params()
    {
        std::vector<ParamView> out;
        auto add = [&out](std::string name, auto& m) {
            out.push_back({std::move(name),
                           {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                           m.data(),
                           static_cast<std::size_t>(m.size())});
        };
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const std::string p = "lstm" + std::to_string(l) + ".";
            add(p + "w_x", layers_[l].w_x);
            add(p + "w_h", layers_[l].w_h);
            add(p + "b", layers_[l].b);
        }
        add("head.w", head_w_);
        add("head.b", head_b_);
        return out;
    }

    std::size_t parameter_count() const
    {
        std::size_t n = static_cast<std::size_t>(head_w_.size() + head_b_.size());
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.w_x.size() + l.w_h.size() + l.b.size());
        return n;
    }

private:
    LstmShape shape_;
    std::vector<Layer> layers_;
    Mat head_w_;
    Vec head_b_;
};

template <typename Scalar>
class LstmRunner {
public:
    using Model = LstmDetector<Scalar>;
    using Mat = typename Model::Mat;
    using Vec = typename Model::Vec;

    // Everything the backward pass needs from one forward pass.
    struct LayerCache {
        std::vector<Mat> i, f, g, o, c, tanh_c, h; // per time step, H x B
    };
    struct Cache {
        std::vector<Mat> inputs; // per time step, in x B
        std::vector<LayerCache> layers;
        Mat scores;              // classes x B
    };

    template <typename Block>
    static Mat logistic(const Block& x)
    {
        return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
    }

    // Scores for a batch of sequences sharing one length.
    static Mat forward(const Model& m, const std::vector<const Sequence<Scalar>*>& batch, Cache* cache = nullptr)
    {
        detail::require(!batch.empty(), "lstm_forward: empty batch");
        const std::size_t steps = static_cast<std::size_t>(batch.front()->steps.rows());
        const auto in_dim = static_cast<Eigen::Index>(m.shape().input_dim);
        const auto h = static_cast<Eigen::Index>(m.shape().hidden);
        const auto bsz = static_cast<Eigen::Index>(batch.size());
        detail::require(steps >= 1, "lstm_forward: empty sequence");
        for (const auto* s : batch)
            if (static_cast<std::size_t>(s->steps.rows()) != steps || s->steps.cols() != in_dim)
                detail::fail("lstm_forward: sequence shape " + std::to_string(s->steps.rows()) + "x" +
                             std::to_string(s->steps.cols()) + " does not match " + std::to_string(steps) + "x" +
                             std::to_string(in_dim));

        std::vector<Mat> x(steps, Mat(in_dim, bsz));
        for (std::size_t t = 0; t < steps; ++t)
            for (Eigen::Index b = 0; b < bsz; ++b)
                x[t].col(b) = batch[static_cast<std::size_t>(b)]->steps.row(static_cast<Eigen::Index>(t)).transpose();

        if (cache) {
            cache->inputs = x;
            cache->layers.assign(m.layers().size(), {});
        }
        Mat gates(4 * h, bsz);
        for (std::size_t l = 0; l < m.layers().size(); ++l) {
            const auto& layer = m.layers()[l];
            Mat hp = Mat::Zero(h, bsz), cp = Mat::Zero(h, bsz);
            LayerCache* lc = cache ? &cache->layers[l] : nullptr;
            for (std::size_t t = 0; t < steps; ++t) {
                gates.noalias() = layer.w_x * x[t];
                gates.noalias() += layer.w_h * hp;
                gates.colwise() += layer.b;
                Mat ig = logistic(gates.topRows(h));
                Mat fg = logistic(gates.middleRows(h, h));
                Mat gg = gates.middleRows(2 * h, h).array().tanh().matrix();
                Mat og = logistic(gates.bottomRows(h));
                Mat c = (fg.array() * cp.array() + ig.array() * gg.array()).matrix();
                Mat tc = c.array().tanh().matrix();
                Mat hn = (og.array() * tc.array()).matrix();
                x[t] = hn; // becomes the next layer's input
                if (lc) {
                    lc->i.push_back(std::move(ig));
                    lc->f.push_back(std::move(fg));
                    lc->g.push_back(std::move(gg));
                    lc->o.push_back(std::move(og));
                    lc->c.push_back(c);
                    lc->tanh_c.push_back(std::move(tc));
                    lc->h.push_back(hn);
                }
                hp = std::move(hn);
                cp = std::move(c);
            }
        }
        Mat scores = m.head_w() * x[steps - 1];
        scores.colwise() += m.head_b();
        if (cache) cache->scores = scores;
        return scores;
    }

    // Mean softmax cross-entropy of a batch.
    static double loss(const Mat& scores, const std::vector<int>& labels, Mat* dscores = nullptr)
    {
        const Eigen::Index bsz = scores.cols();
        double total = 0.0;
        if (dscores) dscores->resize(scores.rows(), bsz);
        for (Eigen::Index b = 0; b < bsz; ++b) {
            const Scalar top = scores.col(b).maxCoeff();
            Vec e = (scores.col(b).array() - top).exp().matrix();
            const Scalar z = e.sum();
            const int y = labels[static_cast<std::size_t>(b)];
            total += -(static_cast<double>(scores(y, b) - top) - std::log(static_cast<double>(z)));
            if (dscores) {
                dscores->col(b) = e / z;
                (*dscores)(y, b) -= Scalar(1);
            }
        }
        if (dscores) *dscores /= static_cast<Scalar>(bsz);
        return total / static_cast<double>(bsz);
    }

    // Gradient of the mean batch loss, accumulated into grads.
    static double backward(const Model& m, const std::vector<const Sequence<Scalar>*>& batch, Model& grads)
    {
        Cache cache;
        const Mat scores = forward(m, batch, &cache);
        std::vector<int> labels;
        for (const auto* s : batch) labels.push_back(s->label);
        Mat ds;
        const double value = loss(scores, labels, &ds);

        const std::size_t steps = cache.inputs.size();
        const auto h = static_cast<Eigen::Index>(m.shape().hidden);
        const auto bsz = static_cast<Eigen::Index>(batch.size());
        const std::size_t top = m.layers().size() - 1;

        grads.head_w().noalias() += ds * cache.layers[top].h[steps - 1].transpose();
        grads.head_b() += ds.rowwise().sum();

        // External gradient reaching each layer's hidden state at every step.
        std::vector<Mat> dh_ext(steps, Mat::Zero(h, bsz));
        dh_ext[steps - 1] = m.head_w().transpose() * ds;

        Mat da(4 * h, bsz);
        for (std::size_t li = m.layers().size(); li-- > 0;) {
            const auto& layer = m.layers()[li];
            auto& g = grads.layers()[li];
            const LayerCache& lc = cache.layers[li];
            const std::vector<Mat>& below = li == 0 ? cache.inputs : cache.layers[li - 1].h;
            Mat dh_next = Mat::Zero(h, bsz), dc_next = Mat::Zero(h, bsz);
            std::vector<Mat> dx(steps);
            for (std::size_t t = steps; t-- > 0;) {
                const Mat dh = dh_ext[t] + dh_next;
                const auto o = lc.o[t].array();
                const auto i = lc.i[t].array();
                const auto f = lc.f[t].array();
                const auto gg = lc.g[t].array();
                const auto tc = lc.tanh_c[t].array();
                const Mat dc = (dh.array() * o * (Scalar(1) - tc * tc) + dc_next.array()).matrix();
                da.topRows(h) = (dc.array() * gg * i * (Scalar(1) - i)).matrix();
                if (t > 0)
                    da.middleRows(h, h) = (dc.array() * lc.c[t - 1].array() * f * (Scalar(1) - f)).matrix();
                else
                    da.middleRows(h, h).setZero();
                da.middleRows(2 * h, h) = (dc.array() * i * (Scalar(1) - gg * gg)).matrix();
                da.bottomRows(h) = (dh.array() * tc * o * (Scalar(1) - o)).matrix();
                dc_next = (dc.array() * f).matrix();

                g.w_x.noalias() += da * below[t].transpose();
                if (t > 0) g.w_h.noalias() += da * lc.h[t - 1].transpose();
                g.b += da.rowwise().sum();
                dh_next.noalias() = layer.w_h.transpose() * da;
                if (li > 0) dx[t].noalias() = layer.w_x.transpose() * da;
            }
            if (li > 0) dh_ext = std::move(dx);
        }
        return value;
    }
};

// Adam with bias-corrected moments.
template <typename Scalar>
class Adam {
public:
    Adam(const LstmDetector<Scalar>& model, const TrainingConfig& cfg)
        : cfg_(cfg), m_(model.zeros_like()), v_(model.zeros_like())
    {
    }

    void step(LstmDetector<Scalar>& model, LstmDetector<Scalar>& grads)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        auto p = model.params();
        auto g = grads.params();
        auto m = m_.params();
        auto v = v_.params();
        const auto b1 = static_cast<Scalar>(cfg_.beta1), b2 = static_cast<Scalar>(cfg_.beta2);
        const auto lr = static_cast<Scalar>(cfg_.learning_rate), eps = static_cast<Scalar>(cfg_.epsilon);
        const auto s1 = static_cast<Scalar>(1.0 / c1), s2 = static_cast<Scalar>(1.0 / c2);
        for (std::size_t k = 0; k < p.size(); ++k)
            for (std::size_t i = 0; i < p[k].size; ++i) {
                const Scalar gi = g[k].data[i];
                Scalar& mi = m[k].data[i];
                Scalar& vi = v[k].data[i];
                mi = b1 * mi + (Scalar(1) - b1) * gi;
                vi = b2 * vi + (Scalar(1) - b2) * gi * gi;
                p[k].data[i] -= lr * (mi * s1) / (std::sqrt(vi * s2) + eps);
            }
    }

    std::size_t steps() const noexcept { return t_; }

private:
    TrainingConfig cfg_;
    LstmDetector<Scalar> m_, v_;
    std::size_t t_ = 0;
};

struct TrainingReport {
    std::vector<double> train_loss;      // mean batch loss over each epoch
    std::vector<double> validation_loss; // full-set loss after each epoch (empty without a validation set)
};

template <typename Scalar>
double mean_loss(const LstmDetector<Scalar>& model, const std::vector<Sequence<Scalar>>& data, std::size_t chunk = 64)
{
    double total = 0.0;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        std::vector<const Sequence<Scalar>*> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < std::min(data.size(), start + chunk); ++i) {
            batch.push_back(&data[i]);
            labels.push_back(data[i].label);
        }
        total += LstmRunner<Scalar>::loss(LstmRunner<Scalar>::forward(model, batch), labels) *
                 static_cast<double>(batch.size());
    }
    return total / static_cast<double>(data.size());
}

// Minibatch Adam on mean cross-entropy. The batch order of epoch e is a
// shuffle seeded by (cfg.seed, e), so a run is reproducible bit for bit.
// on_epoch, when given, runs after every epoch.
template <typename Scalar>
TrainingReport lstm_train(LstmDetector<Scalar>& model, const std::vector<Sequence<Scalar>>& train,
                          const std::vector<Sequence<Scalar>>& validation, const TrainingConfig& cfg,
                          std::size_t epochs,
                          const std::function<void(std::size_t, const TrainingReport&)>& on_epoch = {})
{
    detail::require(!train.empty(), "lstm_train: empty training set");
    detail::require(cfg.batch_size >= 1, "lstm_train: batch_size must be >= 1");
    detail::require(cfg.learning_rate >= 0.0, "lstm_train: learning_rate must be >= 0");
    std::vector<std::size_t> per_class(model.shape().classes, 0);
    for (const auto& s : train) {
        detail::require(s.label >= 0 && static_cast<std::size_t>(s.label) < per_class.size(), "lstm_train: label out of range");
        ++per_class[static_cast<std::size_t>(s.label)];
    }
    if (std::count_if(per_class.begin(), per_class.end(), [](std::size_t c) { return c > 0; }) < 2)
        detail::fail("lstm_train: training set holds a single class");

    Adam<Scalar> adam(model, cfg);
    TrainingReport report;
    std::vector<std::size_t> order(train.size());
    for (std::size_t e = 0; e < epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(cfg.seed, "lstm/shuffle", e);
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<const Sequence<Scalar>*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(&train[order[i]]);
            LstmDetector<Scalar> grads = model.zeros_like();
            sum += LstmRunner<Scalar>::backward(model, batch, grads) * static_cast<double>(batch.size());
            adam.step(model, grads);
        }
        report.train_loss.push_back(sum / static_cast<double>(train.size()));
        if (!validation.empty()) report.validation_loss.push_back(mean_loss(model, validation));
        if (on_epoch) on_epoch(e, report);
    }
    return report;
}

// Class scores for one sequence.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lstm_forward(const LstmDetector<Scalar>& model, const Sequence<Scalar>& s)
{
    return LstmRunner<Scalar>::forward(model, {&s}).col(0);
}

} // namespace mmhawk
