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

// mmhawk command-line harness. Every option can also be set through an
// environment variable MMHAWK_<OPTION> (upper case, dashes as underscores);
// the command line wins. Outputs are deterministic for fixed inputs and seed.

#include <CLI11.hpp>

#include "mmhawk/dataset_io.hpp"
#include "mmhawk/frame_io.hpp"
#include "mmhawk/mmhawk.hpp"
#include "mmhawk/model_io.hpp"
#include "mmhawk/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmhawk;

namespace {

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out = ".";
    unsigned threads = 1;
};

std::string out_path(const Globals& g, const std::string& name)
{
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) throw IoError("cannot create output directory '" + g.out + "': " + ec.message());
    return (fs::path(g.out) / name).string();
}

void write_json(const std::string& path, const json& j) { detail::write_text(path, j.dump(2) + "\n"); }

RadarConfig radar_or(const Globals& g, const std::optional<RadarConfig>& fallback)
{
    if (!g.config.empty()) return load_radar_config(g.config);
    return fallback.value_or(validate(RadarConfig{}));
}

// Minimal CSV reader: header row, comma separated numeric columns.
std::map<std::string, std::vector<double>> read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    std::vector<std::string> names;
    for (std::stringstream ss(line); std::getline(ss, line, ',');) names.push_back(line);
    std::map<std::string, std::vector<double>> cols;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (const auto& name : names) {
            if (!std::getline(ss, cell, ',')) throw ValidationError(path + ":" + std::to_string(row) + ": missing column " + name);
            try {
                std::size_t used = 0;
                cols[name].push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::logic_error&) {
                throw ValidationError(path + ":" + std::to_string(row) + ": bad number '" + cell + "' in " + name);
            }
        }
    }
    return cols;
}

const std::vector<double>& column(const std::map<std::string, std::vector<double>>& csv, const std::string& name,
                                  const std::string& path)
{
    auto it = csv.find(name);
    if (it == csv.end()) throw ValidationError(path + ": missing column '" + name + "'");
    return it->second;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::optional<std::size_t> frames;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a)
{
    Scenario s = load_scenario(a.scenario);
    const RadarConfig radar = radar_or(g, s.radar);
    const DerivedParams d = derive(radar);
    const std::size_t frames = a.frames.value_or(s.frames);
    s.scene.rng_seed = g.seed_given ? g.seed : s.seed.value_or(0);
    if (s.snr_db) s.scene.noise_std = noise_std_for_snr(s.scene, radar, *s.snr_db);

    write_frame_file(out_path(g, "frames.bin"), radar, synthesize_capture(s.scene, radar, frames));
    json summary = {{"frames", frames}, {"seed", s.scene.rng_seed}, {"noise_std", s.scene.noise_std},
                    {"radar", to_json(radar)}};
    if (s.background_frames > 0) {
        SceneSpec bg = background_of(s.scene);
        bg.rng_seed = derive_seed(s.scene.rng_seed, "simulate/background");
        write_frame_file(out_path(g, "background.bin"), radar, synthesize_capture(bg, radar, s.background_frames));
        summary["background_frames"] = s.background_frames;
    }
    if (const UavEmitter* u = first_uav(s.scene)) {
        std::ostringstream csv;
        csv.precision(10);
        csv << "time_s,range_m,velocity_m_per_s\n";
        for (std::size_t k = 0; k < frames; ++k) {
            const double t = (static_cast<double>(k) + 0.5) * d.frame_duration_s;
            csv << t << ',' << u->trajectory.range_at(t) << ',' << u->trajectory.velocity_at(t) << '\n';
        }
        detail::write_text(out_path(g, "truth.csv"), csv.str());
        summary["truth"] = "truth.csv";
    }
    write_json(out_path(g, "simulate.json"), summary);
    std::cout << "simulated " << frames << " frames into " << g.out << "\n";
    return 0;
}

// track ---------------------------------------------------------------------

struct TrackArgs {
    std::string frames;
    std::string background;
    std::optional<std::size_t> k_bins;
    std::size_t j_min = 2, j_max = 20;
    bool no_filter = false;
};

// Radar headers compared without the frame count, which differs between a
// capture and its background.
bool same_radar(RadarConfig a, RadarConfig b)
{
    a.frames_per_capture = b.frames_per_capture = 0;
    return to_json(a) == to_json(b);
}

struct LoadedCapture {
    RadarConfig radar;
    std::vector<RangeDopplerMap> maps, background;
};

LoadedCapture load_capture(const Globals& g, const std::string& frames, const std::string& background)
{
    FrameCapture cap = read_frame_file(frames);
    if (!g.config.empty()) {
        const RadarConfig want = load_radar_config(g.config);
        detail::require(same_radar(want, cap.radar), frames + ": radar header differs from --config");
    }
    LoadedCapture c{cap.radar, range_doppler(cap.frames), {}};
    if (!background.empty()) {
        FrameCapture bg = read_frame_file(background);
        detail::require(same_radar(bg.radar, cap.radar), background + ": radar header differs from " + frames);
        c.background = range_doppler(bg.frames);
    }
    return c;
}

TrackingOptions tracking_options(const Globals& g, const TrackArgs& a)
{
    TrackingOptions o;
    o.fold = {a.j_min, a.j_max};
    o.k_bins = a.k_bins;
    o.use_particle_filter = !a.no_filter;
    o.seed = g.seed;
    return o;
}

json track_summary(const TrackingResult& r)
{
    const auto& c = r.confidence;
    return {{"frames", r.track.size()},
            {"k_bins", r.k_bins},
            {"total_score", r.track.total_score},
            {"noise_profile_source", r.noise.source},
            {"noise_sigma", c.noise_sigma},
            {"confidence_reference", c.reference},
            {"fraction_above_reference", c.fraction_above},
            {"max_score", c.max_score},
            {"low_confidence", c.low_confidence},
            {"degenerate_filter_steps", r.degenerate_filter_steps}};
}

int cmd_track(const Globals& g, const TrackArgs& a)
{
    const LoadedCapture c = load_capture(g, a.frames, a.background);
    const DerivedParams d = derive(c.radar);
    const TrackingResult r = track_capture(c.maps, c.background, d, tracking_options(g, a));
    std::ostringstream csv;
    write_track_csv(csv, r.track, d.frame_duration_s);
    detail::write_text(out_path(g, "track.csv"), csv.str());
    write_json(out_path(g, "track.json"), track_summary(r));
    std::cout << "tracked " << r.track.size() << " frames" << (r.confidence.low_confidence ? " (low confidence)" : "")
              << "\n";
    return 0;
}

// identify ------------------------------------------------------------------

struct IdentifyArgs {
    std::string frames;
    std::string background;
    std::string dataset;
    std::string model;
    std::optional<double> threshold;
    TrackArgs track;
};

int cmd_identify(const Globals& g, const IdentifyArgs& a)
{
    detail::require(a.frames.empty() != a.dataset.empty(), "identify: give exactly one of --frames or --dataset");
    ModelInfo info;
    const auto model = load_model<float>(a.model, &info);

    std::vector<Segment> segments;
    json summary = json::object();
    std::size_t dropped = 0;
    if (!a.dataset.empty()) {
        for (auto& s : read_segments(a.dataset)) {
            if (s.passed_filter)
                segments.push_back(std::move(s));
            else
                ++dropped;
        }
    } else {
        TrackArgs ta = a.track;
        ta.frames = a.frames;
        const LoadedCapture c = load_capture(g, a.frames, a.background);
        const DerivedParams d = derive(c.radar);
        detail::require(info.shape.input_dim == d.doppler_bins,
                        "identify: model input_dim " + std::to_string(info.shape.input_dim) +
                            " does not match chirps_per_frame " + std::to_string(d.doppler_bins));
        const TrackingResult r = track_capture(c.maps, c.background, d, tracking_options(g, ta));
        SegmentOptions so;
        so.fold = {ta.j_min, ta.j_max};
        so.threshold = a.threshold;
        so.window = info.window > 0 ? std::optional<std::size_t>(info.window) : std::nullopt;
        so.normalize = info.normalized_input;
        so.seed = g.seed;
        SegmentBatch batch = build_segments(c.maps, r.track, d, so);
        summary["threshold"] = batch.threshold;
        summary["threshold_calibrated"] = batch.threshold_calibrated;
        summary["dc_reference_missing"] = batch.dc_reference_missing;
        summary["track"] = track_summary(r);
        for (auto& s : batch.segments) {
            if (s.passed_filter)
                segments.push_back(std::move(s));
            else
                ++dropped;
        }
    }
    summary["segments_dropped_by_filter"] = dropped;
    summary["segments_classified"] = segments.size();
    for (const auto& s : segments) {
        detail::require(s.doppler_bins() == info.shape.input_dim,
                        "identify: segment has " + std::to_string(s.doppler_bins()) + " Doppler bins, model expects " +
                            std::to_string(info.shape.input_dim));
        if (info.window > 0)
            detail::require(s.frames() == info.window, "identify: segment has " + std::to_string(s.frames()) +
                                                           " frames, model expects " + std::to_string(info.window));
    }

    std::ostringstream csv;
    csv.precision(10);
    csv << "segment,first_frame,predicted,uav_probability,truth\n";
    if (segments.empty()) {
        summary["verdict"] = "no-detection";
    } else {
        const Classification cl = classify(model, segments);
        std::size_t uav = 0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            uav += cl.predicted[i] == Label::uav;
            csv << i << ',' << segments[i].first_frame << ',' << to_string(cl.predicted[i]) << ','
                << uav_probability(cl.scores[i]) << ',' << to_string(segments[i].label) << '\n';
        }
        summary["verdict"] = uav * 2 > segments.size() ? "uav" : "other";
        summary["uav_segments"] = uav;
        if (cl.metrics) summary["metrics"] = to_json(*cl.confusion, *cl.metrics);
    }
    detail::write_text(out_path(g, "labels.csv"), csv.str());
    write_json(out_path(g, "metrics.json"), summary);
    std::cout << "verdict: " << summary["verdict"].get<std::string>() << "\n";
    return 0;
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
    std::string track;
    std::string truth;
    double budget = 0.02;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a)
{
    const auto track = read_csv(a.track);
    const auto truth = read_csv(a.truth);
    const auto& truth_m = column(truth, "range_m", a.truth);
    const std::string col = track.count("filtered_range_m") ? "filtered_range_m" : "range_m";
    const auto& tracked = column(track, col, a.track);
    const double err = relative_range_error(tracked, truth_m);
    double mae = 0.0;
    for (std::size_t i = 0; i < truth_m.size(); ++i) mae += std::abs(tracked[i] - truth_m[i]);
    mae /= static_cast<double>(truth_m.size());
    const json report = {{"samples", truth_m.size()},   {"tracked_column", col},
                         {"relative_range_error", err}, {"mean_absolute_error_m", mae},
                         {"budget", a.budget},          {"within_budget", err <= a.budget}};
    write_json(out_path(g, "evaluate.json"), report);
    std::cout << "relative range error " << err << (err <= a.budget ? " (within " : " (exceeds ") << a.budget
              << " budget)\n";
    return 0;
}

// dataset -------------------------------------------------------------------

json dataset_stats(const std::vector<Segment>& all)
{
    std::size_t uav = 0, other = 0, passed = 0;
    for (const auto& s : all) {
        uav += s.label == Label::uav;
        other += s.label == Label::other;
        passed += s.passed_filter;
    }
    const double n = static_cast<double>(all.size());
    return {{"segments", all.size()},
            {"uav", uav},
            {"other", other},
            {"passed_filter", passed},
            {"class_balance", all.empty() ? 0.0 : static_cast<double>(uav) / n},
            {"frames_per_segment", all.empty() ? 0 : all.front().frames()},
            {"doppler_bins", all.empty() ? 0 : all.front().doppler_bins()}};
}

struct DatasetArgs {
    std::size_t uav = 200, other = 200;
    double snr_min = 0.0, snr_max = 12.0;
    double fraction = 0.7;
    std::string rotor_rates = "grid";
    std::string input;
    std::string train, validation;
    std::size_t epochs = 60;
    double lr = 5e-5;
    std::size_t batch = 10;
};

void write_split(const Globals& g, const std::vector<Segment>& all, double fraction)
{
    auto [train, test] = split_dataset(all, fraction, derive_seed(g.seed, "cli/split"));
    write_segments(out_path(g, "train.seg"), train);
    write_segments(out_path(g, "test.seg"), test);
}

int cmd_dataset_gen(const Globals& g, const DatasetArgs& a)
{
    const RadarConfig radar = radar_or(g, std::nullopt);
    DatasetOptions o;
    o.uav_segments = a.uav;
    o.other_segments = a.other;
    o.snr_db_min = a.snr_min;
    o.snr_db_max = a.snr_max;
    o.seed = g.seed;
    if (a.rotor_rates == "continuous")
        o.rotor_rates = RotorRateLaw::continuous;
    else
        detail::require(a.rotor_rates == "grid", "dataset gen: --rotor-rates must be grid or continuous");
    detail::require(a.snr_min <= a.snr_max, "dataset gen: --snr-min must be <= --snr-max");
    const auto all = generate_dataset(radar, o);
    write_segments(out_path(g, "dataset.seg"), all);
    write_split(g, all, a.fraction);
    write_json(out_path(g, "dataset.json"), dataset_stats(all));
    std::cout << "generated " << all.size() << " segments\n";
    return 0;
}

int cmd_dataset_split(const Globals& g, const DatasetArgs& a)
{
    write_split(g, read_segments(a.input), a.fraction);
    return 0;
}

int cmd_dataset_stats(const Globals& g, const DatasetArgs& a)
{
    const json s = dataset_stats(read_segments(a.input));
    write_json(out_path(g, "stats.json"), s);
    std::cout << s.dump(2) << "\n";
    return 0;
}

int cmd_dataset_train(const Globals& g, const DatasetArgs& a)
{
    const auto train = read_segments(a.train);
    detail::require(!train.empty(), a.train + ": no segments");
    std::vector<Sequence<float>> tr, va;
    for (const auto& s : train) tr.push_back(to_sequence<float>(s));
    if (!a.validation.empty())
        for (const auto& s : read_segments(a.validation)) va.push_back(to_sequence<float>(s));
    for (const auto& s : train)
        detail::require(s.frames() == train.front().frames() && s.doppler_bins() == train.front().doppler_bins(),
                        a.train + ": segments differ in shape");

    ModelInfo info;
    info.shape.input_dim = train.front().doppler_bins();
    info.window = train.front().frames();
    info.training.learning_rate = a.lr;
    info.training.batch_size = a.batch;
    info.training.seed = derive_seed(g.seed, "cli/train");
    auto model = LstmDetector<float>::initialize(info.shape, derive_seed(g.seed, "cli/init"));
    const TrainingReport rep = lstm_train(model, tr, va, info.training, a.epochs);
    info.extra = {{"epochs", a.epochs}, {"train_loss", rep.train_loss}, {"validation_loss", rep.validation_loss}};
    save_model(out_path(g, "model.json"), model, info);
    std::cout << "trained " << a.epochs << " epochs, final loss " << rep.train_loss.back() << "\n";
    return 0;
}

int run(int argc, char** argv)
{
    CLI::App app{"mmhawk: mmWave UAV tracking and identification"};
    app.require_subcommand(1);
    Globals g;
    auto env = [](const std::string& name) { return "MMHAWK_" + name; };
    app.add_option("--config", g.config, "Radar config JSON")->envname(env("CONFIG"));
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->envname(env("SEED"));
    app.add_option("--out", g.out, "Output directory")->envname(env("OUT"));
    app.add_option("--threads", g.threads, "Worker threads (recorded; processing is single-threaded)")
        ->envname(env("THREADS"))
        ->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Synthesize a raw frame file and ground truth from a scenario");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->envname(env("SCENARIO"));
    simulate->add_option("--frames", sim.frames, "Override the scenario frame count");

    auto add_track_flags = [&](CLI::App* c, TrackArgs& t) {
        c->add_option("--k-bins", t.k_bins, "DP range-bin constraint (default: derived)");
        c->add_option("--j-min", t.j_min, "Smallest folding size")->envname(env("J_MIN"));
        c->add_option("--j-max", t.j_max, "Largest folding size")->envname(env("J_MAX"));
        c->add_flag("--no-filter", t.no_filter, "Skip particle-filter smoothing");
    };
    TrackArgs tra;
    auto* track = app.add_subcommand("track", "Track the strongest periodic emitter in a frame file");
    track->add_option("--frames", tra.frames, "Frame file")->required();
    track->add_option("--background", tra.background, "Emitter-free frame file for the noise profile");
    add_track_flags(track, tra);

    IdentifyArgs ida;
    auto* identify = app.add_subcommand("identify", "Classify segments from a frame file or a segment dataset");
    identify->add_option("--frames", ida.frames, "Frame file");
    identify->add_option("--background", ida.background, "Emitter-free frame file");
    identify->add_option("--dataset", ida.dataset, "Segment file");
    identify->add_option("--model", ida.model, "Model manifest")->required()->envname(env("MODEL"));
    identify->add_option("--threshold", ida.threshold, "Fixed segment threshold (default: calibrated)");
    add_track_flags(identify, ida.track);

    EvaluateArgs eva;
    auto* evaluate = app.add_subcommand("evaluate", "Relative range error of a track against truth");
    evaluate->add_option("--track", eva.track, "Track CSV")->required();
    evaluate->add_option("--truth", eva.truth, "Truth CSV")->required();
    evaluate->add_option("--budget", eva.budget, "Relative error budget");

    DatasetArgs dsa;
    auto* dataset = app.add_subcommand("dataset", "Synthetic segment datasets and model training");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "Generate a balanced dataset and its train/test split");
    gen->add_option("--uav", dsa.uav, "UAV segments");
    gen->add_option("--other", dsa.other, "Distractor segments");
    gen->add_option("--snr-min", dsa.snr_min, "Lowest per-peak SNR (dB)");
    gen->add_option("--snr-max", dsa.snr_max, "Highest per-peak SNR (dB)");
    gen->add_option("--fraction", dsa.fraction, "Training fraction");
    gen->add_option("--rotor-rates", dsa.rotor_rates, "UAV rotor-rate law: grid or continuous");
    auto* split = dataset->add_subcommand("split", "Seeded train/test split");
    split->add_option("--in", dsa.input, "Segment file")->required();
    split->add_option("--fraction", dsa.fraction, "Training fraction");
    auto* stats = dataset->add_subcommand("stats", "Class balance and shape of a segment file");
    stats->add_option("--in", dsa.input, "Segment file")->required();
    auto* train = dataset->add_subcommand("train", "Train the LSTM detector");
    train->add_option("--train", dsa.train, "Training segments")->required();
    train->add_option("--validation", dsa.validation, "Validation segments");
    train->add_option("--epochs", dsa.epochs, "Epochs")->envname(env("EPOCHS"));
    train->add_option("--lr", dsa.lr, "Adam learning rate");
    train->add_option("--batch", dsa.batch, "Batch size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }
    g.seed_given = seed_opt->count() > 0 || std::getenv("MMHAWK_SEED") != nullptr;

    if (simulate->parsed()) return cmd_simulate(g, sim);
    if (track->parsed()) return cmd_track(g, tra);
    if (identify->parsed()) return cmd_identify(g, ida);
    if (evaluate->parsed()) return cmd_evaluate(g, eva);
    if (gen->parsed()) return cmd_dataset_gen(g, dsa);
    if (split->parsed()) return cmd_dataset_split(g, dsa);
    if (stats->parsed()) return cmd_dataset_stats(g, dsa);
    if (train->parsed()) return cmd_dataset_train(g, dsa);
    return static_cast<int>(ExitCode::internal);
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "mmhawk: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "mmhawk: " << e.what() << "\n";
        return static_cast<int>(ExitCode::validation);
    } catch (const std::exception& e) {
        std::cerr << "mmhawk: internal error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::internal);
    }
}
