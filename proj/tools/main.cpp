#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crashprob/csv.hpp"
#include "crashprob/dataset.hpp"
#include "crashprob/estimation.hpp"
#include "crashprob/extract.hpp"
#include "crashprob/heatmap.hpp"
#include "crashprob/model_io.hpp"
#include "crashprob/nested_logit.hpp"
#include "crashprob/synthetic.hpp"
#include "crashprob/types.hpp"

namespace fs = std::filesystem;
using crashprob::format_double;
using crashprob::format_int;
using crashprob::NumericError;
using crashprob::Outcome;
using crashprob::ValidationError;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string row_fmt(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

void add_friction_options(CLI::App* cmd, crashprob::FrictionConfig& f) {
    cmd->add_option("--dry-friction-low-speed", f.dry_long_at_0,
                    "Dry longitudinal friction at standstill");
    cmd->add_option("--dry-friction-high-speed", f.dry_long_at_vmax,
                    "Dry longitudinal friction at the reference top speed");
    cmd->add_option("--wet-friction-low-speed", f.wet_long_at_0,
                    "Wet longitudinal friction at standstill");
    cmd->add_option("--wet-friction-high-speed", f.wet_long_at_vmax,
                    "Wet longitudinal friction at the reference top speed");
    cmd->add_option("--friction-vmax", f.vmax, "Reference top speed for the friction ramp (m/s)");
    cmd->add_option("--lateral-factor", f.lateral_factor,
                    "Lateral over longitudinal friction ratio");
    cmd->add_option("--heavy-dry-factor", f.heavy_dry_factor,
                    "Heavy-vehicle multiplier on dry friction");
    cmd->add_option("--lc-peak", f.lc_peak_factor,
                    "Lane-change lateral acceleration add-on, in g");
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string out_dir;
    std::string truth_model;
    crashprob::ScenarioConfig cfg;
    crashprob::FrictionConfig friction;
    std::int64_t keep_na = -1;
    std::uint64_t sample_seed = 99;
};

void write_sampling_file(const std::string& path,
                         const std::array<std::int64_t, 4>& population,
                         const std::array<std::int64_t, 4>& sample,
                         const crashprob::SamplingWeights& weights) {
    ordered_json j;
    for (Outcome k : crashprob::kAllOutcomes) {
        std::size_t i = static_cast<std::size_t>(k);
        j["population"][crashprob::outcome_name(k)] = population[i];
        j["sample"][crashprob::outcome_name(k)] = sample[i];
        j["weights"][crashprob::outcome_name(k)] = weights.w[i];
    }
    crashprob::write_file(path, j.dump(2) + "\n");
}

void run_simulate(const SimulateOptions& opt) {
    crashprob::ModelParameters truth = crashprob::demo_parameters();
    crashprob::ScalingConfig scaling;
    crashprob::FrictionConfig friction = opt.friction;
    if (!opt.truth_model.empty()) {
        crashprob::ModelFile m = crashprob::load_model(opt.truth_model);
        truth = m.params;
        scaling = m.scaling;
        friction = m.friction;
    }

    crashprob::GeneratedTrajectories gen = crashprob::generate_trajectories(opt.cfg);
    std::vector<crashprob::EventRecord> events =
        crashprob::label_outcomes(gen.observations, truth, scaling, friction, opt.cfg);

    std::array<std::int64_t, 4> population{};
    for (const crashprob::EventRecord& e : events) {
        population[static_cast<std::size_t>(e.outcome)] += 1;
    }
    std::array<std::int64_t, 4> targets = population;
    crashprob::SamplingWeights weights;
    if (opt.keep_na >= 0) {
        targets[0] = std::min<std::int64_t>(opt.keep_na, population[0]);
        crashprob::ChoiceBasedSample sample =
            crashprob::choice_based_sample(events, targets, opt.sample_seed);
        events = std::move(sample.events);
        weights = sample.weights;
        std::unordered_set<std::string> kept;
        for (const crashprob::EventRecord& e : events) kept.insert(e.event_id);
        std::erase_if(gen.observations, [&](const crashprob::VehicleObservation& o) {
            return kept.find(o.event_id) == kept.end();
        });
    }

    std::sort(gen.observations.begin(), gen.observations.end(),
              [](const crashprob::VehicleObservation& a, const crashprob::VehicleObservation& b) {
                  return std::tie(a.event_id, a.replication, a.vehicle_id, a.time) <
                         std::tie(b.event_id, b.replication, b.vehicle_id, b.time);
              });

    fs::create_directories(opt.out_dir);
    const std::string traj_path = (fs::path(opt.out_dir) / "trajectories.csv").string();
    const std::string geom_path = (fs::path(opt.out_dir) / "geometry.csv").string();
    const std::string events_path = (fs::path(opt.out_dir) / "events.csv").string();
    const std::string sampling_path = (fs::path(opt.out_dir) / "sampling.json").string();
    crashprob::write_file(traj_path, crashprob::serialize_trajectories(gen.observations));
    crashprob::write_file(geom_path, crashprob::serialize_geometry(gen.sections));
    crashprob::write_file(events_path, crashprob::serialize_events(events));
    write_sampling_file(sampling_path, population, targets, weights);

    std::cout << "events written: " << events.size() << " (population";
    for (Outcome k : crashprob::kAllOutcomes) {
        std::cout << " " << crashprob::outcome_name(k) << "="
                  << population[static_cast<std::size_t>(k)];
    }
    std::cout << ")\n";
    std::cout << "observations written: " << gen.observations.size() << "\n";
    std::cout << "output: " << traj_path << ", " << geom_path << ", " << events_path << ", "
              << sampling_path << "\n";
}

// ------------------------------------------------------------------- score

struct ScoreOptions {
    std::string trajectories;
    std::string geometry;
    std::string events;
    std::string out;
    bool kmh = false;
    double cell_length = 50.0;
    double cell_duration = 300.0;
    crashprob::FrictionConfig friction;
};

void run_score(const ScoreOptions& opt) {
    crashprob::Dataset dataset = crashprob::assemble_dataset(
        crashprob::load_trajectories(opt.trajectories, opt.kmh),
        crashprob::load_geometry(opt.geometry),
        crashprob::load_events(opt.events, opt.cell_length, opt.cell_duration));
    crashprob::CellDataset cells = crashprob::build_cell_dataset(dataset, opt.friction);
    crashprob::write_file(opt.out, crashprob::serialize_features(cells.rows));
    std::cout << "cells: " << cells.cells.size() << ", member observations: " << cells.rows.size()
              << "\n";
    std::cout << "output: " << opt.out << "\n";
}

// ---------------------------------------------------------------- estimate

struct WeightOptions {
    std::string mode = "auto";
    std::string sampling_path;
    double w_na = -1, w_re = -1, w_lc = -1, w_ror = -1;
};

struct EstimateOptions {
    std::string features;
    std::string events;
    std::string out_model;
    double cell_length = 50.0;
    double cell_duration = 300.0;
    WeightOptions weights;
    std::vector<std::string> fixes;
    bool sandwich = false;
    int max_iterations = 500;
    crashprob::FrictionConfig friction;
};

crashprob::SamplingWeights resolve_weights(const WeightOptions& opt,
                                           const std::string& events_path) {
    if (opt.mode == "unit") return {};
    if (opt.mode == "explicit") {
        std::array<double, 4> w{opt.w_na, opt.w_re, opt.w_lc, opt.w_ror};
        for (double v : w) {
            if (!(v > 0)) {
                throw ValidationError(
                    "weight mode 'explicit' requires positive --weight-na/--weight-re/"
                    "--weight-lc/--weight-ror values");
            }
        }
        return {w};
    }
    if (opt.mode != "auto") {
        throw ValidationError("unknown weight mode '" + opt.mode +
                              "', expected auto, unit or explicit");
    }
    std::string path = opt.sampling_path;
    if (path.empty()) {
        path = (fs::path(events_path).parent_path() / "sampling.json").string();
    }
    if (!fs::exists(path)) {
        throw ValidationError("weight mode 'auto' needs a sampling file; not found at '" + path +
                              "' (write one with simulate or pass --sampling)");
    }
    ordered_json j;
    try {
        j = ordered_json::parse(crashprob::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    std::array<std::int64_t, 4> population{};
    std::array<std::int64_t, 4> sample{};
    try {
        for (Outcome k : crashprob::kAllOutcomes) {
            std::size_t i = static_cast<std::size_t>(k);
            population[i] = j.at("population").at(crashprob::outcome_name(k)).get<std::int64_t>();
            sample[i] = j.at("sample").at(crashprob::outcome_name(k)).get<std::int64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return crashprob::sampling_weights(population, sample);
}

crashprob::ModelParameters structure_from_fixes(const std::vector<std::string>& fixes) {
    crashprob::ModelParameters structure;
    for (const std::string& fix : fixes) {
        std::size_t eq = fix.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("bad --fix '" + fix + "', expected name=value");
        }
        std::string name = fix.substr(0, eq);
        int index = -1;
        for (int i = 0; i < crashprob::kNumCoefficients; ++i) {
            if (name == crashprob::coefficient_name(i)) index = i;
        }
        if (index < 0) {
            throw ValidationError("unknown coefficient '" + name + "' in --fix");
        }
        std::size_t used = 0;
        double value = 0;
        try {
            value = std::stod(fix.substr(eq + 1), &used);
        } catch (const std::exception&) {
            throw ValidationError("bad value in --fix '" + fix + "'");
        }
        if (used != fix.size() - eq - 1) {
            throw ValidationError("bad value in --fix '" + fix + "'");
        }
        structure.set_coefficient(index, value);
        structure.free_mask[static_cast<std::size_t>(index)] = false;
    }
    return structure;
}

void print_estimate_table(const crashprob::EstimationResult& r) {
    std::vector<int> free_indices = crashprob::free_coefficient_indices(r.params);
    auto free_pos = [&](int index) {
        for (std::size_t i = 0; i < free_indices.size(); ++i) {
            if (free_indices[i] == index) return static_cast<int>(i);
        }
        return -1;
    };
    std::printf("%-10s %12s %12s %10s %10s\n", "parameter", "value", "std err", "t-stat",
                "p-value");
    auto print_row = [&](const char* name, double value, int pos) {
        if (pos < 0) {
            std::printf("%-10s %12.4f %12s %10s %10s\n", name, value, "(fixed)", "-", "-");
        } else if (r.se_valid) {
            std::printf("%-10s %12.4f %12.4f %10.3f %10.4f\n", name, value,
                        r.std_errors[static_cast<std::size_t>(pos)],
                        r.t_stats[static_cast<std::size_t>(pos)],
                        r.p_values[static_cast<std::size_t>(pos)]);
        } else {
            std::printf("%-10s %12.4f %12s %10s %10s\n", name, value, "-", "-", "-");
        }
    };
    for (int i = 0; i < crashprob::kNumCoefficients; ++i) {
        print_row(crashprob::coefficient_name(i), r.params.coefficient(i), free_pos(i));
    }
    print_row("mu", r.params.mu, static_cast<int>(free_indices.size()));
    std::printf("\n");
    std::printf("free parameters        %d\n", r.n_parameters);
    std::printf("cells (sample size)    %lld\n", static_cast<long long>(r.n_cells));
    std::printf("member observations    %lld\n", static_cast<long long>(r.n_obs));
    std::printf("initial log-likelihood %.4f\n", r.loglik_initial);
    std::printf("final log-likelihood   %.4f\n", r.loglik_final);
    std::printf("rho-squared            %.4f\n", r.rho2);
    std::printf("adjusted rho-squared   %.4f\n", r.rho2_adjusted);
    std::printf("converged              %s (%d iterations)\n", r.converged ? "yes" : "no",
                r.iterations);
    if (!r.se_valid && !r.se_warning.empty()) {
        std::printf("warning: %s\n", r.se_warning.c_str());
    }
}

void run_estimate(const EstimateOptions& opt) {
    std::vector<crashprob::EventRecord> events =
        crashprob::load_events(opt.events, opt.cell_length, opt.cell_duration);
    crashprob::CellDataset data = crashprob::load_features(opt.features, events);
    crashprob::SamplingWeights weights = resolve_weights(opt.weights, opt.events);
    crashprob::ModelParameters structure = structure_from_fixes(opt.fixes);
    crashprob::OptimizerConfig cfg;
    cfg.max_iterations = opt.max_iterations;
    cfg.sandwich = opt.sandwich;
    crashprob::EstimationResult result =
        crashprob::estimate(data.cells, weights, crashprob::ScalingConfig{}, structure, cfg);
    print_estimate_table(result);
    if (!opt.out_model.empty()) {
        crashprob::save_model(opt.out_model,
                              crashprob::ModelFile::from_estimation(result, opt.friction));
        std::printf("model written to %s\n", opt.out_model.c_str());
    }
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
    std::string model;
    std::string features;
    std::string events;
    std::string out;
    double cell_length = 50.0;
    double cell_duration = 300.0;
};

void run_predict(const PredictOptions& opt) {
    crashprob::ModelFile model = crashprob::load_model(opt.model);
    std::vector<crashprob::EventRecord> events =
        crashprob::load_events(opt.events, opt.cell_length, opt.cell_duration);
    crashprob::CellDataset data = crashprob::load_features(opt.features, events);
    std::vector<crashprob::CellPrediction> predictions =
        crashprob::predict(data.cells, model.params, model.scaling);
    crashprob::CsvWriter w({"event_id", "replication", "outcome", "anchor_pos_m", "anchor_time_s",
                            "n_obs", "p_na", "p_re", "p_lc", "p_ror", "predicted"});
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const crashprob::CellPrediction& p = predictions[i];
        const crashprob::EventRecord& e = *data.events[i];
        w.row({p.key.event_id, format_int(p.key.replication), crashprob::outcome_name(e.outcome),
               format_double(e.anchor_position), format_double(e.anchor_time),
               format_int(p.n_obs), format_double(p.probs[0]), format_double(p.probs[1]),
               format_double(p.probs[2]), format_double(p.probs[3]),
               crashprob::outcome_name(p.predicted)});
    }
    crashprob::write_file(opt.out, w.str());
    std::cout << "cells predicted: " << predictions.size() << "\n";
    std::cout << "output: " << opt.out << "\n";
}

// ------------------------------------------------- predictions file loading

struct PredictionRow {
    std::string event_id;
    int replication = 0;
    Outcome truth = Outcome::na;
    double anchor_position = 0;
    double anchor_time = 0;
    std::int64_t n_obs = 0;
    std::array<double, 4> probs{};
    Outcome predicted = Outcome::na;
};

std::vector<PredictionRow> load_predictions(const std::string& path) {
    std::string content = crashprob::read_file(path);
    crashprob::CsvReader reader(path, content);
    const std::size_t c_event = reader.column("event_id");
    const std::size_t c_rep = reader.column("replication");
    const std::size_t c_outcome = reader.column("outcome");
    const std::size_t c_pos = reader.column("anchor_pos_m");
    const std::size_t c_time = reader.column("anchor_time_s");
    const std::size_t c_n = reader.column("n_obs");
    const std::size_t c_p[4] = {reader.column("p_na"), reader.column("p_re"),
                                reader.column("p_lc"), reader.column("p_ror")};
    const std::size_t c_pred = reader.column("predicted");
    std::vector<PredictionRow> rows;
    std::vector<std::string_view> row;
    while (reader.next_row(row)) {
        PredictionRow r;
        r.event_id = std::string(row[c_event]);
        r.replication = static_cast<int>(reader.parse_int(row[c_rep], "replication"));
        try {
            r.truth = crashprob::parse_outcome(std::string(row[c_outcome]));
            r.predicted = crashprob::parse_outcome(std::string(row[c_pred]));
        } catch (const ValidationError& e) {
            reader.fail("outcome", e.what());
        }
        r.anchor_position = reader.parse_double(row[c_pos], "anchor_pos_m");
        r.anchor_time = reader.parse_double(row[c_time], "anchor_time_s");
        r.n_obs = reader.parse_int(row[c_n], "n_obs");
        const char* names[4] = {"p_na", "p_re", "p_lc", "p_ror"};
        for (int k = 0; k < 4; ++k) {
            double p = reader.parse_double(row[c_p[k]], names[k]);
            if (p < 0 || p > 1) {
                reader.fail(names[k], "probability must lie in [0, 1]");
            }
            r.probs[static_cast<std::size_t>(k)] = p;
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        throw ValidationError(path + ": no prediction rows");
    }
    return rows;
}

// ----------------------------------------------------------------- metrics

struct MetricsOptions {
    std::string predictions;
    std::string out;
};

std::string pct(const std::optional<double>& v) {
    if (!v) return "   n/a";
    return row_fmt("%5.1f%%", *v * 100.0);
}

void run_metrics(const MetricsOptions& opt) {
    std::vector<PredictionRow> rows = load_predictions(opt.predictions);
    std::vector<Outcome> predicted;
    std::vector<Outcome> truth;
    for (const PredictionRow& r : rows) {
        predicted.push_back(r.predicted);
        truth.push_back(r.truth);
    }
    crashprob::ConfusionReport report = crashprob::confusion_metrics(predicted, truth);

    std::printf("%-10s %8s %8s %8s %8s\n", "true\\pred", "NA", "RE", "LC", "ROR");
    for (Outcome t : crashprob::kAllOutcomes) {
        std::size_t ti = static_cast<std::size_t>(t);
        std::printf("%-10s %8lld %8lld %8lld %8lld\n", crashprob::outcome_name(t),
                    static_cast<long long>(report.counts[ti][0]),
                    static_cast<long long>(report.counts[ti][1]),
                    static_cast<long long>(report.counts[ti][2]),
                    static_cast<long long>(report.counts[ti][3]));
    }
    std::printf("\n");
    for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
        std::size_t ki = static_cast<std::size_t>(k);
        std::printf("accuracy %-4s    %s\n", crashprob::outcome_name(k),
                    pct(report.accuracy[ki]).c_str());
    }
    std::printf("accuracy total   %s\n", pct(report.total_accident_accuracy).c_str());
    for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
        std::size_t ki = static_cast<std::size_t>(k);
        std::printf("false alarm %-4s %s\n", crashprob::outcome_name(k),
                    pct(report.false_alarm[ki]).c_str());
    }
    std::printf("false alarm total %s\n", pct(report.total_false_alarm).c_str());

    if (!opt.out.empty()) {
        ordered_json j;
        for (Outcome t : crashprob::kAllOutcomes) {
            std::size_t ti = static_cast<std::size_t>(t);
            for (Outcome p : crashprob::kAllOutcomes) {
                j["counts"][crashprob::outcome_name(t)][crashprob::outcome_name(p)] =
                    report.counts[ti][static_cast<std::size_t>(p)];
            }
        }
        auto opt_num = [](const std::optional<double>& v) {
            return v ? ordered_json(*v) : ordered_json(nullptr);
        };
        for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
            j["accuracy"][crashprob::outcome_name(k)] =
                opt_num(report.accuracy[static_cast<std::size_t>(k)]);
        }
        j["total_accident_accuracy"] = opt_num(report.total_accident_accuracy);
        for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
            j["false_alarm"][crashprob::outcome_name(k)] =
                opt_num(report.false_alarm[static_cast<std::size_t>(k)]);
        }
        j["total_false_alarm"] = opt_num(report.total_false_alarm);
        crashprob::write_file(opt.out, j.dump(2) + "\n");
        std::printf("metrics written to %s\n", opt.out.c_str());
    }
}

// ------------------------------------------------------------------ ratios

void run_ratios(const MetricsOptions& opt) {
    std::vector<PredictionRow> rows = load_predictions(opt.predictions);
    std::vector<crashprob::CellPrediction> predictions;
    std::vector<Outcome> truth;
    for (const PredictionRow& r : rows) {
        crashprob::CellPrediction p;
        p.key = crashprob::CellKey{r.event_id, r.replication, 0, 0};
        p.probs = r.probs;
        p.predicted = r.predicted;
        p.n_obs = r.n_obs;
        predictions.push_back(std::move(p));
        truth.push_back(r.truth);
    }
    crashprob::RatioTable table = crashprob::probability_ratios(predictions, truth);
    std::printf("%-10s %10s %10s %10s\n", "true class", "P(RE)/P(NA)", "P(LC)/P(NA)",
                "P(ROR)/P(NA)");
    for (Outcome t : {Outcome::re, Outcome::lc, Outcome::ror}) {
        std::size_t ti = static_cast<std::size_t>(t);
        if (!table.has_row[ti]) {
            std::printf("%-10s %10s %10s %10s\n", crashprob::outcome_name(t), "n/a", "n/a",
                        "n/a");
            continue;
        }
        std::printf("%-10s %10.3f %10.3f %10.3f\n", crashprob::outcome_name(t),
                    table.ratio[ti][0], table.ratio[ti][1], table.ratio[ti][2]);
    }
    if (!opt.out.empty()) {
        ordered_json j;
        const char* cols[3] = {"RE", "LC", "ROR"};
        for (Outcome t : {Outcome::re, Outcome::lc, Outcome::ror}) {
            std::size_t ti = static_cast<std::size_t>(t);
            if (!table.has_row[ti]) {
                j[crashprob::outcome_name(t)] = nullptr;
                continue;
            }
            for (int k = 0; k < 3; ++k) {
                j[crashprob::outcome_name(t)][cols[k]] = table.ratio[ti][static_cast<std::size_t>(k)];
            }
        }
        crashprob::write_file(opt.out, j.dump(2) + "\n");
        std::printf("ratios written to %s\n", opt.out.c_str());
    }
}

// ----------------------------------------------------------------- heatmap

struct HeatmapOptions {
    std::string predictions;
    std::string geometry;
    std::string out;
};

void run_heatmap(const HeatmapOptions& opt) {
    std::vector<PredictionRow> rows = load_predictions(opt.predictions);
    if (!opt.geometry.empty()) {
        std::vector<crashprob::RoadSection> sections = crashprob::load_geometry(opt.geometry);
        for (const PredictionRow& r : rows) {
            crashprob::section_at(sections, r.anchor_position);
        }
    }
    std::vector<crashprob::HeatmapPoint> points;
    points.reserve(rows.size());
    for (const PredictionRow& r : rows) {
        points.push_back({r.anchor_position, r.anchor_time, r.probs});
    }
    crashprob::write_file(opt.out, crashprob::render_heatmap_svg(points));
    std::cout << "heatmap written to " << opt.out << "\n";
}

// ---------------------------------------------------------------- crossval

struct CrossvalOptions {
    EstimateOptions est;
    std::uint64_t seed = 7;
};

void run_crossval(const CrossvalOptions& opt) {
    std::vector<crashprob::EventRecord> events =
        crashprob::load_events(opt.est.events, opt.est.cell_length, opt.est.cell_duration);
    crashprob::CellDataset data = crashprob::load_features(opt.est.features, events);
    crashprob::SamplingWeights weights = resolve_weights(opt.est.weights, opt.est.events);
    crashprob::ModelParameters structure = structure_from_fixes(opt.est.fixes);
    crashprob::OptimizerConfig cfg;
    cfg.max_iterations = opt.est.max_iterations;
    crashprob::CrossValidationResult cv =
        crashprob::crossvalidate(data.cells, weights, crashprob::ScalingConfig{}, structure,
                                 opt.seed, cfg);
    for (int fold = 0; fold < 2; ++fold) {
        const crashprob::EstimationResult& r = cv.estimates[static_cast<std::size_t>(fold)];
        const crashprob::ConfusionReport& report = cv.reports[static_cast<std::size_t>(fold)];
        std::printf("fold %c: final LL %.4f, converged %s; held-out confusion:\n", 'A' + fold,
                    r.loglik_final, r.converged ? "yes" : "no");
        for (Outcome t : crashprob::kAllOutcomes) {
            std::size_t ti = static_cast<std::size_t>(t);
            std::printf("  %-4s %8lld %8lld %8lld %8lld\n", crashprob::outcome_name(t),
                        static_cast<long long>(report.counts[ti][0]),
                        static_cast<long long>(report.counts[ti][1]),
                        static_cast<long long>(report.counts[ti][2]),
                        static_cast<long long>(report.counts[ti][3]));
        }
        std::printf("  accident accuracy %s, false alarms %s\n",
                    pct(report.total_accident_accuracy).c_str(),
                    pct(report.total_false_alarm).c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accident-probability pipeline over vehicle trajectories"};
    app.require_subcommand(1);

    SimulateOptions sim;
    CLI::App* c_sim = app.add_subcommand(
        "simulate", "Generate a labeled synthetic dataset (trajectories, geometry, events)");
    c_sim->add_option("--out", sim.out_dir, "Output directory")->required();
    c_sim->add_option("--events", sim.cfg.n_events, "Number of events");
    c_sim->add_option("--replications", sim.cfg.replications, "Replications per event");
    c_sim->add_option("--duration", sim.cfg.duration, "Simulated seconds per event");
    c_sim->add_option("--seed", sim.cfg.seed, "Master random seed");
    c_sim->add_option("--arrival-rate", sim.cfg.arrival_rate, "Vehicle arrivals per second");
    c_sim->add_option("--speed-mean", sim.cfg.speed_mean, "Mean desired speed (m/s)");
    c_sim->add_option("--speed-sd", sim.cfg.speed_sd, "Desired speed spread (m/s)");
    c_sim->add_option("--cf-sensitivity", sim.cfg.cf_sensitivity,
                      "Car-following and brake-pulse intensity scale");
    c_sim->add_option("--lc-rate", sim.cfg.lc_rate, "Lane-change attempts per vehicle-minute");
    c_sim->add_option("--heavy-share", sim.cfg.heavy_share, "Heavy-vehicle fraction");
    c_sim->add_option("--wet-fraction", sim.cfg.wet_fraction, "Fraction of wet-surface events");
    c_sim->add_option("--cell-length", sim.cfg.cell_length, "Cell length (m)");
    c_sim->add_option("--cell-duration", sim.cfg.cell_duration, "Cell duration (s)");
    c_sim->add_option("--truth", sim.truth_model,
                      "Model file supplying ground-truth labeling parameters");
    c_sim->add_option("--keep-na", sim.keep_na,
                      "Downsample the NA class to this many events (choice-based sampling)");
    c_sim->add_option("--sample-seed", sim.sample_seed, "Seed for the NA downsampling draw");
    add_friction_options(c_sim, sim.friction);
    c_sim->callback([&] { run_simulate(sim); });

    ScoreOptions score;
    CLI::App* c_score = app.add_subcommand(
        "score", "Compute surrogate measures and cell features from trajectories");
    c_score->add_option("--trajectories", score.trajectories, "trajectories.csv")->required();
    c_score->add_option("--geometry", score.geometry, "geometry.csv")->required();
    c_score->add_option("--events", score.events, "events.csv")->required();
    c_score->add_option("--out", score.out, "Output features.csv")->required();
    c_score->add_flag("--kmh", score.kmh, "Trajectory speeds are km/h (converted on ingest)");
    c_score->add_option("--cell-length", score.cell_length, "Cell length (m)");
    c_score->add_option("--cell-duration", score.cell_duration, "Cell duration (s)");
    add_friction_options(c_score, score.friction);
    c_score->callback([&] { run_score(score); });

    auto add_estimation_inputs = [](CLI::App* cmd, EstimateOptions& opt) {
        cmd->add_option("--features", opt.features, "features.csv from score")->required();
        cmd->add_option("--events", opt.events, "events.csv")->required();
        cmd->add_option("--cell-length", opt.cell_length, "Cell length (m)");
        cmd->add_option("--cell-duration", opt.cell_duration, "Cell duration (s)");
        cmd->add_option("--weights", opt.weights.mode,
                        "Weight mode: auto (sampling.json), unit, or explicit");
        cmd->add_option("--sampling", opt.weights.sampling_path,
                        "sampling.json path for --weights auto");
        cmd->add_option("--weight-na", opt.weights.w_na, "Explicit NA weight");
        cmd->add_option("--weight-re", opt.weights.w_re, "Explicit RE weight");
        cmd->add_option("--weight-lc", opt.weights.w_lc, "Explicit LC weight");
        cmd->add_option("--weight-ror", opt.weights.w_ror, "Explicit ROR weight");
        cmd->add_option("--fix", opt.fixes,
                        "Fix a coefficient, e.g. --fix lc.b1=0 (repeatable)");
        cmd->add_option("--max-iterations", opt.max_iterations, "Optimizer iteration cap");
    };

    EstimateOptions est;
    CLI::App* c_est = app.add_subcommand("estimate",
                                         "Fit the accident-probability model by weighted "
                                         "maximum likelihood");
    add_estimation_inputs(c_est, est);
    c_est->add_option("--out", est.out_model, "Output model file (JSON)");
    c_est->add_flag("--sandwich", est.sandwich, "Robust sandwich standard errors");
    add_friction_options(c_est, est.friction);
    c_est->callback([&] { run_estimate(est); });

    PredictOptions pred;
    CLI::App* c_pred =
        app.add_subcommand("predict", "Per-cell outcome probabilities under a fitted model");
    c_pred->add_option("--model", pred.model, "Model file")->required();
    c_pred->add_option("--features", pred.features, "features.csv")->required();
    c_pred->add_option("--events", pred.events, "events.csv")->required();
    c_pred->add_option("--out", pred.out, "Output predictions.csv")->required();
    c_pred->add_option("--cell-length", pred.cell_length, "Cell length (m)");
    c_pred->add_option("--cell-duration", pred.cell_duration, "Cell duration (s)");
    c_pred->callback([&] { run_predict(pred); });

    MetricsOptions metrics;
    CLI::App* c_metrics =
        app.add_subcommand("metrics", "Confusion matrix, accuracies and false-alarm rates");
    c_metrics->add_option("--predictions", metrics.predictions, "predictions.csv")->required();
    c_metrics->add_option("--out", metrics.out, "Optional metrics.json");
    c_metrics->callback([&] { run_metrics(metrics); });

    MetricsOptions ratios;
    CLI::App* c_ratios =
        app.add_subcommand("ratios", "Mean accident-to-NA probability ratios by true class");
    c_ratios->add_option("--predictions", ratios.predictions, "predictions.csv")->required();
    c_ratios->add_option("--out", ratios.out, "Optional ratios.json");
    c_ratios->callback([&] { run_ratios(ratios); });

    HeatmapOptions heat;
    CLI::App* c_heat = app.add_subcommand("heatmap", "SVG probability heatmap per accident type");
    c_heat->add_option("--predictions", heat.predictions, "predictions.csv")->required();
    c_heat->add_option("--geometry", heat.geometry,
                       "Optional geometry.csv to validate anchor positions");
    c_heat->add_option("--out", heat.out, "Output SVG path")->required();
    c_heat->callback([&] { run_heatmap(heat); });

    CrossvalOptions cv;
    CLI::App* c_cv = app.add_subcommand("crossval", "Two-fold stratified cross-validation");
    add_estimation_inputs(c_cv, cv.est);
    c_cv->add_option("--seed", cv.seed, "Split seed");
    c_cv->callback([&] { run_crossval(cv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
