#include "lil/cli.hpp"

#include "lil/attacks.hpp"
#include "lil/checkpoint.hpp"
#include "lil/errors.hpp"
#include "lil/experiment.hpp"
#include "lil/metrics.hpp"
#include "lil/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace lil {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

fs::path sibling(const fs::path& model, const std::string& suffix) {
    fs::path p = model;
    p.replace_extension();
    return fs::path(p.string() + suffix);
}

void require_exists(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw std::invalid_argument(std::string(what) + " not found: " + p.string());
}

/// Dataset and clipping range for attack/report. CSV files are toy data
/// (unbounded); JSON experiment configs name their own dataset.
struct LoadedData {
    LabeledDataset ds;
    bool bounded = false;
};

LoadedData load_data_argument(const fs::path& path) {
    require_exists(path, "data");
    if (path.extension() == ".csv") return {load_dataset_csv(path), false};
    if (path.extension() == ".json") {
        const ExperimentConfig cfg = load_experiment_config(path);
        return {load_dataset(cfg.dataset), cfg.dataset.bounded_inputs()};
    }
    throw std::invalid_argument("--data must be a dataset .csv or an experiment .json config");
}

LabeledDataset test_rows_or_all(const LabeledDataset& ds) {
    LabeledDataset test = ds.subset(Split::Test);
    return test.size() > 0 ? test : ds;
}

void check_compatible(const StackedLilNetwork& net, const LabeledDataset& ds) {
    if (ds.dim() != net.config.input_dim())
        throw std::invalid_argument("data dimension " + std::to_string(ds.dim()) +
                                    " does not match model input width " +
                                    std::to_string(net.config.input_dim()));
    for (std::size_t level : net.block_levels)
        if (level >= ds.levels())
            throw std::invalid_argument("data has no label level " + std::to_string(level));
}

// ---------------------------------------------------------------- gen-data

struct GenDataOptions {
    std::string kind;
    std::string out;
    std::optional<std::size_t> n;
    std::optional<double> noise;
    std::uint64_t seed = 0;
    double major_radius = 2.0;
    double minor_radius = 1.0;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
    Rng rng(o.seed);
    LabeledDataset ds;
    if (o.kind == "rings") {
        ds = gen_entangled_rings(o.n.value_or(400), o.noise.value_or(1e-4), rng);
    } else if (o.kind == "torus") {
        ds = gen_torus(o.n.value_or(1600), o.major_radius, o.minor_radius, o.noise.value_or(0.001), rng);
    } else {
        throw std::invalid_argument("--kind must be rings or torus");
    }
    auto file = open_output(o.out);
    write_dataset_csv(file, ds);
    if (!file) throw IoError("write failed for " + o.out);
    out << "wrote " << ds.size() << " rows to " << o.out << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
    std::string config;
    std::string out;
    std::optional<double> beta;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

struct TrainedModel {
    double beta = 0.0;
    std::vector<double> train_accuracy;
    std::vector<double> test_accuracy;
};

TrainedModel train_one(const ExperimentConfig& exp, const LabeledDataset& ds, TrainConfig tcfg,
                       const fs::path& model_path, bool verbose, std::ostream& out) {
    const LabeledDataset train_ds = ds.subset(Split::Train);
    const LabeledDataset test_ds = ds.subset(Split::Test);
    Rng rng(tcfg.seed);
    StackedLilNetwork net = init_stacked(network_config_for(exp, ds), tcfg.hierarchy_plan, rng);

    const std::size_t log_every = std::max<std::size_t>(1, tcfg.epochs / 10);
    EpochCallback progress;
    if (verbose)
        progress = [&](std::size_t epoch, double loss) {
            if ((epoch + 1) % log_every == 0)
                out << "  epoch " << epoch + 1 << "/" << tcfg.epochs << " loss " << loss << "\n";
        };
    const TrainReport report = train(net, train_ds, tcfg, rng, progress);

    TrainedModel result{tcfg.weights.beta, report.final_accuracy, {}};
    if (test_ds.size() > 0)
        for (std::size_t level : tcfg.hierarchy_plan)
            result.test_accuracy.push_back(accuracy(net, test_ds, level));

    Checkpoint ckpt{net, tcfg.seed, tcfg, json::object()};
    ckpt.metadata = {{"dataset", to_string(exp.dataset.kind)},
                     {"bounded_inputs", exp.dataset.bounded_inputs()},
                     {"n_train", train_ds.size()},
                     {"n_test", test_ds.size()},
                     {"train_accuracy", result.train_accuracy},
                     {"test_accuracy", result.test_accuracy}};
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    save_checkpoint(model_path, ckpt);

    json report_json = {{"config", train_config_to_json(tcfg)},
                        {"epochs_completed", tcfg.epochs},
                        {"loss_records", report.losses.size()},
                        {"final_loss", report.losses.back().total},
                        {"train_accuracy", result.train_accuracy},
                        {"test_accuracy", result.test_accuracy}};
    write_json_file(sibling(model_path, ".report.json"), report_json);
    {
        auto csv = open_output(sibling(model_path, ".losses.csv"));
        write_loss_csv(csv, report);
    }
    write_json_file(sibling(model_path, ".meta.json"),
                    {{"finished_at", utc_timestamp()}, {"wall_seconds", report.wall_seconds}});

    out << "beta=" << format_double(tcfg.weights.beta) << " train_accuracy="
        << format_double(result.train_accuracy.back());
    if (!result.test_accuracy.empty())
        out << " test_accuracy=" << format_double(result.test_accuracy.back());
    out << " -> " << model_path.string() << "\n";
    return result;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
    require_exists(o.config, "config");
    ExperimentConfig exp = load_experiment_config(o.config);
    if (o.epochs) exp.train.epochs = *o.epochs;
    if (o.seed) exp.train.seed = *o.seed;
    if (o.beta) {
        exp.train.weights.beta = *o.beta;
        exp.beta_sweep.clear();
    }
    exp.validate();
    const LabeledDataset ds = load_dataset(exp.dataset);

    const fs::path model_path = o.out;
    if (exp.beta_sweep.empty()) {
        train_one(exp, ds, exp.train, model_path, o.verbose, out);
        return kExitOk;
    }
    std::vector<TrainedModel> results;
    for (double beta : exp.beta_sweep) {
        TrainConfig t = exp.train;
        t.weights.beta = beta;
        results.push_back(
            train_one(exp, ds, t, sibling(model_path, "_beta" + format_double(beta) + ".json"), o.verbose, out));
    }
    auto csv = open_output(sibling(model_path, "_sweep.csv"));
    csv << "beta,train_accuracy,test_accuracy\n";
    for (const auto& r : results)
        csv << format_double(r.beta) << ',' << format_double(r.train_accuracy.back()) << ','
            << (r.test_accuracy.empty() ? std::string("nan") : format_double(r.test_accuracy.back())) << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------ attack

struct AttackOptions {
    std::string model;
    std::string data;
    std::string kind = "fgsm";
    std::vector<double> sweep;
    std::vector<double> eps;
    double ball = 0.5;
    std::size_t steps = 10;
    std::string loss = "combined";
    std::size_t max_samples = 0;
    std::size_t batch = 100;
    std::optional<double> clip_min;
    std::optional<double> clip_max;
    std::string out;
};

int cmd_attack(const AttackOptions& o, std::ostream& out) {
    require_exists(o.model, "model");
    AttackConfig base;
    base.kind = parse_attack_kind(o.kind);
    base.ball_radius = o.ball;
    base.n_steps = o.steps;
    if (o.loss != "combined" && o.loss != "cse")
        throw std::invalid_argument("--loss must be combined or cse");

    std::vector<double> epsilons = o.eps;
    if (epsilons.empty()) {
        if (o.sweep.empty()) {
            epsilons = default_epsilon_sweep();
        } else {
            if (o.sweep.size() != 3 || o.sweep[2] < 1 || o.sweep[2] != std::floor(o.sweep[2]))
                throw std::invalid_argument("--sweep takes LO HI N with integer N >= 1");
            epsilons = log_spaced(o.sweep[0], o.sweep[1], static_cast<std::size_t>(o.sweep[2]));
        }
    }
    for (double e : epsilons)
        if (!(e >= 0.0)) throw std::invalid_argument("epsilon values must be >= 0");

    const LoadedData data = load_data_argument(o.data);
    const Checkpoint ckpt = load_checkpoint(o.model);
    LabeledDataset ds = test_rows_or_all(data.ds);
    check_compatible(ckpt.net, ds);
    if (o.max_samples > 0 && o.max_samples < ds.size()) {
        std::vector<std::size_t> rows(o.max_samples);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        ds = ds.select(rows);
    }
    const double inf = std::numeric_limits<double>::infinity();
    base.clip_min = o.clip_min.value_or(data.bounded ? 0.0 : -inf);
    base.clip_max = o.clip_max.value_or(data.bounded ? 1.0 : inf);
    base.validate();

    LossContext ctx{ckpt.train.weights, o.loss == "combined", ckpt.train.global_isometry};
    const auto rows = robust_accuracy_sweep(ckpt.net, ds, base, epsilons, ctx, o.batch);
    auto csv = open_output(o.out);
    write_sweep_csv(csv, rows, base, ctx);
    out << "attacked " << ds.size() << " samples at " << rows.size() << " epsilons -> " << o.out << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ report

struct ReportOptions {
    std::string model;
    std::string data;
    std::string out;
    std::size_t bins = 50;
    std::string split = "train";
    bool identity = false;
    std::size_t lipschitz_pairs = 10000;
};

void write_embeddings(const fs::path& path, const LabeledDataset& ds, const Matrix& phi, std::size_t level) {
    auto csv = open_output(path);
    csv << "index,label";
    for (std::size_t c = 0; c < phi.cols(); ++c) csv << ",phi_" << c;
    csv << '\n';
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        csv << i << ',' << ds.labels[level][i];
        for (double v : phi.row(i)) csv << ',' << format_double(v);
        csv << '\n';
    }
}

int cmd_report(const ReportOptions& o, std::ostream& out) {
    require_exists(o.model, "model");
    if (o.bins < 1) throw std::invalid_argument("--bins must be >= 1");
    const LoadedData data = load_data_argument(o.data);
    const Checkpoint ckpt = load_checkpoint(o.model);
    check_compatible(ckpt.net, data.ds);

    LabeledDataset selected;
    if (o.split == "all") selected = data.ds;
    else selected = data.ds.subset(parse_split(o.split));
    if (selected.size() == 0) throw std::invalid_argument("no rows in split '" + o.split + "'");

    const fs::path dir = o.out;
    fs::create_directories(dir);
    {
        auto csv = open_output(dir / "accuracy.csv");
        csv << "level,split,accuracy,n_samples\n";
        for (std::size_t level : ckpt.net.block_levels)
            for (Split s : {Split::Train, Split::Test}) {
                const LabeledDataset part = data.ds.subset(s);
                if (part.size() == 0) continue;
                csv << level << ',' << to_string(s) << ',' << format_double(accuracy(ckpt.net, part, level))
                    << ',' << part.size() << '\n';
            }
    }

    const auto traces = stacked_forward(ckpt.net, selected.points);
    Rng rng(ckpt.seed);
    auto lip = open_output(dir / "lipschitz.csv");
    lip << "level,empirical_lipschitz,n_pairs\n";
    for (std::size_t k = 0; k < ckpt.net.blocks.size(); ++k) {
        const std::size_t level = ckpt.net.block_levels[k];
        const Matrix phi = o.identity ? selected.points : traces[k].representation();
        const auto labels = std::span<const int>(selected.labels[level]);
        const IsometryReport iso = isometry_report(selected.points, phi, labels);
        const bool last = k + 1 == ckpt.net.blocks.size();
        const std::string suffix = last ? "" : "_level" + std::to_string(level);
        {
            auto csv = open_output(dir / ("isometry" + suffix + ".csv"));
            write_isometry_csv(csv, iso);
        }
        {
            auto csv = open_output(dir / ("histograms" + suffix + ".csv"));
            write_histogram_csv(csv, distance_histograms(selected.points, phi, labels, o.bins));
        }
        write_embeddings(dir / ("embeddings" + suffix + ".csv"), selected, phi, level);
        const auto pairs = sample_same_class_pairs(labels, o.lipschitz_pairs, rng);
        lip << level << ',' << format_double(lipschitz_ratio(selected.points, phi, pairs)) << ','
            << pairs.size() << '\n';
        for (const auto& w : iso.warnings) out << "warning: " << w << "\n";
        for (const auto& c : iso.classes)
            out << "level " << level << " class " << c.label << ": pearson_r=" << format_double(c.pearson_r)
                << " mean_abs_residual=" << format_double(c.mean_abs_residual) << "\n";
    }
    out << "report written to " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Locally isometric layer training and robustness toolkit", "lil"};
    app.require_subcommand(1);

    GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a toy dataset as CSV");
    gen_cmd->add_option("--kind", gen.kind, "rings or torus")->required();
    gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();
    gen_cmd->add_option("--n", gen.n, "Points per ring (rings) or total points (torus)");
    gen_cmd->add_option("--noise", gen.noise, "Per-coordinate Gaussian noise variance");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--major-radius", gen.major_radius, "Torus R");
    gen_cmd->add_option("--minor-radius", gen.minor_radius, "Torus r");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train a network from an experiment config");
    train_cmd->add_option("--config", tr.config, "Experiment JSON")->required();
    train_cmd->add_option("--out", tr.out, "Checkpoint path (MODEL.json)")->required();
    train_cmd->add_option("--beta", tr.beta, "Override isometric weight (disables beta_sweep)");
    train_cmd->add_option("--epochs", tr.epochs, "Override epoch count");
    train_cmd->add_option("--seed", tr.seed, "Override training seed");
    train_cmd->add_flag("--verbose", tr.verbose, "Print loss every tenth of training");

    AttackOptions at;
    auto* attack_cmd = app.add_subcommand("attack", "Robust accuracy sweep under FGSM or PGD");
    attack_cmd->add_option("--model", at.model, "Checkpoint")->required();
    attack_cmd->add_option("--data", at.data, "Dataset CSV or experiment JSON")->required();
    attack_cmd->add_option("--kind", at.kind, "fgsm or pgd");
    attack_cmd->add_option("--sweep", at.sweep, "LO HI N: N log-spaced epsilons")->expected(3);
    attack_cmd->add_option("--eps", at.eps, "Explicit epsilon list")->delimiter(',');
    attack_cmd->add_option("--ball", at.ball, "PGD L-inf ball radius");
    attack_cmd->add_option("--steps", at.steps, "PGD step count");
    attack_cmd->add_option("--loss", at.loss, "combined or cse");
    attack_cmd->add_option("--max-samples", at.max_samples, "Attack only the first N test rows");
    attack_cmd->add_option("--batch", at.batch, "Attack batch size (isometric reference set)");
    attack_cmd->add_option("--clip-min", at.clip_min, "Lower input bound");
    attack_cmd->add_option("--clip-max", at.clip_max, "Upper input bound");
    attack_cmd->add_option("--out", at.out, "Output CSV")->required();

    ReportOptions rp;
    auto* report_cmd = app.add_subcommand("report", "Accuracy, isometry and distance histograms");
    report_cmd->add_option("--model", rp.model, "Checkpoint")->required();
    report_cmd->add_option("--data", rp.data, "Dataset CSV or experiment JSON")->required();
    report_cmd->add_option("--out", rp.out, "Output directory")->required();
    report_cmd->add_option("--bins", rp.bins, "Histogram bin count");
    report_cmd->add_option("--split", rp.split, "train, test or all");
    report_cmd->add_option("--lipschitz-pairs", rp.lipschitz_pairs, "Same-class pairs sampled");
    report_cmd->add_flag("--identity", rp.identity, "Diagnostic: use the inputs as the representation");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
        if (train_cmd->parsed()) return cmd_train(tr, out);
        if (attack_cmd->parsed()) return cmd_attack(at, out);
        if (report_cmd->parsed()) return cmd_report(rp, out);
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "invalid JSON: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace lil
