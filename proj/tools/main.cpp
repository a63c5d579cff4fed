#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fruitgrasp/bench.hpp"
#include "fruitgrasp/config.hpp"
#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/kernels.hpp"
#include "fruitgrasp/rng.hpp"

namespace fs = std::filesystem;
using namespace fruitgrasp;

namespace {

AppConfig load_optional_config(const std::string& path) {
  if (path.empty()) return AppConfig{};
  return load_config(path);
}

struct SplitSizes {
  int train = 0, val = 0, test = 0;
};

SplitSizes parse_split(const std::string& s) {
  SplitSizes out;
  if (std::sscanf(s.c_str(), "%d/%d/%d", &out.train, &out.val, &out.test) != 3 ||
      out.train < 0 || out.val < 0 || out.test < 0)
    throw ConfigError("--split must look like 300/50/220");
  return out;
}

std::vector<synth::Condition> parse_conditions(const std::string& csv) {
  if (csv == "all") return synth::all_conditions();
  std::vector<synth::Condition> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!tok.empty()) out.push_back(synth::condition_from_string(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("--conditions is empty");
  return out;
}

std::vector<bench::Method> parse_methods(const std::string& csv) {
  if (csv == "all") return bench::all_methods();
  std::vector<bench::Method> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!tok.empty()) out.push_back(bench::method_from_string(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("--methods is empty");
  return out;
}

int cmd_gen(const std::string& config_path, int count, const std::string& split,
            std::uint64_t seed, const std::string& out_dir, const std::string& condition) {
  const AppConfig cfg = load_optional_config(config_path);
  auto samples = synth::generate_dataset(cfg.gen, count, seed);
  if (condition != "normal") {
    const auto cond = synth::condition_from_string(condition);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::mt19937_64 rng(derive_seed(seed, 0xC0, i));
      samples[i] = synth::corrupt(samples[i], cfg.gen, cond, rng);
    }
  }
  fs::create_directories(out_dir);
  if (split.empty()) {
    synth::write_dataset(samples, fs::path(out_dir) / "dataset.jsonl");
    std::cout << "wrote " << samples.size() << " samples to " << out_dir << "/dataset.jsonl\n";
    return 0;
  }
  const SplitSizes sizes = parse_split(split);
  if (sizes.train + sizes.val + sizes.test != count)
    throw ConfigError("--split sizes must sum to --count");
  const auto begin = samples.begin();
  synth::write_dataset({begin, begin + sizes.train}, fs::path(out_dir) / "train.jsonl");
  synth::write_dataset({begin + sizes.train, begin + sizes.train + sizes.val},
                       fs::path(out_dir) / "val.jsonl");
  synth::write_dataset({begin + sizes.train + sizes.val, samples.end()},
                       fs::path(out_dir) / "test.jsonl");
  std::cout << "wrote " << sizes.train << "/" << sizes.val << "/" << sizes.test
            << " samples to " << out_dir << "/{train,val,test}.jsonl\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              std::optional<int> epochs, std::uint64_t seed, const std::string& checkpoint_out,
              bool no_augment) {
  AppConfig cfg = load_optional_config(config_path);
  if (epochs) cfg.train.epochs = *epochs;

  const auto train_raw = synth::read_dataset(fs::path(data_dir) / "train.jsonl");
  std::vector<synth::LabeledSample> val_raw;
  if (fs::exists(fs::path(data_dir) / "val.jsonl"))
    val_raw = synth::read_dataset(fs::path(data_dir) / "val.jsonl");

  const auto train_set =
      bench::prepare_training_set(train_raw, cfg, !no_augment, derive_seed(seed, 1));
  const auto val_set = bench::prepare_training_set(val_raw, cfg, false, derive_seed(seed, 2));
  std::cout << "training tensors: " << train_set.samples.size() << " (skipped "
            << train_set.skipped << "), validation: " << val_set.samples.size() << '\n';

  std::mt19937_64 rng(derive_seed(seed, 3));
  auto model = nn::RegressorModel::init(cfg.model, rng);
  const auto result = nn::train(model, train_set.samples, val_set.samples, cfg.train.epochs,
                                cfg.train.batch_size, cfg.train.adam, rng);
  for (std::size_t e = 0; e < result.train_loss.size(); ++e)
    std::cout << "epoch " << e << "  train " << result.train_loss[e] << "  val "
              << result.val_loss[e] << '\n';

  nlohmann::json provenance{{"seed", seed},
                            {"config", config_to_json(cfg)},
                            {"train_samples", train_set.samples.size()},
                            {"val_samples", val_set.samples.size()}};
  if (!result.train_loss.empty()) {
    provenance["final_train_loss"] = result.train_loss.back();
    provenance["final_val_loss"] = result.val_loss.back();
  }
  nn::save_checkpoint(model, checkpoint_out, provenance);
  std::cout << "checkpoint written to " << checkpoint_out << '\n';
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& method_name,
            const std::string& input, const std::string& checkpoint, std::uint64_t seed,
            const std::string& out_path) {
  const AppConfig cfg = load_optional_config(config_path);
  const auto method = bench::method_from_string(method_name);
  std::optional<nn::RegressorModel> model;
  if (method == bench::Method::pointnet) {
    if (checkpoint.empty()) throw ConfigError("--method pointnet requires --checkpoint");
    model = nn::load_checkpoint(checkpoint).model;
  }
  const auto samples = synth::read_dataset(input);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw IoError("cannot open for writing: " + out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto pred = bench::run_method(method, model ? &*model : nullptr, samples[i].points,
                                        cfg, derive_seed(seed, 0xF1, i));
    nlohmann::json j{{"index", i}, {"method", method_name}};
    if (pred.failure != bench::FailureKind::none) j["failure"] = to_string(pred.failure);
    if (pred.sphere) {
      j["center"] = {pred.sphere->center.x, pred.sphere->center.y, pred.sphere->center.z};
      j["radius"] = pred.sphere->radius;
      j["iou_3d"] = geom::iou_3d(geom::sphere_aabb(*pred.sphere),
                                 geom::sphere_aabb(samples[i].sphere));
    }
    if (pred.pose) {
      j["theta"] = pred.pose->theta;
      j["phi"] = pred.pose->phi;
      geom::GraspPose gt{samples[i].sphere.center, samples[i].theta, samples[i].phi};
      j["orientation_error_deg"] = geom::orientation_error_deg(*pred.pose, gt);
    }
    *out << j.dump() << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& data, const std::string& checkpoint,
              const std::string& conditions_csv, const std::string& methods_csv,
              std::uint64_t seed, const std::string& report_out, int timing_reps) {
  const AppConfig cfg = load_optional_config(config_path);
  const auto conditions = parse_conditions(conditions_csv);
  const auto methods = parse_methods(methods_csv);

  fs::path data_path(data);
  if (fs::is_directory(data_path)) data_path /= "test.jsonl";
  const auto samples = synth::read_dataset(data_path);

  std::optional<nn::RegressorModel> model;
  for (auto m : methods)
    if (m == bench::Method::pointnet) {
      if (checkpoint.empty()) throw ConfigError("pointnet in --methods requires --checkpoint");
      model = nn::load_checkpoint(checkpoint).model;
    }

  const auto report =
      bench::run_suite(samples, methods, conditions, model ? &*model : nullptr, cfg, seed);
  std::cout << bench::render_text(report);
  if (!report_out.empty()) {
    bench::save_report(report, report_out);
    std::cout << "report written to " << report_out << '\n';
  }

  if (timing_reps > 0) {
    std::cout << "\nper-cloud latency (ms), " << timing_reps << " repetitions:\n";
    for (auto m : methods) {
      std::uint64_t cloud_idx = 0;
      const auto stats = bench::timing_probe(
          [&](const std::vector<geom::Point3>& cloud) {
            bench::run_method(m, model ? &*model : nullptr, cloud, cfg,
                              derive_seed(seed, 0x71, cloud_idx++));
          },
          samples, timing_reps);
      std::cout << to_string(m) << "  mean " << stats.mean_ms << "  median " << stats.median_ms
                << "  p95 " << stats.p95_ms << "  (" << stats.count << " measurements)\n";
    }
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format) {
  const auto report = bench::load_report(in_path);
  if (format == "text") {
    std::cout << bench::render_text(report);
  } else if (format == "structured") {
    std::cout << bench::render_structured(report).dump(1) << '\n';
  } else {
    throw ConfigError("--format must be text or structured");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp-pose estimation toolkit for spherical fruit point clouds"};
  app.require_subcommand(1);

  std::string kernels_backend = "auto";
  app.add_option("--kernels", kernels_backend, "Kernel backend: auto|scalar|avx2");

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen", "Generate a labeled synthetic dataset");
  int gen_count = 570;
  std::string gen_split = "300/50/220";
  std::uint64_t gen_seed = 7;
  std::string gen_out;
  std::string gen_condition = "normal";
  gen->add_option("--count", gen_count, "Total samples")->check(CLI::PositiveNumber);
  gen->add_option("--split", gen_split, "train/val/test sizes; empty for one file");
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--condition", gen_condition, "Pre-corrupt with a condition");

  auto* train = app.add_subcommand("train", "Train the grasp regressor");
  std::string train_data;
  std::optional<int> train_epochs;
  std::uint64_t train_seed = 1;
  std::string checkpoint_out;
  bool no_augment = false;
  train->add_option("--data", train_data, "Dataset directory (train.jsonl, val.jsonl)")->required();
  train->add_option("--epochs", train_epochs, "Override the configured epoch count");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--checkpoint-out", checkpoint_out, "Checkpoint path")->required();
  train->add_flag("--no-augment", no_augment, "Train on the raw samples only");

  auto* fit = app.add_subcommand("fit", "Fit spheres/poses for every cloud in a dataset file");
  std::string fit_method;
  std::string fit_input;
  std::string fit_checkpoint;
  std::uint64_t fit_seed = 1;
  std::string fit_out;
  fit->add_option("--method", fit_method, "pointnet|ransac|hough")->required();
  fit->add_option("--input", fit_input, "Dataset file (JSON lines)")->required();
  fit->add_option("--checkpoint", fit_checkpoint, "Checkpoint for the pointnet method");
  fit->add_option("--seed", fit_seed, "Per-cloud rng seed base");
  fit->add_option("--out", fit_out, "Write results here instead of stdout");

  auto* bench_cmd = app.add_subcommand("bench", "Run the condition-matrix benchmark suite");
  std::string bench_data;
  std::string bench_checkpoint;
  std::string bench_conditions = "all";
  std::string bench_methods = "all";
  std::uint64_t bench_seed = 9;
  std::string report_out;
  int timing_reps = 0;
  bench_cmd->add_option("--data", bench_data, "Dataset directory or test file")->required();
  bench_cmd->add_option("--checkpoint", bench_checkpoint, "Checkpoint for the pointnet method");
  bench_cmd->add_option("--conditions", bench_conditions, "Comma list or 'all'");
  bench_cmd->add_option("--methods", bench_methods, "Comma list or 'all'");
  bench_cmd->add_option("--seed", bench_seed, "Suite seed");
  bench_cmd->add_option("--report-out", report_out, "Structured report path");
  bench_cmd->add_option("--timing-reps", timing_reps, "Latency probe repetitions (not in report)");

  auto* report_cmd = app.add_subcommand("report", "Render a stored report");
  std::string report_in;
  std::string report_format = "text";
  report_cmd->add_option("--in", report_in, "Report file")->required();
  report_cmd->add_option("--format", report_format, "text|structured");

  CLI11_PARSE(app, argc, argv);

  try {
    kernels::force_backend(kernels_backend);
    if (gen->parsed())
      return cmd_gen(config_path, gen_count, gen_split, gen_seed, gen_out, gen_condition);
    if (train->parsed())
      return cmd_train(config_path, train_data, train_epochs, train_seed, checkpoint_out,
                       no_augment);
    if (fit->parsed())
      return cmd_fit(config_path, fit_method, fit_input, fit_checkpoint, fit_seed, fit_out);
    if (bench_cmd->parsed())
      return cmd_bench(config_path, bench_data, bench_checkpoint, bench_conditions, bench_methods,
                       bench_seed, report_out, timing_reps);
    if (report_cmd->parsed()) return cmd_report(report_in, report_format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
