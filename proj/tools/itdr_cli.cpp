// Command-line driver: dataset generation, training, evaluation, single
// inverse-transform estimates, transform-set selection, and the scenario /
// orientation experiment reports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "itdr/itdr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--seed", args.seed, "Override the config's seed");
  auto* out = cmd->add_option("--out", args.out, "Output file or directory");
  if (out_required) out->required();
}

json load_config(const CommonArgs& args) {
  if (args.config_path.empty()) return json::object();
  std::ifstream in(args.config_path);
  if (!in) throw std::invalid_argument("cannot open config '" + args.config_path + "'");
  json j;
  in >> j;
  return j;
}

std::uint64_t run_seed(const json& cfg, const CommonArgs& args) {
  if (args.seed) return *args.seed;
  return cfg.value("master_seed", std::uint64_t{0});
}

itdr::Scenario config_scenario(const json& cfg) {
  return itdr::scenario_from_string(cfg.value("scenario", std::string("reference")));
}

itdr::RandomizationConfig config_randomization(const json& cfg) {
  itdr::RandomizationConfig rand;
  if (cfg.contains("randomization")) itdr::from_json_into(cfg.at("randomization"), rand);
  return rand;
}

itdr::NoiseOracle oracle_from_json(const json& j) {
  itdr::NoiseOracle oracle;
  oracle.sigma_pos = j.value("sigma_pos", 0.0);
  oracle.sigma_theta = j.value("sigma_theta", 0.0);
  oracle.amplification = j.value("amplification", 0.0);
  if (j.contains("bias")) {
    const auto& b = j.at("bias");
    if (!b.is_array() || b.size() != 3)
      throw std::invalid_argument("estimator.oracle.bias must be [x, y, theta]");
    oracle.bias_x = b[0].get<double>();
    oracle.bias_y = b[1].get<double>();
    oracle.bias_theta = b[2].get<double>();
  }
  oracle.seed = j.value("seed", std::uint64_t{0});
  oracle.validate();
  return oracle;
}

std::unique_ptr<itdr::PoseEstimator> make_estimator(const json& cfg, itdr::PoseMask mask) {
  if (!cfg.contains("estimator"))
    throw std::invalid_argument("config needs an \"estimator\" section");
  const json& e = cfg.at("estimator");
  const std::string kind = e.value("kind", std::string());
  if (kind == "model") {
    if (!e.contains("checkpoint"))
      throw std::invalid_argument("estimator.kind=model needs estimator.checkpoint");
    itdr::Model model = itdr::load_model(e.at("checkpoint").get<std::string>());
    return std::make_unique<itdr::ModelEstimator>(std::move(model), mask);
  }
  if (kind == "oracle")
    return std::make_unique<itdr::OracleEstimator>(oracle_from_json(e.value("oracle", json::object())));
  throw std::invalid_argument("estimator.kind must be \"model\" or \"oracle\"");
}

itdr::HarnessConfig harness_config(const json& cfg, const json& section, const CommonArgs& args) {
  itdr::HarnessConfig h;
  h.n_scenes = section.value("n_scenes", 500);
  h.policy = itdr::params_policy_from_string(section.value("policy", std::string("resampled")));
  h.randomization = config_randomization(cfg);
  h.image_size = cfg.value("image_size", 64);
  h.seed = run_seed(cfg, args);
  return h;
}

void print_report(const itdr::ReportTable& table) {
  auto cell = [](const std::optional<double>& v) {
    return v ? itdr::format_double(*v) : std::string("-");
  };
  std::cout << "condition          n     ex_m         ey_m         etheta_rad\n";
  for (const itdr::ReportRow& r : table.rows) {
    std::printf("%-18s %-5d %-12s %-12s %-12s\n", r.condition.c_str(), r.n,
                cell(r.mean.ex).c_str(), cell(r.mean.ey).c_str(), cell(r.mean.etheta).c_str());
  }
}

int cmd_generate(const CommonArgs& args) {
  json cfg = load_config(args);
  if (args.seed) cfg["master_seed"] = *args.seed;
  const itdr::DatasetConfig dataset_cfg = itdr::dataset_config_from_json(cfg);
  const itdr::Dataset ds = itdr::generate_dataset(dataset_cfg, args.out);
  std::cout << "wrote " << ds.items.size() << " images and manifest to " << args.out << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const json cfg = load_config(args);
  const json t = cfg.value("train", json::object());
  if (!t.contains("dataset"))
    throw std::invalid_argument("config needs train.dataset (path to a generated dataset)");
  const itdr::Dataset data = itdr::load_dataset(t.at("dataset").get<std::string>());

  itdr::ModelConfig arch;
  if (t.contains("arch")) {
    const json& a = t.at("arch");
    arch.input_size = a.value("input_size", 64);
    if (a.contains("conv_channels")) arch.conv_channels = a.at("conv_channels").get<std::vector<int>>();
    arch.fc_hidden = a.value("fc_hidden", 128);
  }
  arch.validate();

  itdr::TrainConfig train_cfg;
  train_cfg.learning_rate = t.value("learning_rate", train_cfg.learning_rate);
  train_cfg.momentum = t.value("momentum", train_cfg.momentum);
  train_cfg.batch_size = t.value("batch_size", train_cfg.batch_size);
  train_cfg.epochs = t.value("epochs", train_cfg.epochs);
  train_cfg.seed = args.seed ? *args.seed : t.value("seed", std::uint64_t{0});
  train_cfg.weight_init_scale = t.value("weight_init_scale", 1.0);
  train_cfg.validate();

  const itdr::Model initial =
      itdr::Model::init(arch, itdr::derive_seed(train_cfg.seed, 1), train_cfg.weight_init_scale);
  auto [model, log] = itdr::train(initial, data, train_cfg);

  fs::create_directories(args.out);
  itdr::save_model(model, fs::path(args.out) / "model.ckpt");
  log.write_csv(fs::path(args.out) / "trainlog.csv");
  if (!log.rows.empty())
    std::cout << "final epoch mean loss " << log.rows.back().mean_loss << "\n";
  std::cout << "checkpoint written to " << (fs::path(args.out) / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  const json cfg = load_config(args);
  const json e = cfg.value("eval", json::object());
  if (!e.contains("dataset"))
    throw std::invalid_argument("config needs eval.dataset (path to a generated dataset)");
  const itdr::Dataset data = itdr::load_dataset(e.at("dataset").get<std::string>());
  if (data.items.empty()) throw std::runtime_error("evaluate: dataset is empty");
  const auto estimator = make_estimator(cfg, data.items.front().pose.mask);
  const itdr::ErrorReport report = itdr::evaluate(*estimator, data);

  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + args.out + "'");
  out << "index,ex_m,ey_m,etheta_rad\n";
  for (const itdr::EvalRecord& r : report.records) {
    out << r.index << ',' << (r.error.ex ? itdr::format_double(*r.error.ex) : "") << ','
        << (r.error.ey ? itdr::format_double(*r.error.ey) : "") << ','
        << (r.error.etheta ? itdr::format_double(*r.error.etheta) : "") << "\n";
  }
  auto cell = [](const std::optional<double>& v) {
    return v ? itdr::format_double(*v) : std::string("-");
  };
  std::cout << "n " << report.n << "  mean ex " << cell(report.mean.ex) << "  mean ey "
            << cell(report.mean.ey) << "  mean etheta " << cell(report.mean.etheta) << "\n";
  return 0;
}

int cmd_itdr(const CommonArgs& args) {
  const json cfg = load_config(args);
  const json section = cfg.value("itdr", json::object());
  const itdr::Scenario scenario = config_scenario(cfg);
  const itdr::ScenarioSpec spec = itdr::ScenarioSpec::preset(scenario);
  const std::uint64_t seed = run_seed(cfg, args);
  const itdr::Scene scene =
      itdr::sample_scene(scenario, section.value("scene_seed", itdr::derive_seed(seed, 1)));
  const std::string condition = section.value("condition", spec.conditions.back());
  const itdr::TransformSet ts = itdr::condition_transform_set(spec, condition, scene);
  const auto estimator = make_estimator(cfg, spec.mask);
  const auto policy =
      itdr::params_policy_from_string(section.value("policy", std::string("resampled")));
  const itdr::FusionTrace trace =
      itdr::itdr_estimate(*estimator, scene, ts, policy, config_randomization(cfg), seed,
                          cfg.value("image_size", 64));
  const json doc = itdr::to_json(trace);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + args.out + "'");
  out << doc.dump(2) << "\n";
  const itdr::ErrorVector err = itdr::pose_error(*trace.truth, trace.fused);
  std::cout << "condition " << condition << "  captures " << trace.captures.size() << "  fused ("
            << trace.fused.x << ", " << trace.fused.y << ", " << trace.fused.theta << ")\n";
  if (err.ex) std::cout << "ex " << *err.ex << (err.ey ? "  ey " + itdr::format_double(*err.ey) : "")
                        << (err.etheta ? "  etheta " + itdr::format_double(*err.etheta) : "") << "\n";
  return 0;
}

int cmd_select(const CommonArgs& args) {
  const json cfg = load_config(args);
  const json section = cfg.value("select", json::object());
  const itdr::Scenario scenario = config_scenario(cfg);
  if (scenario != itdr::Scenario::Reference)
    throw std::invalid_argument("select currently supports the reference scenario pool");
  const std::uint64_t seed = run_seed(cfg, args);
  const int n_scenes = section.value("n_scenes", 100);
  std::vector<itdr::Scene> scenes(n_scenes);
  for (int i = 0; i < n_scenes; ++i)
    scenes[i] = itdr::sample_scene(scenario, itdr::derive_seed(seed, 500000 + i));
  const itdr::CandidatePool pool = itdr::reference_corner_pool(scenes.front());
  pool.validate(scenes.front());

  const auto estimator = make_estimator(cfg, itdr::PoseMask::all());
  const auto policy =
      itdr::params_policy_from_string(section.value("policy", std::string("resampled")));
  const int subset_size = section.value("subset_size", 2);
  const double weight = section.value("etheta_weight", itdr::kDefaultEthetaWeight);
  const std::string mode = section.value("mode", std::string("exhaustive"));
  itdr::SelectionReport report;
  if (mode == "exhaustive") {
    report = itdr::exhaustive_select(pool, subset_size, *estimator, scenes,
                                     config_randomization(cfg), policy, seed, weight,
                                     cfg.value("image_size", 64));
  } else if (mode == "greedy") {
    report = itdr::greedy_select(pool, subset_size, *estimator, scenes, config_randomization(cfg),
                                 policy, seed, weight, cfg.value("image_size", 64));
  } else {
    throw std::invalid_argument("select.mode must be \"exhaustive\" or \"greedy\"");
  }
  report.write_csv(args.out);
  std::cout << "evaluated " << report.evaluated.size() << " subsets; chosen "
            << report.chosen_subset().name << " (scalar "
            << itdr::format_double(report.chosen_subset().scalar) << ")\n";
  return 0;
}

int cmd_scenario(const CommonArgs& args) {
  const json cfg = load_config(args);
  const itdr::Scenario scenario = config_scenario(cfg);
  const itdr::ScenarioSpec spec = itdr::ScenarioSpec::preset(scenario);
  const itdr::HarnessConfig h = harness_config(cfg, cfg.value("harness", json::object()), args);
  const auto estimator = make_estimator(cfg, spec.mask);
  const itdr::ReportTable table = itdr::run_scenario(spec, *estimator, h, args.out);
  print_report(table);
  std::cout << "report written to " << (fs::path(args.out) / "report.csv").string() << "\n";
  return 0;
}

int cmd_orientation(const CommonArgs& args) {
  const json cfg = load_config(args);
  const json section = cfg.value("orientation", json::object());
  const itdr::Scenario scenario = config_scenario(cfg);
  const itdr::ScenarioSpec spec = itdr::ScenarioSpec::preset(scenario);
  const itdr::HarnessConfig h = harness_config(cfg, section, args);
  const auto estimator = make_estimator(cfg, spec.mask);
  const int bins = section.value("bins", 12);
  const itdr::OrientationTable table = itdr::error_vs_orientation(spec, *estimator, h, bins);
  table.write_csv(args.out);
  std::cout << "orientation table (" << bins << " bins) written to " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse-transform domain randomization toolkit"};
  app.require_subcommand(1);

  CommonArgs generate_args, train_args, eval_args, itdr_args, select_args, scenario_args,
      orientation_args;
  add_common(app.add_subcommand("generate", "Render a domain-randomized dataset"), generate_args);
  add_common(app.add_subcommand("train", "Train the pose regressor on a dataset"), train_args);
  add_common(app.add_subcommand("evaluate", "Single-image evaluation over a dataset"), eval_args);
  add_common(app.add_subcommand("itdr", "One multi-capture fused estimate"), itdr_args);
  add_common(app.add_subcommand("select", "Evaluate and rank transform subsets"), select_args);
  add_common(app.add_subcommand("scenario", "Run a full scenario report"), scenario_args);
  add_common(app.add_subcommand("orientation", "Error vs. orientation table"), orientation_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("generate")) return cmd_generate(generate_args);
    if (app.got_subcommand("train")) return cmd_train(train_args);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(eval_args);
    if (app.got_subcommand("itdr")) return cmd_itdr(itdr_args);
    if (app.got_subcommand("select")) return cmd_select(select_args);
    if (app.got_subcommand("scenario")) return cmd_scenario(scenario_args);
    if (app.got_subcommand("orientation")) return cmd_orientation(orientation_args);
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    const nlohmann::json err = {{"error", e.what()}, {"type", typeid(e).name()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
}
