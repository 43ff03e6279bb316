// baroid command line: data generation, training, testing, verification and
// report merging for the barodesy parameter identification pipeline.
//
// Exit codes: 0 success, 2 usage, 3 data/format error, 4 numerical failure.

#include "baroid/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "config file of key = value lines");
  cmd->add_option("--set", flags.overrides, "override a single config key (key=value)")
      ->type_name("KEY=VALUE");
}

baroid::PipelineConfig resolve_config(const CommonFlags& flags) {
  baroid::PipelineConfig config;
  if (!flags.config_path.empty()) baroid::load_config_file(config, flags.config_path);
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw baroid::UsageError("--set expects key=value, got " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"barodesy oedometric element test and PCA-NN parameter identification"};
  app.require_subcommand(1);

  // ---- gen ----
  CommonFlags gen_flags;
  std::string gen_out;
  baroid::Index gen_n = -1;
  std::int64_t gen_seed = -1;
  baroid::Index gen_workers = -1;
  auto* gen = app.add_subcommand("gen", "generate a labeled parameters-stress dataset");
  add_common(gen, gen_flags);
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--workers", gen_workers, "worker threads for forward runs");

  // ---- train ----
  CommonFlags train_flags;
  std::string train_dataset, train_out, train_history;
  std::int64_t train_seed = -1;
  baroid::Index train_epochs = -1;
  bool no_scaling = false;
  auto* train = app.add_subcommand("train", "fit PCA and train the identification network");
  add_common(train, train_flags);
  train->add_option("--dataset", train_dataset, "input dataset path")->required();
  train->add_option("--out", train_out, "output checkpoint path")->required();
  train->add_option("--history", train_history, "loss history csv path");
  train->add_option("--seed", train_seed, "rng seed");
  train->add_option("--epochs", train_epochs, "training epochs");
  train->add_flag("--no-scaling", no_scaling, "train on raw (unscaled) parameters");

  // ---- test ----
  CommonFlags test_flags;
  std::string test_dataset, test_ckpt, test_report, test_pred;
  auto* test = app.add_subcommand("test", "evaluate a checkpoint on the held-out split");
  add_common(test, test_flags);
  test->add_option("--dataset", test_dataset, "input dataset path")->required();
  test->add_option("--checkpoint", test_ckpt, "checkpoint path")->required();
  test->add_option("--report", test_report, "metrics report csv path");
  test->add_option("--predictions", test_pred, "predicted-vs-truth csv path");

  // ---- verify ----
  CommonFlags verify_flags;
  std::string verify_dataset, verify_ckpt, verify_prefix;
  baroid::Index verify_n = -1;
  std::string verify_norm;
  bool verify_oracle = false;
  auto* verify = app.add_subcommand(
      "verify", "re-run the forward model on identified parameters and compare stresses");
  add_common(verify, verify_flags);
  verify->add_option("--dataset", verify_dataset, "input dataset path")->required();
  verify->add_option("--checkpoint", verify_ckpt, "checkpoint path")->required();
  verify->add_option("--out", verify_prefix, "output prefix for overlay/error csvs")->required();
  verify->add_option("--samples", verify_n, "number of held-out samples to verify");
  verify->add_option("--rel-norm", verify_norm, "summary error norm: literal or global")
      ->check(CLI::IsMember({"literal", "global"}));
  verify->add_flag("--oracle", verify_oracle,
                   "replay ground-truth parameters instead of predictions (consistency check)");

  // ---- report ----
  std::vector<std::string> report_manifests;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge run manifests into a metrics table");
  report->add_option("--out", report_out, "output csv path")->required();
  report->add_option("manifests", report_manifests, "manifest files to merge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      baroid::PipelineConfig config = resolve_config(gen_flags);
      if (gen_n >= 0) config.n_samples = gen_n;
      if (gen_seed >= 0) config.seed = static_cast<std::uint64_t>(gen_seed);
      if (gen_workers >= 0) config.workers = gen_workers;
      const auto result = baroid::run_gen(config, gen_out);
      std::printf("wrote %s: n=%lld d=%lld rejections=%lld seed=%llu\n",
                  result.dataset_path.c_str(), static_cast<long long>(result.n),
                  static_cast<long long>(result.n_steps),
                  static_cast<long long>(result.rejections),
                  static_cast<unsigned long long>(config.seed));
    } else if (train->parsed()) {
      baroid::PipelineConfig config = resolve_config(train_flags);
      if (train_seed >= 0) config.seed = static_cast<std::uint64_t>(train_seed);
      if (train_epochs >= 0) config.train.epochs = train_epochs;
      if (no_scaling) config.scaling = baroid::ScalingMode::kOff;
      if (train_history.empty()) train_history = train_out + ".history.csv";
      const auto result = baroid::run_train(config, train_dataset, train_out, train_history);
      std::printf("wrote %s (history %s): n_train=%lld n_test=%lld final train loss %.6g, "
                  "final test loss %.6g\n",
                  result.checkpoint_path.c_str(), result.history_path.c_str(),
                  static_cast<long long>(result.n_train), static_cast<long long>(result.n_test),
                  result.final_train_loss, result.final_test_loss);
    } else if (test->parsed()) {
      baroid::PipelineConfig config = resolve_config(test_flags);
      if (test_report.empty()) test_report = test_ckpt + ".test_report.csv";
      if (test_pred.empty()) test_pred = test_ckpt + ".predictions.csv";
      const auto result =
          baroid::run_test_stage(config, test_dataset, test_ckpt, test_report, test_pred);
      std::printf("test loss %.6g over %lld held-out samples\n", result.avg_loss,
                  static_cast<long long>(result.n_test));
      for (int j = 0; j < 7; ++j) {
        std::printf("  %-3s %.6g\n", baroid::kParamNames[j], result.per_param[j]);
      }
    } else if (verify->parsed()) {
      baroid::PipelineConfig config = resolve_config(verify_flags);
      if (verify_n >= 0) config.verify_samples = verify_n;
      if (!verify_norm.empty()) config.rel_norm = verify_norm;
      config.verify_use_truth = verify_oracle;
      const auto result = baroid::run_verify(config, verify_dataset, verify_ckpt, verify_prefix);
      std::printf("verification over %zu samples (%lld diverged): "
                  "E literal %.6g, E global %.6g [summary norm: %s -> %.6g]\n",
                  result.samples.size(), static_cast<long long>(result.n_diverged),
                  result.avg_literal, result.avg_global, config.rel_norm.c_str(),
                  result.average(config.rel_norm));
    } else if (report->parsed()) {
      baroid::run_report(report_manifests, report_out);
      std::printf("wrote %s from %zu manifest(s)\n", report_out.c_str(),
                  report_manifests.size());
    }
  } catch (const baroid::UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const baroid::FormatError& ex) {
    std::cerr << "format error: " << ex.what() << '\n';
    return kExitData;
  } catch (const baroid::IoError& ex) {
    std::cerr << "io error: " << ex.what() << '\n';
    return kExitData;
  } catch (const baroid::Diverged& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const baroid::NonFiniteLoss& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const baroid::TooManyRejections& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const baroid::Error& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitData;
  }
  return 0;
}
