#pragma once

#include "baroid/datagen.hpp"
#include "baroid/element_test.hpp"
#include "baroid/io.hpp"
#include "baroid/nn.hpp"
#include "baroid/pca.hpp"
#include "baroid/types.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace baroid {

enum class ScalingMode { kOn, kOff, kMinMax };

inline const char* scaling_mode_name(ScalingMode m) {
  switch (m) {
    case ScalingMode::kOn: return "on";
    case ScalingMode::kOff: return "off";
    case ScalingMode::kMinMax: return "minmax";
  }
  return "unknown";
}

/// Resolved configuration of a pipeline run.  Defaults reproduce the
/// reference setup; a config file of `key = value` lines and CLI flags
/// override individual entries.
struct PipelineConfig {
  // forward model
  LoadingSchedule schedule;
  InitialState init;
  bool literal_c2_bounds = false;

  // data generation
  Index n_samples = 1000;
  std::uint64_t seed = 1;
  Index workers = 1;
  Scalar train_fraction = 0.75;

  // reduction
  Index pca_k = 50;
  Index pca_oversampling = 10;
  Index pca_power_iters = 2;
  bool pca_centered = true;

  // network
  TrainConfig train;
  ScalingMode scaling = ScalingMode::kOn;

  // verification
  Index verify_samples = 4;
  std::string rel_norm = "literal";  // which E variant the summary quotes
  bool verify_use_truth = false;     // diagnostic: feed ground-truth parameters

  ParamBounds bounds() const {
    return literal_c2_bounds ? ParamBounds::literal_table() : ParamBounds();
  }

  PcaOptions pca_options() const {
    PcaOptions o;
    o.oversampling = pca_oversampling;
    o.power_iters = pca_power_iters;
    o.seed = seed;
    o.centered = pca_centered;
    return o;
  }

  void set(const std::string& key, const std::string& value);
  void snapshot(Container& manifest) const;
};

namespace detail {

inline Scalar parse_scalar(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const Scalar v = std::strtod(value.c_str(), &end);
  if (end == value.c_str()) throw UsageError("config key '" + key + "': bad number '" + value + "'");
  return v;
}

inline Index parse_index(const std::string& key, const std::string& value) {
  return static_cast<Index>(parse_scalar(key, value));
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw UsageError("config key '" + key + "': bad boolean '" + value + "'");
}

}  // namespace detail

inline void PipelineConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_index;
  using detail::parse_scalar;
  if (key == "piston_rate") schedule.piston_rate = parse_scalar(key, value);
  else if (key == "sample_height") schedule.sample_height = parse_scalar(key, value);
  else if (key == "dt") schedule.dt = parse_scalar(key, value);
  else if (key == "n_steps") schedule.n_steps = parse_index(key, value);
  else if (key == "loading_fraction") schedule.loading_fraction = parse_scalar(key, value);
  else if (key == "substeps") schedule.substeps = parse_index(key, value);
  else if (key == "isotropic_stress") init.isotropic_stress = parse_scalar(key, value);
  else if (key == "void_ratio") init.void_ratio = parse_scalar(key, value);
  else if (key == "literal_c2_bounds") literal_c2_bounds = parse_bool(key, value);
  else if (key == "n_samples") n_samples = parse_index(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
  else if (key == "workers") workers = parse_index(key, value);
  else if (key == "train_fraction") train_fraction = parse_scalar(key, value);
  else if (key == "pca_k") pca_k = parse_index(key, value);
  else if (key == "pca_oversampling") pca_oversampling = parse_index(key, value);
  else if (key == "pca_power_iters") pca_power_iters = parse_index(key, value);
  else if (key == "pca_centered") pca_centered = parse_bool(key, value);
  else if (key == "learning_rate") train.learning_rate = parse_scalar(key, value);
  else if (key == "batch_size") train.batch_size = parse_index(key, value);
  else if (key == "epochs") train.epochs = parse_index(key, value);
  else if (key == "lr_decay_epochs") train.lr_decay_epochs = parse_index(key, value);
  else if (key == "patience") {
    const Index p = parse_index(key, value);
    if (p > 0) train.patience = p;
    else train.patience.reset();
  }
  else if (key == "activation") train.activation = activation_from_name(value);
  else if (key == "scaling") {
    if (value == "minmax") scaling = ScalingMode::kMinMax;
    else scaling = parse_bool(key, value) ? ScalingMode::kOn : ScalingMode::kOff;
  }
  else if (key == "verify_samples") verify_samples = parse_index(key, value);
  else if (key == "rel_norm") {
    if (value != "literal" && value != "global") {
      throw UsageError("rel_norm must be 'literal' or 'global'");
    }
    rel_norm = value;
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

inline void PipelineConfig::snapshot(Container& m) const {
  m.set_scalar("config.piston_rate", schedule.piston_rate);
  m.set_scalar("config.sample_height", schedule.sample_height);
  m.set_scalar("config.dt", schedule.dt);
  m.set_int("config.n_steps", schedule.n_steps);
  m.set_scalar("config.loading_fraction", schedule.loading_fraction);
  m.set_int("config.substeps", schedule.substeps);
  m.set_scalar("config.isotropic_stress", init.isotropic_stress);
  m.set_scalar("config.void_ratio", init.void_ratio);
  m.set_int("config.literal_c2_bounds", literal_c2_bounds ? 1 : 0);
  m.set_int("config.n_samples", n_samples);
  m.set_uint("config.seed", seed);
  m.set_int("config.workers", workers);
  m.set_scalar("config.train_fraction", train_fraction);
  m.set_int("config.pca_k", pca_k);
  m.set_int("config.pca_oversampling", pca_oversampling);
  m.set_int("config.pca_power_iters", pca_power_iters);
  m.set_int("config.pca_centered", pca_centered ? 1 : 0);
  m.set_scalar("config.learning_rate", train.learning_rate);
  m.set_int("config.batch_size", train.batch_size);
  m.set_int("config.epochs", train.epochs);
  m.set_int("config.lr_decay_epochs", train.lr_decay_epochs);
  m.set_int("config.patience", train.patience.value_or(0));
  m.set("config.activation", activation_name(train.activation));
  m.set("config.scaling", scaling_mode_name(scaling));
  m.set_int("config.verify_samples", verify_samples);
  m.set("config.rel_norm", rel_norm);
}

/// Reads `key = value` lines (blank lines and '#' comments allowed) into the
/// config.  Unknown keys are usage errors so typos fail loudly.
inline void load_config_file(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& ex) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

namespace detail {

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  Scalar seconds() const {
    return std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void write_manifest(Container& m, const PipelineConfig& config, const std::string& stage,
                           const std::string& path) {
  m.set("kind", "manifest");
  m.set("stage", stage);
  config.snapshot(m);
  m.write(path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenResult {
  std::string dataset_path;
  Index n = 0;
  Index n_steps = 0;
  Index rejections = 0;
};

inline GenResult run_gen(const PipelineConfig& config, const std::string& out_path) {
  detail::StageTimer timer;
  const Dataset ds = generate_dataset(config.n_samples, config.bounds(), config.init,
                                      config.schedule, config.seed, config.workers);
  save_dataset(ds, out_path);

  Container m;
  m.set("output.dataset", out_path);
  m.set("output.dataset_digest", file_digest(out_path));
  m.set_int("metric.n_samples", ds.size());
  m.set_int("metric.n_steps", ds.n_steps());
  m.set_int("metric.rejections", ds.rejections);
  m.set_scalar("timing.gen_seconds", timer.seconds());
  detail::write_manifest(m, config, "gen", out_path + ".manifest");

  return GenResult{out_path, ds.size(), ds.n_steps(), ds.rejections};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainStageResult {
  std::string checkpoint_path;
  std::string history_path;
  Scalar final_train_loss = 0.0;
  Scalar final_test_loss = 0.0;
  Vec7 initial_test_per_param = Vec7::Zero();
  Vec7 final_test_per_param = Vec7::Zero();
  Index n_train = 0;
  Index n_test = 0;
};

/// Fits PCA on the training split, trains the network on scaled targets and
/// writes the bundled checkpoint plus the per-epoch loss history.
inline TrainStageResult run_train(const PipelineConfig& config, const std::string& dataset_path,
                                  const std::string& checkpoint_path,
                                  const std::string& history_path) {
  detail::StageTimer timer;
  const Dataset ds = load_dataset(dataset_path);
  const std::string dataset_digest = file_digest(dataset_path);

  const auto [train_ds, test_ds] = split_dataset(ds, config.train_fraction);
  if (train_ds.size() < 1 || test_ds.size() < 1) {
    throw InvalidParams("split leaves an empty train or test set");
  }

  const PcaModel pca = fit_pca(train_ds.series_matrix(), config.pca_k, config.pca_options());

  const ParamScaler scaler = [&] {
    switch (config.scaling) {
      case ScalingMode::kOff: return ParamScaler::ones();
      case ScalingMode::kMinMax: return ParamScaler::minmax(ds.bounds.lower, ds.bounds.upper);
      case ScalingMode::kOn: break;
    }
    return ParamScaler();
  }();
  const auto prepare = [&](const Dataset& part, Mat& inputs, Mat& targets) {
    inputs = pca_transform_rows(pca, part.series_matrix()).transpose();  // k x n
    targets.resize(7, part.size());
    for (Index i = 0; i < part.size(); ++i) {
      targets.col(i) = scaler.apply(part.samples[static_cast<std::size_t>(i)].params.vector());
    }
  };
  Mat train_in, train_tg, test_in, test_tg;
  prepare(train_ds, train_in, train_tg);
  prepare(test_ds, test_in, test_tg);

  TrainConfig tc = config.train;
  tc.seed = config.seed;
  if (!tc.layer_sizes.empty()) tc.layer_sizes.front() = config.pca_k;
  TrainResult trained = train_fcn(train_in, train_tg, test_in, test_tg, tc);
  trained.history.write_csv(history_path);

  Checkpoint ckpt;
  ckpt.pca = pca;
  ckpt.fcn = std::move(trained.model);
  ckpt.scaler = scaler;
  ckpt.seed = config.seed;
  ckpt.dataset_digest = dataset_digest;
  ckpt.n_train = train_ds.size();
  save_checkpoint(ckpt, checkpoint_path);

  TrainStageResult result;
  result.checkpoint_path = checkpoint_path;
  result.history_path = history_path;
  result.final_train_loss = trained.history.train_avg.back();
  result.final_test_loss = trained.history.test_avg.back();
  result.initial_test_per_param = Vec7(trained.history.test_per_param.front());
  result.final_test_per_param = Vec7(trained.history.test_per_param.back());
  result.n_train = train_ds.size();
  result.n_test = test_ds.size();

  Container m;
  m.set("input.dataset", dataset_path);
  m.set("input.dataset_digest", dataset_digest);
  m.set("output.checkpoint", checkpoint_path);
  m.set("output.checkpoint_digest", file_digest(checkpoint_path));
  m.set("output.history", history_path);
  m.set_int("metric.n_train", result.n_train);
  m.set_int("metric.n_test", result.n_test);
  m.set_scalar("metric.final_train_loss", result.final_train_loss);
  m.set_scalar("metric.final_test_loss", result.final_test_loss);
  for (int j = 0; j < 7; ++j) {
    m.set_scalar(std::string("metric.final_test_loss_") + kParamNames[j],
                 result.final_test_per_param[j]);
  }
  m.set_scalar("timing.train_seconds", timer.seconds());
  detail::write_manifest(m, config, "train", checkpoint_path + ".manifest");
  return result;
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TestStageResult {
  Scalar avg_loss = 0.0;
  Vec7 per_param = Vec7::Zero();
  Index n_test = 0;
  std::vector<Index> test_indices;
};

/// Evaluates the checkpoint on the held-out split and writes the metrics
/// report and the predicted-vs-truth table.  When the dataset digest matches
/// the one recorded at training time, the training prefix is excluded and
/// the train/test index sets are asserted disjoint; a foreign dataset is
/// treated as entirely unseen.
inline TestStageResult run_test_stage(const PipelineConfig& config,
                                      const std::string& dataset_path,
                                      const std::string& checkpoint_path,
                                      const std::string& report_path,
                                      const std::string& predictions_path) {
  detail::StageTimer timer;
  const Dataset ds = load_dataset(dataset_path);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const std::string dataset_digest = file_digest(dataset_path);

  Index first_test = 0;
  if (dataset_digest == ckpt.dataset_digest) {
    first_test = ckpt.n_train;
    if (first_test >= ds.size()) {
      throw FormatError("checkpoint claims " + std::to_string(ckpt.n_train) +
                        " training samples but dataset holds " + std::to_string(ds.size()));
    }
    std::set<Index> train_idx, test_idx;
    for (Index i = 0; i < first_test; ++i) train_idx.insert(i);
    for (Index i = first_test; i < ds.size(); ++i) test_idx.insert(i);
    std::vector<Index> leak;
    std::set_intersection(train_idx.begin(), train_idx.end(), test_idx.begin(), test_idx.end(),
                          std::back_inserter(leak));
    if (!leak.empty()) {
      throw Error("split leakage: " + std::to_string(leak.size()) +
                  " sample(s) appear in both train and test");
    }
  }

  TestStageResult result;
  Mat targets(7, ds.size() - first_test);
  Mat predictions(7, ds.size() - first_test);
  for (Index i = first_test; i < ds.size(); ++i) {
    const Sample& s = ds.samples[static_cast<std::size_t>(i)];
    const MaterialParams pred = predict(ckpt, s.series.values);
    targets.col(i - first_test) = s.params.vector();
    predictions.col(i - first_test) = pred.vector();
    result.test_indices.push_back(i);
  }
  result.n_test = targets.cols();
  result.per_param = Vec7(per_param_loss(targets, predictions));
  result.avg_loss = result.per_param.mean();

  char buf[32];
  const auto fmt = [&buf](Scalar v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot open " + report_path + " for writing");
    out << "# metric,value\n";
    out << "n_test," << result.n_test << '\n';
    out << "avg_loss," << fmt(result.avg_loss) << '\n';
    for (int j = 0; j < 7; ++j) {
      out << "loss_" << kParamNames[j] << ',' << fmt(result.per_param[j]) << '\n';
    }
    if (!out) throw IoError("failed writing " + report_path);
  }
  {
    std::ofstream out(predictions_path);
    if (!out) throw IoError("cannot open " + predictions_path + " for writing");
    out << "# sample";
    for (const char* name : kParamNames) out << ',' << name << "_truth," << name << "_pred";
    out << ",sample_loss\n";
    for (Index c = 0; c < result.n_test; ++c) {
      out << result.test_indices[static_cast<std::size_t>(c)];
      for (int j = 0; j < 7; ++j) {
        out << ',' << fmt(targets(j, c)) << ',' << fmt(predictions(j, c));
      }
      out << ',' << fmt(sample_loss(targets.col(c), predictions.col(c))) << '\n';
    }
    if (!out) throw IoError("failed writing " + predictions_path);
  }

  Container m;
  m.set("input.dataset", dataset_path);
  m.set("input.dataset_digest", dataset_digest);
  m.set("input.checkpoint", checkpoint_path);
  m.set("input.checkpoint_digest", file_digest(checkpoint_path));
  m.set("output.report", report_path);
  m.set("output.predictions", predictions_path);
  m.set_int("metric.n_test", result.n_test);
  m.set_scalar("metric.test_loss", result.avg_loss);
  for (int j = 0; j < 7; ++j) {
    m.set_scalar(std::string("metric.test_loss_") + kParamNames[j], result.per_param[j]);
  }
  m.set_scalar("timing.test_seconds", timer.seconds());
  detail::write_manifest(m, config, "test", report_path + ".manifest");
  return result;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifySampleResult {
  Index sample_index = 0;
  Scalar error_literal = 0.0;  // || (sigma - sigma_hat) / sigma ||_2 over the d steps
  Scalar error_global = 0.0;   // || sigma - sigma_hat ||_2 / || sigma ||_2
  bool diverged = false;
};

struct VerifyStageResult {
  std::vector<VerifySampleResult> samples;
  Scalar avg_literal = 0.0;
  Scalar avg_global = 0.0;
  Index n_diverged = 0;

  Scalar average(const std::string& rel_norm) const {
    return rel_norm == "global" ? avg_global : avg_literal;
  }
};

/// Re-runs the forward model on identified parameters for seeded-random
/// held-out samples and compares the resulting stress series against the
/// ground truth.  Overlay CSVs (t, truth, prediction, pointwise relative
/// error) are written per sample.
inline VerifyStageResult run_verify(const PipelineConfig& config, const std::string& dataset_path,
                                    const std::string& checkpoint_path,
                                    const std::string& out_prefix) {
  detail::StageTimer timer;
  const Dataset ds = load_dataset(dataset_path);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const std::string dataset_digest = file_digest(dataset_path);

  const Index first_test = dataset_digest == ckpt.dataset_digest ? ckpt.n_train : 0;
  const Index n_test = ds.size() - first_test;
  if (n_test < 1) throw InvalidParams("no held-out samples to verify");
  const Index n_pick = std::min(config.verify_samples, n_test);

  // seeded sample selection without replacement
  std::vector<Index> pool(static_cast<std::size_t>(n_test));
  std::iota(pool.begin(), pool.end(), first_test);
  SplitMix64 rng(derive_stream(config.seed, 0x76657269ull));  // 'veri'
  for (Index i = 0; i < n_pick; ++i) {
    const Index j = i + static_cast<Index>(rng.next_u64() %
                                           static_cast<std::uint64_t>(n_test - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }

  VerifyStageResult result;
  Scalar sum_literal = 0.0, sum_global = 0.0;
  Index n_ok = 0;
  char buf[32];
  const auto fmt = [&buf](Scalar v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  std::ofstream errors_out(out_prefix + "_errors.csv");
  if (!errors_out) throw IoError("cannot open " + out_prefix + "_errors.csv for writing");
  errors_out << "# sample,error_literal,error_global,diverged\n";

  for (Index pick = 0; pick < n_pick; ++pick) {
    const Index idx = pool[static_cast<std::size_t>(pick)];
    const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
    VerifySampleResult sample_result;
    sample_result.sample_index = idx;

    const MaterialParams identified =
        config.verify_use_truth ? s.params : predict(ckpt, s.series.values);
    try {
      // unphysical identified parameters cannot be replayed; count them
      // with the diverged runs
      identified.validate();
      const StressSeries replay = run_test(identified, ds.init, ds.schedule);
      const Vec& truth = s.series.values;
      const Vec& pred = replay.values;
      const Vec pointwise_rel = ((truth - pred).array() / truth.array()).matrix();
      sample_result.error_literal = pointwise_rel.norm();
      sample_result.error_global = (truth - pred).norm() / truth.norm();
      sum_literal += sample_result.error_literal;
      sum_global += sample_result.error_global;
      ++n_ok;

      std::ofstream overlay(out_prefix + "_sample_" + std::to_string(idx) + ".csv");
      if (!overlay) throw IoError("cannot open overlay csv for writing");
      overlay << "# t,neg_sigma1_truth,neg_sigma1_pred,rel_err\n";
      for (Index k = 0; k < truth.size(); ++k) {
        const Scalar t = static_cast<Scalar>(k + 1) * ds.schedule.dt;
        overlay << fmt(t) << ',' << fmt(truth[k]) << ',' << fmt(pred[k]) << ','
                << fmt(std::abs(pointwise_rel[k])) << '\n';
      }
    } catch (const Diverged&) {
      sample_result.diverged = true;
      ++result.n_diverged;
    } catch (const InvalidParams&) {
      sample_result.diverged = true;
      ++result.n_diverged;
    }
    errors_out << idx << ',' << fmt(sample_result.error_literal) << ','
               << fmt(sample_result.error_global) << ',' << (sample_result.diverged ? 1 : 0)
               << '\n';
    result.samples.push_back(sample_result);
  }
  if (!errors_out) throw IoError("failed writing verify errors csv");

  if (n_ok > 0) {
    result.avg_literal = sum_literal / static_cast<Scalar>(n_ok);
    result.avg_global = sum_global / static_cast<Scalar>(n_ok);
  }

  Container m;
  m.set("input.dataset", dataset_path);
  m.set("input.dataset_digest", dataset_digest);
  m.set("input.checkpoint", checkpoint_path);
  m.set("input.checkpoint_digest", file_digest(checkpoint_path));
  m.set("note.forward_model", "single-point oedometric element test");
  m.set_int("metric.n_verified", n_ok);
  m.set_int("metric.n_diverged", result.n_diverged);
  m.set_scalar("metric.verify_error_literal", result.avg_literal);
  m.set_scalar("metric.verify_error_global", result.avg_global);
  m.set_scalar("timing.verify_seconds", timer.seconds());
  detail::write_manifest(m, config, "verify", out_prefix + ".manifest");
  return result;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Merges the metric entries of one or more manifests into a CSV table,
/// with a delta column when exactly two runs are compared.
inline void run_report(const std::vector<std::string>& manifest_paths,
                       const std::string& out_path) {
  if (manifest_paths.empty()) throw UsageError("report needs at least one manifest");

  std::vector<Container> manifests;
  std::set<std::string> keys;
  for (const auto& path : manifest_paths) {
    Container c = Container::read(path);
    if (!c.has("kind") || c.get("kind") != "manifest") {
      throw FormatError(path + ": not a manifest");
    }
    manifests.push_back(std::move(c));
  }

  // collect metric keys across runs
  std::vector<std::map<std::string, std::string>> rows(manifests.size());
  for (std::size_t r = 0; r < manifests.size(); ++r) {
    for (const auto& [key, value] : manifests[r].entries()) {
      if (key.rfind("metric.", 0) == 0 || key == "stage") {
        rows[r][key] = value;
        keys.insert(key);
      }
    }
  }

  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open " + out_path + " for writing");
  out << "# key";
  for (std::size_t r = 0; r < manifests.size(); ++r) out << ",run_" << r;
  if (manifests.size() == 2) out << ",delta";
  out << '\n';
  for (const auto& key : keys) {
    out << key;
    std::vector<std::string> values;
    for (std::size_t r = 0; r < manifests.size(); ++r) {
      auto it = rows[r].find(key);
      values.push_back(it == rows[r].end() ? "" : it->second);
      out << ',' << values.back();
    }
    if (manifests.size() == 2 && key != "stage" && !values[0].empty() && !values[1].empty()) {
      const Scalar a = std::strtod(values[0].c_str(), nullptr);
      const Scalar b = std::strtod(values[1].c_str(), nullptr);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", b - a);
      out << ',' << buf;
    } else if (manifests.size() == 2) {
      out << ',';
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + out_path);
}

}  // namespace baroid
