// Copyright 2026 The InterAug-CTC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "interaug/config.h"
#include "interaug/oracle.h"
#include "interaug/rng.h"
#include "interaug/trainer.h"

namespace {

using namespace interaug;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // usage or configuration error
constexpr int kExitRuntime = 2;  // runtime failure

IniFile load_ini(const std::string& config_path,
                 const std::vector<std::string>& overrides) {
  IniFile ini = config_path.empty()
                    ? IniFile::parse_string(default_config_text(), "<defaults>")
                    : IniFile::parse_file(config_path);
  for (const auto& o : overrides) ini.apply_override(o);
  return ini;
}

struct NamedVariant {
  std::string name;
  AugmentationSpec aug;
  bool plain_ctc = false;
  bool detach = false;
};

// The experiment matrix rows: the two conventional baselines, the five
// corruption operators, the position ablation pair, and the
// detached-conditioning ablation.
NamedVariant make_variant(const std::string& name,
                          const AugmentationSpec& base) {
  NamedVariant v{name, base, false, false};
  v.aug.position = AugPosition::kConditioningFeature;
  if (name == "ctc") {
    v.aug.op = AugOperator::kNone;
    v.plain_ctc = true;
  } else if (name == "selfcond") {
    v.aug.op = AugOperator::kNone;
  } else if (name == "selfcond_detached") {
    v.aug.op = AugOperator::kNone;
    v.detach = true;
  } else if (name == "time_mask") {
    v.aug.op = AugOperator::kTimeMask;
  } else if (name == "feature_mask") {
    v.aug.op = AugOperator::kFeatureMask;
  } else if (name == "token_delete") {
    v.aug.op = AugOperator::kTokenDelete;
  } else if (name == "token_insert") {
    v.aug.op = AugOperator::kTokenInsert;
  } else if (name == "token_substitute") {
    v.aug.op = AugOperator::kTokenSubstitute;
  } else if (name == "time_mask_cond" || name == "time_mask_enc") {
    // The position-ablation pair: W_tau = 0.1T at p_time = 0.5.
    v.aug.op = AugOperator::kTimeMask;
    v.aug.W_tau = MaskWidth::fraction(0.1);
    v.aug.p_time = 0.5;
    if (name == "time_mask_enc")
      v.aug.position = AugPosition::kEncoderFeature;
  } else {
    throw std::invalid_argument("unknown matrix variant '" + name + "'");
  }
  return v;
}

TrainConfig variant_config(const TrainConfig& base, const NamedVariant& v) {
  TrainConfig cfg = base;
  cfg.augmentation = v.aug;
  cfg.encoder.detach_conditioning = v.detach;
  if (v.plain_ctc) {
    cfg.encoder.intermediate_layers.clear();
    cfg.encoder.mix_weight = 0.0;
  }
  return cfg;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 const std::vector<std::string>& overrides) {
  IniFile ini = load_ini(config_path, overrides);
  SynthSpec spec = load_synth_spec(ini);
  spec.validate();
  std::filesystem::create_directories(out_dir);
  for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
    std::int64_t rejected = 0;
    Corpus corpus = generate(spec, split, &rejected);
    const std::string base = out_dir + "/" + to_string(split);
    save_corpus(base + ".corpus", corpus);
    save_labels_text(base + ".labels.txt", corpus);
    std::int64_t frames = 0;
    for (const auto& u : corpus.utterances) frames += u.features.dim(0);
    std::cout << to_string(split) << ": " << corpus.size() << " utterances, "
              << frames << " frames, " << rejected << " rejected draws -> "
              << base << ".corpus\n";
  }
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::vector<std::string>& overrides) {
  IniFile ini = load_ini(config_path, overrides);
  TrainConfig cfg = load_train_config(ini);
  cfg.validate();
  if (cfg.train_corpus.empty() || cfg.dev_corpus.empty())
    throw std::invalid_argument("config: data.train_corpus and data.dev_corpus are required");
  Corpus train_set = load_corpus(cfg.train_corpus);
  Corpus dev_set = load_corpus(cfg.dev_corpus);
  std::filesystem::create_directories(out_dir);
  std::ofstream step_log(out_dir + "/steps.csv");
  TrainResult result = train(cfg, train_set, dev_set, &step_log, &std::cout);
  const std::string ckpt = out_dir + "/model.ckpt";
  save_model(ckpt, result.model);
  std::cout << "averaged epochs:";
  for (int e : result.averaged_epochs) std::cout << ' ' << e;
  std::cout << "\ncheckpoint -> " << ckpt << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path,
             const std::string& report_path) {
  Model model = load_model(model_path);
  Corpus corpus = load_corpus(corpus_path);
  EvalResult result = evaluate(model, corpus);
  if (!report_path.empty()) {
    std::ofstream os(report_path);
    if (!os) throw std::runtime_error("eval: cannot open " + report_path);
    write_report_csv(os, result.scores(), result.corpus);
  }
  std::cout << "utterances " << corpus.size() << " wer " << result.corpus.wer()
            << " sub " << result.corpus.sub_rate() << " del "
            << result.corpus.del_rate() << " ins " << result.corpus.ins_rate()
            << '\n';
  return kExitOk;
}

int cmd_matrix(const std::string& config_path, const std::string& out_dir,
               const std::string& variants_csv, const std::string& seeds_csv,
               int jobs, const std::vector<std::string>& overrides) {
  IniFile ini = load_ini(config_path, overrides);
  TrainConfig base = load_train_config(ini);
  base.validate();
  Corpus train_set = load_corpus(base.train_corpus);
  Corpus dev_set = load_corpus(base.dev_corpus);
  Corpus test_set = load_corpus(base.test_corpus);

  std::vector<NamedVariant> named;
  for (const auto& name : split_csv(variants_csv))
    named.push_back(make_variant(name, base.augmentation));
  if (named.size() < 2)
    throw std::invalid_argument("matrix: need at least two variants");

  std::vector<std::uint64_t> seeds;
  if (seeds_csv.empty()) {
    seeds.push_back(base.seed);
  } else {
    for (const auto& s : split_csv(seeds_csv))
      seeds.push_back(std::stoull(s));
  }

  std::vector<std::pair<std::string, TrainConfig>> configs;
  for (const auto& v : named)
    configs.emplace_back(v.name, variant_config(base, v));
  MatrixResult result = run_matrix_configs(configs, train_set, dev_set,
                                           test_set, seeds, jobs, &std::cout);

  const std::string table = format_matrix_table(result);
  std::cout << table;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(out_dir + "/matrix.csv");
    write_matrix_csv(os, result);
    std::ofstream ts(out_dir + "/matrix.txt");
    ts << table;
  }
  return kExitOk;
}

int cmd_augment_demo(const std::string& config_path,
                     const std::string& corpus_path, const std::string& utt_id,
                     const std::string& model_path,
                     const std::vector<std::string>& overrides) {
  IniFile ini = load_ini(config_path, overrides);
  TrainConfig cfg = load_train_config(ini);
  Corpus corpus = load_corpus(corpus_path);
  const Utterance* utt = nullptr;
  std::size_t utt_index = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus.utterances[i].id == utt_id) {
      utt = &corpus.utterances[i];
      utt_index = i;
    }
  if (!utt)
    throw std::invalid_argument("augment-demo: unknown utterance id '" +
                                utt_id + "'");

  Model model = model_path.empty()
                    ? Model::init(cfg.encoder, utt->features.dim(1), cfg.seed)
                    : load_model(model_path);

  Tape tape;
  ForwardTrace trace;
  model.forward(tape, utt->features, nullptr, nullptr, &trace);

  const Vocabulary vocab{model.config().vocab_size_ext - 1};
  auto print_path = [&](const char* tag, const AlignmentPath& p) {
    std::cout << "    " << tag << ":";
    for (int label : p.labels)
      if (label == Vocabulary::kBlank)
        std::cout << " .";
      else
        std::cout << ' ' << label;
    std::cout << "\n    collapsed:";
    for (int tok : collapse(p, vocab).tokens) std::cout << ' ' << tok;
    std::cout << '\n';
  };

  std::cout << "utterance " << utt->id << " (" << utt->features.dim(0)
            << " frames), operator " << to_string(cfg.augmentation.op)
            << ", position " << to_string(cfg.augmentation.position)
            << "\n  reference:";
  for (int tok : utt->label.tokens) std::cout << ' ' << tok;
  std::cout << '\n';

  // For feature-space operators the corruption hits the projected
  // conditioning features; report the zeroed block.
  auto print_mask = [&](const Tensor& before, const Tensor& after) {
    int zero_rows = 0, zero_cols = 0;
    const int T = before.dim(0), D = before.dim(1);
    for (int t = 0; t < T; ++t) {
      bool zeroed = true;
      for (int j = 0; j < D && zeroed; ++j)
        zeroed = after.at(t, j) == 0.0 && before.at(t, j) != 0.0;
      if (zeroed) ++zero_rows;
    }
    for (int j = 0; j < D; ++j) {
      bool zeroed = true;
      for (int t = 0; t < T && zeroed; ++t)
        zeroed = after.at(t, j) == 0.0 && before.at(t, j) != 0.0;
      if (zeroed) ++zero_cols;
    }
    std::cout << "    masked: " << zero_rows << " of " << T << " frames, "
              << zero_cols << " of " << D << " channels\n";
  };

  SeededRng aug_rng(cfg.seed, "interaug", utt_index);
  for (const auto& layer : trace.layers) {
    if (!layer.grid) continue;
    std::cout << "  layer " << layer.index << ":\n";
    const PosteriorGrid& z = *layer.grid;
    AlignmentPath before = argmax_path(z.probs);
    print_path("intermediate argmax", before);
    SeededRng layer_rng =
        cfg.augmentation.redraw_per_layer
            ? aug_rng.derive(static_cast<std::uint64_t>(layer.index))
            : aug_rng.derive(0);
    switch (cfg.augmentation.op) {
      case AugOperator::kNone:
        print_path("after operator (none)", before);
        break;
      case AugOperator::kTokenDelete:
        print_path("after token_delete",
                   token_delete(z, cfg.augmentation.p_del, layer_rng,
                                cfg.augmentation.del_draw_keeps));
        break;
      case AugOperator::kTokenInsert:
        print_path("after token_insert",
                   token_insert(z, cfg.augmentation.p_ins, layer_rng));
        break;
      case AugOperator::kTokenSubstitute:
        print_path("after token_substitute", token_substitute(z, layer_rng));
        break;
      case AugOperator::kTimeMask:
      case AugOperator::kFeatureMask: {
        Tape demo_tape;
        Tensor c = model.heads().cond_projection.apply(demo_tape, z.probs);
        Tensor masked =
            cfg.augmentation.op == AugOperator::kTimeMask
                ? time_mask(demo_tape, c, cfg.augmentation.W_tau,
                            cfg.augmentation.p_time, layer_rng)
                : feature_mask(demo_tape, c, cfg.augmentation.W_d,
                               cfg.augmentation.p_feat, layer_rng);
        print_mask(c, masked);
        break;
      }
    }
  }
  return kExitOk;
}

int cmd_oracle_check(std::uint64_t seed, bool inject) {
  OracleOptions opts;
  opts.seed = seed;
  opts.inject_ctc_grad_sign_flip = inject;
  OracleReport report = run_oracle_suite(opts);
  std::cout << format_oracle_report(report);
  return report.pass() ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-conditioned CTC trainer with intermediate-prediction "
               "augmentation"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");

  std::string config_path, out_dir, model_path, corpus_path, report_path;
  std::string utt_id, variants_csv, seeds_csv;
  std::vector<std::string> overrides;
  int jobs = 1;
  std::uint64_t oracle_seed = 20260810;
  bool inject_sign_flip = false;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->add_option("--config", config_path, "Experiment config (INI)");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("overrides", overrides, "section.key=value overrides");

  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--config", config_path, "Experiment config (INI)")
      ->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("overrides", overrides, "section.key=value overrides");

  auto* eval_cmd = app.add_subcommand("eval", "Greedy-decode and score a corpus");
  eval_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  eval_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  eval_cmd->add_option("--report", report_path, "Per-utterance CSV report");

  auto* matrix_cmd =
      app.add_subcommand("matrix", "Train and compare augmentation variants");
  matrix_cmd->add_option("--config", config_path, "Experiment config (INI)")
      ->required();
  matrix_cmd->add_option("--out", out_dir, "Output directory");
  matrix_cmd
      ->add_option("--variants", variants_csv,
                   "Comma list: ctc,selfcond,selfcond_detached,time_mask,"
                   "feature_mask,token_delete,token_insert,token_substitute,"
                   "time_mask_cond,time_mask_enc")
      ->required();
  matrix_cmd->add_option("--seeds", seeds_csv,
                         "Comma list of seeds (default: training.seed)");
  matrix_cmd->add_option("--jobs", jobs, "Parallel variant jobs");
  matrix_cmd->add_option("overrides", overrides, "section.key=value overrides");

  auto* demo = app.add_subcommand(
      "augment-demo", "Show intermediate predictions before/after corruption");
  demo->add_option("--config", config_path, "Experiment config (INI)");
  demo->add_option("--corpus", corpus_path, "Corpus file")->required();
  demo->add_option("--utt", utt_id, "Utterance id")->required();
  demo->add_option("--model", model_path, "Checkpoint (default: fresh init)");
  demo->add_option("overrides", overrides, "section.key=value overrides");

  auto* oracle =
      app.add_subcommand("oracle-check", "Run the independent-oracle suite");
  oracle->add_option("--seed", oracle_seed, "Oracle RNG seed");
  oracle
      ->add_flag("--inject-ctc-grad-sign-flip", inject_sign_flip,
                 "Corrupt the CTC gradient to verify the check catches it")
      ->group("");  // hidden: mutation-sanity hook for tests

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, overrides);
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir, overrides);
    if (eval_cmd->parsed())
      return cmd_eval(model_path, corpus_path, report_path);
    if (matrix_cmd->parsed())
      return cmd_matrix(config_path, out_dir, variants_csv, seeds_csv, jobs,
                        overrides);
    if (demo->parsed())
      return cmd_augment_demo(config_path, corpus_path, utt_id, model_path,
                              overrides);
    if (oracle->parsed()) return cmd_oracle_check(oracle_seed, inject_sign_flip);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
