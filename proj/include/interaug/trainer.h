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

#ifndef INTERAUG_TRAINER_H_
#define INTERAUG_TRAINER_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "interaug/data.h"
#include "interaug/encoder.h"
#include "interaug/metrics.h"

// Training loop binding the encoder, the augmentation operators and the CTC
// loss: seeded mini-batch shuffling, Adam with warmup scheduling, gradient
// clipping, best-k checkpoint retention and parameter averaging. Batches
// are processed one utterance at a time on per-worker model replicas;
// per-utterance gradients are reduced in utterance order, so results do not
// depend on the OpenMP thread count.

namespace interaug {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  int warmup_steps = 800;
  double lr_factor = 5.0;
  double grad_clip = 5.0;  // global norm; <= 0 disables
  int checkpoint_avg_k = 3;
  std::uint64_t seed = 1234;
  EncoderConfig encoder;
  AugmentationSpec augmentation;
  std::string train_corpus;
  std::string dev_corpus;
  std::string test_corpus;

  void validate() const;
};

// factor * D^(-1/2) * min(step^(-1/2), step * warmup^(-3/2)); step >= 1.
double lr_schedule(long step, int model_dim, int warmup_steps, double factor);

class Adam {
 public:
  Adam(std::size_t num_params, double beta1, double beta2, double epsilon);
  // In-place update of the flattened parameter vector.
  void step(std::vector<double>& params, const std::vector<double>& grad,
            double lr);

 private:
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean over update steps
  double val_loss = 0.0;
  std::int64_t skipped_utterances = 0;
};

struct TrainResult {
  Model model;  // arithmetic mean of the k best checkpoints
  std::vector<EpochStats> epochs;
  long steps = 0;
  std::vector<int> averaged_epochs;  // epochs whose snapshots were averaged
};

// Trains per the config; corpora are passed in loaded. `step_log` receives
// one CSV line per update step (step, lr, train_loss, final-layer loss, one
// column per intermediate layer); `info` gets human-readable progress.
// Divergence (non-finite batch loss) aborts with the step index and the
// last finite loss.
TrainResult train(const TrainConfig& cfg, const Corpus& train_set,
                  const Corpus& dev_set, std::ostream* step_log = nullptr,
                  std::ostream* info = nullptr);

struct EvalRecord {
  std::string utt_id;
  TokenSequence ref;
  TokenSequence hyp;
  ErrorBreakdown breakdown;
};

struct EvalResult {
  ErrorBreakdown corpus;
  std::vector<EvalRecord> records;
  std::vector<UtteranceScore> scores() const;
};

// Greedy decode + alignment scoring over a corpus; no augmentation runs on
// this path. Pure function of (model, corpus).
EvalResult evaluate(const Model& model, const Corpus& corpus);

// Mean mixed loss over a corpus with augmentation disabled.
double validation_loss(const Model& model, const Corpus& corpus);

struct MatrixRow {
  std::string name;
  std::vector<double> seed_wers;  // test WER per seed
  double wer = 0.0;               // mean over seeds
  double sub = 0.0, del = 0.0, ins = 0.0;
  double wer_min = 0.0, wer_max = 0.0;
};

struct MatrixResult {
  std::vector<std::uint64_t> seeds;
  std::vector<MatrixRow> rows;
};

// Trains every variant with the same corpus and seed list and scores the
// test set. Needs at least two variants (a comparison). jobs > 1 runs
// variants concurrently.
MatrixResult run_matrix(
    const TrainConfig& base,
    const std::vector<std::pair<std::string, AugmentationSpec>>& variants,
    const Corpus& train_set, const Corpus& dev_set, const Corpus& test_set,
    const std::vector<std::uint64_t>& seeds, int jobs,
    std::ostream* info = nullptr);

// Same, but each variant carries a full config (the plain-CTC baseline row
// also drops the intermediate heads). The seed field of each config is
// overridden by the seed list.
MatrixResult run_matrix_configs(
    const std::vector<std::pair<std::string, TrainConfig>>& variants,
    const Corpus& train_set, const Corpus& dev_set, const Corpus& test_set,
    const std::vector<std::uint64_t>& seeds, int jobs,
    std::ostream* info = nullptr);

std::string format_matrix_table(const MatrixResult& result);
void write_matrix_csv(std::ostream& os, const MatrixResult& result);

}  // namespace interaug

#endif  // INTERAUG_TRAINER_H_
