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

#ifndef INTERAUG_DATA_H_
#define INTERAUG_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "interaug/ctc.h"
#include "interaug/tensor.h"

// Desk-scale synthetic corpus. Each token class owns a mean direction in
// feature space; a token emits a short run of noisy frames around it.
// Three distortions create the classic error modes: frame dropping starves
// tokens of evidence (deletions), spurious frames add unsupported evidence
// (insertions), and confusion blends two class means (substitutions).

namespace interaug {

struct SynthSpec {
  int vocab_size = 8;
  int feature_dim = 16;
  int frames_per_token_min = 2;
  int frames_per_token_max = 4;
  double emission_noise = 0.8;       // sigma
  double frame_drop_rate = 0.1;
  double spurious_frame_rate = 0.08;
  double confusion_rate = 0.15;
  int train_utterances = 2000;
  int dev_utterances = 200;
  int test_utterances = 200;
  int label_len_min = 3;
  int label_len_max = 12;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Utterance {
  std::string id;
  Tensor features;  // T x feature_dim
  TokenSequence label;
};

struct Corpus {
  std::vector<Utterance> utterances;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
};

enum class Split { kTrain, kDev, kTest };
const char* to_string(Split s);

// Per-class mean directions, fully determined by the spec seed. Exposed so
// tests can build the noiseless nearest-mean reference classifier.
std::vector<std::vector<double>> class_means(const SynthSpec& spec);

// Deterministic in (spec, split). Utterances that come out empty or
// CTC-infeasible are rejected and regenerated (count reported via
// rejected_out); pathological specs exhaust the retry budget and throw.
Corpus generate(const SynthSpec& spec, Split split,
                std::int64_t* rejected_out = nullptr);

// Fixed little-endian binary container with magic/version header; parse
// errors name the byte offset. save/load round-trips bit-exactly.
void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

// Plain-text labels (utt_id followed by space-separated token ids), for
// interchange with external scorers.
void save_labels_text(const std::string& path, const Corpus& corpus);

}  // namespace interaug

#endif  // INTERAUG_DATA_H_
