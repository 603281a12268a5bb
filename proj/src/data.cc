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

#include "interaug/data.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "interaug/rng.h"

namespace interaug {

namespace {
constexpr char kCorpusMagic[8] = {'I', 'A', 'C', 'O', 'R', 'P', '0', '1'};
constexpr int kMaxAttemptsPerUtterance = 1000;
// Split offsets keep per-utterance streams disjoint across splits.
constexpr std::uint64_t kSplitStride = 1u << 24;

std::uint64_t split_offset(Split s) {
  switch (s) {
    case Split::kTrain: return 0;
    case Split::kDev: return kSplitStride;
    case Split::kTest: return 2 * kSplitStride;
  }
  return 0;
}
}  // namespace

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (vocab_size < 1)
    throw std::invalid_argument("synth: vocab_size must be positive");
  if (feature_dim < 1)
    throw std::invalid_argument("synth: feature_dim must be positive");
  if (frames_per_token_min < 1 ||
      frames_per_token_max < frames_per_token_min)
    throw std::invalid_argument("synth: bad frames_per_token range");
  if (label_len_min < 1 || label_len_max < label_len_min)
    throw std::invalid_argument("synth: bad label length range");
  auto rate = [](double r, const char* name) {
    if (r < 0.0 || r > 1.0)
      throw std::invalid_argument(std::string("synth: ") + name +
                                  " must lie in [0,1]");
  };
  rate(frame_drop_rate, "frame_drop_rate");
  rate(spurious_frame_rate, "spurious_frame_rate");
  rate(confusion_rate, "confusion_rate");
  if (emission_noise < 0.0)
    throw std::invalid_argument("synth: emission_noise must be nonnegative");
  if (train_utterances < 0 || dev_utterances < 0 || test_utterances < 0)
    throw std::invalid_argument("synth: negative utterance count");
}

std::vector<std::vector<double>> class_means(const SynthSpec& spec) {
  SeededRng rng(spec.seed, "class-means");
  std::vector<std::vector<double>> means(spec.vocab_size);
  for (auto& m : means) {
    m.resize(spec.feature_dim);
    double norm2 = 0.0;
    for (double& v : m) {
      v = rng.gaussian();
      norm2 += v * v;
    }
    // Unit directions scaled up so classes stay separable under noise.
    const double scale = 2.0 / std::sqrt(norm2);
    for (double& v : m) v *= scale;
  }
  return means;
}

namespace {
struct UttDraw {
  TokenSequence label;
  std::vector<double> features;  // T x D row-major
  int frames = 0;
};

UttDraw draw_utterance(const SynthSpec& spec,
                       const std::vector<std::vector<double>>& means,
                       SeededRng& rng) {
  UttDraw out;
  const int L = rng.uniform_int(spec.label_len_min, spec.label_len_max);
  out.label.tokens.reserve(L);
  // No adjacent repeats: keeps every length-L sequence CTC-feasible on L
  // frames and makes the noiseless corpus exactly recoverable by a
  // per-frame nearest-mean classifier.
  for (int l = 0; l < L; ++l) {
    int tok = rng.uniform_int(1, spec.vocab_size);
    while (l > 0 && tok == out.label.tokens.back() && spec.vocab_size > 1)
      tok = rng.uniform_int(1, spec.vocab_size);
    out.label.tokens.push_back(tok);
  }
  const int D = spec.feature_dim;
  auto emit = [&](const double* mean, bool pure_noise) {
    for (int j = 0; j < D; ++j) {
      const double base = pure_noise ? 0.0 : mean[j];
      out.features.push_back(base + spec.emission_noise * rng.gaussian());
    }
    ++out.frames;
  };
  for (int tok : out.label.tokens) {
    std::vector<double> blended;
    const double* mean = means[tok - 1].data();
    if (rng.bernoulli(spec.confusion_rate) && spec.vocab_size > 1) {
      int other = rng.uniform_int(1, spec.vocab_size);
      while (other == tok) other = rng.uniform_int(1, spec.vocab_size);
      blended.resize(D);
      for (int j = 0; j < D; ++j)
        blended[j] = 0.5 * (means[tok - 1][j] + means[other - 1][j]);
      mean = blended.data();
    }
    const int n_frames =
        rng.uniform_int(spec.frames_per_token_min, spec.frames_per_token_max);
    for (int f = 0; f < n_frames; ++f) {
      if (rng.bernoulli(spec.frame_drop_rate)) continue;
      emit(mean, false);
      if (rng.bernoulli(spec.spurious_frame_rate)) emit(nullptr, true);
    }
  }
  return out;
}
}  // namespace

Corpus generate(const SynthSpec& spec, Split split,
                std::int64_t* rejected_out) {
  spec.validate();
  const auto means = class_means(spec);
  int count = 0;
  switch (split) {
    case Split::kTrain: count = spec.train_utterances; break;
    case Split::kDev: count = spec.dev_utterances; break;
    case Split::kTest: count = spec.test_utterances; break;
  }
  Corpus corpus;
  corpus.utterances.reserve(count);
  std::int64_t rejected = 0;
  for (int u = 0; u < count; ++u) {
    const std::uint64_t stream = split_offset(split) + u;
    UttDraw draw;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerUtterance; ++attempt) {
      SeededRng rng(spec.seed, "utterance",
                    stream * kMaxAttemptsPerUtterance + attempt);
      draw = draw_utterance(spec, means, rng);
      if (draw.frames >= min_frames_for(draw.label) && draw.frames >= 1) {
        ok = true;
        break;
      }
      ++rejected;
    }
    if (!ok)
      throw std::runtime_error(
          "synth: could not draw a feasible utterance after " +
          std::to_string(kMaxAttemptsPerUtterance) +
          " attempts (degenerate distortion rates?), rejections so far: " +
          std::to_string(rejected));
    std::ostringstream id;
    id << to_string(split) << "-";
    id.width(6);
    id.fill('0');
    id << u;
    corpus.utterances.push_back(
        {id.str(), Tensor({draw.frames, spec.feature_dim}, std::move(draw.features)),
         std::move(draw.label)});
  }
  if (rejected_out) *rejected_out = rejected;
  return corpus;
}

namespace {
class Reader {
 public:
  Reader(std::istream& is, const std::string& path) : is_(is), path_(path) {}

  template <typename T>
  T pod(const char* what) {
    T v{};
    if (!is_.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(what);
    offset_ += sizeof(T);
    return v;
  }
  void bytes(char* dst, std::size_t n, const char* what) {
    if (!is_.read(dst, static_cast<std::streamsize>(n))) fail(what);
    offset_ += n;
  }
  [[noreturn]] void fail(const char* what) const {
    throw std::runtime_error("corpus parse error in " + path_ + " at byte " +
                             std::to_string(offset_) + ": " + what);
  }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::string path_;
  std::size_t offset_ = 0;
};
}  // namespace

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("corpus: cannot open " + path);
  os.write(kCorpusMagic, sizeof(kCorpusMagic));
  const std::uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint32_t count = static_cast<std::uint32_t>(corpus.size());
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& utt : corpus.utterances) {
    const std::uint32_t id_len = static_cast<std::uint32_t>(utt.id.size());
    os.write(reinterpret_cast<const char*>(&id_len), sizeof(id_len));
    os.write(utt.id.data(), id_len);
    const std::uint32_t T = static_cast<std::uint32_t>(utt.features.dim(0));
    const std::uint32_t D = static_cast<std::uint32_t>(utt.features.dim(1));
    os.write(reinterpret_cast<const char*>(&T), sizeof(T));
    os.write(reinterpret_cast<const char*>(&D), sizeof(D));
    os.write(reinterpret_cast<const char*>(utt.features.values().data()),
             static_cast<std::streamsize>(utt.features.values().size() *
                                          sizeof(double)));
    const std::uint32_t L = static_cast<std::uint32_t>(utt.label.tokens.size());
    os.write(reinterpret_cast<const char*>(&L), sizeof(L));
    for (int tok : utt.label.tokens) {
      const std::int32_t t32 = tok;
      os.write(reinterpret_cast<const char*>(&t32), sizeof(t32));
    }
  }
  if (!os) throw std::runtime_error("corpus: write failed for " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("corpus: cannot open " + path);
  Reader r(is, path);
  char magic[8];
  r.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCorpusMagic, sizeof(magic)) != 0)
    r.fail("bad magic bytes");
  const auto version = r.pod<std::uint32_t>("version");
  if (version != 1) r.fail("unsupported version");
  const auto count = r.pod<std::uint32_t>("utterance count");
  Corpus corpus;
  corpus.utterances.reserve(count);
  for (std::uint32_t u = 0; u < count; ++u) {
    const auto id_len = r.pod<std::uint32_t>("id length");
    std::string id(id_len, '\0');
    if (id_len) r.bytes(id.data(), id_len, "id bytes");
    const auto T = r.pod<std::uint32_t>("frame count");
    const auto D = r.pod<std::uint32_t>("feature dim");
    if (T == 0 || D == 0) r.fail("zero frame count or feature dim");
    std::vector<double> values(static_cast<std::size_t>(T) * D);
    r.bytes(reinterpret_cast<char*>(values.data()),
            values.size() * sizeof(double), "feature payload");
    const auto L = r.pod<std::uint32_t>("label length");
    TokenSequence label;
    label.tokens.reserve(L);
    for (std::uint32_t l = 0; l < L; ++l) {
      const auto tok = r.pod<std::int32_t>("token id");
      if (tok < 1) r.fail("token id below 1");
      label.tokens.push_back(tok);
    }
    corpus.utterances.push_back(
        {std::move(id),
         Tensor({static_cast<int>(T), static_cast<int>(D)}, std::move(values)),
         std::move(label)});
  }
  return corpus;
}

void save_labels_text(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("labels: cannot open " + path);
  for (const auto& utt : corpus.utterances) {
    os << utt.id;
    for (int tok : utt.label.tokens) os << ' ' << tok;
    os << '\n';
  }
  if (!os) throw std::runtime_error("labels: write failed for " + path);
}

}  // namespace interaug
