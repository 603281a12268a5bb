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

#include "interaug/trainer.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "interaug/rng.h"

namespace interaug {

namespace {
// Stream space for per-(epoch, utterance) augmentation draws; keeps the
// draws independent of batch composition and scheduling.
std::uint64_t utt_stream(int epoch, std::size_t utt_index) {
  return (static_cast<std::uint64_t>(epoch) << 32) ^
         static_cast<std::uint64_t>(utt_index);
}

std::vector<double> flatten_params(const Model& model) {
  std::vector<double> flat;
  for (const auto& [name, p] : model.named_params())
    flat.insert(flat.end(), p.values().begin(), p.values().end());
  return flat;
}

void unflatten_params(Model& model, const std::vector<double>& flat) {
  std::size_t off = 0;
  for (auto& [name, p] : model.named_params()) {
    Tensor t = p;
    auto& vals = t.mutable_values();
    std::copy(flat.begin() + off, flat.begin() + off + vals.size(),
              vals.begin());
    off += vals.size();
  }
}

std::vector<double> flatten_grads(const Model& model) {
  std::vector<double> flat;
  for (const auto& [name, p] : model.named_params()) {
    if (p.has_grad()) {
      flat.insert(flat.end(), p.grad().begin(), p.grad().end());
    } else {
      flat.insert(flat.end(), p.values().size(), 0.0);
    }
  }
  return flat;
}

struct UtteranceWork {
  bool feasible = false;
  double total_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> inter_losses;
  std::vector<double> grad;
};

UtteranceWork process_utterance(const Model& shared, const Utterance& utt,
                                const AugmentationSpec* aug,
                                SeededRng* aug_rng) {
  UtteranceWork work;
  Model replica = shared.clone();
  Tape tape;
  ForwardResult fwd = replica.forward(tape, utt.features, aug, aug_rng);
  MixedLossResult loss =
      mixed_loss(tape, fwd.final_grid, fwd.intermediate_grids, utt.label,
                 replica.config().mix_weight);
  work.final_loss = loss.final_loss;
  work.inter_losses = loss.inter_losses;
  if (!loss.feasible) return work;
  work.feasible = true;
  work.total_loss = loss.total.item();
  tape.backward(loss.total);
  work.grad = flatten_grads(replica);
  return work;
}
}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("training: epochs must be >= 1");
  if (batch_size < 1)
    throw std::invalid_argument("training: batch_size must be >= 1");
  if (warmup_steps < 1)
    throw std::invalid_argument("training: warmup_steps must be >= 1");
  if (checkpoint_avg_k < 1)
    throw std::invalid_argument("training: checkpoint_avg_k must be >= 1");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("training: beta1/beta2 must lie in (0,1)");
  if (epsilon <= 0.0)
    throw std::invalid_argument("training: epsilon must be positive");
  if (lr_factor <= 0.0)
    throw std::invalid_argument("training: lr_factor must be positive");
  encoder.validate();
  augmentation.validate();
}

double lr_schedule(long step, int model_dim, int warmup_steps, double factor) {
  if (step < 1)
    throw std::invalid_argument("lr_schedule: step must be >= 1");
  const double d = static_cast<double>(model_dim);
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return factor * std::pow(d, -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

Adam::Adam(std::size_t num_params, double beta1, double beta2, double epsilon)
    : beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(num_params, 0.0),
      v_(num_params, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad,
                double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("adam: parameter/gradient size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + epsilon_);
  }
}

double validation_loss(const Model& model, const Corpus& corpus) {
  if (corpus.empty())
    throw std::invalid_argument("validation: empty corpus");
  const std::size_t n = corpus.size();
  std::vector<double> losses(n, 0.0);
  std::vector<char> feasible(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t u = 0; u < n; ++u) {
    Tape tape;
    const Utterance& utt = corpus.utterances[u];
    ForwardResult fwd = model.forward(tape, utt.features);
    MixedLossResult loss =
        mixed_loss(tape, fwd.final_grid, fwd.intermediate_grids, utt.label,
                   model.config().mix_weight);
    if (loss.feasible) {
      losses[u] = loss.total.item();
      feasible[u] = 1;
    }
  }
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t u = 0; u < n; ++u)
    if (feasible[u]) {
      sum += losses[u];
      ++count;
    }
  if (count == 0)
    throw std::runtime_error("validation: no feasible utterance in corpus");
  return sum / static_cast<double>(count);
}

TrainResult train(const TrainConfig& cfg, const Corpus& train_set,
                  const Corpus& dev_set, std::ostream* step_log,
                  std::ostream* info) {
  cfg.validate();
  if (train_set.empty() || dev_set.empty())
    throw std::invalid_argument("train: empty corpus");
  const int input_dim = train_set.utterances.front().features.dim(1);

  Model model = Model::init(cfg.encoder, input_dim, cfg.seed);
  std::vector<double> flat = flatten_params(model);
  Adam adam(flat.size(), cfg.beta1, cfg.beta2, cfg.epsilon);

  const bool augment = cfg.augmentation.op != AugOperator::kNone;

  if (step_log) {
    *step_log << "step,lr,train_loss,final_loss";
    for (int n : cfg.encoder.intermediate_layers) *step_log << ",inter_" << n;
    *step_log << '\n' << std::setprecision(17);
  }

  struct Snapshot {
    double val_loss;
    int epoch;
    std::vector<double> params;
  };
  std::vector<Snapshot> best;  // ascending val loss, at most k entries

  TrainResult result;
  long step = 0;
  double last_finite_loss = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SeededRng shuffle_rng(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss_sum = 0.0;
    long epoch_updates = 0;
    std::int64_t skipped = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bsz = end - start;
      std::vector<UtteranceWork> work(bsz);
#pragma omp parallel for schedule(dynamic)
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t u = order[start + b];
        SeededRng aug_rng(cfg.seed, "interaug", utt_stream(epoch, u));
        work[b] = process_utterance(model, train_set.utterances[u],
                                    augment ? &cfg.augmentation : nullptr,
                                    augment ? &aug_rng : nullptr);
      }

      std::vector<double> grad(flat.size(), 0.0);
      double batch_loss = 0.0, batch_final = 0.0;
      std::vector<double> batch_inter(cfg.encoder.intermediate_layers.size(),
                                      0.0);
      int feasible = 0;
      for (const auto& w : work) {
        if (!w.feasible) {
          ++skipped;
          continue;
        }
        ++feasible;
        batch_loss += w.total_loss;
        batch_final += w.final_loss;
        for (std::size_t i = 0; i < w.inter_losses.size(); ++i)
          batch_inter[i] += w.inter_losses[i];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w.grad[i];
      }
      if (feasible == 0) continue;  // nothing usable in this batch
      const double inv = 1.0 / feasible;
      batch_loss *= inv;
      batch_final *= inv;
      for (double& v : batch_inter) v *= inv;
      for (double& g : grad) g *= inv;

      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "training diverged at step " << (step + 1)
           << "; last finite loss " << last_finite_loss;
        throw std::runtime_error(os.str());
      }
      last_finite_loss = batch_loss;

      ++step;
      const double lr = lr_schedule(step, cfg.encoder.model_dim,
                                    cfg.warmup_steps, cfg.lr_factor);
      if (cfg.grad_clip > 0.0) {
        double norm2 = 0.0;
        for (double g : grad) norm2 += g * g;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (double& g : grad) g *= s;
        }
      }
      adam.step(flat, grad, lr);
      unflatten_params(model, flat);

      epoch_loss_sum += batch_loss;
      ++epoch_updates;
      if (step_log) {
        *step_log << step << ',' << lr << ',' << batch_loss << ','
                  << batch_final;
        for (double v : batch_inter) *step_log << ',' << v;
        *step_log << '\n';
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss =
        epoch_updates ? epoch_loss_sum / static_cast<double>(epoch_updates)
                      : std::numeric_limits<double>::quiet_NaN();
    stats.val_loss = validation_loss(model, dev_set);
    stats.skipped_utterances = skipped;
    result.epochs.push_back(stats);
    if (info)
      *info << "epoch " << epoch << " train_loss " << stats.train_loss
            << " val_loss " << stats.val_loss << " skipped " << skipped
            << '\n';

    // Retain the k best snapshots by validation loss (earlier epoch wins a
    // tie).
    Snapshot snap{stats.val_loss, epoch, flat};
    auto pos = std::upper_bound(best.begin(), best.end(), snap,
                                [](const Snapshot& a, const Snapshot& b) {
                                  return a.val_loss < b.val_loss;
                                });
    best.insert(pos, std::move(snap));
    if (best.size() > static_cast<std::size_t>(cfg.checkpoint_avg_k))
      best.pop_back();
  }

  // Arithmetic mean of the retained checkpoints.
  std::vector<double> averaged(flat.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(best.size());
  std::vector<const Snapshot*> by_epoch;
  for (const auto& s : best) by_epoch.push_back(&s);
  std::sort(by_epoch.begin(), by_epoch.end(),
            [](const Snapshot* a, const Snapshot* b) {
              return a->epoch < b->epoch;
            });
  for (const Snapshot* s : by_epoch) {
    result.averaged_epochs.push_back(s->epoch);
    for (std::size_t i = 0; i < averaged.size(); ++i)
      averaged[i] += s->params[i] * inv;
  }
  unflatten_params(model, averaged);
  model.zero_grad();
  result.model = std::move(model);
  result.steps = step;
  return result;
}

std::vector<UtteranceScore> EvalResult::scores() const {
  std::vector<UtteranceScore> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.utt_id, r.breakdown});
  return out;
}

EvalResult evaluate(const Model& model, const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("evaluate: empty corpus");
  const std::size_t n = corpus.size();
  EvalResult result;
  result.records.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t u = 0; u < n; ++u) {
    Tape tape;
    const Utterance& utt = corpus.utterances[u];
    ForwardResult fwd = model.forward(tape, utt.features);
    EvalRecord rec;
    rec.utt_id = utt.id;
    rec.ref = utt.label;
    rec.hyp = greedy_decode(fwd.final_grid);
    rec.breakdown = align(rec.ref, rec.hyp);
    result.records[u] = std::move(rec);
  }
  for (const auto& rec : result.records) {
    result.corpus.substitutions += rec.breakdown.substitutions;
    result.corpus.deletions += rec.breakdown.deletions;
    result.corpus.insertions += rec.breakdown.insertions;
    result.corpus.hits += rec.breakdown.hits;
    result.corpus.ref_len += rec.breakdown.ref_len;
  }
  return result;
}

MatrixResult run_matrix_configs(
    const std::vector<std::pair<std::string, TrainConfig>>& variants,
    const Corpus& train_set, const Corpus& dev_set, const Corpus& test_set,
    const std::vector<std::uint64_t>& seeds, int jobs, std::ostream* info) {
  if (variants.size() < 2)
    throw std::invalid_argument("matrix: need at least two variants");
  if (seeds.empty()) throw std::invalid_argument("matrix: need a seed list");

  MatrixResult result;
  result.seeds = seeds;
  result.rows.resize(variants.size());

  const int n_variants = static_cast<int>(variants.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
  for (int v = 0; v < n_variants; ++v) {
    MatrixRow row;
    row.name = variants[v].first;
    double sub_sum = 0.0, del_sum = 0.0, ins_sum = 0.0;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = variants[v].second;
      cfg.seed = seed;
      TrainResult trained = train(cfg, train_set, dev_set);
      EvalResult eval = evaluate(trained.model, test_set);
      row.seed_wers.push_back(eval.corpus.wer());
      sub_sum += eval.corpus.sub_rate();
      del_sum += eval.corpus.del_rate();
      ins_sum += eval.corpus.ins_rate();
      if (info) {
#pragma omp critical(matrix_info)
        *info << row.name << " seed " << seed << " test wer "
              << eval.corpus.wer() << std::endl;
      }
    }
    const double inv = 1.0 / static_cast<double>(seeds.size());
    row.wer = std::accumulate(row.seed_wers.begin(), row.seed_wers.end(), 0.0) *
              inv;
    row.sub = sub_sum * inv;
    row.del = del_sum * inv;
    row.ins = ins_sum * inv;
    row.wer_min = *std::min_element(row.seed_wers.begin(), row.seed_wers.end());
    row.wer_max = *std::max_element(row.seed_wers.begin(), row.seed_wers.end());
    result.rows[v] = std::move(row);
  }
  return result;
}

MatrixResult run_matrix(
    const TrainConfig& base,
    const std::vector<std::pair<std::string, AugmentationSpec>>& variants,
    const Corpus& train_set, const Corpus& dev_set, const Corpus& test_set,
    const std::vector<std::uint64_t>& seeds, int jobs, std::ostream* info) {
  std::vector<std::pair<std::string, TrainConfig>> configs;
  configs.reserve(variants.size());
  for (const auto& [name, aug] : variants) {
    TrainConfig cfg = base;
    cfg.augmentation = aug;
    configs.emplace_back(name, std::move(cfg));
  }
  return run_matrix_configs(configs, train_set, dev_set, test_set, seeds, jobs,
                            info);
}

std::string format_matrix_table(const MatrixResult& result) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "variant" << std::right << std::setw(9)
     << "wer" << std::setw(9) << "sub" << std::setw(9) << "del" << std::setw(9)
     << "ins";
  if (result.seeds.size() > 1) os << std::setw(19) << "wer range";
  os << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& row : result.rows) {
    os << std::left << std::setw(24) << row.name << std::right << std::setw(9)
       << row.wer << std::setw(9) << row.sub << std::setw(9) << row.del
       << std::setw(9) << row.ins;
    if (result.seeds.size() > 1)
      os << "   [" << row.wer_min << ", " << row.wer_max << "]";
    os << '\n';
  }
  return os.str();
}

void write_matrix_csv(std::ostream& os, const MatrixResult& result) {
  const auto precision = os.precision();
  os.precision(17);
  os << "variant,wer,sub,del,ins";
  for (std::uint64_t s : result.seeds) os << ",wer_seed_" << s;
  os << '\n';
  for (const auto& row : result.rows) {
    os << row.name << ',' << row.wer << ',' << row.sub << ',' << row.del << ','
       << row.ins;
    for (double w : row.seed_wers) os << ',' << w;
    os << '\n';
  }
  os.precision(precision);
}

}  // namespace interaug
