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

#include "interaug/config.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace interaug {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_field(const std::string& section, const std::string& key,
                            const std::string& why) {
  throw std::invalid_argument("config: field " + section + "." + key + ": " +
                              why);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    bad_field(section, key, "expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& section, const std::string& key,
                const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    bad_field(section, key, "expected an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    bad_field(section, key, "expected an unsigned integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& section, const std::string& key,
                const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_field(section, key, "expected true/false, got '" + value + "'");
}

// Widths are either absolute counts or fractions written with a trailing
// dimension letter, e.g. `0.1T` / `0.25D`.
MaskWidth parse_width(const std::string& section, const std::string& key,
                      const std::string& value) {
  if (!value.empty() && (value.back() == 'T' || value.back() == 'D')) {
    const double f =
        parse_double(section, key, value.substr(0, value.size() - 1));
    if (f < 0.0 || f > 1.0)
      bad_field(section, key, "fractional width must lie in [0,1]");
    return MaskWidth::fraction(f);
  }
  const long w = parse_long(section, key, value);
  if (w < 0) bad_field(section, key, "width must be nonnegative");
  return MaskWidth::frames(static_cast<int>(w));
}

std::vector<int> parse_int_list(const std::string& section,
                                const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_long(section, key, item)));
  }
  return out;
}

void check_known_keys(const IniFile& ini, const std::string& section,
                      const std::set<std::string>& known) {
  auto it = ini.sections().find(section);
  if (it == ini.sections().end()) return;
  for (const auto& [key, value] : it->second)
    if (!known.count(key))
      throw std::invalid_argument("config: unknown field " + section + "." +
                                  key);
}
}  // namespace

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str(), path);
}

IniFile IniFile::parse_string(const std::string& text,
                              const std::string& origin) {
  IniFile ini;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: unterminated section header at " +
                                    origin + ":" + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      ini.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw std::invalid_argument("config: expected key=value at " + origin +
                                  ":" + std::to_string(line_no));
    ini.sections_[section][trim(line.substr(0, eq))] =
        trim(line.substr(eq + 1));
  }
  return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section,
                         const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key))
    throw std::invalid_argument("config: missing field " + section + "." + key);
  return it->second.at(key);
}

void IniFile::set(const std::string& section, const std::string& key,
                  const std::string& value) {
  sections_[section][key] = value;
}

void IniFile::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + assignment +
                                "' is not of the form section.key=value");
  const std::string lhs = trim(assignment.substr(0, eq));
  const std::size_t dot = lhs.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size())
    throw std::invalid_argument("override '" + assignment +
                                "' is not of the form section.key=value");
  set(lhs.substr(0, dot), lhs.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

namespace {
EncoderConfig load_encoder(const IniFile& ini) {
  const std::string s = "encoder";
  check_known_keys(ini, s,
                   {"num_layers", "model_dim", "vocab_size_ext",
                    "intermediate_layers", "mix_weight", "block_kind",
                    "hidden_width", "detach_conditioning"});
  EncoderConfig cfg;
  if (ini.has(s, "num_layers"))
    cfg.num_layers = static_cast<int>(parse_long(s, "num_layers", ini.get(s, "num_layers")));
  if (ini.has(s, "model_dim"))
    cfg.model_dim = static_cast<int>(parse_long(s, "model_dim", ini.get(s, "model_dim")));
  if (ini.has(s, "vocab_size_ext"))
    cfg.vocab_size_ext =
        static_cast<int>(parse_long(s, "vocab_size_ext", ini.get(s, "vocab_size_ext")));
  if (ini.has(s, "intermediate_layers"))
    cfg.intermediate_layers =
        parse_int_list(s, "intermediate_layers", ini.get(s, "intermediate_layers"));
  if (ini.has(s, "mix_weight"))
    cfg.mix_weight = parse_double(s, "mix_weight", ini.get(s, "mix_weight"));
  if (ini.has(s, "block_kind")) {
    try {
      cfg.block_kind = block_kind_from_string(ini.get(s, "block_kind"));
    } catch (const std::exception& e) {
      bad_field(s, "block_kind", e.what());
    }
  }
  if (ini.has(s, "hidden_width"))
    cfg.hidden_width =
        static_cast<int>(parse_long(s, "hidden_width", ini.get(s, "hidden_width")));
  if (ini.has(s, "detach_conditioning"))
    cfg.detach_conditioning =
        parse_bool(s, "detach_conditioning", ini.get(s, "detach_conditioning"));
  return cfg;
}

AugmentationSpec load_augmentation(const IniFile& ini) {
  const std::string s = "augmentation";
  check_known_keys(ini, s,
                   {"operator", "p_time", "p_feat", "W_tau", "W_d", "p_del",
                    "p_ins", "position", "del_draw_keeps", "redraw_per_layer"});
  AugmentationSpec spec;
  spec.W_tau = MaskWidth::fraction(0.1);
  spec.W_d = MaskWidth::fraction(0.25);
  if (ini.has(s, "operator")) {
    try {
      spec.op = aug_operator_from_string(ini.get(s, "operator"));
    } catch (const std::exception& e) {
      bad_field(s, "operator", e.what());
    }
  }
  if (ini.has(s, "p_time"))
    spec.p_time = parse_double(s, "p_time", ini.get(s, "p_time"));
  if (ini.has(s, "p_feat"))
    spec.p_feat = parse_double(s, "p_feat", ini.get(s, "p_feat"));
  if (ini.has(s, "W_tau")) spec.W_tau = parse_width(s, "W_tau", ini.get(s, "W_tau"));
  if (ini.has(s, "W_d")) spec.W_d = parse_width(s, "W_d", ini.get(s, "W_d"));
  if (ini.has(s, "p_del"))
    spec.p_del = parse_double(s, "p_del", ini.get(s, "p_del"));
  if (ini.has(s, "p_ins"))
    spec.p_ins = parse_double(s, "p_ins", ini.get(s, "p_ins"));
  if (ini.has(s, "position")) {
    try {
      spec.position = aug_position_from_string(ini.get(s, "position"));
    } catch (const std::exception& e) {
      bad_field(s, "position", e.what());
    }
  }
  if (ini.has(s, "del_draw_keeps"))
    spec.del_draw_keeps =
        parse_bool(s, "del_draw_keeps", ini.get(s, "del_draw_keeps"));
  if (ini.has(s, "redraw_per_layer"))
    spec.redraw_per_layer =
        parse_bool(s, "redraw_per_layer", ini.get(s, "redraw_per_layer"));
  return spec;
}
}  // namespace

TrainConfig load_train_config(const IniFile& ini) {
  const std::string s = "training";
  check_known_keys(ini, s,
                   {"epochs", "batch_size", "beta1", "beta2", "epsilon",
                    "warmup_steps", "lr_factor", "grad_clip",
                    "checkpoint_avg_k", "seed"});
  check_known_keys(ini, "data",
                   {"train_corpus", "dev_corpus", "test_corpus", "vocab_size",
                    "feature_dim", "frames_per_token_min",
                    "frames_per_token_max", "emission_noise", "frame_drop_rate",
                    "spurious_frame_rate", "confusion_rate", "train_utterances",
                    "dev_utterances", "test_utterances", "label_len_min",
                    "label_len_max", "seed"});
  TrainConfig cfg;
  cfg.encoder = load_encoder(ini);
  cfg.augmentation = load_augmentation(ini);
  if (ini.has(s, "epochs"))
    cfg.epochs = static_cast<int>(parse_long(s, "epochs", ini.get(s, "epochs")));
  if (ini.has(s, "batch_size"))
    cfg.batch_size =
        static_cast<int>(parse_long(s, "batch_size", ini.get(s, "batch_size")));
  if (ini.has(s, "beta1")) cfg.beta1 = parse_double(s, "beta1", ini.get(s, "beta1"));
  if (ini.has(s, "beta2")) cfg.beta2 = parse_double(s, "beta2", ini.get(s, "beta2"));
  if (ini.has(s, "epsilon"))
    cfg.epsilon = parse_double(s, "epsilon", ini.get(s, "epsilon"));
  if (ini.has(s, "warmup_steps"))
    cfg.warmup_steps =
        static_cast<int>(parse_long(s, "warmup_steps", ini.get(s, "warmup_steps")));
  if (ini.has(s, "lr_factor"))
    cfg.lr_factor = parse_double(s, "lr_factor", ini.get(s, "lr_factor"));
  if (ini.has(s, "grad_clip"))
    cfg.grad_clip = parse_double(s, "grad_clip", ini.get(s, "grad_clip"));
  if (ini.has(s, "checkpoint_avg_k"))
    cfg.checkpoint_avg_k = static_cast<int>(
        parse_long(s, "checkpoint_avg_k", ini.get(s, "checkpoint_avg_k")));
  if (ini.has(s, "seed")) cfg.seed = parse_u64(s, "seed", ini.get(s, "seed"));
  if (ini.has("data", "train_corpus")) cfg.train_corpus = ini.get("data", "train_corpus");
  if (ini.has("data", "dev_corpus")) cfg.dev_corpus = ini.get("data", "dev_corpus");
  if (ini.has("data", "test_corpus")) cfg.test_corpus = ini.get("data", "test_corpus");
  return cfg;
}

SynthSpec load_synth_spec(const IniFile& ini) {
  const std::string s = "data";
  SynthSpec spec;
  auto get_int = [&](const char* key, int& out) {
    if (ini.has(s, key))
      out = static_cast<int>(parse_long(s, key, ini.get(s, key)));
  };
  auto get_rate = [&](const char* key, double& out) {
    if (ini.has(s, key)) out = parse_double(s, key, ini.get(s, key));
  };
  get_int("vocab_size", spec.vocab_size);
  get_int("feature_dim", spec.feature_dim);
  get_int("frames_per_token_min", spec.frames_per_token_min);
  get_int("frames_per_token_max", spec.frames_per_token_max);
  get_rate("emission_noise", spec.emission_noise);
  get_rate("frame_drop_rate", spec.frame_drop_rate);
  get_rate("spurious_frame_rate", spec.spurious_frame_rate);
  get_rate("confusion_rate", spec.confusion_rate);
  get_int("train_utterances", spec.train_utterances);
  get_int("dev_utterances", spec.dev_utterances);
  get_int("test_utterances", spec.test_utterances);
  get_int("label_len_min", spec.label_len_min);
  get_int("label_len_max", spec.label_len_max);
  if (ini.has(s, "seed")) spec.seed = parse_u64(s, "seed", ini.get(s, "seed"));
  return spec;
}

std::string default_config_text() {
  const TrainConfig t;
  const SynthSpec d;
  EncoderConfig e;
  std::ostringstream os;
  os << "# Experiment configuration. Every key mirrors a domain-type field;\n"
        "# overrides use dotted syntax, e.g. augmentation.p_del=0.2\n"
        "\n[encoder]\n"
     << "num_layers = " << e.num_layers << "\n"
     << "model_dim = " << e.model_dim << "\n"
     << "vocab_size_ext = " << e.vocab_size_ext << "\n"
     << "intermediate_layers = 2,4\n"
     << "mix_weight = " << e.mix_weight << "\n"
     << "block_kind = " << to_string(e.block_kind) << "\n"
     << "hidden_width = " << e.hidden_width << "\n"
     << "detach_conditioning = false\n"
     << "\n[augmentation]\n"
     << "operator = none\n"
     << "p_time = 1.0\n"
     << "p_feat = 1.0\n"
     << "W_tau = 0.1T   # fraction of the frame count; plain integers are frames\n"
     << "W_d = 0.25D    # fraction of the feature dim; plain integers are channels\n"
     << "p_del = 0.1\n"
     << "p_ins = 0.1\n"
     << "position = conditioning_feature\n"
     << "del_draw_keeps = false\n"
     << "redraw_per_layer = true\n"
     << "\n[training]\n"
     << "epochs = " << t.epochs << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "beta1 = " << t.beta1 << "\n"
     << "beta2 = " << t.beta2 << "\n"
     << "epsilon = " << t.epsilon << "\n"
     << "warmup_steps = " << t.warmup_steps << "\n"
     << "lr_factor = " << t.lr_factor << "\n"
     << "grad_clip = " << t.grad_clip << "\n"
     << "checkpoint_avg_k = " << t.checkpoint_avg_k << "\n"
     << "seed = " << t.seed << "\n"
     << "\n[data]\n"
     << "train_corpus = data/train.corpus\n"
     << "dev_corpus = data/dev.corpus\n"
     << "test_corpus = data/test.corpus\n"
     << "vocab_size = " << d.vocab_size << "\n"
     << "feature_dim = " << d.feature_dim << "\n"
     << "frames_per_token_min = " << d.frames_per_token_min << "\n"
     << "frames_per_token_max = " << d.frames_per_token_max << "\n"
     << "emission_noise = " << d.emission_noise << "\n"
     << "frame_drop_rate = " << d.frame_drop_rate << "\n"
     << "spurious_frame_rate = " << d.spurious_frame_rate << "\n"
     << "confusion_rate = " << d.confusion_rate << "\n"
     << "train_utterances = " << d.train_utterances << "\n"
     << "dev_utterances = " << d.dev_utterances << "\n"
     << "test_utterances = " << d.test_utterances << "\n"
     << "label_len_min = " << d.label_len_min << "\n"
     << "label_len_max = " << d.label_len_max << "\n"
     << "seed = " << d.seed << "\n";
  return os.str();
}

}  // namespace interaug
