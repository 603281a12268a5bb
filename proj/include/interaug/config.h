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

#ifndef INTERAUG_CONFIG_H_
#define INTERAUG_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "interaug/data.h"
#include "interaug/trainer.h"

// Experiment configuration: an INI-style file with [encoder],
// [augmentation], [training] and [data] sections whose keys match the
// domain type fields one-to-one. Dotted overrides
// (section.key=value) are applied on top of the file. Unknown sections or
// keys are configuration errors naming the offending field.

namespace interaug {

class IniFile {
 public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text,
                              const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value"
  void apply_override(const std::string& assignment);

  const std::map<std::string, std::map<std::string, std::string>>& sections()
      const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Binders fill the structs' defaults, then overwrite from the file and
// reject keys that do not belong to the section.
TrainConfig load_train_config(const IniFile& ini);
SynthSpec load_synth_spec(const IniFile& ini);

// The full experiment config with every documented key at its default
// value (the shipped configs/default.ini is this text).
std::string default_config_text();

}  // namespace interaug

#endif  // INTERAUG_CONFIG_H_
