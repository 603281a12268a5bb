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

#ifndef INTERAUG_ORACLE_H_
#define INTERAUG_ORACLE_H_

#include <cstdint>
#include <string>
#include <vector>

// End-to-end self-checks against independent oracles: path enumeration for
// the forward-backward loss, central finite differences for gradients,
// exhaustive edit-distance search for the WER alignment, and distribution
// laws for the augmentation operators. The release gate behind the
// `oracle-check` subcommand.

namespace interaug {

struct OracleCheck {
  std::string name;
  long cases = 0;
  long failures = 0;
  std::string detail;  // first failing case, serialized for replay

  bool pass() const { return failures == 0; }
};

struct OracleReport {
  std::vector<OracleCheck> checks;

  bool pass() const;
};

struct OracleOptions {
  std::uint64_t seed = 20260810;
  // Deliberately corrupts the analytic CTC gradient before the comparison;
  // the finite-difference check must then fail (mutation sanity).
  bool inject_ctc_grad_sign_flip = false;
};

OracleReport run_oracle_suite(const OracleOptions& opts = {});
std::string format_oracle_report(const OracleReport& report);

}  // namespace interaug

#endif  // INTERAUG_ORACLE_H_
