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

#ifndef INTERAUG_METRICS_H_
#define INTERAUG_METRICS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "interaug/ctc.h"

// Edit-distance scoring: WER decomposed into substitution, deletion and
// insertion counts from a minimum-edit-distance alignment with unit costs.

namespace interaug {

struct ErrorBreakdown {
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;
  std::int64_t hits = 0;
  std::int64_t ref_len = 0;

  std::int64_t total_errors() const {
    return substitutions + deletions + insertions;
  }
  // +inf when ref_len == 0 and errors exist.
  double wer() const;
  double sub_rate() const;
  double del_rate() const;
  double ins_rate() const;
};

// Minimum-edit-distance alignment. Among minimum-cost alignments the
// backtrace deterministically prefers substitution over paired
// insertion+deletion, then deletion over insertion.
ErrorBreakdown align(const TokenSequence& ref, const TokenSequence& hyp);

// Counts summed across pairs; rates from the summed counts
// (micro-average). Empty input is a contract error.
ErrorBreakdown corpus_report(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs);

struct UtteranceScore {
  std::string utt_id;
  ErrorBreakdown breakdown;
};

// CSV: header `utt_id,ref_len,subs,dels,inss,wer`, one row per utterance,
// then a summary row with utt_id `ALL` carrying the micro-averaged corpus
// numbers.
void write_report_csv(std::ostream& os,
                      const std::vector<UtteranceScore>& scores,
                      const ErrorBreakdown& corpus);

}  // namespace interaug

#endif  // INTERAUG_METRICS_H_
