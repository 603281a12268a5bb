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

#include "interaug/metrics.h"

#include <limits>
#include <stdexcept>

namespace interaug {

namespace {
double rate(std::int64_t count, std::int64_t ref_len, std::int64_t errors) {
  if (ref_len > 0) return static_cast<double>(count) / ref_len;
  return errors == 0 ? 0.0 : std::numeric_limits<double>::infinity();
}
}  // namespace

double ErrorBreakdown::wer() const {
  return rate(total_errors(), ref_len, total_errors());
}
double ErrorBreakdown::sub_rate() const {
  return rate(substitutions, ref_len, total_errors());
}
double ErrorBreakdown::del_rate() const {
  return rate(deletions, ref_len, total_errors());
}
double ErrorBreakdown::ins_rate() const {
  return rate(insertions, ref_len, total_errors());
}

ErrorBreakdown align(const TokenSequence& ref, const TokenSequence& hyp) {
  const int n = ref.length(), m = hyp.length();
  // d[i][j] = min edit cost aligning ref[0..i) with hyp[0..j)
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (int i = 0; i <= n; ++i) d[i][0] = i;
  for (int j = 0; j <= m; ++j) d[0][j] = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (ref.tokens[i - 1] != hyp.tokens[j - 1]);
      const int del = d[i - 1][j] + 1;
      const int ins = d[i][j - 1] + 1;
      d[i][j] = std::min(sub, std::min(del, ins));
    }
  }
  // Backtrace with a fixed preference order (diagonal, then deletion, then
  // insertion) so the sub/del/ins attribution is reproducible.
  ErrorBreakdown out;
  out.ref_len = n;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int sub_cost = ref.tokens[i - 1] != hyp.tokens[j - 1];
      if (d[i][j] == d[i - 1][j - 1] + sub_cost) {
        if (sub_cost)
          ++out.substitutions;
        else
          ++out.hits;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++out.deletions;
      --i;
      continue;
    }
    ++out.insertions;
    --j;
  }
  return out;
}

ErrorBreakdown corpus_report(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs) {
  if (pairs.empty())
    throw std::invalid_argument("corpus_report: empty pair list");
  ErrorBreakdown total;
  for (const auto& [ref, hyp] : pairs) {
    const ErrorBreakdown b = align(ref, hyp);
    total.substitutions += b.substitutions;
    total.deletions += b.deletions;
    total.insertions += b.insertions;
    total.hits += b.hits;
    total.ref_len += b.ref_len;
  }
  return total;
}

namespace {
void write_row(std::ostream& os, const std::string& id,
               const ErrorBreakdown& b) {
  os << id << ',' << b.ref_len << ',' << b.substitutions << ','
     << b.deletions << ',' << b.insertions << ',';
  const double w = b.wer();
  if (w == std::numeric_limits<double>::infinity())
    os << "inf";
  else
    os << w;
  os << '\n';
}
}  // namespace

void write_report_csv(std::ostream& os,
                      const std::vector<UtteranceScore>& scores,
                      const ErrorBreakdown& corpus) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os.precision(17);
  os << "utt_id,ref_len,subs,dels,inss,wer\n";
  for (const auto& s : scores) write_row(os, s.utt_id, s.breakdown);
  write_row(os, "ALL", corpus);
  os.flags(flags);
  os.precision(precision);
}

}  // namespace interaug
