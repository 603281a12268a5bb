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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "test_util.h"

using test_util::TempDir;

namespace {
struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

std::string binary_path() {
  const char* bin = std::getenv("INTERAUG_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "INTERAUG_BIN must point at the CLI binary");
  return bin;
}

RunResult run(const std::string& args) {
  const std::string cmd = binary_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
    result.output.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), {}};
}

// Small corpus + short schedule so each CLI invocation stays fast.
const char* kSmallData =
    " data.train_utterances=32 data.dev_utterances=8 data.test_utterances=8"
    " data.vocab_size=4 data.feature_dim=6 encoder.vocab_size_ext=5"
    " encoder.num_layers=2 encoder.model_dim=8 encoder.hidden_width=12"
    " encoder.intermediate_layers=1 training.epochs=2 training.batch_size=8"
    " training.warmup_steps=50 training.lr_factor=1.0";
}  // namespace

TEST_CASE("gen-data writes three corpora and is byte-deterministic") {
  TempDir dir("cli-gen");
  const std::string out1 = dir.file("d1");
  const std::string out2 = dir.file("d2");
  const RunResult r1 = run("gen-data --out " + out1 + kSmallData);
  CHECK(r1.exit_code == 0);
  for (const char* split : {"train", "dev", "test"}) {
    CAPTURE(split);
    CHECK(std::ifstream(out1 + "/" + split + ".corpus").good());
    CHECK(std::ifstream(out1 + "/" + split + ".labels.txt").good());
  }
  const RunResult r2 = run("gen-data --out " + out2 + kSmallData);
  CHECK(r2.exit_code == 0);
  CHECK(slurp(out1 + "/train.corpus") == slurp(out2 + "/train.corpus"));

  SUBCASE("a different seed changes the corpus but not its size") {
    const std::string out3 = dir.file("d3");
    const RunResult r3 =
        run("gen-data --out " + out3 + kSmallData + " data.seed=99");
    CHECK(r3.exit_code == 0);
    const std::string a = slurp(out1 + "/train.corpus");
    const std::string b = slurp(out3 + "/train.corpus");
    CHECK(a != b);
  }
}

TEST_CASE("invalid configuration exits 1 naming the field") {
  TempDir dir("cli-bad");
  const RunResult r =
      run("gen-data --out " + dir.file("x") + " data.vocab_size=0");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("vocab_size") != std::string::npos);
}

TEST_CASE("train + eval end-to-end is byte-deterministic") {
  TempDir dir("cli-train");
  const std::string data = dir.file("data");
  REQUIRE(run("gen-data --out " + data + kSmallData).exit_code == 0);

  const std::string cfg = dir.file("exp.ini");
  {
    std::ofstream os(cfg);
    os << "[data]\n"
       << "train_corpus = " << data << "/train.corpus\n"
       << "dev_corpus = " << data << "/dev.corpus\n"
       << "test_corpus = " << data << "/test.corpus\n";
  }
  const std::string args = std::string(" --config ") + cfg + kSmallData;

  const RunResult t1 = run("train" + args + " --out " + dir.file("r1"));
  CHECK(t1.exit_code == 0);
  const RunResult t2 = run("train" + args + " --out " + dir.file("r2"));
  CHECK(t2.exit_code == 0);
  CHECK(slurp(dir.file("r1/model.ckpt")) == slurp(dir.file("r2/model.ckpt")));
  CHECK(slurp(dir.file("r1/steps.csv")) == slurp(dir.file("r2/steps.csv")));

  // The thread count must not leak into the results.
  const RunResult t3 =
      run("--threads 1 train" + args + " --out " + dir.file("r3"));
  CHECK(t3.exit_code == 0);
  CHECK(slurp(dir.file("r1/model.ckpt")) == slurp(dir.file("r3/model.ckpt")));

  const std::string eval_args = " --model " + dir.file("r1/model.ckpt") +
                                " --corpus " + data + "/test.corpus";
  const RunResult e1 =
      run("eval" + eval_args + " --report " + dir.file("rep1.csv"));
  CHECK(e1.exit_code == 0);
  CHECK(e1.output.find("wer") != std::string::npos);
  const RunResult e2 =
      run("eval" + eval_args + " --report " + dir.file("rep2.csv"));
  CHECK(e2.exit_code == 0);
  CHECK(slurp(dir.file("rep1.csv")) == slurp(dir.file("rep2.csv")));
  CHECK(slurp(dir.file("rep1.csv")).substr(0, 32) ==
        "utt_id,ref_len,subs,dels,inss,we");
}

TEST_CASE("matrix trains variants and emits the comparison table") {
  TempDir dir("cli-matrix");
  const std::string data = dir.file("data");
  REQUIRE(run("gen-data --out " + data + kSmallData).exit_code == 0);
  const std::string cfg = dir.file("exp.ini");
  {
    std::ofstream os(cfg);
    os << "[data]\n"
       << "train_corpus = " << data << "/train.corpus\n"
       << "dev_corpus = " << data << "/dev.corpus\n"
       << "test_corpus = " << data << "/test.corpus\n";
  }
  const RunResult r = run("matrix --config " + cfg + " --out " +
                          dir.file("out") + " --variants ctc,selfcond" +
                          " --jobs 2" + kSmallData + " training.epochs=1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("variant") != std::string::npos);
  CHECK(r.output.find("selfcond") != std::string::npos);
  const std::string csv = slurp(dir.file("out/matrix.csv"));
  CHECK(csv.find("variant,wer,sub,del,ins") == 0);
  CHECK(csv.find("ctc,") != std::string::npos);

  SUBCASE("one variant is a usage error") {
    const RunResult bad = run("matrix --config " + cfg + " --variants ctc" +
                              kSmallData);
    CHECK(bad.exit_code == 1);
  }
  SUBCASE("unknown variants are rejected by name") {
    const RunResult bad = run("matrix --config " + cfg +
                              " --variants ctc,bogus" + kSmallData);
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("bogus") != std::string::npos);
  }
}

TEST_CASE("augment-demo prints before/after paths per operator") {
  TempDir dir("cli-demo");
  const std::string data = dir.file("data");
  REQUIRE(run("gen-data --out " + data + kSmallData).exit_code == 0);
  const std::string demo_args = " --corpus " + data +
                                "/dev.corpus --utt dev-000000" + kSmallData;

  SUBCASE("operator none leaves before equal to after") {
    const RunResult r = run("augment-demo" + demo_args);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("intermediate argmax") != std::string::npos);
    CHECK(r.output.find("after operator (none)") != std::string::npos);
  }
  SUBCASE("p_del=1 shows an all-blank corrupted path") {
    const RunResult r = run("augment-demo" + demo_args +
                            " augmentation.operator=token_delete"
                            " augmentation.p_del=1.0");
    CHECK(r.exit_code == 0);
    const auto pos = r.output.find("after token_delete:");
    REQUIRE(pos != std::string::npos);
    const auto line_end = r.output.find('\n', pos);
    const std::string line = r.output.substr(pos, line_end - pos);
    CHECK(line.find_first_of("123456789") == std::string::npos);
  }
  SUBCASE("p_ins=1 shows a blank-free corrupted path") {
    const RunResult r = run("augment-demo" + demo_args +
                            " augmentation.operator=token_insert"
                            " augmentation.p_ins=1.0");
    CHECK(r.exit_code == 0);
    const auto pos = r.output.find("after token_insert:");
    REQUIRE(pos != std::string::npos);
    const auto line_end = r.output.find('\n', pos);
    const std::string line = r.output.substr(pos, line_end - pos);
    CHECK(line.find('.') == std::string::npos);
  }
  SUBCASE("unknown utterance ids exit nonzero") {
    const RunResult r = run("augment-demo --corpus " + data +
                            "/dev.corpus --utt nope" + kSmallData);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("nope") != std::string::npos);
  }
}

TEST_CASE("oracle-check passes clean and fails under gradient mutation") {
  const RunResult ok = run("oracle-check");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[PASS]") != std::string::npos);
  CHECK(ok.output.find("cases") != std::string::npos);

  const RunResult bad = run("oracle-check --inject-ctc-grad-sign-flip");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("[FAIL]") != std::string::npos);
  CHECK(bad.output.find("finite-difference mismatch") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("train").exit_code == 1);  // missing required flags
  CHECK(run("no-such-command").exit_code == 1);
}
