// Copyright 2026 The Melanoscope Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "gtest/gtest.h"
#include "test_util.h"

namespace melanoscope {
namespace {

using testing::ReadBytes;
using testing::TempDir;

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult RunCli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + MELANOSCOPE_CLI_PATH + "\" " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

TEST(CliTest, HelpExitsZero) {
  const CliResult r = RunCli("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("pipeline"), std::string::npos);
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(RunCli("").code, 1);
  EXPECT_EQ(RunCli("train").code, 1);
  EXPECT_EQ(RunCli("pipeline --workers many").code, 1);
  EXPECT_EQ(RunCli("synth --verdicts some").code, 1);
}

TEST(CliTest, InvalidConfigExitsOneWithMessage) {
  TempDir dir;
  const CliResult r = RunCli("pipeline --slide " + (dir / "s.png").string() +
                             " --t-p 1.5 --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("t_p must be in (0, 1], got 1.5"), std::string::npos)
      << r.output;
  const CliResult missing =
      RunCli("segment --slide " + (dir / "absent.png").string());
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.output.find("missing slide"), std::string::npos);
}

TEST(CliTest, RuntimeFailureExitsTwo) {
  TempDir dir;
  testing::WriteBytes(dir / "bad.png", "\x89PNG\r\n\x1a\n truncated");
  const CliResult r = RunCli("segment --slide " + (dir / "bad.png").string() +
                             " --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 1) << r.output;  // unreadable slides fail the input check
  testing::WriteBytes(dir / "x.onnx", "not a model");
  const CliResult synth = RunCli("synth --count 1 --width 512 --height 512 --out " +
                                 (dir / "syn").string());
  ASSERT_EQ(synth.code, 0) << synth.output;
  const CliResult neural =
      RunCli("pipeline --config " + (dir / "syn" / "config.json").string() +
             " --backend neural --model " + (dir / "x.onnx").string() +
             " --out " + (dir / "o").string());
  EXPECT_EQ(neural.code, 2) << neural.output;
}

TEST(CliTest, SynthThenPipeline) {
  TempDir dir;
  const std::string syn = (dir / "syn").string();
  CliResult r = RunCli("synth --count 2 --width 2048 --height 2048 --levels 2 --out " +
                       syn);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("Melanoma"), std::string::npos);
  r = RunCli("pipeline --config " + syn + "/config.json --magnification 40 --out " +
             (dir / "o").string() + " --no-dataset");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("verdict"), std::string::npos);
  EXPECT_NE(r.output.find("total "), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "o" / "dataset"));
  r = RunCli("evaluate --config " + syn + "/config.json --magnification 40 --out " +
             (dir / "o").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(r.output.rfind("model,acc_pct,", 0), 0u) << r.output;
  EXPECT_EQ(RunCli("verdict --config " + syn + "/config.json --out " +
                   (dir / "none").string()).code, 1);
}

}  // namespace
}  // namespace melanoscope
