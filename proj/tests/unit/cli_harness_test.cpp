// Copyright 2026 The RankNCE Authors.
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

#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "../../src/cli/commands.hpp"
#include "ranknce/cli.hpp"

namespace ranknce::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::string tmpl = (fs::temp_directory_path() / "ranknce-cli-XXXXXX").string();
    ASSERT_NE(mkdtemp(tmpl.data()), nullptr);
    root_ = tmpl;
    std::ofstream(root_ / "tiny.cfg") << "image_size = 8\nepochs = 3\nbatch = 2\n"
                                         "dataset_size = 4\neval_size = 4\n"
                                         "samples_per_layer = 8\nhead_width = 8\n";
  }
  void TearDown() override { fs::remove_all(root_); }

  int call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  std::string cfg() const { return (root_ / "tiny.cfg").string(); }

  fs::path root_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, UnknownVerbIsUsageError) {
  EXPECT_EQ(call({"bogus"}), 2);
  EXPECT_NE(err_.str().find("Usage"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsageError) { EXPECT_EQ(call({"train", "--frobnicate"}), 2); }

TEST_F(CliTest, BadConfigValueFails) {
  EXPECT_EQ(call({"train", "--config", cfg(), "--k", "0", "--out", (root_ / "o").string()}), 1);
  EXPECT_NE(err_.str().find("ranknce train"), std::string::npos);
}

TEST_F(CliTest, TrainWritesArtifacts) {
  const fs::path out = root_ / "train";
  ASSERT_EQ(call({"train", "--config", cfg(), "--out", out.string()}), 0) << err_.str();
  for (const char* f : {"history.csv", "loss_steps.csv", "checkpoint.bin", "config.txt",
                        "run_meta.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  std::ifstream meta(out / "run_meta.json");
  const std::string text{std::istreambuf_iterator<char>(meta), {}};
  EXPECT_NE(text.find("\"timestamp\""), std::string::npos);
}

TEST_F(CliTest, DumpSimilarityFromCheckpoint) {
  const fs::path train = root_ / "train";
  ASSERT_EQ(call({"train", "--config", cfg(), "--out", train.string()}), 0);
  const fs::path dump = root_ / "dump";
  ASSERT_EQ(call({"dump-similarity", "--config", cfg(), "--checkpoint",
                  (train / "checkpoint.bin").string(), "--theta", "0.5", "--out", dump.string()}),
            0)
      << err_.str();
  std::ifstream f(dump / "similarity_layer1.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "query_index,candidate_index,score,selected,pruned");
  std::size_t rows = 0, pruned_selected = 0;
  while (std::getline(f, line)) {
    ++rows;
    pruned_selected += line.ends_with("true,true");
  }
  EXPECT_EQ(rows, 8u * 7u);
  EXPECT_EQ(pruned_selected, 0u);
}

TEST_F(CliTest, ImageOutOfRangeFails) {
  EXPECT_EQ(call({"dump-similarity", "--config", cfg(), "--image", "4", "--out",
                  (root_ / "d").string()}),
            1);
}

TEST(FinalWindow, SizeAndVariance) {
  EXPECT_EQ(detail::final_window_size(200), 40u);
  EXPECT_EQ(detail::final_window_size(5), 2u);
  EXPECT_EQ(detail::final_window_size(1), 1u);
  const std::vector<double> v{9.0, 9.0, 9.0, 1.0, 3.0};
  EXPECT_DOUBLE_EQ(detail::final_window_variance(v), 2.0);
  EXPECT_DOUBLE_EQ(detail::final_window_variance(std::vector<double>{4.0}), 0.0);
}

TEST(SeedOffset, ShiftsAllThreeSeeds) {
  toy::TrainConfig c;
  c.seed_data = 100;
  c.seed_init = 200;
  c.seed_sample = 300;
  const auto s = detail::with_seed_offset(c, 3);
  EXPECT_EQ(s.seed_data, 103u);
  EXPECT_EQ(s.seed_init, 203u);
  EXPECT_EQ(s.seed_sample, 303u);
}

}  // namespace
}  // namespace ranknce::cli
