#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "saved/trainer.hpp"
#include "support.hpp"

using namespace saved;

namespace {

Clip constant_clip(std::size_t n, Eigen::Index h, Eigen::Index w, double v) {
  Image img = Image::Constant(h, w, v);
  return Clip(std::vector<Frame>(n, Frame(img)));
}

TrainConfig small_config(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 2;
  cfg.model = ModelConfig{4, 16, 2, 1, true};
  return cfg;
}

}  // namespace

TEST(Dataset, WindowCounts) {
  const Clip ten = test::random_clip(10, 4, 4, 1);
  EXPECT_EQ(build_dataset({ten}, 1).size(), 7u);
  const auto two = build_dataset({ten, ten}, 1);
  EXPECT_EQ(two.size(), 14u);
  EXPECT_EQ(two[7].clip, 1u);
  EXPECT_EQ(two[7].window.center, 2u);
  const auto strided = build_dataset({ten}, 3);
  ASSERT_EQ(strided.size(), 1u);
  EXPECT_EQ(strided[0].window.center, 6u);
  EXPECT_TRUE(build_dataset({test::random_clip(4, 4, 4, 1)}, 2).empty());
}

TEST(Dataset, TargetReachTrimsWindows) {
  const Clip ten = test::random_clip(10, 4, 4, 1);
  // sigma with radius 3 needs t+3 <= 9 on top of t >= 2.
  const auto s = build_dataset({ten}, 1, SigmaTarget{3});
  ASSERT_FALSE(s.empty());
  for (const TrainSample& x : s) {
    EXPECT_GE(x.window.center, 3u);
    EXPECT_LE(x.window.center, 6u);
  }
  EXPECT_EQ(build_dataset({ten}, 1, RawTarget{}).size(), 7u);
}

TEST(EpochOrder, IsSeededPermutation) {
  const auto a = epoch_order(50, 3, 0);
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(50);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
  EXPECT_EQ(a, epoch_order(50, 3, 0));
  EXPECT_NE(a, epoch_order(50, 3, 1));
  EXPECT_NE(a, epoch_order(50, 4, 0));
}

TEST(EpochOrder, RoughlyUniformFirstSlot) {
  std::vector<int> hits(5, 0);
  for (int e = 0; e < 5000; ++e) ++hits[epoch_order(5, 9, e)[0]];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.learning_rate = -1e-3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Train, ConstantClipLossDecreases) {
  const Clip c = constant_clip(12, 32, 32, 0.4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.model = ModelConfig{4, 32, 5, 1, true};
  const TrainResult r = train({c}, cfg);
  ASSERT_EQ(r.report.epochs.size(), 5u);
  for (int e = 1; e < 5; ++e) EXPECT_LT(r.report.epochs[e].loss, r.report.epochs[e - 1].loss) << e;
  EXPECT_EQ(r.checkpoint.step, 5u * 3u);  // 9 windows at batch 4
}

TEST(Train, EmptyDatasetAndSizeErrors) {
  EXPECT_THROW(train({test::random_clip(3, 8, 8, 0)}, small_config(1)), std::invalid_argument);
  EXPECT_THROW(train({test::random_clip(6, 10, 8, 0)}, small_config(1)), std::invalid_argument);
}

TEST(Train, DeterministicAcrossRuns) {
  const Clip c = test::random_clip(8, 8, 8, 2);
  const TrainResult a = train({c}, small_config(2));
  const TrainResult b = train({c}, small_config(2));
  EXPECT_EQ(serialize_checkpoint(a.checkpoint), serialize_checkpoint(b.checkpoint));
  for (std::size_t e = 0; e < 2; ++e) EXPECT_EQ(a.report.epochs[e].loss, b.report.epochs[e].loss);
  TrainConfig other = small_config(2);
  other.seed = 1;
  EXPECT_NE(serialize_checkpoint(train({c}, other).checkpoint), serialize_checkpoint(a.checkpoint));
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  const Clip c = test::random_clip(8, 8, 8, 2);
  TrainConfig cfg = small_config(2);
  cfg.learning_rate = 0.0;
  const TrainResult r = train({c}, cfg);
  const auto init = init_model<float>(cfg.model, cfg.seed);
  const auto a = init.parameters();
  const auto b = r.checkpoint.params.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i]->value() == b[i]->value());
}

TEST(Train, WritesCheckpointAndCallsHook) {
  const auto dir = test::temp_dir("train_ckpt");
  TrainConfig cfg = small_config(3);
  cfg.checkpoint_path = dir / "m.ckpt";
  int calls = 0;
  const TrainResult r = train({test::random_clip(8, 8, 8, 3)}, cfg, [&](const EpochStats& s) { EXPECT_EQ(s.epoch, ++calls); });
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "m.ckpt")), serialize_checkpoint(r.checkpoint));
  EXPECT_EQ(r.report.checkpoint_path, cfg.checkpoint_path);
}

TEST(Train, AugmentationHookSeesEverySample) {
  TrainConfig cfg = small_config(2);
  int calls = 0;
  cfg.augment = [&](Image&, Image&, Image&, Image& target, CounterRng&) {
    ++calls;
    target.setZero();
  };
  train({test::random_clip(8, 8, 8, 3)}, cfg);
  EXPECT_EQ(calls, 2 * 5);
}

TEST(Report, CsvFormat) {
  TrainReport r;
  r.epochs = {{1, 0.5, 1.25}, {2, 0.25, 1.0}};
  const auto dir = test::temp_dir("report");
  write_train_report(r, dir / "r.csv");
  std::ifstream in(dir / "r.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss,seconds");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    EXPECT_EQ(std::stoi(f), rows);
    std::getline(ss, f, ',');
    EXPECT_EQ(std::stod(f), r.epochs[rows - 1].loss);
  }
  EXPECT_EQ(rows, 2);
}

TEST(Denoise, LengthEdgeReplicationAndRange) {
  const Clip c = test::random_clip(7, 8, 8, 5);
  Checkpoint ck{init_model<float>(ModelConfig{4, 16, 2, 1, true}, 1), 0, 0};
  ck.params.head.bias.value()[0] = 0.2f;
  const Clip d = denoise_clip(ck, c);
  ASSERT_EQ(d.size(), c.size());
  EXPECT_EQ(d.height(), 8);
  EXPECT_TRUE(d[0].pixels() == predict(ck.params, c[0], c[0], c[0]));
  EXPECT_TRUE(d[1].pixels() == predict(ck.params, c[1], c[0], c[0]));
  for (std::size_t t = 2; t < c.size(); ++t) EXPECT_TRUE(d[t].pixels() == predict(ck.params, c[t], c[t - 1], c[t - 2]));
  for (std::size_t t = 0; t < d.size(); ++t) {
    EXPECT_GE(d[t].pixels().minCoeff(), 0.0);
    EXPECT_LE(d[t].pixels().maxCoeff(), 1.0);
  }
}

TEST(Denoise, StrideAndDimensionErrors) {
  const Clip c = test::random_clip(7, 8, 8, 5);
  Checkpoint ck{init_model<float>(ModelConfig{4, 16, 2, 2, true}, 1), 0, 0};
  const Clip d = denoise_clip(ck, c);
  EXPECT_TRUE(d[3].pixels() == predict(ck.params, c[3], c[1], c[0]));
  EXPECT_TRUE(d[6].pixels() == predict(ck.params, c[6], c[4], c[2]));
  EXPECT_THROW(denoise_clip(ck, test::random_clip(3, 8, 6, 0)), std::invalid_argument);
}
