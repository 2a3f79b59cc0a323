/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedguard/transfer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fedguard/error.h"
#include "fedguard/fingerprint.h"
#include "fedguard/nn/training.h"
#include "fedguard/random.h"
#include "fedguard/zoo.h"

namespace fedguard::transfer {
namespace {

template <typename Fn>
std::string ErrorCode(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<double> RandomBits(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (double& v : x) v = Uniform01(rng) < 0.2 ? 1.0 : 0.0;
  return x;
}

class TransferTest : public ::testing::Test {
 protected:
  void SetUp() override { models_ = zoo::BuildAll(DefaultRegistry(), zoo::Scale::kDesk, 3); }
  zoo::Zoo models_;
};

TEST_F(TransferTest, SplitStaticAtPooling) {
  SplitResult s = SplitAndFreeze(models_.at("Static").network);
  EXPECT_EQ(s.head_input_width, 32u);
  EXPECT_EQ(s.base.layer(s.base.layer_count() - 1).kind(), nn::LayerKind::kGlobalAvgPool);
  EXPECT_EQ(s.base.TrainableParameterCount(), 0u);
}

TEST_F(TransferTest, SplitMlpAfterFirstHidden) {
  SplitResult s = SplitAndFreeze(models_.at("HM1").network);
  EXPECT_EQ(s.head_input_width, 64u);
}

TEST_F(TransferTest, MissingBoundary) {
  nn::Network net("plain", {2});
  net.Add(nn::Dense(2)).Add(nn::Act(nn::Activation::kSigmoid));
  EXPECT_EQ(ErrorCode([&] { SplitAndFreeze(net); }), "missing_boundary");
}

TEST_F(TransferTest, HeadParameterCountClosedForm) {
  HeadSpec spec;
  const std::size_t in = 32;
  const std::size_t expected = (in + 1) * 64 + (64 + 1) * 32 + (32 + 1) * 2;
  EXPECT_EQ(spec.ParameterCount(in), expected);
  EXPECT_EQ(BuildHead(in, spec, 1).ParameterCount(), expected);
  HeadSpec small{{5}, nn::Activation::kTanh, std::nullopt};
  EXPECT_EQ(AttachHead(SplitAndFreeze(models_.at("HM5").network).base, small, 2)
                .head_parameter_count(),
            (32 + 1) * 5 + (5 + 1) * 2);
}

TEST_F(TransferTest, CompositeEqualsManualChain) {
  Rng rng(4);
  for (const std::string& name : zoo::CollaborativeModelNames()) {
    const zoo::ZooModel& m = models_.at(name);
    CollaborativeModel cm = AttachHead(SplitAndFreeze(m.network).base, HeadSpec{}, 9);
    nn::Network composite = cm.Composite();
    for (int i = 0; i < 100; ++i) {
      const auto x = RandomBits(rng, m.projection.size());
      const nn::Tensor emb = cm.base().Forward(x);
      const auto manual = cm.head().Predict(emb.values());
      const auto direct = cm.Predict(x);
      const auto joined = composite.Predict(x);
      ASSERT_NEAR(direct[0], manual[0], 1e-6);
      ASSERT_NEAR(direct[1], manual[1], 1e-6);
      ASSERT_NEAR(joined[0], manual[0], 1e-6);
      ASSERT_NEAR(joined[1], manual[1], 1e-6);
    }
  }
}

TEST_F(TransferTest, SameSeedSameHead) {
  const nn::Network base = SplitAndFreeze(models_.at("HM3").network).base;
  EXPECT_EQ(AttachHead(base, HeadSpec{}, 5).ExportHead(), AttachHead(base, HeadSpec{}, 5).ExportHead());
  EXPECT_NE(AttachHead(base, HeadSpec{}, 5).ExportHead(), AttachHead(base, HeadSpec{}, 6).ExportHead());
}

TEST_F(TransferTest, WrongWidthRejected) {
  HeadSpec spec;
  spec.input_width = 31;
  const nn::Network base = SplitAndFreeze(models_.at("Static").network).base;
  EXPECT_EQ(ErrorCode([&] { AttachHead(base, spec, 1); }), "width_mismatch");
  EXPECT_EQ(ErrorCode([&] { CollaborativeModel(base, BuildHead(7, HeadSpec{}, 1), "x"); }),
            "width_mismatch");
}

TEST_F(TransferTest, BaseBitwiseConstantUnderHeadTraining) {
  const zoo::ZooModel& m = models_.at("HM6");
  CollaborativeModel cm = AttachHead(SplitAndFreeze(m.network).base, HeadSpec{}, 2);
  nn::Network composite = cm.Composite();
  const std::size_t boundary = *composite.base_boundary();
  const std::uint64_t base_hash = composite.ParameterHash(0, boundary);
  const std::uint64_t model_hash = cm.BaseHash();
  Rng rng(7);
  for (int step = 0; step < 50; ++step) {
    std::vector<nn::Sample> batch;
    for (int i = 0; i < 4; ++i) {
      batch.push_back({RandomBits(rng, m.projection.size()), i % 2 ? Label::kMalware : Label::kBenign});
    }
    nn::BackwardAndStep(composite, batch, 0.5);
    std::vector<nn::Sample> emb;
    for (const auto& s : batch) emb.push_back({cm.Embed(s.input), s.label});
    nn::BackwardAndStep(cm.mutable_head(), emb, 0.5);
  }
  EXPECT_EQ(composite.ParameterHash(0, boundary), base_hash);
  EXPECT_EQ(cm.BaseHash(), model_hash);
}

TEST_F(TransferTest, ExportImportRoundTrip) {
  const nn::Network base = SplitAndFreeze(models_.at("HM5").network).base;
  CollaborativeModel a = AttachHead(base, HeadSpec{}, 1);
  CollaborativeModel b = AttachHead(base, HeadSpec{}, 2);
  const std::uint64_t base_hash = b.BaseHash();
  b.ImportHead(a.ExportHead());
  EXPECT_EQ(b.ExportHead(), a.ExportHead());
  EXPECT_EQ(b.BaseHash(), base_hash);
  Rng rng(3);
  const auto x = RandomBits(rng, base.input_width());
  EXPECT_EQ(a.Predict(x), b.Predict(x));

  std::vector<double> wrong(a.head_parameter_count() + 1, 0.0);
  EXPECT_EQ(ErrorCode([&] { b.ImportHead(wrong); }), "length_mismatch");

  std::vector<double> nan = a.ExportHead();
  nan[3] = std::nan("");
  b.ImportHead(nan);
  EXPECT_FALSE(b.head_finite());
  b.ImportHead(a.ExportHead());
  EXPECT_TRUE(b.head_finite());
}

TEST_F(TransferTest, HeadFileRoundTrip) {
  const nn::Network base = SplitAndFreeze(models_.at("HM3").network).base;
  CollaborativeModel a = AttachHead(base, HeadSpec{}, 1);
  std::vector<double> w = a.ExportHead();
  for (double& v : w) v = static_cast<float>(v);
  a.ImportHead(w);
  const auto path = std::filesystem::temp_directory_path() / "fedguard_head.adwt";
  SaveHead(a, path);
  CollaborativeModel b = AttachHead(base, HeadSpec{}, 2);
  LoadHead(b, path);
  EXPECT_EQ(b.ExportHead(), a.ExportHead());
}

}  // namespace
}  // namespace fedguard::transfer
