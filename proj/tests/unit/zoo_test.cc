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

#include "fedguard/zoo.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fedguard/error.h"
#include "fedguard/fingerprint.h"
#include "fedguard/random.h"

namespace fedguard::zoo {
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

std::size_t Width(const std::vector<std::string>& names) {
  const TemplateRegistry reg = DefaultRegistry();
  std::size_t w = 0;
  for (const auto& n : names) w += reg.At(n).width();
  return w;
}

// Closed form: 3x3 convs in double-conv blocks, then the dense stack.
std::size_t StaticParams(const std::vector<std::size_t>& filters, std::size_t dense) {
  std::size_t total = 0, c = 1;
  for (std::size_t f : filters) {
    total += (9 * c + 1) * f + (9 * f + 1) * f;
    c = f;
  }
  total += (c + 1) * dense + (dense + 1) * dense + (dense + 1) * 2;
  return total;
}

TEST(StaticTest, DeskParameterCountMatchesClosedForm) {
  Rng rng(1);
  nn::Network net = BuildStatic(256, Scale::kDesk, rng);
  EXPECT_EQ(net.ParameterCount(), StaticParams({4, 8, 16, 32}, 64));
  // After four pools the 16x16 grid is 1x1.
  std::size_t pools = 0;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (net.layer(i).kind() == nn::LayerKind::kGlobalAvgPool) {
      EXPECT_EQ(net.layer(i).input_shape(), (nn::Shape{1, 1, 32}));
      EXPECT_EQ(net.base_boundary(), i + 1);
    }
    pools += net.layer(i).kind() == nn::LayerKind::kMaxPool;
  }
  EXPECT_EQ(pools, 4u);
}

TEST(StaticTest, PaperStructureAudit) {
  Rng rng(1);
  nn::Network net = BuildStatic(256, Scale::kPaper, rng);
  std::vector<std::size_t> conv_filters, dense_units;
  std::size_t pools = 0;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const nn::Layer& l = net.layer(i);
    if (l.kind() == nn::LayerKind::kConv2D) conv_filters.push_back(l.output_shape().back());
    if (l.kind() == nn::LayerKind::kDense) dense_units.push_back(l.output_shape()[0]);
    pools += l.kind() == nn::LayerKind::kMaxPool;
  }
  EXPECT_EQ(conv_filters, (std::vector<std::size_t>{16, 16, 32, 32, 64, 64, 128, 128}));
  EXPECT_EQ(pools, 4u);
  EXPECT_EQ(dense_units, (std::vector<std::size_t>{1024, 1024, 2}));
  EXPECT_EQ(net.ParameterCount(), StaticParams({16, 32, 64, 128}, 1024));
  EXPECT_TRUE(net.EndsWithSigmoid());
}

TEST(StaticTest, GridTooSmall) {
  Rng rng(1);
  EXPECT_EQ(ErrorCode([&] { BuildStatic(16, Scale::kDesk, rng); }), "grid_too_small");
  EXPECT_EQ(GridSide(225), 15u);
  EXPECT_EQ(GridSide(226), 16u);
}

TEST(MlpHelperTest, InputWidthsAndErrors) {
  EXPECT_EQ(TableSpec("HM1").templates,
            (std::vector<std::string>{"permissions", "protection-levels", "device-features"}));
  const auto hm4 = TableSpec("HM4").templates;
  EXPECT_NE(std::find(hm4.begin(), hm4.end(), "api-classes"), hm4.end());
  EXPECT_EQ(std::find(hm4.begin(), hm4.end(), "api-sensitive-methods"), hm4.end());
  Rng rng(2);
  const std::size_t w = Width(TableSpec("HM1").templates);
  nn::Network net = BuildMlpHelper("HM1", w, Scale::kDesk, rng);
  EXPECT_EQ(net.input_width(), w);
  EXPECT_EQ(net.ParameterCount(), (w + 1) * 64 + 65 * 32 + 33 * 2);
  EXPECT_EQ(net.base_boundary(), 3u);
  EXPECT_EQ(ErrorCode([&] { BuildMlpHelper("HM3", w, Scale::kDesk, rng); }), "wrong_name");
}

TEST(CnnHelperTest, TemplatesAndSmoke) {
  const auto hm6 = TableSpec("HM6").templates;
  const auto stat = TableSpec("Static").templates;
  std::set<std::string> expected(stat.begin(), stat.end());
  expected.erase("manifest-attributes");
  EXPECT_EQ(std::set<std::string>(hm6.begin(), hm6.end()), expected);
  EXPECT_EQ(Width(TableSpec("HM3").templates), 64u + 8 + 16 + 40 + 32);

  Rng rng(3);
  const std::size_t w = Width(TableSpec("HM5").templates);
  nn::Network net = BuildCnnHelper("HM5", w, Scale::kDesk, rng);
  std::vector<double> x(w);
  for (double& v : x) v = Uniform01(rng) < 0.2;
  auto p = net.Predict(x);
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  std::size_t convs = 0, pools = 0;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    convs += net.layer(i).kind() == nn::LayerKind::kConv2D;
    pools += net.layer(i).kind() == nn::LayerKind::kMaxPool;
  }
  EXPECT_EQ(convs, 4u);
  EXPECT_EQ(pools, 2u);
  EXPECT_EQ(ErrorCode([&] { BuildCnnHelper("HM1", w, Scale::kDesk, rng); }), "wrong_name");
}

TEST(BuildAllTest, SevenModelsWithMatchingWidths) {
  const TemplateRegistry reg = DefaultRegistry();
  Zoo zoo = BuildAll(reg, Scale::kDesk, 9);
  ASSERT_EQ(zoo.size(), 7u);
  const auto stat = TableSpec("Static").templates;
  const std::set<std::string> all(stat.begin(), stat.end());
  EXPECT_EQ(all.size(), reg.size());
  for (const std::string& name : ModelNames()) {
    const ZooModel& m = zoo.at(name);
    EXPECT_EQ(m.network.input_width(), m.projection.size()) << name;
    EXPECT_EQ(m.projection.size(), Width(m.spec.templates)) << name;
    EXPECT_TRUE(std::is_sorted(m.projection.begin(), m.projection.end()));
    for (const auto& t : m.spec.templates) EXPECT_TRUE(all.count(t)) << name << " " << t;
    if (name != "Static") {
      EXPECT_GE(m.spec.templates.size(), 1u);
      EXPECT_LT(m.spec.templates.size(), all.size());
    }
    const bool cnn = name == "Static" || name == "HM3" || name == "HM5" || name == "HM6";
    EXPECT_EQ(m.spec.architecture, cnn ? Architecture::kCnn : Architecture::kMlp) << name;
  }
}

TEST(BuildAllTest, MissingTemplateIsNamed) {
  TemplateWidths widths = DefaultTemplateWidths();
  widths.erase(std::remove_if(widths.begin(), widths.end(),
                              [](const auto& w) { return w.first == "intents"; }),
               widths.end());
  try {
    BuildAll(BuildRegistry(widths), Scale::kDesk, 1);
    FAIL() << "expected missing_template";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing_template");
    EXPECT_NE(std::string(e.what()).find("intents"), std::string::npos);
  }
}

TEST(BuildAllTest, SeedDeterminesWeights) {
  const TemplateRegistry reg = DefaultRegistry();
  Zoo a = BuildAll(reg, Scale::kDesk, 4), b = BuildAll(reg, Scale::kDesk, 4);
  for (const auto& name : ModelNames()) {
    EXPECT_EQ(a.at(name).network.FlatParameters(false), b.at(name).network.FlatParameters(false));
  }
}

}  // namespace
}  // namespace fedguard::zoo
