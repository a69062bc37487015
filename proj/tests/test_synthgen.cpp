#include <gtest/gtest.h>

#include <cmath>

#include "iseg/synthgen.hpp"

using namespace iseg;

TEST(Generate, NoiseFreeDiskIsRasterizedDisk) {
  SynthSpec spec;
  spec.seed = Seed{3};
  const SynthSample s = generate(spec);
  ASSERT_EQ(s.gt_instances.size(), 1u);
  const auto& info = s.instances[0];
  EXPECT_DOUBLE_EQ(info.cy, 31.5);
  EXPECT_DOUBLE_EQ(info.cx, 31.5);
  const BinaryMask& m = s.gt_instances[0];
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c) {
      const double d = std::hypot(r - info.cy, c - info.cx);
      EXPECT_EQ(m.at(r, c), d <= info.radius ? 1 : 0);
    }
}

TEST(Generate, Deterministic) {
  for (ShapeKind k : {ShapeKind::disk, ShapeKind::ellipse, ShapeKind::blob}) {
    SynthSpec spec;
    spec.shape_kind = k;
    spec.n_instances = 3;
    spec.boundary_noise = 1.5;
    spec.seed = Seed{17};
    const SynthSample a = generate(spec), b = generate(spec);
    EXPECT_EQ(a.gt_instances, b.gt_instances);
    for (std::size_t c = 0; c < kFeatureChannels; ++c) EXPECT_EQ(a.features[c], b.features[c]);
  }
}

TEST(Generate, InstancesDoNotOverlap) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthSpec spec;
    spec.n_instances = 4;
    spec.shape_kind = ShapeKind::blob;
    spec.seed = Seed{seed};
    const SynthSample s = generate(spec);
    ASSERT_EQ(s.gt_instances.size(), 4u);
    for (std::size_t i = 0; i < 64 * 64; ++i) {
      int owners = 0;
      for (const auto& m : s.gt_instances) owners += m[i];
      EXPECT_LE(owners, 1);
    }
  }
}

TEST(Generate, NestedInnerIsStrictSubset) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec spec;
    spec.n_instances = 2;
    spec.nesting = true;
    spec.shape_kind = ShapeKind::ellipse;
    spec.seed = Seed{seed};
    const SynthSample s = generate(spec);
    const BinaryMask& outer = s.gt_instances[0];
    const BinaryMask& inner = s.gt_instances[1];
    for (std::size_t i = 0; i < outer.size(); ++i) EXPECT_LE(inner[i], outer[i]);
    EXPECT_LT(count_ones(inner), count_ones(outer));
    EXPECT_GT(count_ones(inner), 0u);
  }
}

TEST(Generate, Errors) {
  SynthSpec spec;
  spec.height = 4;
  EXPECT_THROW(generate(spec), ParameterError);
  spec = {};
  spec.nesting = true;
  EXPECT_THROW(generate(spec), ParameterError);
  spec = {};
  spec.height = spec.width = 8;
  spec.n_instances = 40;
  EXPECT_THROW(generate(spec), GenerationError);
}

TEST(DifficultyProfile, Examples) {
  SynthSpec spec;
  const SynthSample s = generate(spec);
  const BinaryMask& gt = s.gt_instances[0];
  const DifficultyProfile perfect = difficulty_profile(s, to_prob(gt));
  EXPECT_EQ(perfect.foreground[19] + perfect.background[19], 64u * 64u);
  const DifficultyProfile half = difficulty_profile(s, ProbMap(64, 64, 0.5));
  EXPECT_EQ(half.foreground[10], count_ones(gt));
  EXPECT_EQ(half.total(), 64u * 64u);
  EXPECT_THROW(difficulty_profile(s, ProbMap(64, 64, 0.5), 3), ParameterError);
}

TEST(ShapeKind, Parse) {
  EXPECT_EQ(parse_shape_kind("blob"), ShapeKind::blob);
  EXPECT_THROW(parse_shape_kind("square"), ParameterError);
}
