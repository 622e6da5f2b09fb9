#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <sstream>

#include "gradcheck.hpp"
#include "hybridgan/discriminator.hpp"
#include "hybridgan/generator.hpp"
#include "reference.hpp"

using namespace hybridgan;
using hybridgan::testing::random_tensor;

namespace {

/// Parameter count from a layer string such as "c7s1-64,d128,R256,u64,c7s1-3".
Index count_from_layer_string(const std::string& layers, Index in) {
  Index total = 0;
  std::stringstream ss(layers);
  std::string item;
  const std::regex c7(R"(c7s1-(\d+))"), d(R"(d(\d+))"), r(R"(R(\d+))"), u(R"(u(\d+))");
  std::smatch m;
  while (std::getline(ss, item, ',')) {
    if (std::regex_match(item, m, c7)) {
      const Index k = std::stoll(m[1]);
      total += 7 * 7 * in * k + k;
      in = k;
    } else if (std::regex_match(item, m, d) || std::regex_match(item, m, u)) {
      const Index k = std::stoll(m[1]);
      total += 3 * 3 * in * k + k;
      in = k;
    } else if (std::regex_match(item, m, r)) {
      const Index k = std::stoll(m[1]);
      total += 2 * (3 * 3 * k * k + k);
    } else {
      ADD_FAILURE() << "unrecognised layer " << item;
    }
  }
  return total;
}

NetworkParameters<double> randomized(NetworkParameters<double> p, std::uint64_t seed, double sd = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  for (auto& w : p.weights)
    for (Index i = 0; i < w.values.size(); ++i) w.values[i] = normal(rng);
  return p;
}

}  // namespace

TEST(Generator, DefaultLayerStringMatchesArchitecture) {
  const GeneratorConfig c;
  EXPECT_EQ(c.describe(), "c7s1-64,d128,d256,R256,R256,R256,R256,R256,R256,R256,R256,R256,u128,u64,c7s1-3");
}

TEST(Generator, DefaultParameterCountMatchesLayerStringEnumeration) {
  const GeneratorConfig c;
  const auto p = build_generator<float>(c, 1);
  EXPECT_EQ(p.param_count(), count_from_layer_string(c.describe(), 3));
  EXPECT_EQ(p.param_count(), 11378179);
}

TEST(Generator, SameSeedGivesIdenticalParameters) {
  GeneratorConfig c;
  c.base_filters = 8;
  c.num_resblocks = 2;
  EXPECT_EQ(build_generator<float>(c, 5), build_generator<float>(c, 5));
  EXPECT_NE(build_generator<float>(c, 5), build_generator<float>(c, 6));
}

TEST(Generator, PreservesShapeAndStaysInTanhRange) {
  GeneratorConfig c;
  c.base_filters = 4;
  c.num_resblocks = 1;
  const auto p = build_generator<float>(c, 2);
  std::mt19937_64 rng(1);
  const Tensor<float> x = random_tensor({1, 3, 64, 64}, rng).cast<float>();
  const Tensor<float> y = generator_forward(p, x);
  EXPECT_EQ(y.shape(), (Shape4{1, 3, 64, 64}));
  EXPECT_LE(y.values().maxCoeff(), 1.f);
  EXPECT_GE(y.values().minCoeff(), -1.f);
}

TEST(Generator, FullSizeInputKeepsShape) {
  GeneratorConfig c;
  c.base_filters = 2;
  c.num_resblocks = 1;
  const auto p = build_generator<float>(c, 2);
  const Tensor<float> x(1, 3, 256, 256);
  EXPECT_EQ(generator_forward(p, x).shape(), (Shape4{1, 3, 256, 256}));
}

TEST(Generator, BlindToGlobalInputGainAndOffset) {
  GeneratorConfig c;
  c.base_filters = 4;
  c.num_resblocks = 1;
  const auto p = build_generator<double>(c, 3);
  std::mt19937_64 rng(5);
  const Tensor<double> x = random_tensor({1, 3, 16, 16}, rng, 0.4);
  Tensor<double> shifted = x;
  for (Index ch = 0; ch < 3; ++ch)
    for (Index h = 0; h < 16; ++h)
      for (Index w = 0; w < 16; ++w) shifted(0, ch, h, w) = 0.6 * x(0, ch, h, w) + 0.1 * double(ch + 1);
  const Tensor<double> a = generator_forward(p, x), b = generator_forward(p, shifted);
  EXPECT_LT((a.values() - b.values()).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Generator, MatchesStraightLineReference) {
  GeneratorConfig c;
  c.base_filters = 3;
  c.num_resblocks = 2;
  c.output_channels = 2;
  const auto p = randomized(build_generator<double>(c, 4), 11);
  std::mt19937_64 rng(3);
  const Tensor<double> x = random_tensor({2, 3, 12, 8}, rng);
  const Tensor<double> fast = generator_forward(p, x);
  const Tensor<double> slow = hybridgan::testing::ReferenceNet(generator_plan(c), p).forward(x);
  ASSERT_EQ(fast.shape(), slow.shape());
  EXPECT_LT((fast.values() - slow.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Generator, RejectsBadInputs) {
  GeneratorConfig c;
  c.base_filters = 2;
  c.num_resblocks = 1;
  const auto p = build_generator<float>(c, 2);
  EXPECT_THROW(generator_forward(p, Tensor<float>(1, 1, 8, 8)), ShapeError);
  EXPECT_THROW(generator_forward(p, Tensor<float>(1, 3, 10, 8)), ShapeError);
  c.num_resblocks = 0;
  EXPECT_THROW(build_generator<float>(c, 2), ConfigError);
}

TEST(Discriminator, DefaultPlanHasFourLayersFirstUnnormalized) {
  const DiscriminatorConfig c;
  const NetworkPlan plan = discriminator_plan(c);
  const auto units = plan.units();
  ASSERT_EQ(units.size(), 5u);
  EXPECT_FALSE(units[0]->norm);
  for (int i = 1; i < 4; ++i) EXPECT_TRUE(units[i]->norm);
  EXPECT_FALSE(units[4]->norm);
  EXPECT_EQ(units[4]->out_channels, 1);
  EXPECT_EQ(units[0]->in_channels, 3);
  EXPECT_EQ(c.describe(), "C64-C128-C256-C512");
}

TEST(Discriminator, ConditionChannelsWidenFirstLayer) {
  DiscriminatorConfig c;
  c.condition_channels = 3;
  EXPECT_EQ(discriminator_plan(c).units()[0]->in_channels, 6);
}

TEST(Discriminator, ReceptiveFieldAndPatchMap) {
  const DiscriminatorConfig c;
  EXPECT_EQ(receptive_field(c), 70);
  EXPECT_EQ(patch_map_size(c, 256), 30);

  DiscriminatorConfig one;
  one.layer_filters = {4};
  one.layer_strides = {2};
  EXPECT_EQ(receptive_field(one), 10);

  NetworkPlan pointwise;
  ConvUnit u;
  u.geometry.kernel = 1;
  pointwise.blocks.push_back({{u}});
  EXPECT_EQ(receptive_field(pointwise), 1);
}

TEST(Discriminator, SingleLayerReceptiveFieldByPerturbation) {
  DiscriminatorConfig c;
  c.layer_filters = {2};
  c.layer_strides = {2};
  const auto p = randomized(build_discriminator<double>(c, 1), 8);
  std::mt19937_64 rng(2);
  const Tensor<double> x = random_tensor({1, 3, 24, 24}, rng);
  const Tensor<double> base = discriminator_forward(p, x);
  const Index cy = 4, cx = 5;
  Index min_y = 100, max_y = -1, min_x = 100, max_x = -1;
  for (Index y = 0; y < 24; ++y)
    for (Index xx = 0; xx < 24; ++xx) {
      Tensor<double> moved = x;
      moved(0, 1, y, xx) += 1.0;
      if (discriminator_forward(p, moved)(0, 0, cy, cx) != base(0, 0, cy, cx)) {
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        min_x = std::min(min_x, xx);
        max_x = std::max(max_x, xx);
      }
    }
  EXPECT_EQ(max_y - min_y + 1, 10);
  EXPECT_EQ(max_x - min_x + 1, 10);
}

TEST(Discriminator, ScoresOnlyDependOnReceptiveField) {
  DiscriminatorConfig c;
  c.layer_filters = {4, 8};
  c.layer_strides = {2, 1};
  auto params = randomized(build_discriminator<double>(c, 1), 5);
  std::mt19937_64 rng(3);
  // Without normalization every score is local; perturb far outside cell (0, 0).
  NetworkPlan plan = discriminator_plan(c);
  for (auto& b : plan.blocks)
    for (auto& u : b.units) u.norm = false;
  const Tensor<double> x = random_tensor({1, 3, 48, 48}, rng);
  Tensor<double> far = x;
  far(0, 0, 47, 47) += 5.0;
  const Tensor<double> a = run_network(plan, params, x);
  const Tensor<double> b = run_network(plan, params, far);
  EXPECT_EQ(a(0, 0, 0, 0), b(0, 0, 0, 0));
  EXPECT_NE(a(0, 0, a.height() - 1, a.width() - 1), b(0, 0, b.height() - 1, b.width() - 1));
}

TEST(Discriminator, ConditionOrderMatters) {
  DiscriminatorConfig c;
  c.layer_filters = {4, 8};
  c.layer_strides = {2, 1};
  c.condition_channels = 3;
  const auto p = randomized(build_discriminator<double>(c, 1), 6);
  std::mt19937_64 rng(4);
  const Tensor<double> a = random_tensor({1, 3, 16, 16}, rng);
  const Tensor<double> b = random_tensor({1, 3, 16, 16}, rng);
  EXPECT_FALSE(discriminator_forward(p, a, &b) == discriminator_forward(p, b, &a));
}

TEST(Discriminator, ArityAndShapeErrors) {
  DiscriminatorConfig c;
  c.layer_filters = {4};
  c.layer_strides = {2};
  const auto plain = build_discriminator<float>(c, 1);
  c.condition_channels = 3;
  const auto conditional = build_discriminator<float>(c, 1);
  const Tensor<float> img(1, 3, 16, 16), small(1, 3, 8, 8);
  EXPECT_THROW(discriminator_forward(plain, img, &img), ArityError);
  EXPECT_THROW(discriminator_forward(conditional, img), ArityError);
  EXPECT_THROW(discriminator_forward(conditional, img, &small), ShapeError);
  c.layer_strides = {2, 2};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Discriminator, MatchesStraightLineReference) {
  DiscriminatorConfig c;
  c.layer_filters = {3, 5, 4};
  c.layer_strides = {2, 2, 1};
  c.condition_channels = 2;
  const auto p = randomized(build_discriminator<double>(c, 3), 12);
  std::mt19937_64 rng(5);
  const Tensor<double> img = random_tensor({1, 3, 20, 20}, rng);
  const Tensor<double> cond = random_tensor({1, 2, 20, 20}, rng);
  const Tensor<double> fast = discriminator_forward(p, img, &cond);
  const Tensor<double> slow =
      hybridgan::testing::ReferenceNet(discriminator_plan(c), p).forward(concat_channels(cond, img));
  ASSERT_EQ(fast.shape(), slow.shape());
  EXPECT_LT((fast.values() - slow.values()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Networks, GradientsMatchFiniteDifferences) {
  GeneratorConfig g;
  g.base_filters = 2;
  g.num_resblocks = 1;
  auto gen = randomized(build_generator<double>(g, 1), 21);
  std::mt19937_64 rng(6);
  Tensor<double> x = random_tensor({1, 3, 8, 8}, rng);
  const Tensor<double> target = random_tensor({1, 3, 8, 8}, rng);
  auto loss = [&] { return (generator_forward(gen, x).values() - target.values()).squaredNorm(); };
  ForwardTape<double> tape;
  const Tensor<double> out = generator_forward(gen, x, &tape);
  Tensor<double> dy(out.shape());
  dy.values() = 2 * (out.values() - target.values());
  ParameterGrads<double> grads = zeros_like(gen);
  const Tensor<double> dx = generator_backward(gen, tape, dy, &grads, true);
  EXPECT_LT(hybridgan::testing::parameter_gradient_error(gen, loss, grads, rng), 1e-5);
  EXPECT_LT(hybridgan::testing::input_gradient_error(x, loss, dx, rng), 1e-5);

  DiscriminatorConfig d;
  d.layer_filters = {3, 4};
  d.layer_strides = {2, 1};
  d.condition_channels = 3;
  auto disc = randomized(build_discriminator<double>(d, 1), 22);
  Tensor<double> img = random_tensor({2, 3, 12, 12}, rng);
  Tensor<double> cond = random_tensor({2, 3, 12, 12}, rng);
  auto dloss = [&] { return discriminator_forward(disc, img, &cond).values().array().cube().sum(); };
  ForwardTape<double> dtape;
  const Tensor<double> s = discriminator_forward(disc, img, &cond, &dtape);
  Tensor<double> ds(s.shape());
  ds.values() = 3 * s.values().array().square().matrix();
  ParameterGrads<double> dgrads = zeros_like(disc);
  const auto in = discriminator_backward(disc, dtape, ds, &dgrads, true);
  EXPECT_LT(hybridgan::testing::parameter_gradient_error(disc, dloss, dgrads, rng), 1e-5);
  EXPECT_LT(hybridgan::testing::input_gradient_error(img, dloss, in.image, rng), 1e-5);
  EXPECT_LT(hybridgan::testing::input_gradient_error(cond, dloss, in.condition, rng), 1e-5);
}

TEST(Ops, TransposedConvolutionIsAdjointOfConvolution) {
  std::mt19937_64 rng(7);
  const ops::ConvGeometry g{3, 2, 1, ops::PadMode::zero, 0};
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(4, 3 * 9);
  w.setRandom();
  const Eigen::VectorXd zero_in = Eigen::VectorXd::Zero(4), zero_out = Eigen::VectorXd::Zero(3);
  const Tensor<double> x = random_tensor({1, 3, 9, 9}, rng);
  const Tensor<double> y = random_tensor({1, 4, 5, 5}, rng);
  const Tensor<double> ax = ops::conv2d<double>(x, ops::WeightMap<double>(w.data(), 4, 27),
                                                ops::BiasMap<double>(zero_in.data(), 4), g);
  // conv weight (out, in*k*k) reinterpreted as (in_t = out, out_t*k*k) is the adjoint layout.
  const Tensor<double> aty = ops::conv_transpose2d<double>(y, ops::WeightMap<double>(w.data(), 4, 27),
                                                           ops::BiasMap<double>(zero_out.data(), 3), g);
  ASSERT_EQ(aty.shape(), x.shape());
  EXPECT_NEAR(ax.values().dot(y.values()), x.values().dot(aty.values()), 1e-9);
}

TEST(Ops, InstanceNormNormalizesEachPlane) {
  std::mt19937_64 rng(8);
  const Tensor<double> x = random_tensor({2, 3, 5, 7}, rng, 4.0);
  Eigen::VectorXd inv_std;
  const Tensor<double> y = ops::instance_norm(x, inv_std);
  EXPECT_EQ(inv_std.size(), 6);
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 3; ++c) {
      const auto row = y.sample(n).row(c);
      EXPECT_NEAR(row.mean(), 0.0, 1e-12);
      EXPECT_NEAR((row.array() - row.mean()).square().mean(), 1.0, 1e-3);
    }
}

TEST(Config, DescriptorRoundTrip) {
  DiscriminatorConfig d;
  d.condition_channels = 3;
  d.layer_filters = {8, 16};
  d.layer_strides = {2, 1};
  d.leaky_slope = 0.1;
  EXPECT_EQ(discriminator_config_from(to_key_values(d, "d."), "d."), d);
  GeneratorConfig g;
  g.base_filters = 12;
  g.output_channels = 1;
  EXPECT_EQ(generator_config_from(to_key_values(g, "g."), "g."), g);
  auto kv = to_key_values(g, "g.");
  kv["g.descriptor_version"] = "99";
  EXPECT_THROW(generator_config_from(kv, "g."), CompatibilityError);
  EXPECT_THROW(discriminator_config_from(to_key_values(g, "g."), "g."), CompatibilityError);
}
