#include <random>

#include <gtest/gtest.h>

#include "soundlab/first_quantized.hpp"

using namespace soundlab;

namespace {

struct Size {
  int particles;
  int modes;
};

class Lemma1 : public ::testing::TestWithParam<Size> {};

}  // namespace

TEST_P(Lemma1, AllIdentitiesHold) {
  const Size s = GetParam();
  const Lemma1Report rep = lemma1_suite(s.particles, s.modes, 50, 1000 + 10 * s.particles + s.modes);
  ASSERT_EQ(rep.checks.size(), 7u);
  for (const IdentityCheck& c : rep.checks) {
    const bool needs_two = c.name == "q1q2-n2-norm-inequality";
    if (!needs_two || s.particles >= 2) EXPECT_GE(c.instances, 50) << c.name;
    EXPECT_TRUE(c.passed) << c.name << " max violation " << c.max_violation;
    EXPECT_LE(c.max_violation, 1e-10) << c.name;
  }
  EXPECT_TRUE(rep.all_passed());
}

INSTANTIATE_TEST_SUITE_P(SmallSystems, Lemma1,
                         ::testing::Values(Size{1, 3}, Size{2, 2}, Size{2, 4}, Size{3, 2},
                                           Size{3, 3}, Size{3, 4}, Size{4, 2}, Size{4, 3},
                                           Size{4, 4}),
                         [](const auto& info) {
                           return "N" + std::to_string(info.param.particles) + "M" +
                                  std::to_string(info.param.modes);
                         });

TEST(TensorSpace, SizeGuard) {
  EXPECT_THROW(TensorSpace(3, 6), InvalidArgument);
  EXPECT_NO_THROW(TensorSpace(4, 4));
}

TEST(TensorSpace, BadProjectorsResolveIdentity) {
  const TensorSpace space(3, 3);
  std::mt19937_64 rng(3);
  const OneParticleProjectors pq = projectors(detail::random_vector(rng, 3));
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(space.dimension(), space.dimension());
  std::vector<Eigen::MatrixXcd> pk;
  for (int k = 0; k <= 3; ++k) pk.push_back(space.bad_projector(pq, k));
  for (int k = 0; k <= 3; ++k) {
    sum += pk[k];
    EXPECT_LT((pk[k] * pk[k] - pk[k]).norm(), 1e-12);
    for (int j = 0; j < k; ++j) EXPECT_LT((pk[j] * pk[k]).norm(), 1e-12);
  }
  EXPECT_LT((sum - Eigen::MatrixXcd::Identity(space.dimension(), space.dimension())).norm(), 1e-12);
  EXPECT_EQ(space.bad_projector(pq, 4).norm(), 0.0);
}

TEST(TensorSpace, PullThroughNeedsTheShift) {
  // p1 Y q1 lowers the bad count by one, so commuting it past w^ without the
  // shift must fail for a generic weight.
  const TensorSpace space(3, 3);
  std::mt19937_64 rng(9);
  const OneParticleProjectors pq = projectors(detail::random_vector(rng, 3));
  std::vector<Eigen::MatrixXcd> pk;
  for (int k = 0; k <= 3; ++k) pk.push_back(space.bad_projector(pq, k));
  const CountingWeight w{{0.1, 0.7, 0.2, 0.9}, 0};
  const Eigen::MatrixXcd op = space.on_particle(pq.p, 0) *
                              space.multiply_one(detail::random_vector(rng, 3)) *
                              space.on_particle(pq.q, 0);
  Eigen::VectorXcd psi = space.symmetrizer() * detail::random_vector(rng, space.dimension());
  psi.normalize();
  const Eigen::MatrixXcd what = space.counting(pk, w);
  EXPECT_LT((what * op * psi - op * space.counting(pk, w.shifted(-1)) * psi).norm(), 1e-12);
  EXPECT_GT((what * op * psi - op * what * psi).norm(), 1e-3);
}
