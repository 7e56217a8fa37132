#include "itdr/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "itdr/rng.hpp"
#include "test_util.hpp"

namespace itdr {
namespace {

using test::random_pose;
using test::random_transform;

// Independent brute-force minimizer of the summed squared angular distance
// over a uniform grid of candidate angles.
double grid_circular_mean(const std::vector<double>& angles, int grid_points) {
  double best = 0.0, best_obj = std::numeric_limits<double>::max();
  for (int i = 0; i < grid_points; ++i) {
    const double x = -kPi + kTwoPi * (i + 0.5) / grid_points;
    double obj = 0.0;
    for (double a : angles) {
      const double d = std::remainder(a - x, kTwoPi);
      obj += d * d;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

TEST(WrapAngle, Examples) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(3.0 * kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);  // half-open interval convention
  EXPECT_NEAR(wrap_angle(kTwoPi + 0.25), 0.25, 1e-12);
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(wrap_angle(std::nan("")), std::invalid_argument);
}

TEST(WrapAngle, AlwaysInHalfOpenInterval) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double theta = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(theta);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(w - theta, kTwoPi), 0.0, 1e-9);
  }
}

TEST(RigidTransform2, ComposeExamples) {
  const RigidTransform2 t(0.3, 1.0, 2.0);
  const RigidTransform2 with_identity = compose(t, RigidTransform2::identity());
  EXPECT_DOUBLE_EQ(with_identity.rotation(), t.rotation());
  EXPECT_DOUBLE_EQ(with_identity.dx(), t.dx());
  EXPECT_DOUBLE_EQ(with_identity.dy(), t.dy());

  const RigidTransform2 quarter = RigidTransform2::from_rotation(kPi / 2);
  const RigidTransform2 half = compose(quarter, quarter);
  EXPECT_NEAR(half.rotation(), kPi, 1e-12);
  EXPECT_NEAR(half.dx(), 0.0, 1e-12);
  EXPECT_NEAR(half.dy(), 0.0, 1e-12);

  // rotate the point (1, 0) by pi/2, then translate by (1, 0)
  const RigidTransform2 combined =
      compose(RigidTransform2::from_translation(1.0, 0.0), quarter);
  double px, py;
  apply_point(combined, 1.0, 0.0, &px, &py);
  EXPECT_NEAR(px, 1.0, 1e-12);
  EXPECT_NEAR(py, 1.0, 1e-12);
}

TEST(RigidTransform2, InverseExamples) {
  const RigidTransform2 t = RigidTransform2::from_translation(1.0, 2.0);
  const RigidTransform2 inv = inverse(t);
  EXPECT_DOUBLE_EQ(inv.rotation(), 0.0);
  EXPECT_DOUBLE_EQ(inv.dx(), -1.0);
  EXPECT_DOUBLE_EQ(inv.dy(), -2.0);

  const RigidTransform2 id_inv = inverse(RigidTransform2::identity());
  EXPECT_DOUBLE_EQ(id_inv.rotation(), 0.0);
  EXPECT_DOUBLE_EQ(id_inv.dx(), 0.0);
  EXPECT_DOUBLE_EQ(id_inv.dy(), 0.0);
}

TEST(RigidTransform2, InverseRoundTrip10k) {
  Rng rng(22);
  for (int i = 0; i < 10000; ++i) {
    const RigidTransform2 t = random_transform(rng);
    const RigidTransform2 round = compose(t, inverse(t));
    EXPECT_NEAR(round.rotation(), 0.0, 1e-9);
    EXPECT_NEAR(round.dx(), 0.0, 1e-9);
    EXPECT_NEAR(round.dy(), 0.0, 1e-9);
  }
}

TEST(RigidTransform2, GroupAxioms10k) {
  Rng rng(33);
  for (int i = 0; i < 10000; ++i) {
    const RigidTransform2 a = random_transform(rng);
    const RigidTransform2 b = random_transform(rng);
    const RigidTransform2 c = random_transform(rng);
    const RigidTransform2 ab_c = compose(compose(a, b), c);
    const RigidTransform2 a_bc = compose(a, compose(b, c));
    EXPECT_NEAR(angular_distance(ab_c.rotation(), a_bc.rotation()), 0.0, 1e-12);
    EXPECT_NEAR(ab_c.dx(), a_bc.dx(), 1e-12);
    EXPECT_NEAR(ab_c.dy(), a_bc.dy(), 1e-12);
  }
}

TEST(Apply, Examples) {
  const Pose2 p(0.4, -0.7, 1.1);
  const Pose2 same = apply(RigidTransform2::identity(), p);
  EXPECT_DOUBLE_EQ(same.x, p.x);
  EXPECT_DOUBLE_EQ(same.y, p.y);
  EXPECT_DOUBLE_EQ(same.theta, p.theta);

  const Pose2 flipped = apply(RigidTransform2::from_rotation(kPi), Pose2(1, 0, 0));
  EXPECT_NEAR(flipped.x, -1.0, 1e-12);
  EXPECT_NEAR(flipped.y, 0.0, 1e-12);
  EXPECT_NEAR(flipped.theta, kPi, 1e-12);
}

TEST(Apply, RoundTripAndGroupAction10k) {
  Rng rng(44);
  for (int i = 0; i < 10000; ++i) {
    const RigidTransform2 t = random_transform(rng);
    const RigidTransform2 u = random_transform(rng);
    const Pose2 p = random_pose(rng);
    const Pose2 round = apply(inverse(t), apply(t, p));
    EXPECT_NEAR(round.x, p.x, 1e-9);
    EXPECT_NEAR(round.y, p.y, 1e-9);
    EXPECT_NEAR(angular_distance(round.theta, p.theta), 0.0, 1e-9);

    const Pose2 composed = apply(compose(t, u), p);
    const Pose2 chained = apply(t, apply(u, p));
    EXPECT_NEAR(composed.x, chained.x, 1e-9);
    EXPECT_NEAR(composed.y, chained.y, 1e-9);
    EXPECT_NEAR(angular_distance(composed.theta, chained.theta), 0.0, 1e-9);
  }
}

TEST(Apply, MaskPreserved) {
  const Pose2 p(0.1, 0.2, 0.3, PoseMask::x_theta());
  const Pose2 moved = apply(RigidTransform2(0.5, 1.0, -1.0), p);
  EXPECT_EQ(moved.mask, PoseMask::x_theta());
}

TEST(MoveBetween, MapsFromOntoTo) {
  Rng rng(55);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 from = random_pose(rng);
    const Pose2 to = random_pose(rng);
    const Pose2 moved = apply(move_between(from, to), from);
    EXPECT_NEAR(moved.x, to.x, 1e-9);
    EXPECT_NEAR(moved.y, to.y, 1e-9);
    EXPECT_NEAR(angular_distance(moved.theta, to.theta), 0.0, 1e-9);
  }
}

TEST(CircularMean, Examples) {
  EXPECT_NEAR(circular_mean(std::vector<double>{0.1, -0.1}), 0.0, 1e-12);
  EXPECT_NEAR(angular_distance(
                  circular_mean(std::vector<double>{kPi - 0.1, -(kPi - 0.1)}), kPi),
              0.0, 1e-12);
  EXPECT_NEAR(circular_mean(std::vector<double>{0.0, kPi / 2, kPi / 4}), kPi / 4, 1e-12);
}

TEST(CircularMean, Errors) {
  EXPECT_THROW(circular_mean(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(circular_mean(std::vector<double>{0.3, 0.3 + kPi}), DegenerateOrientationError);
  EXPECT_THROW(circular_mean(std::vector<double>{0.0, std::nan("")}), std::invalid_argument);
}

TEST(CircularMean, MatchesGridOracle) {
  Rng rng(66);
  const int grid = 100000;
  const double tol = 1.5 * kTwoPi / grid;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + rng.uniform_int(8);
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(-kPi, kPi));
    double mean;
    try {
      mean = circular_mean(angles);
    } catch (const DegenerateOrientationError&) {
      continue;
    }
    const double oracle = grid_circular_mean(angles, grid);
    EXPECT_NEAR(angular_distance(mean, oracle), 0.0, tol)
        << "trial " << trial << " n=" << n;
  }
}

TEST(CircularMean, ShiftEquivariance) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.uniform_int(6);
    std::vector<double> angles, shifted;
    const double delta = rng.uniform(-10.0, 10.0);
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(-1.2, 1.2);  // keep the mean well-defined
      angles.push_back(a);
      shifted.push_back(wrap_angle(a + delta));
    }
    const double base = circular_mean(angles);
    const double moved = circular_mean(shifted);
    EXPECT_NEAR(angular_distance(moved, wrap_angle(base + delta)), 0.0, 1e-9);
  }
}

TEST(PoseMean, Examples) {
  const Pose2 p(0.3, -0.4, 2.2);
  const Pose2 single = pose_mean(std::vector<Pose2>{p});
  EXPECT_DOUBLE_EQ(single.x, p.x);
  EXPECT_DOUBLE_EQ(single.y, p.y);
  EXPECT_DOUBLE_EQ(single.theta, p.theta);

  const Pose2 mid = pose_mean(std::vector<Pose2>{Pose2(1, 0, 0), Pose2(3, 0, 0)});
  EXPECT_DOUBLE_EQ(mid.x, 2.0);
  EXPECT_DOUBLE_EQ(mid.y, 0.0);
  EXPECT_DOUBLE_EQ(mid.theta, 0.0);

  // wrap-around: the average of two angles near the cut is pi, not zero
  const Pose2 wrapped = pose_mean(
      std::vector<Pose2>{Pose2(0, 0, kPi - 0.1), Pose2(0, 0, -(kPi - 0.1))});
  EXPECT_NEAR(angular_distance(wrapped.theta, kPi), 0.0, 1e-12);
}

TEST(PoseMean, IdenticalInputsExact) {
  const Pose2 p(0.123456789, -0.987654321, 2.71);
  const std::vector<Pose2> poses(7, p);
  const Pose2 mean = pose_mean(poses);
  EXPECT_NEAR(mean.x, p.x, 1e-12);
  EXPECT_NEAR(mean.y, p.y, 1e-12);
  EXPECT_NEAR(mean.theta, p.theta, 1e-12);
}

TEST(PoseMean, Errors) {
  EXPECT_THROW(pose_mean(std::vector<Pose2>{}), std::invalid_argument);
  EXPECT_THROW(pose_mean(std::vector<Pose2>{Pose2(0, 0, 0, PoseMask::all()),
                                            Pose2(0, 0, 0, PoseMask::x_theta())}),
               std::invalid_argument);
  EXPECT_THROW(pose_mean(std::vector<Pose2>{Pose2(0, 0, 0.4), Pose2(0, 0, 0.4 + kPi)}),
               DegenerateOrientationError);
}

TEST(PoseError, Examples) {
  const Pose2 p(1.0, 2.0, 0.5);
  const ErrorVector zero = pose_error(p, p);
  EXPECT_DOUBLE_EQ(*zero.ex, 0.0);
  EXPECT_DOUBLE_EQ(*zero.ey, 0.0);
  EXPECT_DOUBLE_EQ(*zero.etheta, 0.0);

  const ErrorVector wrap = pose_error(Pose2(0, 0, kPi - 0.05), Pose2(0, 0, -(kPi - 0.05)));
  EXPECT_NEAR(*wrap.etheta, 0.1, 1e-12);

  const ErrorVector plain = pose_error(Pose2(1, 2, 0), Pose2(0, 0, 0));
  EXPECT_DOUBLE_EQ(*plain.ex, 1.0);
  EXPECT_DOUBLE_EQ(*plain.ey, 2.0);
  EXPECT_DOUBLE_EQ(*plain.etheta, 0.0);
}

TEST(PoseError, MaskHandling) {
  const Pose2 a(1, 2, 0.3, PoseMask::x_theta());
  const Pose2 b(0, 9, 0.1, PoseMask::x_theta());
  const ErrorVector e = pose_error(a, b);
  EXPECT_TRUE(e.ex.has_value());
  EXPECT_FALSE(e.ey.has_value());
  EXPECT_TRUE(e.etheta.has_value());
  EXPECT_THROW(pose_error(Pose2(0, 0, 0), Pose2(0, 0, 0, PoseMask::x_theta())),
               std::invalid_argument);
}

TEST(PoseError, ThetaSymmetry) {
  Rng rng(88);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 a = random_pose(rng);
    const Pose2 b = random_pose(rng);
    EXPECT_DOUBLE_EQ(*pose_error(a, b).etheta, *pose_error(b, a).etheta);
  }
}

TEST(PoseMask, EncodeDecode) {
  EXPECT_EQ(PoseMask::all().encode(), "111");
  EXPECT_EQ(PoseMask::x_theta().encode(), "101");
  EXPECT_EQ(PoseMask::decode("101"), PoseMask::x_theta());
  EXPECT_THROW(PoseMask::decode("000"), std::invalid_argument);
  EXPECT_THROW(PoseMask::decode("1x1"), std::invalid_argument);
  EXPECT_THROW(PoseMask::decode("11"), std::invalid_argument);
}

TEST(Pose2, ConstructorWrapsTheta) {
  EXPECT_DOUBLE_EQ(Pose2(0, 0, 3 * kPi).theta, kPi);
  EXPECT_DOUBLE_EQ(Pose2(0, 0, -kPi).theta, kPi);
}

}  // namespace
}  // namespace itdr
