#include <catch_amalgamated.hpp>

#include <numeric>

#include "geneoh/contacts.hpp"

using namespace geneoh;

namespace {

// hand hovering at a fixed point above a static unit-posed object
HOISequence hover_sequence(const ObjectShape& object, const Vec3& spot, int K = 4) {
  HOISequence seq;
  seq.frame_count = K;
  seq.object = object;
  seq.object_poses.assign(K, ObjectPose{});
  JointMat kp;
  for (int j = 0; j < kNumJoints; ++j) kp.row(j) = spot;
  seq.keypoints.assign(K, kp);
  return seq;
}

}  // namespace

TEST_CASE("contact points cluster under a hovering hand") {
  // dense sampling so the 5 mm neighborhood holds well over 32 candidates
  const ObjectShape sphere = make_object(PrimitiveKind::Sphere, {0.05, 0, 0}, 60000);
  const HOISequence seq = hover_sequence(sphere, Vec3(0, 0, 0.052));
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, 32, 1);
  REQUIRE(set.num_points() == 32);
  for (const Vec3& p : set.rest_points) {
    // every selected point is within 5 mm of the hovering keypoint
    REQUIRE((p - Vec3(0, 0, 0.052)).norm() <= 0.005 + 1e-12);
  }
}

TEST_CASE("distant hand falls back to the globally nearest samples") {
  const ObjectShape sphere = make_object(PrimitiveKind::Sphere, {0.05, 0, 0}, 1500);
  const HOISequence seq = hover_sequence(sphere, Vec3(0, 0, 0.20));
  const int n = 64;
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, n, 1);
  REQUIRE(set.num_points() == n);

  // brute-force nearest-n oracle
  const std::vector<double> dmin = sample_min_distances(seq);
  std::vector<int> order(dmin.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dmin[a] < dmin[b]; });
  for (int i = 0; i < n; ++i) REQUIRE(set.rest_indices[i] == order[i]);
}

TEST_CASE("default capture radius is five millimeters") {
  const ObjectShape sphere = make_object(PrimitiveKind::Sphere, {0.05, 0, 0}, 3000);
  const HOISequence seq = hover_sequence(sphere, Vec3(0, 0, 0.052));
  const ContactFrameSet a = extract_generalized_contact_points(seq);
  const ContactFrameSet b = extract_generalized_contact_points(seq, 0.005, 128, 0);
  REQUIRE(a.rest_indices == b.rest_indices);
  REQUIRE(a.num_points() == 128);
}

TEST_CASE("posed frames carry the object pose") {
  const ObjectShape box = make_object(PrimitiveKind::Box, {0.03, 0.03, 0.03}, 1000);
  HOISequence seq = hover_sequence(box, Vec3(0, 0, 0.05), 3);
  Rng rng(7);
  for (auto& pose : seq.object_poses) {
    pose.rotation = Quat(Eigen::AngleAxisd(rng.uniform(0.0, 2.0), rng.unit_vector()));
    pose.translation = 0.05 * rng.normal3();
  }
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.05, 16, 2);
  for (int k = 0; k < set.num_frames(); ++k) {
    REQUIRE((set.rotation[k] - seq.object_poses[k].matrix()).norm() < 1e-12);
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i < set.num_points(); ++i) {
      REQUIRE((set.points[k][i] - seq.object_poses[k].to_world(set.rest_points[i])).norm() <
              1e-12);
      REQUIRE(set.normals[k][i].norm() == Catch::Approx(1.0).margin(1e-9));
      centroid += set.points[k][i];
    }
    REQUIRE((set.translation[k] - centroid / set.num_points()).norm() < 1e-12);
  }
}

TEST_CASE("empty object surface is rejected") {
  ObjectShape bare = make_object(PrimitiveKind::Sphere, {0.05, 0, 0}, 100);
  bare.samples.clear();
  bare.sample_normals.clear();
  const HOISequence seq = hover_sequence(bare, Vec3(0, 0, 0.06));
  REQUIRE_THROWS_AS(extract_generalized_contact_points(seq), InvalidInputError);
}

TEST_CASE("extraction is deterministic under seed") {
  const ObjectShape sphere = make_object(PrimitiveKind::Sphere, {0.05, 0, 0}, 3000);
  const HOISequence seq = hover_sequence(sphere, Vec3(0, 0, 0.052));
  const ContactFrameSet a = extract_generalized_contact_points(seq, 0.005, 64, 9);
  const ContactFrameSet b = extract_generalized_contact_points(seq, 0.005, 64, 9);
  REQUIRE(a.rest_indices == b.rest_indices);
}
