#include <catch_amalgamated.hpp>

#include "geneoh/representation.hpp"
#include "geneoh/synthesis.hpp"

using namespace geneoh;

namespace {

ContactFrameSet random_frames(Rng& rng, int K, int N) {
  ContactFrameSet set;
  for (int i = 0; i < N; ++i) {
    set.rest_points.push_back(0.03 * rng.normal3());
    set.rest_normals.push_back(rng.unit_vector());
    set.rest_indices.push_back(i);
  }
  std::vector<ObjectPose> poses(K);
  for (auto& pose : poses) {
    pose.rotation = Quat(Eigen::AngleAxisd(rng.uniform(0.0, 3.0), rng.unit_vector()));
    pose.translation = 0.1 * rng.normal3();
  }
  set.pose_frames(poses);
  return set;
}

std::vector<JointMat> random_traj(Rng& rng, int K) {
  std::vector<JointMat> J(K);
  for (auto& f : J)
    for (int j = 0; j < kNumJoints; ++j) f.row(j) = 0.08 * rng.normal3();
  return J;
}

}  // namespace

TEST_CASE("canonicalize with identity frames is the identity") {
  Rng rng(1);
  ContactFrameSet set;
  set.rest_points = {Vec3(0.01, 0, 0), Vec3(-0.01, 0, 0)};
  set.rest_normals = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
  set.pose_frames(std::vector<ObjectPose>(3));
  // symmetric points make the centroid zero, so the frames are identity
  const auto J = random_traj(rng, 3);
  const CanonHandTraj traj = canonicalize_hand_trajectory(J, set);
  for (int k = 0; k < 3; ++k) REQUIRE((traj.frames[k] - J[k]).norm() < 1e-15);
}

TEST_CASE("joints at the centroid canonicalize to zero") {
  Rng rng(2);
  const ContactFrameSet set = random_frames(rng, 4, 8);
  std::vector<JointMat> J(4);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < kNumJoints; ++j) J[k].row(j) = set.translation[k];
  const CanonHandTraj traj = canonicalize_hand_trajectory(J, set);
  for (int k = 0; k < 4; ++k) REQUIRE(traj.frames[k].norm() < 1e-12);
}

TEST_CASE("canonicalization round trips over random rigid poses") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = 2 + static_cast<int>(rng.raw() % 4);
    const ContactFrameSet set = random_frames(rng, K, 4);
    const auto J = random_traj(rng, K);
    const auto back = decanonicalize_hand_trajectory(canonicalize_hand_trajectory(J, set), set);
    for (int k = 0; k < K; ++k) REQUIRE((back[k] - J[k]).norm() < 1e-12);
  }
}

TEST_CASE("decanonicalizing zeros broadcasts the frame translation") {
  Rng rng(4);
  const ContactFrameSet set = random_frames(rng, 3, 4);
  CanonHandTraj traj;
  traj.frames.assign(3, JointMat::Zero());
  const auto J = decanonicalize_hand_trajectory(traj, set);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      REQUIRE((Vec3(J[k].row(j)) - set.translation[k]).norm() < 1e-15);
}

TEST_CASE("mismatched frame counts are a shape error") {
  Rng rng(5);
  const ContactFrameSet set = random_frames(rng, 3, 4);
  const auto J = random_traj(rng, 5);
  REQUIRE_THROWS_AS(canonicalize_hand_trajectory(J, set), ShapeError);
  REQUIRE_THROWS_AS(compute_spatial_relations(J, set), ShapeError);
}

TEST_CASE("single contact point canonicalizes to the origin") {
  Rng rng(6);
  const ContactFrameSet set = random_frames(rng, 3, 1);
  const auto J = random_traj(rng, 3);
  const SpatialRel S = compute_spatial_relations(J, set);
  for (int k = 0; k < 3; ++k) REQUIRE(S.frames[k][0].position.norm() < 1e-12);
}

TEST_CASE("canonical normals keep unit length") {
  Rng rng(7);
  const ContactFrameSet set = random_frames(rng, 4, 16);
  const auto J = random_traj(rng, 4);
  const SpatialRel S = compute_spatial_relations(J, set);
  for (const auto& frame : S.frames)
    for (const auto& s : frame) REQUIRE(s.normal.norm() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("temporal statistics match a scalar re-implementation") {
  Rng rng(8);
  const RepHyperparams hyper;
  const int K = 5;
  const ContactFrameSet set = random_frames(rng, K, 6);
  const auto J = random_traj(rng, K);
  const TemporalRel T = compute_temporal_relations(J, set, hyper);
  for (int k = 0; k + 1 < K; ++k) {
    for (int i = 0; i < set.num_points(); ++i) {
      const TemporalPoint& t = T.transitions[k][i];
      // independent scalar recomputation of every channel
      const Vec3 o0 = set.points[k][i], o1 = set.points[k + 1][i];
      const Vec3 n = set.normals[k][i];
      const Mat3 Rt = set.rotation[k].transpose();
      REQUIRE((t.v_obj - Rt * (o1 - o0)).norm() < 1e-12);
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 h0 = J[k].row(j), h1 = J[k + 1].row(j);
        const Vec3 v = (h1 - h0) - (o1 - o0);
        const double d = (h0 - o0).norm();
        const Vec3 vperp = v.dot(n) * n;
        const Vec3 vpar = v - vperp;
        REQUIRE(t.dist[j] == Catch::Approx(d).margin(1e-12));
        REQUIRE((Vec3(t.v_rel.row(j)) - Rt * v).norm() < 1e-12);
        REQUIRE(t.e_par[j] ==
                Catch::Approx(std::exp(-hyper.kappa * d) * hyper.k_a * vpar.norm()).margin(1e-12));
        REQUIRE(t.e_perp[j] ==
                Catch::Approx(std::exp(-hyper.kappa * d) * hyper.k_b * vperp.norm()).margin(1e-12));
      }
    }
  }
}

TEST_CASE("zero distance leaves the damping factor at one") {
  ContactFrameSet set;
  set.rest_points = {Vec3::Zero()};
  set.rest_normals = {Vec3(0, 0, 1)};
  set.pose_frames(std::vector<ObjectPose>(2));
  std::vector<JointMat> J(2, JointMat::Zero());
  J[1].row(0) = Vec3(0.4, 0.0, 0.0);  // pure tangential step at d = 0
  const TemporalRel T = compute_temporal_relations(J, set);
  REQUIRE(T.transitions[0][0].e_par[0] == Catch::Approx(0.4).margin(1e-12));
  REQUIRE(T.transitions[0][0].e_perp[0] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("normal-aligned relative motion has zero parallel energy") {
  ContactFrameSet set;
  set.rest_points = {Vec3::Zero()};
  set.rest_normals = {Vec3(0, 0, 1)};
  set.pose_frames(std::vector<ObjectPose>(2));
  std::vector<JointMat> J(2, JointMat::Zero());
  for (int j = 0; j < kNumJoints; ++j) {
    J[0].row(j) = Vec3(0.0, 0.0, 0.01);
    J[1].row(j) = Vec3(0.0, 0.0, 0.01 + 0.3);  // v parallel to the normal
  }
  const TemporalRel T = compute_temporal_relations(J, set);
  for (int j = 0; j < kNumJoints; ++j) REQUIRE(T.transitions[0][0].e_par[j] < 1e-12);
}

TEST_CASE("spatial decode inverts clean relations") {
  Rng rng(9);
  const int K = 6;
  const ContactFrameSet set = random_frames(rng, K, 12);
  const auto J = random_traj(rng, K);
  const auto back = decode_trajectory_from_spatial(compute_spatial_relations(J, set), set);
  for (int k = 0; k < K; ++k) REQUIRE((back[k] - J[k]).norm() < 1e-9);
}

TEST_CASE("spatial decode averages noisy hypotheses") {
  Rng rng(10);
  const int K = 3, N = 32;
  const ContactFrameSet set = random_frames(rng, K, N);
  const auto J = random_traj(rng, K);
  SpatialRel S = compute_spatial_relations(J, set);

  // perturb each hypothesis and keep a brute-force average as the oracle
  std::vector<JointMat> oracle(K, JointMat::Zero());
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 noise = 0.001 * rng.normal3();
        S.frames[k][i].offsets.row(j) += noise;
        oracle[k].row(j) += set.rotation[k] * (Vec3(S.frames[k][i].offsets.row(j))) +
                            set.points[k][i];
      }
    }
    oracle[k] /= N;
  }
  const auto decoded = decode_trajectory_from_spatial(S, set);
  for (int k = 0; k < K; ++k) {
    REQUIRE((decoded[k] - oracle[k]).norm() < 1e-12);
    // zero-mean noise shrinks by roughly 1/sqrt(N)
    REQUIRE((decoded[k] - J[k]).cwiseAbs().maxCoeff() < 0.001);
  }
}

TEST_CASE("single hypothesis decode is exact inversion") {
  Rng rng(11);
  const ContactFrameSet set = random_frames(rng, 4, 1);
  const auto J = random_traj(rng, 4);
  const auto back = decode_trajectory_from_spatial(compute_spatial_relations(J, set), set);
  for (int k = 0; k < 4; ++k) REQUIRE((back[k] - J[k]).norm() < 1e-12);
}

TEST_CASE("temporal integration reconstructs clean offsets") {
  Rng rng(12);
  const int K = 6, N = 8;
  const ContactFrameSet set = random_frames(rng, K, N);
  const auto J = random_traj(rng, K);
  const TemporalRel T = compute_temporal_relations(J, set);
  std::vector<JointMat> first(N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < kNumJoints; ++j)
      first[i].row(j) = Vec3(J[0].row(j)) - set.points[0][i];
  const auto offsets = integrate_temporal_to_offsets(T, set, first);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 expect = Vec3(J[k].row(j)) - set.points[k][i];
        REQUIRE((Vec3(offsets[k][i].row(j)) - expect).norm() < 1e-9);
      }
}

TEST_CASE("zero velocities keep offsets constant") {
  Rng rng(13);
  const int K = 4, N = 3;
  const ContactFrameSet set = random_frames(rng, K, N);
  TemporalRel T;
  T.transitions.assign(K - 1, std::vector<TemporalPoint>(N));
  for (auto& tr : T.transitions)
    for (auto& t : tr) {
      t.v_obj.setZero();
      t.dist.setZero();
      t.v_rel.setZero();
      t.e_par.setZero();
      t.e_perp.setZero();
    }
  std::vector<JointMat> first(N);
  for (auto& f : first)
    for (int j = 0; j < kNumJoints; ++j) f.row(j) = 0.05 * rng.normal3();
  const auto offsets = integrate_temporal_to_offsets(T, set, first);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < N; ++i) REQUIRE((offsets[k][i] - first[i]).norm() < 1e-15);
}

TEST_CASE("one euler step shifts the offset by the velocity") {
  ContactFrameSet set;
  set.rest_points = {Vec3::Zero()};
  set.rest_normals = {Vec3(0, 0, 1)};
  set.pose_frames(std::vector<ObjectPose>(2));
  TemporalRel T;
  T.transitions.assign(1, std::vector<TemporalPoint>(1));
  T.transitions[0][0].v_obj.setZero();
  T.transitions[0][0].dist.setZero();
  T.transitions[0][0].v_rel.setZero();
  T.transitions[0][0].v_rel.row(0) = Vec3(1, 0, 0);
  T.transitions[0][0].e_par.setZero();
  T.transitions[0][0].e_perp.setZero();
  std::vector<JointMat> first(1, JointMat::Zero());
  const auto offsets = integrate_temporal_to_offsets(T, set, first);
  REQUIRE((Vec3(offsets[1][0].row(0)) - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("global rigid motions leave the representation invariant") {
  Rng rng(14);
  SynthesisConfig cfg;
  cfg.frame_count = 8;
  const HOISequence seq = generate_synthetic_sequence(cfg, 33);
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, 32, 5);
  const GeneOHRep rep = compute_representation(seq, set);

  for (int trial = 0; trial < 25; ++trial) {
    const Mat3 Q = random_rotation(rng);
    const Vec3 u = 0.2 * rng.normal3();
    HOISequence moved = seq;
    for (int k = 0; k < seq.frame_count; ++k) {
      for (int j = 0; j < kNumJoints; ++j)
        moved.keypoints[k].row(j) = Q * Vec3(seq.keypoints[k].row(j)) + u;
      moved.object_poses[k].rotation = Quat(Q * seq.object_poses[k].matrix());
      moved.object_poses[k].translation = Q * seq.object_poses[k].translation + u;
    }
    ContactFrameSet moved_set;
    moved_set.rest_indices = set.rest_indices;
    moved_set.rest_points = set.rest_points;
    moved_set.rest_normals = set.rest_normals;
    moved_set.pose_frames(moved.object_poses);
    const GeneOHRep moved_rep = compute_representation(moved, moved_set);

    for (int k = 0; k < seq.frame_count; ++k) {
      REQUIRE((moved_rep.traj.frames[k] - rep.traj.frames[k]).norm() < 1e-9);
      for (int i = 0; i < set.num_points(); ++i) {
        REQUIRE((moved_rep.spatial.frames[k][i].position - rep.spatial.frames[k][i].position)
                    .norm() < 1e-9);
        REQUIRE((moved_rep.spatial.frames[k][i].normal - rep.spatial.frames[k][i].normal).norm() <
                1e-9);
        REQUIRE((moved_rep.spatial.frames[k][i].offsets - rep.spatial.frames[k][i].offsets)
                    .norm() < 1e-9);
      }
    }
    for (int k = 0; k + 1 < seq.frame_count; ++k)
      for (int i = 0; i < set.num_points(); ++i) {
        const TemporalPoint& a = moved_rep.temporal.transitions[k][i];
        const TemporalPoint& b = rep.temporal.transitions[k][i];
        REQUIRE((a.v_obj - b.v_obj).norm() < 1e-9);
        REQUIRE((a.v_rel - b.v_rel).norm() < 1e-9);
        REQUIRE((a.dist - b.dist).norm() < 1e-9);
        REQUIRE((a.e_par - b.e_par).norm() < 1e-9);
        REQUIRE((a.e_perp - b.e_perp).norm() < 1e-9);
      }
  }
}

TEST_CASE("penetration witness agrees with the sdf sign") {
  Rng rng(15);
  int agree = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    // random convex primitive, random nearby hand point
    const int kind = static_cast<int>(rng.raw() % 3);
    const ObjectShape shape =
        kind == 0   ? make_object(PrimitiveKind::Sphere, {rng.uniform(0.03, 0.05), 0, 0}, 600)
        : kind == 1 ? make_object(PrimitiveKind::Box,
                                  {rng.uniform(0.02, 0.04), rng.uniform(0.02, 0.04),
                                   rng.uniform(0.02, 0.04)},
                                  600)
                    : make_object(PrimitiveKind::Cylinder,
                                  {rng.uniform(0.02, 0.035), rng.uniform(0.025, 0.045), 0}, 600);
    const Vec3 dir = rng.unit_vector();
    // place the point just inside or just outside along a random ray
    double s = shape.bounding_radius();
    for (int it = 0; it < 100; ++it) {
      const double d = shape.rest_sdf(s * dir);
      if (std::abs(d) < 1e-7) break;
      s -= d;
    }
    const Vec3 h = (s + rng.uniform(-0.004, 0.004)) * dir;
    const double sdf = shape.rest_sdf(h);
    if (std::abs(sdf) < 1e-5) continue;  // too close to call either way

    // witness: max over near-surface contact points of dot(n, h - o); for a
    // convex body an interior point lies behind every tangent plane (all dots
    // negative) while an exterior point sees a positive dot at its nearest
    // sample, so the sign of the max matches the sdf sign
    double witness = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> nearest;
    for (std::size_t i = 0; i < shape.samples.size(); ++i)
      nearest.emplace_back((shape.samples[i] - h).norm(), static_cast<int>(i));
    std::nth_element(nearest.begin(), nearest.begin() + 32, nearest.end());
    for (int i = 0; i < 32; ++i) {
      const int idx = nearest[i].second;
      witness = std::max(witness,
                         shape.sample_normals[idx].dot(h - shape.samples[idx]));
    }
    if ((witness < 0) == (sdf < 0)) ++agree;
  }
  REQUIRE(agree >= static_cast<int>(0.99 * trials));
}

TEST_CASE("rotation augmentation preserves norms and scalars") {
  Rng rng(16);
  SynthesisConfig cfg;
  cfg.frame_count = 6;
  const HOISequence seq = generate_synthetic_sequence(cfg, 44);
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, 16, 5);
  const GeneOHRep rep = compute_representation(seq, set);
  const GeneOHRep aug = random_rotation_augment(rep, 99);

  for (int k = 0; k < rep.traj.size(); ++k)
    for (int j = 0; j < kNumJoints; ++j)
      REQUIRE(Vec3(aug.traj.frames[k].row(j)).norm() ==
              Catch::Approx(Vec3(rep.traj.frames[k].row(j)).norm()).margin(1e-12));
  for (int k = 0; k < rep.spatial.num_frames(); ++k)
    for (int i = 0; i < rep.spatial.num_points(); ++i) {
      REQUIRE(aug.spatial.frames[k][i].normal.norm() == Catch::Approx(1.0).margin(1e-12));
      REQUIRE(aug.spatial.frames[k][i].position.norm() ==
              Catch::Approx(rep.spatial.frames[k][i].position.norm()).margin(1e-12));
    }
  for (int k = 0; k + 1 < rep.traj.size(); ++k)
    for (int i = 0; i < rep.spatial.num_points(); ++i) {
      const TemporalPoint& a = aug.temporal.transitions[k][i];
      const TemporalPoint& b = rep.temporal.transitions[k][i];
      // scalar channels untouched, vector norms preserved
      REQUIRE((a.dist - b.dist).norm() == 0.0);
      REQUIRE((a.e_par - b.e_par).norm() == 0.0);
      REQUIRE((a.e_perp - b.e_perp).norm() == 0.0);
      REQUIRE(a.v_obj.norm() == Catch::Approx(b.v_obj.norm()).margin(1e-12));
    }
}

TEST_CASE("identity augmentation leaves the representation alone") {
  // find a seed whose rotation is near identity is impractical; instead check
  // that augmenting twice with the same seed matches augmenting a copy
  Rng rng(17);
  SynthesisConfig cfg;
  cfg.frame_count = 5;
  const HOISequence seq = generate_synthetic_sequence(cfg, 44);
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, 8, 5);
  const GeneOHRep rep = compute_representation(seq, set);
  const GeneOHRep a = random_rotation_augment(rep, 7);
  const GeneOHRep b = random_rotation_augment(rep, 7);
  for (int k = 0; k < rep.traj.size(); ++k) REQUIRE(a.traj.frames[k] == b.traj.frames[k]);
}

TEST_CASE("instance stats match a two-pass oracle and normalize cleanly") {
  Rng rng(18);
  SynthesisConfig cfg;
  cfg.frame_count = 10;
  const HOISequence seq = generate_synthetic_sequence(cfg, 55);
  const ContactFrameSet set = extract_generalized_contact_points(seq, 0.005, 16, 5);
  const GeneOHRep rep = compute_representation(seq, set);
  const InstanceStats st = compute_instance_stats(rep);

  // two-pass oracle for the trajectory stats
  Vec3 mu = Vec3::Zero();
  const double n = rep.traj.size() * kNumJoints;
  for (const auto& f : rep.traj.frames)
    for (int j = 0; j < kNumJoints; ++j) mu += Vec3(f.row(j));
  mu /= n;
  Vec3 var = Vec3::Zero();
  for (const auto& f : rep.traj.frames)
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 d = Vec3(f.row(j)) - mu;
      var += d.cwiseProduct(d);
    }
  var /= n;
  REQUIRE((st.mu_traj - mu).norm() < 1e-12);
  REQUIRE((st.sigma_traj - var.cwiseSqrt()).norm() < 1e-9);

  // two-pass oracle for one contact point's offset stats
  const int pt = 3;
  Vec3 muo = Vec3::Zero();
  const double m = rep.spatial.num_frames() * kNumJoints;
  for (const auto& frame : rep.spatial.frames)
    for (int j = 0; j < kNumJoints; ++j) muo += Vec3(frame[pt].offsets.row(j));
  muo /= m;
  REQUIRE((st.mu_offset[pt] - muo).norm() < 1e-12);

  // normalized trajectory has zero mean, unit std per dimension
  const Eigen::VectorXd norm = normalize_traj_vector(flatten_traj(rep.traj), st);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0;
    int cnt = 0;
    for (int i = c; i < norm.size(); i += 3) {
      s += norm[i];
      s2 += norm[i] * norm[i];
      ++cnt;
    }
    const double mean = s / cnt;
    REQUIRE(std::abs(mean) < 1e-9);
    REQUIRE(std::sqrt(s2 / cnt - mean * mean) == Catch::Approx(1.0).margin(1e-6));
  }

  // round trips
  const Eigen::VectorXd v = flatten_traj(rep.traj);
  REQUIRE((denormalize_traj_vector(normalize_traj_vector(v, st), st) - v).cwiseAbs().maxCoeff() <
          1e-9);
  const Eigen::VectorXd o = flatten_spatial_offsets(rep.spatial, pt);
  REQUIRE((denormalize_offset_vector(normalize_offset_vector(o, st, pt), st, pt) - o)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("flatten round trips preserve every channel") {
  Rng rng(19);
  const int K = 5, N = 4;
  const ContactFrameSet set = random_frames(rng, K, N);
  const auto J = random_traj(rng, K);
  const GeneOHRep rep = [&] {
    GeneOHRep r;
    r.frames = set;
    r.traj = canonicalize_hand_trajectory(J, set);
    r.spatial = compute_spatial_relations(J, set);
    r.temporal = compute_temporal_relations(J, set);
    return r;
  }();

  const CanonHandTraj traj2 = unflatten_traj(flatten_traj(rep.traj), K);
  for (int k = 0; k < K; ++k) REQUIRE(traj2.frames[k] == rep.traj.frames[k]);

  SpatialRel S2 = rep.spatial;
  for (int i = 0; i < N; ++i)
    unflatten_spatial_offsets(flatten_spatial_offsets(rep.spatial, i), S2, i);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < N; ++i) REQUIRE(S2.frames[k][i].offsets == rep.spatial.frames[k][i].offsets);

  TemporalRel T2 = rep.temporal;
  for (int i = 0; i < N; ++i)
    unflatten_temporal_point(flatten_temporal_point(rep.temporal, i), T2, i);
  for (int k = 0; k + 1 < K; ++k)
    for (int i = 0; i < N; ++i) {
      REQUIRE(T2.transitions[k][i].v_obj == rep.temporal.transitions[k][i].v_obj);
      REQUIRE(T2.transitions[k][i].v_rel == rep.temporal.transitions[k][i].v_rel);
      REQUIRE(T2.transitions[k][i].dist == rep.temporal.transitions[k][i].dist);
      REQUIRE(T2.transitions[k][i].e_par == rep.temporal.transitions[k][i].e_par);
      REQUIRE(T2.transitions[k][i].e_perp == rep.temporal.transitions[k][i].e_perp);
    }
}
