#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "geneoh/metrics.hpp"
#include "geneoh/sequence.hpp"

namespace geneoh {

using nlohmann::json;

// All file writes go through a temp-then-rename so readers never observe a
// partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// ---------------------------------------------------------------------------
// HOISequence JSON: {version, K, keypoints[K][21][3], hand_params?[K],
// object{kind, dims, poses[K]{quat wxyz, trans}}}. Meters throughout.

inline json to_json(const HOISequence& seq) {
  json j;
  j["version"] = 1;
  j["K"] = seq.frame_count;
  json kp = json::array();
  for (const auto& frame : seq.keypoints) {
    json f = json::array();
    for (int r = 0; r < kNumJoints; ++r)
      f.push_back({frame(r, 0), frame(r, 1), frame(r, 2)});
    kp.push_back(std::move(f));
  }
  j["keypoints"] = std::move(kp);
  if (seq.hand_params) {
    json hp = json::array();
    for (const auto& p : *seq.hand_params) {
      json e;
      e["root_rot"] = {p.root_rot.x(), p.root_rot.y(), p.root_rot.z()};
      e["root_trans"] = {p.root_trans.x(), p.root_trans.y(), p.root_trans.z()};
      e["theta"] = std::vector<double>(p.theta.data(), p.theta.data() + kThetaDim);
      e["beta"] = std::vector<double>(p.beta.data(), p.beta.data() + kNumFingers);
      hp.push_back(std::move(e));
    }
    j["hand_params"] = std::move(hp);
  }
  json obj;
  obj["kind"] = to_string(seq.object.kind);
  obj["dims"] = {seq.object.dims[0], seq.object.dims[1], seq.object.dims[2]};
  obj["sample_count"] = seq.object.samples.size();
  json poses = json::array();
  for (const auto& p : seq.object_poses) {
    json e;
    e["quat"] = {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()};
    e["trans"] = {p.translation.x(), p.translation.y(), p.translation.z()};
    poses.push_back(std::move(e));
  }
  obj["poses"] = std::move(poses);
  j["object"] = std::move(obj);
  return j;
}

inline HOISequence sequence_from_json(const json& j) {
  HOISequence seq;
  seq.frame_count = j.at("K").get<int>();
  for (const auto& f : j.at("keypoints")) {
    JointMat m;
    for (int r = 0; r < kNumJoints; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = f.at(r).at(c).get<double>();
    seq.keypoints.push_back(m);
  }
  if (j.contains("hand_params")) {
    std::vector<HandParams> params;
    for (const auto& e : j.at("hand_params")) {
      HandParams p;
      for (int c = 0; c < 3; ++c) {
        p.root_rot[c] = e.at("root_rot").at(c).get<double>();
        p.root_trans[c] = e.at("root_trans").at(c).get<double>();
      }
      for (int i = 0; i < kThetaDim; ++i) p.theta[i] = e.at("theta").at(i).get<double>();
      for (int i = 0; i < kNumFingers; ++i) p.beta[i] = e.at("beta").at(i).get<double>();
      params.push_back(p);
    }
    seq.hand_params = std::move(params);
  }
  const json& obj = j.at("object");
  std::array<double, 3> dims{};
  for (int i = 0; i < 3; ++i) dims[i] = obj.at("dims").at(i).get<double>();
  seq.object = make_object(primitive_from_string(obj.at("kind").get<std::string>()), dims,
                           obj.value("sample_count", 2000));
  for (const auto& e : obj.at("poses")) {
    ObjectPose p;
    p.rotation = Quat(e.at("quat").at(0).get<double>(), e.at("quat").at(1).get<double>(),
                      e.at("quat").at(2).get<double>(), e.at("quat").at(3).get<double>());
    for (int c = 0; c < 3; ++c) p.translation[c] = e.at("trans").at(c).get<double>();
    seq.object_poses.push_back(p);
  }
  seq.validate();
  return seq;
}

inline void save_sequence(const HOISequence& seq, const std::filesystem::path& path) {
  atomic_write(path, to_json(seq).dump(2));
}
inline HOISequence load_sequence(const std::filesystem::path& path) {
  return sequence_from_json(json::parse(read_file(path)));
}

// ---------------------------------------------------------------------------

inline json to_json(const MetricsReport& r) {
  json j;
  if (r.mpjpe_mm) j["mpjpe"] = *r.mpjpe_mm;
  if (r.mpvpe_mm) j["mpvpe"] = *r.mpvpe_mm;
  if (r.contact_iou_pct) j["contact_iou"] = *r.contact_iou_pct;
  j["intersection_volume"] = r.intersection_volume_cm3;
  j["penetration_depth"] = r.penetration_depth_mm;
  if (r.proximity_error_mm) j["proximity_error"] = *r.proximity_error_mm;
  j["motion_consistency"] = r.motion_consistency_mm2;
  if (r.all_frames_static) j["all_frames_static"] = true;
  j["units"] = {{"mpjpe", "mm"},
                {"mpvpe", "mm"},
                {"contact_iou", "%"},
                {"intersection_volume", "cm3"},
                {"penetration_depth", "mm"},
                {"proximity_error", "mm"},
                {"motion_consistency", "mm2"}};
  return j;
}

// ---------------------------------------------------------------------------
// Flat binary keypoints: magic "GOHB", u32 version, u32 rank, u32 dims each,
// then little-endian f32 payload.

inline void save_keypoints_binary(const std::vector<JointMat>& frames,
                                  const std::filesystem::path& path) {
  std::string buf;
  auto put_u32 = [&buf](std::uint32_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  buf.append("GOHB", 4);
  put_u32(1);
  put_u32(3);
  put_u32(static_cast<std::uint32_t>(frames.size()));
  put_u32(kNumJoints);
  put_u32(3);
  for (const auto& f : frames)
    for (int r = 0; r < kNumJoints; ++r)
      for (int c = 0; c < 3; ++c) {
        const float v = static_cast<float>(f(r, c));
        buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  atomic_write(path, buf);
}

inline std::vector<JointMat> load_keypoints_binary(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 24 || buf.compare(0, 4, "GOHB") != 0)
    throw std::runtime_error("load_keypoints_binary: bad header in " + path.string());
  auto get_u32 = [&buf](size_t off) {
    std::uint32_t v;
    std::memcpy(&v, buf.data() + off, sizeof(v));
    return v;
  };
  const std::uint32_t rank = get_u32(8);
  if (rank != 3 || get_u32(16) != kNumJoints || get_u32(20) != 3)
    throw std::runtime_error("load_keypoints_binary: unexpected shape");
  const std::uint32_t K = get_u32(12);
  std::vector<JointMat> frames(K);
  size_t off = 24;
  for (std::uint32_t k = 0; k < K; ++k)
    for (int r = 0; r < kNumJoints; ++r)
      for (int c = 0; c < 3; ++c) {
        float v;
        std::memcpy(&v, buf.data() + off, sizeof(v));
        off += sizeof(v);
        frames[k](r, c) = static_cast<double>(v);
      }
  return frames;
}

// OBJ point-cloud export: hand surface samples plus object surface samples,
// one file per frame.
inline void save_obj_frame(const HOISequence& seq, int frame, double surface_density,
                           const std::filesystem::path& path) {
  std::string buf;
  char line[128];
  std::vector<Vec3> hand_pts;
  if (seq.hand_params) {
    hand_pts = sample_hand_surface(HandSkeleton::standard(), (*seq.hand_params)[frame],
                                   surface_density);
  } else {
    for (int j = 0; j < kNumJoints; ++j) hand_pts.push_back(seq.keypoints[frame].row(j));
  }
  for (const auto& p : hand_pts) {
    std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    buf += line;
  }
  for (const auto& s : seq.object.samples) {
    const Vec3 p = seq.object_poses[frame].to_world(s);
    std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    buf += line;
  }
  atomic_write(path, buf);
}

}  // namespace geneoh
