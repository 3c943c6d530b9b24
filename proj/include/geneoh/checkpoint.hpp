#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "geneoh/denoiser.hpp"
#include "geneoh/schedule.hpp"

namespace geneoh {

struct TensorEntry {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

struct Checkpoint {
  std::uint32_t version = 1;
  std::uint32_t t_max = 1000;
  double beta1 = 0.001;
  double beta_t = 0.02;
  std::map<std::string, TensorEntry> tensors;

  void put_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    TensorEntry e;
    e.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    e.data.resize(m.size());
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i < m.rows(); ++i)
        e.data[j * m.rows() + i] = static_cast<float>(m(i, j));
    tensors[name] = std::move(e);
  }
  void put_vector(const std::string& name, const Eigen::VectorXd& v) {
    TensorEntry e;
    e.dims = {static_cast<std::uint32_t>(v.size())};
    e.data.resize(v.size());
    for (int i = 0; i < v.size(); ++i) e.data[i] = static_cast<float>(v[i]);
    tensors[name] = std::move(e);
  }

  const TensorEntry& get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw InvalidInputError("checkpoint: missing tensor " + name);
    return it->second;
  }
  Eigen::MatrixXd get_matrix(const std::string& name) const {
    const TensorEntry& e = get(name);
    if (e.dims.size() != 2) throw InvalidInputError("checkpoint: tensor rank mismatch " + name);
    Eigen::MatrixXd m(e.dims[0], e.dims[1]);
    for (std::uint32_t j = 0; j < e.dims[1]; ++j)
      for (std::uint32_t i = 0; i < e.dims[0]; ++i)
        m(i, j) = static_cast<double>(e.data[j * e.dims[0] + i]);
    return m;
  }
  Eigen::VectorXd get_vector(const std::string& name) const {
    const TensorEntry& e = get(name);
    Eigen::VectorXd v(e.data.size());
    for (size_t i = 0; i < e.data.size(); ++i) v[i] = static_cast<double>(e.data[i]);
    return v;
  }
  bool has(const std::string& name) const { return tensors.count(name) > 0; }
};

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace detail

// File layout: "GOHD", version u32, t_max u32, beta1 f64, betaT f64,
// tensor count u32, then per tensor: name length u32 + UTF-8 bytes, dtype tag
// u8 (0 = f32), rank u32, dims u32 each, payload little-endian f32.
inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + tmp.string());
    os.write("GOHD", 4);
    detail::write_pod(os, ckpt.version);
    detail::write_pod(os, ckpt.t_max);
    detail::write_pod(os, ckpt.beta1);
    detail::write_pod(os, ckpt.beta_t);
    detail::write_pod(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, e] : ckpt.tensors) {
      detail::write_pod(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::write_pod(os, static_cast<std::uint8_t>(0));  // f32
      detail::write_pod(os, static_cast<std::uint32_t>(e.dims.size()));
      for (std::uint32_t d : e.dims) detail::write_pod(os, d);
      os.write(reinterpret_cast<const char*>(e.data.data()),
               static_cast<std::streamsize>(e.data.size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "GOHD", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
  Checkpoint ckpt;
  detail::read_pod(is, ckpt.version);
  detail::read_pod(is, ckpt.t_max);
  detail::read_pod(is, ckpt.beta1);
  detail::read_pod(is, ckpt.beta_t);
  std::uint32_t count = 0;
  detail::read_pod(is, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = 0;
    detail::read_pod(is, name_len);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint8_t dtype = 0;
    detail::read_pod(is, dtype);
    if (dtype != 0) throw std::runtime_error("load_checkpoint: unsupported dtype");
    std::uint32_t rank = 0;
    detail::read_pod(is, rank);
    TensorEntry e;
    std::size_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t d = 0;
      detail::read_pod(is, d);
      e.dims.push_back(d);
      total *= d;
    }
    e.data.resize(total);
    is.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    ckpt.tensors[name] = std::move(e);
  }
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
  return ckpt;
}

// Pack a trained model (weights assumed f32-quantized) plus pipeline metadata.
inline Checkpoint pack_model(DenoiserModel& model, const NoiseSchedule& schedule,
                             const std::map<std::string, Eigen::VectorXd>& extra = {}) {
  Checkpoint ckpt;
  ckpt.t_max = static_cast<std::uint32_t>(schedule.t_max);
  ckpt.beta1 = schedule.beta[1];
  ckpt.beta_t = schedule.beta[schedule.t_max];
  Eigen::VectorXd arch(4);
  arch << model.dim, model.hidden, model.blocks, model.time_features;
  ckpt.put_vector("meta.arch", arch);
  for (auto& [name, w] : model.named_tensors()) ckpt.put_matrix(name, w);
  for (auto& [name, b] : model.named_vectors()) ckpt.put_vector(name, b);
  for (const auto& [name, v] : extra) ckpt.put_vector(name, v);
  return ckpt;
}

inline DenoiserModel unpack_model(const Checkpoint& ckpt) {
  const Eigen::VectorXd arch = ckpt.get_vector("meta.arch");
  DenoiserModel m = DenoiserModel::create(static_cast<int>(arch[0]), 0,
                                          static_cast<int>(arch[1]), static_cast<int>(arch[2]),
                                          static_cast<int>(arch[3]));
  for (auto& [name, w] : m.named_tensors()) w = ckpt.get_matrix(name);
  for (auto& [name, b] : m.named_vectors()) b = ckpt.get_vector(name);
  return m;
}

}  // namespace geneoh
