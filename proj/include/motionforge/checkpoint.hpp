#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionforge/model.hpp"
#include "motionforge/tensor.hpp"

namespace motionforge {

// Versioned binary container: string metadata plus named double tensors,
// written little-endian with raw 8-byte doubles for bit-exact round trips.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'M', 'F', 'C', 'K', 'P', 'T', '0', '\n'};
inline constexpr std::uint32_t kCkptVersion = 1;

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t read_u64(std::istream& is) {
  char b[8];
  is.read(b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& is) {
  const auto n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(detail::kCkptMagic, 8);
  detail::write_u64(os, detail::kCkptVersion);
  detail::write_u64(os, ck.meta.size());
  for (const auto& [k, v] : ck.meta) {
    detail::write_str(os, k);
    detail::write_str(os, v);
  }
  detail::write_u64(os, ck.tensors.size());
  for (const auto& [name, t] : ck.tensors) {
    detail::write_str(os, name);
    detail::write_u64(os, t.shape().size());
    for (std::size_t d : t.shape()) detail::write_u64(os, d);
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * 8));
  }
  if (!os) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, detail::kCkptMagic))
    throw std::runtime_error("checkpoint: '" + path + "' has wrong magic bytes");
  const auto version = detail::read_u64(is);
  if (version != detail::kCkptVersion)
    throw std::runtime_error("checkpoint: '" + path + "' has unsupported version " +
                             std::to_string(version));
  Checkpoint ck;
  const auto n_meta = detail::read_u64(is);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = detail::read_str(is);
    ck.meta[k] = detail::read_str(is);
  }
  const auto n_tensors = detail::read_u64(is);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = detail::read_str(is);
    const auto rank = detail::read_u64(is);
    Shape shape(rank);
    for (auto& d : shape) d = detail::read_u64(is);
    std::vector<double> vals(numel(shape));
    is.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * 8));
    if (!is)
      throw std::runtime_error("checkpoint: '" + path + "' truncated at tensor '" +
                               name + "'");
    ck.tensors.emplace_back(std::move(name),
                            Tensor::variable(std::move(shape), std::move(vals)));
  }
  return ck;
}

inline std::string encode_channels(const std::vector<std::size_t>& cs) {
  std::string s;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(cs[i]);
  }
  return s;
}

inline std::vector<std::size_t> decode_channels(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoul(tok));
  return out;
}

inline void put_model_config(Checkpoint& ck, const ModelConfig& cfg) {
  ck.meta["model.joints"] = std::to_string(cfg.joints);
  ck.meta["model.window_T"] = std::to_string(cfg.window_T);
  ck.meta["model.classes"] = std::to_string(cfg.classes);
  ck.meta["model.enc_channels"] = encode_channels(cfg.enc_channels);
  ck.meta["model.critic_channels"] = encode_channels(cfg.critic_channels);
  ck.meta["model.classifier_channels"] = encode_channels(cfg.classifier_channels);
  ck.meta["model.kernel"] = std::to_string(cfg.kernel);
  ck.meta["model.stride"] = std::to_string(cfg.stride);
  ck.meta["model.use_attention"] = cfg.use_attention ? "1" : "0";
}

inline ModelConfig get_model_config(const Checkpoint& ck) {
  ModelConfig cfg;
  const auto req = [&](const std::string& key) -> const std::string& {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end())
      throw std::runtime_error("checkpoint: missing metadata key '" + key + "'");
    return it->second;
  };
  cfg.joints = std::stoul(req("model.joints"));
  cfg.window_T = std::stoul(req("model.window_T"));
  cfg.classes = std::stoul(req("model.classes"));
  cfg.enc_channels = decode_channels(req("model.enc_channels"));
  cfg.critic_channels = decode_channels(req("model.critic_channels"));
  cfg.classifier_channels = decode_channels(req("model.classifier_channels"));
  cfg.kernel = std::stoul(req("model.kernel"));
  cfg.stride = std::stoul(req("model.stride"));
  cfg.use_attention = req("model.use_attention") == "1";
  return cfg;
}

inline void put_params(Checkpoint& ck, const ParamSet& ps) {
  for (std::size_t i = 0; i < ps.params().size(); ++i)
    ck.tensors.emplace_back(ps.names()[i], ps.params()[i]);
}

// Copies stored values into matching named parameters; every parameter in the
// set must be present with an identical shape.
inline void restore_params(const Checkpoint& ck, ParamSet& ps) {
  for (std::size_t i = 0; i < ps.params().size(); ++i) {
    const auto& name = ps.names()[i];
    const Tensor* stored = ck.find(name);
    if (!stored)
      throw std::runtime_error("checkpoint: parameter '" + name + "' not found");
    Tensor& p = ps.params()[i];
    if (stored->shape() != p.shape())
      throw std::runtime_error("checkpoint: parameter '" + name + "' has shape " +
                               shape_str(stored->shape()) + ", expected " +
                               shape_str(p.shape()));
    p.mutable_values() = stored->values();
  }
}

}  // namespace motionforge
