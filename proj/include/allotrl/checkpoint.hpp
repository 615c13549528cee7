#pragma once

// Checkpoint files: versioned text dump of all parameter tensors with
// shape headers and the run-config hash. Values are hexfloats, so a
// save/load round trip is bitwise exact.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "allotrl/common.hpp"
#include "allotrl/ppo.hpp"

namespace allotrl {

inline constexpr const char* kCheckpointMagic = "allotrl-checkpoint v1";

namespace detail {

inline std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline void write_tensor(std::ostream& out, const std::string& name,
                         const std::vector<double>& values,
                         const std::vector<int>& shape) {
  out << "tensor " << name;
  for (int d : shape) out << " " << d;
  out << "\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out << hexfloat(values[i]) << (i + 1 == values.size() ? "\n" : " ");
  if (values.empty()) out << "\n";
}

}  // namespace detail

inline void save_checkpoint(const std::string& path,
                            const NetworkParams& params,
                            std::uint64_t config_hash) {
  std::ostringstream out;
  out << kCheckpointMagic << "\n";
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(config_hash));
  out << "config_hash " << hash_buf << "\n";
  for (std::size_t i = 0; i < params.actor.layers.size(); ++i) {
    const auto& l = params.actor.layers[i];
    detail::write_tensor(out, "actor." + std::to_string(i) + ".w", l.w,
                         {l.out, l.in});
    detail::write_tensor(out, "actor." + std::to_string(i) + ".b", l.b,
                         {l.out});
  }
  for (std::size_t i = 0; i < params.critic.layers.size(); ++i) {
    const auto& l = params.critic.layers[i];
    detail::write_tensor(out, "critic." + std::to_string(i) + ".w", l.w,
                         {l.out, l.in});
    detail::write_tensor(out, "critic." + std::to_string(i) + ".b", l.b,
                         {l.out});
  }
  detail::write_tensor(out, "log_std", params.log_std,
                       {static_cast<int>(params.log_std.size())});

  // write-temp-then-rename for atomicity
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw ArgumentError("cannot write checkpoint: " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

struct LoadedCheckpoint {
  NetworkParams params;
  std::uint64_t config_hash = 0;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw ParseError(path + ": not an allotrl checkpoint");

  LoadedCheckpoint out;
  std::string word;
  in >> word;
  if (word != "config_hash") throw ParseError(path + ": missing config_hash");
  std::string hash_hex;
  in >> hash_hex;
  out.config_hash = std::stoull(hash_hex, nullptr, 16);

  struct RawTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
  };
  std::vector<RawTensor> tensors;
  while (in >> word) {
    if (word != "tensor") throw ParseError(path + ": expected tensor record");
    RawTensor t;
    in >> t.name;
    std::getline(in, line);
    std::stringstream dims(line);
    int d;
    while (dims >> d) t.shape.push_back(d);
    std::size_t count = 1;
    for (int s : t.shape) count *= static_cast<std::size_t>(s);
    t.values.resize(count);
    // istream num_get does not reliably parse hexfloats; go through strtod.
    std::string tok;
    for (auto& v : t.values) {
      if (!(in >> tok)) throw ParseError(path + ": truncated tensor " + t.name);
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size())
        throw ParseError(path + ": bad value '" + tok + "' in " + t.name);
    }
    tensors.push_back(std::move(t));
  }

  auto take = [&](const std::string& name) -> RawTensor& {
    for (auto& t : tensors)
      if (t.name == name) return t;
    throw ParseError(path + ": missing tensor " + name);
  };

  auto load_mlp = [&](const std::string& prefix) {
    Mlp net;
    for (std::size_t i = 0;; ++i) {
      const std::string wname = prefix + "." + std::to_string(i) + ".w";
      bool present = false;
      for (const auto& t : tensors) present |= t.name == wname;
      if (!present) break;
      RawTensor& wt = take(wname);
      RawTensor& bt = take(prefix + "." + std::to_string(i) + ".b");
      if (wt.shape.size() != 2 || bt.shape.size() != 1)
        throw ParseError(path + ": bad shape for layer " + wname);
      DenseLayer l;
      l.out = wt.shape[0];
      l.in = wt.shape[1];
      l.w = std::move(wt.values);
      l.b = std::move(bt.values);
      net.layers.push_back(std::move(l));
    }
    if (net.layers.empty())
      throw ParseError(path + ": no layers for network " + prefix);
    return net;
  };

  out.params.actor = load_mlp("actor");
  out.params.critic = load_mlp("critic");
  out.params.log_std = take("log_std").values;
  return out;
}

}  // namespace allotrl
