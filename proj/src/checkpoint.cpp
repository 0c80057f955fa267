// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>
#include <sstream>

#include "pld/io.hpp"
#include "pld/model.hpp"

namespace pld {

namespace {

constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  s.write(reinterpret_cast<char*>(b), 4);
}
uint32_t read_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_record(std::ostream& s, const std::string& name, const Tensor& t) {
  write_u32(s, static_cast<uint32_t>(name.size()));
  s.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(s, static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) write_u32(s, static_cast<uint32_t>(d));
  s.write(reinterpret_cast<const char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

std::pair<std::string, Tensor> read_record(std::istream& s) {
  const uint32_t name_len = read_u32(s);
  std::string name(name_len, '\0');
  s.read(name.data(), name_len);
  const uint32_t rank = read_u32(s);
  std::vector<int> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_u32(s));
  Tensor t(shape);
  s.read(reinterpret_cast<char*>(t.data.data()),
         static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!s) throw std::runtime_error("truncated checkpoint record");
  return {name, std::move(t)};
}

std::string labels_join(const std::vector<std::string>& v) {
  std::string r;
  for (size_t i = 0; i < v.size(); ++i) r += (i ? "," : "") + v[i];
  return r;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net, const SgdState* opt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);

  std::map<std::string, std::string> hdr;
  hdr["input_ms"] = std::to_string(net.spec.input_ms);
  hdr["n_channels"] = std::to_string(net.spec.n_channels);
  hdr["n_res_blocks"] = std::to_string(net.spec.n_res_blocks);
  hdr["n_classes"] = std::to_string(net.spec.n_classes);
  hdr["kernel"] = std::to_string(net.spec.kernel);
  hdr["final_dilation"] = std::to_string(net.spec.final_dilation);
  hdr["n_coeffs"] = std::to_string(net.spec.n_coeffs);
  if (!net.label_names.empty()) hdr["labels"] = labels_join(net.label_names);
  const std::string header = format_kv(hdr);

  f.write("DCKP", 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<uint32_t>(header.size()));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));

  uint32_t count = static_cast<uint32_t>(net.params.size() + 2 * net.bn_stats.size() + 2);
  if (opt) count += static_cast<uint32_t>(opt->velocity.size());
  write_u32(f, count);

  for (const auto& [name, p] : net.params) write_record(f, name, p->value);
  for (const auto& [name, s] : net.bn_stats) {
    write_record(f, name + ".running_mean", s.mean);
    write_record(f, name + ".running_var", s.var);
  }
  write_record(f, "norm.mean", Tensor({net.spec.n_coeffs}, std::vector<float>(net.norm_mean)));
  write_record(f, "norm.var", Tensor({net.spec.n_coeffs}, std::vector<float>(net.norm_var)));
  if (opt)
    for (const auto& [name, v] : opt->velocity) write_record(f, "opt." + name, v);
}

Network load_checkpoint(const std::string& path, SgdState* opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "DCKP", 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const uint32_t version = read_u32(f);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");

  const uint32_t hdr_len = read_u32(f);
  std::string header(hdr_len, '\0');
  f.read(header.data(), hdr_len);
  auto kv = parse_kv(header);

  NetworkSpec spec;
  spec.input_ms = std::stoi(kv.at("input_ms"));
  spec.n_channels = std::stoi(kv.at("n_channels"));
  spec.n_res_blocks = std::stoi(kv.at("n_res_blocks"));
  spec.n_classes = std::stoi(kv.at("n_classes"));
  spec.kernel = std::stoi(kv.at("kernel"));
  spec.final_dilation = std::stoi(kv.at("final_dilation"));
  spec.n_coeffs = std::stoi(kv.at("n_coeffs"));

  Network net = build_network(spec, 0);
  if (kv.count("labels")) net.label_names = split(kv.at("labels"), ',');

  const uint32_t count = read_u32(f);
  for (uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_record(f);
    if (name.rfind("opt.", 0) == 0) {
      if (opt) opt->velocity[name.substr(4)] = std::move(t);
    } else if (name == "norm.mean") {
      net.norm_mean.assign(t.data.begin(), t.data.end());
    } else if (name == "norm.var") {
      net.norm_var.assign(t.data.begin(), t.data.end());
    } else if (name.size() > 13 && name.substr(name.size() - 13) == ".running_mean") {
      net.bn_stats.at(name.substr(0, name.size() - 13)).mean = std::move(t);
    } else if (name.size() > 12 && name.substr(name.size() - 12) == ".running_var") {
      net.bn_stats.at(name.substr(0, name.size() - 12)).var = std::move(t);
    } else {
      auto it = net.params.find(name);
      if (it == net.params.end()) throw std::runtime_error("unknown checkpoint record: " + name);
      if (!it->second->value.same_shape(t))
        throw std::runtime_error("checkpoint shape mismatch for " + name);
      it->second->value = std::move(t);
    }
  }
  return net;
}

}  // namespace pld
