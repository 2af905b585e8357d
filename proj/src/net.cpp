// Copyright 2026 The demokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "demokit/net.hpp"

#include <cstring>
#include <fstream>

#include "demokit/jsonio.hpp"

namespace demokit::nn {

void NetConfig::validate() const {
  if (input_h <= 0 || input_w <= 0 || input_c <= 0)
    throw InvalidArgument("NetConfig: non-positive input dims");
  if (conv.empty()) throw InvalidArgument("NetConfig: empty conv stack");
  for (const ConvSpec& c : conv)
    if (c.filters <= 0 || c.kernel <= 0 || c.stride <= 0)
      throw InvalidArgument("NetConfig: bad conv spec");
  if (trans_fc1 <= 0 || trans_fc2 <= 0 || rot_fc <= 0 || grip_fc <= 0)
    throw InvalidArgument("NetConfig: non-positive head width");
  if (!action_heads && !gripper_head)
    throw InvalidArgument("NetConfig: no heads enabled");
  // the stack must not collapse below 1x1
  conv_stack_dims(*this);
}

NetConfig NetConfig::desk(int h, int w) {
  NetConfig cfg;
  cfg.input_h = h;
  cfg.input_w = w;
  return cfg;
}

NetConfig NetConfig::full_scale() {
  NetConfig cfg;
  cfg.input_h = cfg.input_w = 224;
  cfg.conv = {{96, 11, 4}, {256, 5, 2}, {384, 3, 1},
              {384, 3, 2}, {256, 3, 1}, {256, 3, 2}};
  return cfg;
}

NetConfig NetConfig::tiny() {
  NetConfig cfg;
  cfg.input_h = cfg.input_w = 12;
  cfg.conv = {{4, 3, 2}, {8, 3, 2}};
  cfg.trans_fc1 = 16;
  cfg.trans_fc2 = 8;
  cfg.rot_fc = 16;
  cfg.grip_fc = 8;
  cfg.gripper_head = true;
  return cfg;
}

NetConfig NetConfig::gripper_classifier(const NetConfig& base) {
  NetConfig cfg = base;
  cfg.action_heads = false;
  cfg.gripper_head = true;
  return cfg;
}

std::vector<ConvDims> conv_stack_dims(const NetConfig& cfg) {
  std::vector<ConvDims> dims;
  int c = cfg.input_c, h = cfg.input_h, w = cfg.input_w;
  for (const ConvSpec& spec : cfg.conv) {
    ConvDims d;
    d.in_c = c;
    d.in_h = h;
    d.in_w = w;
    d.out_c = spec.filters;
    d.k = spec.kernel;
    d.s = spec.stride;
    d.pad = spec.kernel / 2;
    d.out_h = (h + 2 * d.pad - d.k) / d.s + 1;
    d.out_w = (w + 2 * d.pad - d.k) / d.s + 1;
    if (d.out_h <= 0 || d.out_w <= 0)
      throw InvalidArgument("NetConfig: conv stack collapses the image");
    dims.push_back(d);
    c = d.out_c;
    h = d.out_h;
    w = d.out_w;
  }
  return dims;
}

int latent_dim(const NetConfig& cfg) {
  const auto dims = conv_stack_dims(cfg);
  return dims.back().out_c * dims.back().positions();
}

double direction_loss(const Eigen::Vector3d& pred, const Eigen::Vector3d& target,
                      Eigen::Vector3d* grad_pred) {
  constexpr double kNormFloor = 1e-6;
  constexpr double kCosGuard = 1e-6;  // keeps the gradient off the acos pole
  const double np = pred.norm();
  const double nt = target.norm();
  if (np < kNormFloor || nt < kNormFloor) {
    if (grad_pred != nullptr) grad_pred->setZero();
    return 0.0;
  }
  const double u = pred.dot(target) / (np * nt);
  if (grad_pred != nullptr) {
    if (u > -1.0 + kCosGuard && u < 1.0 - kCosGuard) {
      const double scale = -1.0 / std::sqrt(1.0 - u * u);
      *grad_pred = scale * (target / (np * nt) - u * pred / (np * np));
    } else {
      grad_pred->setZero();  // saturated near perfect (anti-)alignment
    }
  }
  // acos amplifies ulp noise near +/-1: snap exact (anti-)alignment
  constexpr double kSnap = 1e-9;
  if (u >= 1.0 - kSnap) return 0.0;
  if (u <= -1.0 + kSnap) return M_PI;
  return std::acos(u);
}

namespace {

Json config_to_json(const NetConfig& cfg) {
  Json conv = Json::array();
  for (const ConvSpec& c : cfg.conv)
    conv.push_back({{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}});
  return {{"input_h", cfg.input_h},   {"input_w", cfg.input_w},
          {"input_c", cfg.input_c},   {"conv", conv},
          {"trans_fc1", cfg.trans_fc1}, {"trans_fc2", cfg.trans_fc2},
          {"rot_fc", cfg.rot_fc},     {"grip_fc", cfg.grip_fc},
          {"action_heads", cfg.action_heads},
          {"gripper_head", cfg.gripper_head}};
}

NetConfig config_from_json(const Json& j) {
  NetConfig cfg;
  cfg.input_h = j.at("input_h").get<int>();
  cfg.input_w = j.at("input_w").get<int>();
  cfg.input_c = j.at("input_c").get<int>();
  cfg.conv.clear();
  for (const Json& c : j.at("conv"))
    cfg.conv.push_back({c.at("filters").get<int>(), c.at("kernel").get<int>(),
                        c.at("stride").get<int>()});
  cfg.trans_fc1 = j.at("trans_fc1").get<int>();
  cfg.trans_fc2 = j.at("trans_fc2").get<int>();
  cfg.rot_fc = j.at("rot_fc").get<int>();
  cfg.grip_fc = j.at("grip_fc").get<int>();
  cfg.action_heads = j.at("action_heads").get<bool>();
  cfg.gripper_head = j.at("gripper_head").get<bool>();
  return cfg;
}

constexpr char kMagic[8] = {'D', 'K', 'C', 'P', 'T', '0', '1', '\n'};

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const Net<float>& net) {
  Json tensors = Json::array();
  auto* n = const_cast<Net<float>*>(&net);
  n->for_each_tensor([&tensors](const std::string& name, MatX<float>& m) {
    tensors.push_back(
        {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  const Json header = {{"version", 1},
                       {"scalar", "f32"},
                       {"init_seed", net.init_seed()},
                       {"config", config_to_json(net.config())},
                       {"tensors", tensors}};
  const std::string htext = header.dump();

  if (!file.parent_path().empty())
    std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  n->for_each_tensor([&out](const std::string&, MatX<float>& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(float) * m.size()));
  });
  if (!out) throw IoError("write failed: " + file.string());
}

Net<float> load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError(file.string() + ": not a checkpoint file");
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1u << 20))
    throw ParseError(file.string() + ": bad checkpoint header");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  Json header;
  try {
    header = Json::parse(htext);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  if (header.at("scalar").get<std::string>() != "f32")
    throw ParseError(file.string() + ": unsupported scalar type");

  Net<float> net(config_from_json(header.at("config")));
  net.set_init_seed(header.at("init_seed").get<uint64_t>());
  size_t idx = 0;
  const Json& tensors = header.at("tensors");
  net.for_each_tensor([&](const std::string& name, MatX<float>& m) {
    const Json& t = tensors.at(idx++);
    if (t.at("name").get<std::string>() != name ||
        t.at("rows").get<Eigen::Index>() != m.rows() ||
        t.at("cols").get<Eigen::Index>() != m.cols())
      throw ParseError(file.string() + ": tensor table mismatch at " + name);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * m.size()));
  });
  if (!in) throw ParseError(file.string() + ": truncated tensor data");
  return net;
}

}  // namespace demokit::nn
