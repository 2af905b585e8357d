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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "demokit/net.hpp"
#include "demokit/rng.hpp"

using namespace demokit;
using namespace demokit::nn;

namespace {

MatX<double> random_input(const NetConfig& cfg, int batch, uint64_t seed) {
  Rng rng(seed);
  MatX<double> m(cfg.input_c * cfg.input_h * cfg.input_w, batch);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

BatchTargets<double> random_targets(int batch, uint64_t seed) {
  Rng rng(seed);
  BatchTargets<double> t;
  t.dx.resize(3, batch);
  t.w6.resize(6, batch);
  for (Eigen::Index i = 0; i < t.dx.size(); ++i) t.dx.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < t.w6.size(); ++i) t.w6.data()[i] = rng.normal();
  for (int i = 0; i < batch; ++i) t.g.push_back(rng.bernoulli(0.5) ? 1 : 0);
  return t;
}

// Independent straight-line forward for one sample: plain nested loops, no
// im2col, no GEMM. Mirrors the documented architecture directly.
struct NaiveForward {
  std::vector<std::vector<double>> feature;  // [c][y*w+x]

  static std::vector<std::vector<double>> conv(
      const std::vector<std::vector<double>>& in, int in_h, int in_w,
      const MatX<double>& w, const MatX<double>& b, int k, int s, int pad,
      int* out_h, int* out_w) {
    const int in_c = static_cast<int>(in.size());
    const int out_c = static_cast<int>(w.rows());
    *out_h = (in_h + 2 * pad - k) / s + 1;
    *out_w = (in_w + 2 * pad - k) / s + 1;
    std::vector<std::vector<double>> out(
        out_c, std::vector<double>(static_cast<size_t>(*out_h) * *out_w, 0.0));
    for (int oc = 0; oc < out_c; ++oc)
      for (int oy = 0; oy < *out_h; ++oy)
        for (int ox = 0; ox < *out_w; ++ox) {
          double acc = b(oc, 0);
          for (int ic = 0; ic < in_c; ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int y = oy * s - pad + ky;
                const int x = ox * s - pad + kx;
                if (y < 0 || y >= in_h || x < 0 || x >= in_w) continue;
                acc += w(oc, (ic * k + ky) * k + kx) *
                       in[ic][static_cast<size_t>(y) * in_w + x];
              }
          out[oc][static_cast<size_t>(oy) * *out_w + ox] = std::max(acc, 0.0);
        }
    return out;
  }

  static std::vector<double> fc(const std::vector<double>& in,
                                const MatX<double>& w, const MatX<double>& b,
                                bool relu) {
    std::vector<double> out(w.rows());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double acc = b(r, 0);
      for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * in[c];
      out[r] = relu ? std::max(acc, 0.0) : acc;
    }
    return out;
  }
};

}  // namespace

TEST_CASE("forward with zero parameters produces zero outputs") {
  const NetConfig cfg = NetConfig::tiny();
  Net<double> net(cfg);  // zero-initialized
  BatchCache<double> cache;
  const auto out = net.forward(random_input(cfg, 3, 1), &cache);
  CHECK(out.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward is deterministic") {
  const NetConfig cfg = NetConfig::tiny();
  Net<double> net(cfg);
  net.init(7);
  const auto input = random_input(cfg, 2, 2);
  BatchCache<double> c1, c2;
  const auto a = net.forward(input, &c1);
  const auto b = net.forward(input, &c2);
  CHECK(a.x == b.x);
  CHECK(a.w == b.w);
  CHECK(a.g == b.g);
}

TEST_CASE("forward matches the straight-line oracle") {
  const NetConfig cfg = NetConfig::tiny();
  Net<double> net(cfg);
  net.init(11);
  const auto input = random_input(cfg, 1, 3);
  BatchCache<double> cache;
  const auto out = net.forward(input, &cache);

  // naive single-sample pass
  std::vector<std::vector<double>> feat(
      cfg.input_c,
      std::vector<double>(static_cast<size_t>(cfg.input_h) * cfg.input_w));
  for (int c = 0; c < cfg.input_c; ++c)
    for (int i = 0; i < cfg.input_h * cfg.input_w; ++i)
      feat[c][i] = input(static_cast<Eigen::Index>(c) * cfg.input_h * cfg.input_w + i, 0);
  int h = cfg.input_h, w = cfg.input_w;
  for (size_t l = 0; l < cfg.conv.size(); ++l) {
    int oh = 0, ow = 0;
    feat = NaiveForward::conv(feat, h, w, net.conv_w_[l], net.conv_b_[l],
                              cfg.conv[l].kernel, cfg.conv[l].stride,
                              cfg.conv[l].kernel / 2, &oh, &ow);
    h = oh;
    w = ow;
  }
  std::vector<double> latent;
  for (const auto& plane : feat)
    latent.insert(latent.end(), plane.begin(), plane.end());

  const auto h1 = NaiveForward::fc(latent, net.t1_w_, net.t1_b_, true);
  const auto h2 = NaiveForward::fc(h1, net.t2_w_, net.t2_b_, true);
  const auto x = NaiveForward::fc(h2, net.t3_w_, net.t3_b_, false);
  std::vector<double> rot_in = latent;
  rot_in.insert(rot_in.end(), x.begin(), x.end());
  const auto hr = NaiveForward::fc(rot_in, net.r1_w_, net.r1_b_, true);
  const auto w6 = NaiveForward::fc(hr, net.r2_w_, net.r2_b_, false);
  const auto hg = NaiveForward::fc(latent, net.g1_w_, net.g1_b_, true);
  const auto g = NaiveForward::fc(hg, net.g2_w_, net.g2_b_, false);

  for (int i = 0; i < 3; ++i) CHECK(out.x(i, 0) == doctest::Approx(x[i]).epsilon(1e-6));
  for (int i = 0; i < 6; ++i) CHECK(out.w(i, 0) == doctest::Approx(w6[i]).epsilon(1e-6));
  for (int i = 0; i < 2; ++i) CHECK(out.g(i, 0) == doctest::Approx(g[i]).epsilon(1e-6));
}

TEST_CASE("loss trivial cases") {
  BatchOutput<double> out;
  BatchTargets<double> tgt = random_targets(1, 3);
  out.x = tgt.dx;
  out.w = tgt.w6;
  out.g = MatX<double>::Zero(2, 1);
  out.g(tgt.g[0], 0) = 100.0;  // saturated correct logit
  const LossTerms t = batch_loss(out, tgt, LossWeights{}, true, true, nullptr);
  CHECK(t.l1 == 0.0);
  CHECK(t.l2 == 0.0);
  CHECK(t.dir == 0.0);
  CHECK(t.rot == 0.0);
  CHECK(t.grip < 1e-9);
}

TEST_CASE("direction loss properties") {
  const Eigen::Vector3d v(0.3, -0.2, 0.9);
  CHECK(direction_loss(v, v) < 1e-12);
  CHECK(direction_loss(3.0 * v, v) < 1e-12);
  CHECK(direction_loss(Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(direction_loss(v, -v) == doctest::Approx(M_PI).epsilon(1e-9));

  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector3d a(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector3d b(rng.normal(), rng.normal(), rng.normal());
    const double base = direction_loss(a, b);
    const double scaled =
        direction_loss(rng.uniform(0.1, 10) * a, rng.uniform(0.1, 10) * b);
    CHECK(std::abs(base - scaled) < 1e-9);
  }

  // degenerate norms contribute nothing
  Eigen::Vector3d grad;
  CHECK(direction_loss(Eigen::Vector3d::Zero(), v, &grad) == 0.0);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("direction loss gradient is orthogonal to the prediction") {
  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d pred(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector3d tgt(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector3d grad;
    direction_loss(pred, tgt, &grad);
    CHECK(std::abs(grad.dot(pred)) < 1e-6);
  }
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
  const NetConfig cfg = NetConfig::tiny();
  Net<double> net(cfg);
  net.init(23);
  BatchCache<double> cache;
  net.forward(random_input(cfg, 2, 5), &cache);
  BatchOutput<double> gout;
  gout.x = MatX<double>::Zero(3, 2);
  gout.w = MatX<double>::Zero(6, 2);
  gout.g = MatX<double>::Zero(2, 2);
  Net<double> grads(cfg);
  grads.set_zero();
  net.backward(cache, gout, &grads);
  double total = 0;
  grads.for_each_tensor([&total](const std::string&, MatX<double>& m) {
    total += m.cwiseAbs().sum();
  });
  CHECK(total == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  const NetConfig cfg = NetConfig::tiny();
  Net<double> net(cfg);
  net.init(29);
  const auto input = random_input(cfg, 2, 31);
  const auto targets = random_targets(2, 37);
  const LossWeights lw;  // every term active

  const auto loss_at = [&]() {
    BatchCache<double> cache;
    const auto out = net.forward(input, &cache);
    return batch_loss(out, targets, lw, true, true, nullptr).total;
  };

  BatchCache<double> cache;
  const auto out = net.forward(input, &cache);
  BatchOutput<double> gout;
  batch_loss(out, targets, lw, true, true, &gout);
  Net<double> grads(cfg);
  grads.set_zero();
  net.backward(cache, gout, &grads);

  std::vector<MatX<double>*> param_tensors, grad_tensors;
  net.for_each_tensor([&](const std::string&, MatX<double>& m) {
    param_tensors.push_back(&m);
  });
  grads.for_each_tensor([&](const std::string&, MatX<double>& m) {
    grad_tensors.push_back(&m);
  });

  const double eps = 1e-4;
  double max_rel = 0;
  for (size_t t = 0; t < param_tensors.size(); ++t) {
    MatX<double>& p = *param_tensors[t];
    const MatX<double>& g = *grad_tensors[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double orig = p.data()[i];
      p.data()[i] = orig + eps;
      const double up = loss_at();
      p.data()[i] = orig - eps;
      const double dn = loss_at();
      p.data()[i] = orig;
      const double fd = (up - dn) / (2 * eps);
      const double a = g.data()[i];
      const double rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const NetConfig cfg = NetConfig::tiny();
  Net<float> net(cfg);
  net.init(31);
  const auto file = std::filesystem::temp_directory_path() / "demokit_net.ckpt";
  save_checkpoint(file, net);
  Net<float> back = load_checkpoint(file);
  CHECK(back.init_seed() == net.init_seed());

  std::vector<MatX<float>*> a, b;
  net.for_each_tensor([&](const std::string&, MatX<float>& m) { a.push_back(&m); });
  back.for_each_tensor([&](const std::string&, MatX<float>& m) { b.push_back(&m); });
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);

  // identical predictions
  Rng rng(33);
  MatX<float> input(cfg.input_c * cfg.input_h * cfg.input_w, 2);
  for (Eigen::Index i = 0; i < input.size(); ++i)
    input.data()[i] = static_cast<float>(rng.uniform());
  BatchCache<float> c1, c2;
  const auto o1 = net.forward(input, &c1);
  const auto o2 = back.forward(input, &c2);
  CHECK(o1.x == o2.x);
  CHECK(o1.w == o2.w);
  CHECK(o1.g == o2.g);
  std::filesystem::remove(file);
}

TEST_CASE("adam step is deterministic and moves parameters") {
  const NetConfig cfg = NetConfig::tiny();
  auto run = [&cfg]() {
    Net<double> net(cfg);
    net.init(41);
    Adam<double> opt(cfg, {.lr = 1e-2});
    const auto input = random_input(cfg, 4, 43);
    const auto targets = random_targets(4, 47);
    for (int it = 0; it < 3; ++it) {
      BatchCache<double> cache;
      const auto out = net.forward(input, &cache);
      BatchOutput<double> gout;
      batch_loss(out, targets, LossWeights{}, true, true, &gout);
      Net<double> grads(cfg);
      grads.set_zero();
      net.backward(cache, gout, &grads);
      opt.step(&net, grads);
    }
    std::vector<double> flat;
    net.for_each_tensor([&flat](const std::string&, MatX<double>& m) {
      flat.insert(flat.end(), m.data(), m.data() + m.size());
    });
    return flat;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a == b);
  double sum = 0;
  for (double v : a) sum += std::abs(v);
  CHECK(sum > 0);
}
