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

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "demokit/error.hpp"
#include "demokit/image.hpp"
#include "demokit/rng.hpp"

namespace demokit::nn {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

struct ConvSpec {
  int filters = 0;
  int kernel = 3;
  int stride = 2;
};

// Conv trunk into a flat latent; translation head latent->fc1->fc2->3;
// rotation head concat(latent, x_hat)->fc->6; gripper head latent->fc->2.
struct NetConfig {
  int input_h = 64, input_w = 64, input_c = 3;
  std::vector<ConvSpec> conv{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
  int trans_fc1 = 512;
  int trans_fc2 = 256;
  int rot_fc = 256;
  int grip_fc = 256;
  bool action_heads = true;   // translation + rotation
  bool gripper_head = false;  // open/close classifier

  /// Reduced trunk for 64x64-class inputs.
  static NetConfig desk(int h = 64, int w = 64);
  /// Large-image preset: five-layer trunk plus a 256-filter conv, 224x224.
  static NetConfig full_scale();
  /// Few-thousand-parameter net sized for finite-difference checking.
  static NetConfig tiny();
  /// Same trunk as `base`, classifier head only.
  static NetConfig gripper_classifier(const NetConfig& base);

  void validate() const;
};

struct ConvDims {
  int in_c, in_h, in_w, out_c, k, s, pad, out_h, out_w;
  int positions() const { return out_h * out_w; }
};

std::vector<ConvDims> conv_stack_dims(const NetConfig& cfg);

/// Flattened latent width of the conv trunk.
int latent_dim(const NetConfig& cfg);

template <typename T>
struct BatchOutput {
  MatX<T> x;  // 3 x B
  MatX<T> w;  // 6 x B
  MatX<T> g;  // 2 x B
};

template <typename T>
struct BatchCache {
  MatX<T> input;                  // C x (H*W*B)
  std::vector<MatX<T>> cols;      // per conv layer
  std::vector<MatX<T>> acts;      // per conv layer, post-relu
  MatX<T> latent;                 // D x B
  MatX<T> ht1, ht2, rot_in, hr1, hg1;
};

/// The policy network. Holds parameters; also reused as the container for
/// gradients and optimizer state (same tensor structure).
template <typename T>
class Net {
 public:
  Net() = default;
  explicit Net(const NetConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    dims_ = conv_stack_dims(cfg);
    const int d = latent_dim(cfg);
    for (const ConvDims& cd : dims_) {
      conv_w_.emplace_back(MatX<T>::Zero(cd.out_c, cd.in_c * cd.k * cd.k));
      conv_b_.emplace_back(MatX<T>::Zero(cd.out_c, 1));
    }
    if (cfg.action_heads) {
      t1_w_ = MatX<T>::Zero(cfg.trans_fc1, d);
      t1_b_ = MatX<T>::Zero(cfg.trans_fc1, 1);
      t2_w_ = MatX<T>::Zero(cfg.trans_fc2, cfg.trans_fc1);
      t2_b_ = MatX<T>::Zero(cfg.trans_fc2, 1);
      t3_w_ = MatX<T>::Zero(3, cfg.trans_fc2);
      t3_b_ = MatX<T>::Zero(3, 1);
      r1_w_ = MatX<T>::Zero(cfg.rot_fc, d + 3);
      r1_b_ = MatX<T>::Zero(cfg.rot_fc, 1);
      r2_w_ = MatX<T>::Zero(6, cfg.rot_fc);
      r2_b_ = MatX<T>::Zero(6, 1);
    }
    if (cfg.gripper_head) {
      g1_w_ = MatX<T>::Zero(cfg.grip_fc, d);
      g1_b_ = MatX<T>::Zero(cfg.grip_fc, 1);
      g2_w_ = MatX<T>::Zero(2, cfg.grip_fc);
      g2_b_ = MatX<T>::Zero(2, 1);
    }
  }

  const NetConfig& config() const { return cfg_; }
  uint64_t init_seed() const { return init_seed_; }
  void set_init_seed(uint64_t seed) { init_seed_ = seed; }

  /// He-normal weights, zero biases; output projections scaled down.
  void init(uint64_t seed) {
    init_seed_ = seed;
    Rng rng(mix_seed({seed, 0x6e657469ull}));
    for_each_tensor([&rng](const std::string& name, MatX<T>& m) {
      if (name.ends_with("_b")) {
        m.setZero();
        return;
      }
      const double fan_in = static_cast<double>(m.cols());
      const bool output = name == "t3_w" || name == "r2_w" || name == "g2_w";
      const double stddev =
          output ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<T>(stddev * rng.normal());
    });
  }

  void set_zero() {
    for_each_tensor([](const std::string&, MatX<T>& m) { m.setZero(); });
  }

  size_t param_count() const {
    size_t n = 0;
    const_cast<Net*>(this)->for_each_tensor(
        [&n](const std::string&, MatX<T>& m) { n += m.size(); });
    return n;
  }

  /// Visits every tensor in a fixed order (the checkpoint/optimizer order).
  void for_each_tensor(
      const std::function<void(const std::string&, MatX<T>&)>& fn) {
    for (size_t l = 0; l < conv_w_.size(); ++l) {
      fn("conv" + std::to_string(l) + "_w", conv_w_[l]);
      fn("conv" + std::to_string(l) + "_b", conv_b_[l]);
    }
    if (cfg_.action_heads) {
      fn("t1_w", t1_w_); fn("t1_b", t1_b_);
      fn("t2_w", t2_w_); fn("t2_b", t2_b_);
      fn("t3_w", t3_w_); fn("t3_b", t3_b_);
      fn("r1_w", r1_w_); fn("r1_b", r1_b_);
      fn("r2_w", r2_w_); fn("r2_b", r2_b_);
    }
    if (cfg_.gripper_head) {
      fn("g1_w", g1_w_); fn("g1_b", g1_b_);
      fn("g2_w", g2_w_); fn("g2_b", g2_b_);
    }
  }

  /// input: (C*H*W x B), one planar image per column.
  BatchOutput<T> forward(const MatX<T>& input, BatchCache<T>* cache) const {
    const int b = static_cast<int>(input.cols());
    if (input.rows() != static_cast<Eigen::Index>(cfg_.input_c) * cfg_.input_h *
                            cfg_.input_w)
      throw InvalidArgument("forward: input size does not match NetConfig");

    BatchCache<T> local;
    BatchCache<T>& c = cache != nullptr ? *cache : local;
    c.cols.resize(dims_.size());
    c.acts.resize(dims_.size());

    // reshape to (C x H*W*B): column b*P0+p
    const int p0 = cfg_.input_h * cfg_.input_w;
    c.input.resize(cfg_.input_c, static_cast<Eigen::Index>(p0) * b);
    for (int bi = 0; bi < b; ++bi)
      for (int ch = 0; ch < cfg_.input_c; ++ch)
        c.input.row(ch).segment(static_cast<Eigen::Index>(bi) * p0, p0) =
            input.col(bi).segment(static_cast<Eigen::Index>(ch) * p0, p0)
                .transpose();

    const MatX<T>* prev = &c.input;
    for (size_t l = 0; l < dims_.size(); ++l) {
      im2col(*prev, dims_[l], b, &c.cols[l]);
      c.acts[l].noalias() = conv_w_[l] * c.cols[l];
      c.acts[l].colwise() += conv_b_[l].col(0);
      c.acts[l] = c.acts[l].cwiseMax(T(0));
      prev = &c.acts[l];
    }

    // flatten: latent(ch*P+p, b) = act(ch, b*P+p)
    const ConvDims& last = dims_.back();
    const int pl = last.positions();
    const int d = last.out_c * pl;
    c.latent.resize(d, b);
    for (int bi = 0; bi < b; ++bi)
      for (int ch = 0; ch < last.out_c; ++ch)
        c.latent.col(bi).segment(static_cast<Eigen::Index>(ch) * pl, pl) =
            c.acts.back()
                .row(ch)
                .segment(static_cast<Eigen::Index>(bi) * pl, pl)
                .transpose();

    BatchOutput<T> out;
    if (cfg_.action_heads) {
      c.ht1.noalias() = t1_w_ * c.latent;
      c.ht1.colwise() += t1_b_.col(0);
      c.ht1 = c.ht1.cwiseMax(T(0));
      c.ht2.noalias() = t2_w_ * c.ht1;
      c.ht2.colwise() += t2_b_.col(0);
      c.ht2 = c.ht2.cwiseMax(T(0));
      out.x.noalias() = t3_w_ * c.ht2;
      out.x.colwise() += t3_b_.col(0);

      c.rot_in.resize(d + 3, b);
      c.rot_in.topRows(d) = c.latent;
      c.rot_in.bottomRows(3) = out.x;
      c.hr1.noalias() = r1_w_ * c.rot_in;
      c.hr1.colwise() += r1_b_.col(0);
      c.hr1 = c.hr1.cwiseMax(T(0));
      out.w.noalias() = r2_w_ * c.hr1;
      out.w.colwise() += r2_b_.col(0);
    } else {
      out.x = MatX<T>::Zero(3, b);
      out.w = MatX<T>::Zero(6, b);
    }
    if (cfg_.gripper_head) {
      c.hg1.noalias() = g1_w_ * c.latent;
      c.hg1.colwise() += g1_b_.col(0);
      c.hg1 = c.hg1.cwiseMax(T(0));
      out.g.noalias() = g2_w_ * c.hg1;
      out.g.colwise() += g2_b_.col(0);
    } else {
      out.g = MatX<T>::Zero(2, b);
    }
    return out;
  }

  /// Accumulates parameter gradients into `grads` (same config). `gout`
  /// holds dLoss/dOutput for each head.
  void backward(const BatchCache<T>& c, const BatchOutput<T>& gout,
                Net<T>* grads) const {
    const int b = static_cast<int>(c.latent.cols());
    const int d = latent_dim(cfg_);
    MatX<T> dlatent = MatX<T>::Zero(d, b);

    if (cfg_.gripper_head) {
      grads->g2_w_.noalias() += gout.g * c.hg1.transpose();
      grads->g2_b_.col(0) += gout.g.rowwise().sum();
      MatX<T> dh = g2_w_.transpose() * gout.g;
      dh = dh.array() * (c.hg1.array() > T(0)).template cast<T>();
      grads->g1_w_.noalias() += dh * c.latent.transpose();
      grads->g1_b_.col(0) += dh.rowwise().sum();
      dlatent.noalias() += g1_w_.transpose() * dh;
    }

    if (cfg_.action_heads) {
      // rotation head first: it feeds gradient back into x_hat
      grads->r2_w_.noalias() += gout.w * c.hr1.transpose();
      grads->r2_b_.col(0) += gout.w.rowwise().sum();
      MatX<T> dhr = r2_w_.transpose() * gout.w;
      dhr = dhr.array() * (c.hr1.array() > T(0)).template cast<T>();
      grads->r1_w_.noalias() += dhr * c.rot_in.transpose();
      grads->r1_b_.col(0) += dhr.rowwise().sum();
      const MatX<T> drot_in = r1_w_.transpose() * dhr;
      dlatent += drot_in.topRows(d);

      const MatX<T> dx = gout.x + drot_in.bottomRows(3);
      grads->t3_w_.noalias() += dx * c.ht2.transpose();
      grads->t3_b_.col(0) += dx.rowwise().sum();
      MatX<T> dh2 = t3_w_.transpose() * dx;
      dh2 = dh2.array() * (c.ht2.array() > T(0)).template cast<T>();
      grads->t2_w_.noalias() += dh2 * c.ht1.transpose();
      grads->t2_b_.col(0) += dh2.rowwise().sum();
      MatX<T> dh1 = t2_w_.transpose() * dh2;
      dh1 = dh1.array() * (c.ht1.array() > T(0)).template cast<T>();
      grads->t1_w_.noalias() += dh1 * c.latent.transpose();
      grads->t1_b_.col(0) += dh1.rowwise().sum();
      dlatent.noalias() += t1_w_.transpose() * dh1;
    }

    // un-flatten dlatent into the last conv activation layout
    const ConvDims& last = dims_.back();
    const int pl = last.positions();
    MatX<T> dact(last.out_c, static_cast<Eigen::Index>(pl) * b);
    for (int bi = 0; bi < b; ++bi)
      for (int ch = 0; ch < last.out_c; ++ch)
        dact.row(ch).segment(static_cast<Eigen::Index>(bi) * pl, pl) =
            dlatent.col(bi).segment(static_cast<Eigen::Index>(ch) * pl, pl)
                .transpose();

    for (int l = static_cast<int>(dims_.size()) - 1; l >= 0; --l) {
      MatX<T> dpre =
          dact.array() * (c.acts[l].array() > T(0)).template cast<T>();
      grads->conv_w_[l].noalias() += dpre * c.cols[l].transpose();
      grads->conv_b_[l].col(0) += dpre.rowwise().sum();
      if (l > 0) {
        const MatX<T> dcol = conv_w_[l].transpose() * dpre;
        col2im(dcol, dims_[l], b, &dact);  // becomes dact for layer l-1
      }
    }
  }

  // direct tensor access (trainer-internal use)
  std::vector<MatX<T>> conv_w_, conv_b_;
  MatX<T> t1_w_, t1_b_, t2_w_, t2_b_, t3_w_, t3_b_;
  MatX<T> r1_w_, r1_b_, r2_w_, r2_b_;
  MatX<T> g1_w_, g1_b_, g2_w_, g2_b_;

 private:
  static void im2col(const MatX<T>& a, const ConvDims& cd, int b, MatX<T>* col) {
    const int p = cd.positions();
    const int pin = cd.in_h * cd.in_w;
    col->resize(static_cast<Eigen::Index>(cd.in_c) * cd.k * cd.k,
                static_cast<Eigen::Index>(p) * b);
    col->setZero();
    for (int bi = 0; bi < b; ++bi)
      for (int oy = 0; oy < cd.out_h; ++oy)
        for (int ox = 0; ox < cd.out_w; ++ox) {
          const Eigen::Index c0 =
              static_cast<Eigen::Index>(bi) * p + oy * cd.out_w + ox;
          for (int ky = 0; ky < cd.k; ++ky) {
            const int y = oy * cd.s - cd.pad + ky;
            if (y < 0 || y >= cd.in_h) continue;
            for (int kx = 0; kx < cd.k; ++kx) {
              const int x = ox * cd.s - cd.pad + kx;
              if (x < 0 || x >= cd.in_w) continue;
              const Eigen::Index src =
                  static_cast<Eigen::Index>(bi) * pin + y * cd.in_w + x;
              for (int ch = 0; ch < cd.in_c; ++ch)
                (*col)((static_cast<Eigen::Index>(ch) * cd.k + ky) * cd.k + kx,
                       c0) = a(ch, src);
            }
          }
        }
  }

  static void col2im(const MatX<T>& dcol, const ConvDims& cd, int b,
                     MatX<T>* da) {
    const int p = cd.positions();
    const int pin = cd.in_h * cd.in_w;
    da->resize(cd.in_c, static_cast<Eigen::Index>(pin) * b);
    da->setZero();
    for (int bi = 0; bi < b; ++bi)
      for (int oy = 0; oy < cd.out_h; ++oy)
        for (int ox = 0; ox < cd.out_w; ++ox) {
          const Eigen::Index c0 =
              static_cast<Eigen::Index>(bi) * p + oy * cd.out_w + ox;
          for (int ky = 0; ky < cd.k; ++ky) {
            const int y = oy * cd.s - cd.pad + ky;
            if (y < 0 || y >= cd.in_h) continue;
            for (int kx = 0; kx < cd.k; ++kx) {
              const int x = ox * cd.s - cd.pad + kx;
              if (x < 0 || x >= cd.in_w) continue;
              const Eigen::Index dst =
                  static_cast<Eigen::Index>(bi) * pin + y * cd.in_w + x;
              for (int ch = 0; ch < cd.in_c; ++ch)
                (*da)(ch, dst) +=
                    dcol((static_cast<Eigen::Index>(ch) * cd.k + ky) * cd.k + kx,
                         c0);
            }
          }
        }
  }

  NetConfig cfg_;
  std::vector<ConvDims> dims_;
  uint64_t init_seed_ = 0;
};

/// Packs planar [0,1] images into a forward() input matrix.
template <typename T>
MatX<T> to_input_matrix(const std::vector<const img::ImageTensor*>& batch) {
  if (batch.empty()) throw InvalidArgument("to_input_matrix: empty batch");
  const size_t n = batch[0]->size();
  MatX<T> m(n, batch.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    if (batch[b]->size() != n)
      throw InvalidArgument("to_input_matrix: mixed image sizes");
    for (size_t i = 0; i < n; ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) =
          static_cast<T>(batch[b]->data[i]);
  }
  return m;
}

struct LossWeights {
  double l1 = 1.0, l2 = 1.0, dir = 0.1, rot = 1.0, grip = 1.0;
};

struct LossTerms {
  double total = 0, l1 = 0, l2 = 0, dir = 0, rot = 0, grip = 0;
};

/// Direction term of the translation loss: angle between prediction and
/// target, invariant to both magnitudes. Cosine clamped away from +/-1;
/// returns 0 (with zero gradient) when either norm is below 1e-6.
double direction_loss(const Eigen::Vector3d& pred, const Eigen::Vector3d& target,
                      Eigen::Vector3d* grad_pred = nullptr);

template <typename T>
struct BatchTargets {
  MatX<T> dx;          // 3 x B
  MatX<T> w6;          // 6 x B
  std::vector<int> g;  // class per sample (0 open, 1 close)
};

/// Mean loss over the batch; fills `grad` (dLoss/dOutput) when non-null.
/// Heads with zero weight (or disabled) contribute nothing.
template <typename T>
LossTerms batch_loss(const BatchOutput<T>& out, const BatchTargets<T>& tgt,
                     const LossWeights& lw, bool action_heads, bool grip_head,
                     std::type_identity_t<BatchOutput<T>>* grad) {
  const int b = static_cast<int>(out.x.cols());
  if (grad != nullptr) {
    grad->x = MatX<T>::Zero(3, b);
    grad->w = MatX<T>::Zero(6, b);
    grad->g = MatX<T>::Zero(2, b);
  }
  LossTerms terms;
  const double inv_b = 1.0 / b;
  for (int i = 0; i < b; ++i) {
    if (action_heads) {
      const Eigen::Vector3d x = out.x.col(i).template cast<double>();
      const Eigen::Vector3d t = tgt.dx.col(i).template cast<double>();
      const Eigen::Vector3d e = x - t;
      terms.l1 += e.template lpNorm<1>() / 3.0 * inv_b;
      terms.l2 += e.squaredNorm() / 3.0 * inv_b;
      Eigen::Vector3d dir_grad = Eigen::Vector3d::Zero();
      terms.dir += direction_loss(x, t, &dir_grad) * inv_b;
      const Eigen::Matrix<double, 6, 1> we =
          (out.w.col(i) - tgt.w6.col(i)).template cast<double>();
      terms.rot += we.squaredNorm() / 6.0 * inv_b;
      if (grad != nullptr) {
        Eigen::Vector3d gx = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k)
          gx[k] = lw.l1 * (e[k] > 0 ? 1.0 : (e[k] < 0 ? -1.0 : 0.0)) / 3.0 +
                  lw.l2 * 2.0 * e[k] / 3.0;
        gx += lw.dir * dir_grad;
        grad->x.col(i) += (gx * inv_b).template cast<T>();
        grad->w.col(i) +=
            (lw.rot * 2.0 / 6.0 * inv_b * we).template cast<T>();
      }
    }
    if (grip_head) {
      const double l0 = static_cast<double>(out.g(0, i));
      const double l1v = static_cast<double>(out.g(1, i));
      const double m = std::max(l0, l1v);
      const double z0 = std::exp(l0 - m), z1 = std::exp(l1v - m);
      const double zs = z0 + z1;
      const int cls = tgt.g[static_cast<size_t>(i)];
      terms.grip += -(std::log((cls == 0 ? z0 : z1) / zs)) * inv_b;
      if (grad != nullptr) {
        grad->g(0, i) += static_cast<T>(lw.grip * (z0 / zs - (cls == 0)) * inv_b);
        grad->g(1, i) += static_cast<T>(lw.grip * (z1 / zs - (cls == 1)) * inv_b);
      }
    }
  }
  terms.total = lw.l1 * terms.l1 + lw.l2 * terms.l2 + lw.dir * terms.dir +
                lw.rot * terms.rot + lw.grip * terms.grip;
  return terms;
}

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(const NetConfig& cfg, const AdamConfig& opt)
      : opt_(opt), m_(cfg), v_(cfg) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(Net<T>* params, const Net<T>& grads) {
    ++t_;
    const T b1 = static_cast<T>(opt_.beta1);
    const T b2 = static_cast<T>(opt_.beta2);
    const T corr1 = static_cast<T>(1.0 - std::pow(opt_.beta1, t_));
    const T corr2 = static_cast<T>(1.0 - std::pow(opt_.beta2, t_));
    const T lr = static_cast<T>(opt_.lr);
    const T eps = static_cast<T>(opt_.eps);
    auto* gp = const_cast<Net<T>*>(&grads);
    std::vector<MatX<T>*> g_list, m_list, v_list;
    gp->for_each_tensor([&](const std::string&, MatX<T>& m) { g_list.push_back(&m); });
    m_.for_each_tensor([&](const std::string&, MatX<T>& m) { m_list.push_back(&m); });
    v_.for_each_tensor([&](const std::string&, MatX<T>& m) { v_list.push_back(&m); });
    size_t i = 0;
    params->for_each_tensor([&](const std::string&, MatX<T>& p) {
      MatX<T>& g = *g_list[i];
      MatX<T>& m = *m_list[i];
      MatX<T>& v = *v_list[i];
      m = b1 * m + (T(1) - b1) * g;
      v = (b2 * v.array() + (T(1) - b2) * g.array().square()).matrix();
      p.array() -=
          lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
      ++i;
    });
  }

 private:
  AdamConfig opt_;
  int t_ = 0;
  Net<T> m_, v_;
};

/// Versioned binary checkpoint: JSON header (config, tensor table, init seed)
/// followed by raw little-endian float32 data. Bit-exact round trip.
void save_checkpoint(const std::filesystem::path& file, const Net<float>& net);
Net<float> load_checkpoint(const std::filesystem::path& file);

}  // namespace demokit::nn
