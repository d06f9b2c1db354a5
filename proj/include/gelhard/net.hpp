#pragma once

// Small differentiable core (dense tensors, layer forward/backward pairs) and
// the clip regressor built from it: a per-frame conv encoder, an LSTM over the
// five selected frames and an affine head at every step.
//
// Image tensors are laid out [N, H, W, C] row-major so that a TactileFrame's
// interleaved RGB buffer is already one image.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gelhard/pipeline.hpp"

namespace gelhard {

using Real = double;

// Fixed alignment keeps vectorized reductions independent of heap addresses,
// so training is bit-reproducible across processes.
using RealBuffer = std::vector<Real, Eigen::aligned_allocator<Real>>;

struct Tensor {
  std::vector<int> shape;
  RealBuffer data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, Real fill = 0.0);

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }
  std::size_t size() const { return data.size(); }
  Real* ptr() { return data.data(); }
  const Real* ptr() const { return data.data(); }
  Real& operator[](std::size_t i) { return data[i]; }
  Real operator[](std::size_t i) const { return data[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

// ---------------------------------------------------------------------------
// Layers. Each backward takes the forward inputs (or cache) and dL/dy.

/// x [N,H,W,C], w [K,K,C,F], b [F] or empty. Zero padding; cross-correlation.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

struct Conv2dGrads {
  Tensor dx, dw, db;
};
/// `with_input_grad = false` leaves dx empty (first layer of a network).
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                            bool with_input_grad = true);

Tensor relu_forward(const Tensor& x);
/// Gradient through ReLU given its output `y`.
Tensor relu_backward(const Tensor& y, const Tensor& dy);

/// Non-overlapping k x k max pool over [N,H,W,C]; trailing rows/cols dropped.
struct MaxPoolResult {
  Tensor y;
  std::vector<std::size_t> argmax;
};
MaxPoolResult maxpool2d_forward(const Tensor& x, int k);
Tensor maxpool2d_backward(const std::vector<int>& x_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& dy);

Tensor avgpool2d_forward(const Tensor& x, int k);
Tensor avgpool2d_backward(const std::vector<int>& x_shape, int k, const Tensor& dy);

/// [N,H,W,C] -> [N,C]
Tensor global_avgpool_forward(const Tensor& x);
Tensor global_avgpool_backward(const std::vector<int>& x_shape, const Tensor& dy);

/// x [N,I], w [I,O], b [O] -> [N,O]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
struct DenseGrads {
  Tensor dx, dw, db;
};
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

struct LstmParams {
  Tensor w;  // [I, 4d], gate blocks ordered i, f, g, o
  Tensor u;  // [d, 4d]
  Tensor b;  // [4d]

  int input_dim() const { return w.dim(0); }
  int hidden_dim() const { return u.dim(0); }
};

/// Batched hidden and cell state, each [N, d].
struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_zero_state(int batch, int hidden);

/// One step: z = x w + h u + b; c' = f c + i g; h' = o tanh(c').
LstmState lstm_step(const LstmState& state, const Tensor& x, const LstmParams& p);

/// Whole-sequence forward with the cache needed for backpropagation through
/// time. xs[t] is [N, I]; the initial state is zero.
struct LstmCache {
  std::vector<Tensor> xs;
  std::vector<LstmState> states;  // states[0] is the zero state, states[t+1] after step t
  std::vector<Tensor> gates;      // activated i, f, g, o per step, [N, 4d]
};
LstmCache lstm_forward(const std::vector<Tensor>& xs, const LstmParams& p);

struct LstmGrads {
  std::vector<Tensor> dxs;
  Tensor dw, du, db;
};
/// dhs[t] is dL/dh after step t, [N, d].
LstmGrads lstm_backward(const LstmCache& cache, const LstmParams& p,
                        const std::vector<Tensor>& dhs);

double huber_loss(double pred, double target, double kappa);
double huber_grad(double pred, double target, double kappa);

// ---------------------------------------------------------------------------
// Clip regressor

struct ModelConfig {
  int input_rows = 90;
  int input_cols = 120;
  int input_channels = 3;
  int stem_pool = 2;
  int first_stride = 2;
  std::array<int, 4> widths{16, 32, 64, 64};
  int embed_dim = 64;
  int hidden_dim = 64;
  // Clip pixels are multiplied by this before the encoder.
  double input_scale = 1.0;
  // Head outputs are in label / output_scale units.
  double output_scale = 100.0;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

using ClipOutputs = std::array<double, kClipLength>;

class Model {
 public:
  Model() = default;
  /// Parameters initialised from `seed` (fan-in uniform, forget bias 1).
  Model(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;

  /// Per-step hardness estimates (Shore 00) for each clip.
  std::vector<ClipOutputs> forward(const std::vector<const SelectedClip*>& clips) const;
  ClipOutputs forward(const SelectedClip& clip) const;

  /// Mean per-step Huber loss on normalized targets; gradients are written
  /// into `grads` (same order and shapes as params()).
  double loss_and_grad(const std::vector<const SelectedClip*>& clips,
                       const std::vector<double>& targets, double kappa,
                       std::vector<Tensor>& grads) const;

  std::vector<Tensor> zero_grads() const;

  std::string descriptor() const;
  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static Model load(std::istream& is);
  static Model load(const std::string& path);

 private:
  struct Activations;
  Tensor clip_input(const std::vector<const SelectedClip*>& clips) const;
  void run(const Tensor& input, int batch, Activations& act) const;

  ModelConfig cfg_;
  std::vector<NamedTensor> params_;
};

/// Mean of the last three step outputs, clamped to [0, 100].
Shore00 predict_hardness(const ClipOutputs& y);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Gradients are rescaled to this global L2 norm when larger; <= 0 disables.
  double clip_norm = 5.0;
};

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const std::vector<NamedTensor>& params);
  void step(std::vector<NamedTensor>& params, std::vector<Tensor>& grads, double lr);

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long long t_ = 0;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);

}  // namespace gelhard
