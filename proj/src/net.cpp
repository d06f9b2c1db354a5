#include "gelhard/net.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gelhard/error.hpp"
#include "gelhard/rng.hpp"

namespace gelhard {

namespace {

using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using VecMap = Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>;
using CVecMap = Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>;

MapR as_matrix(Tensor& t, int rows, int cols) { return MapR(t.ptr(), rows, cols); }
CMapR as_matrix(const Tensor& t, int rows, int cols) { return CMapR(t.ptr(), rows, cols); }

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

// Message is only built on failure.
template <typename MakeMessage>
void require(bool ok, MakeMessage&& make) {
  if (!ok) throw DomainError(make());
}

void require_rank(const Tensor& t, int rank, const char* name) {
  require(t.rank() == rank && t.size() == element_count(t.shape), [&] {
    return std::string(std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                       shape_string(t.shape));
  });
}

struct ConvGeometry {
  int n, h, w, c, k, f, ho, wo, stride, pad;
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, int stride, int pad) {
  require_rank(x, 4, "conv input");
  require_rank(w, 4, "conv weights");
  require(w.dim(0) == w.dim(1), "conv kernel must be square");
  require(w.dim(2) == x.dim(3), [&] {
    return std::string("conv weights expect " + std::to_string(w.dim(2)) + " input channels, got " +
                       std::to_string(x.dim(3)));
  });
  require(stride >= 1 && pad >= 0, "conv stride must be >= 1 and pad >= 0");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(3), 0, 0, stride, pad};
  require(g.h + 2 * pad >= g.k && g.w + 2 * pad >= g.k, "conv kernel larger than padded input");
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  return g;
}

// For a fixed kernel row the K input pixels of one output are contiguous in
// x, so interior windows copy K*C values at once.
MatR im2col(const Tensor& x, const ConvGeometry& g) {
  const Eigen::Index width = static_cast<Eigen::Index>(g.k) * g.k * g.c;
  MatR cols(static_cast<Eigen::Index>(g.n) * g.ho * g.wo, width);
  const int run = g.k * g.c;
  for (int n = 0; n < g.n; ++n) {
    for (int oy = 0; oy < g.ho; ++oy) {
      for (int ox = 0; ox < g.wo; ++ox) {
        Real* row = cols.data() + ((static_cast<Eigen::Index>(n) * g.ho + oy) * g.wo + ox) * width;
        const int ix0 = ox * g.stride - g.pad;
        const bool inner_x = ix0 >= 0 && ix0 + g.k <= g.w;
        for (int ky = 0; ky < g.k; ++ky) {
          Real* dst = row + ky * run;
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + run, 0.0);
            continue;
          }
          const Real* src = x.ptr() + (static_cast<std::size_t>(n) * g.h + iy) * g.w * g.c;
          if (inner_x) {
            std::copy(src + ix0 * g.c, src + (ix0 + g.k) * g.c, dst);
            continue;
          }
          for (int kx = 0; kx < g.k; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= g.w) {
              std::fill(dst + kx * g.c, dst + (kx + 1) * g.c, 0.0);
            } else {
              std::copy(src + ix * g.c, src + (ix + 1) * g.c, dst + kx * g.c);
            }
          }
        }
      }
    }
  }
  return cols;
}

Tensor col2im(const MatR& cols, const ConvGeometry& g) {
  Tensor dx({g.n, g.h, g.w, g.c});
  const Eigen::Index width = cols.cols();
  for (int n = 0; n < g.n; ++n) {
    for (int oy = 0; oy < g.ho; ++oy) {
      for (int ox = 0; ox < g.wo; ++ox) {
        const Real* row =
            cols.data() + ((static_cast<Eigen::Index>(n) * g.ho + oy) * g.wo + ox) * width;
        const int ix0 = ox * g.stride - g.pad;
        const int kx_lo = std::max(0, -ix0);
        const int kx_hi = std::min(g.k, g.w - ix0);
        for (int ky = 0; ky < g.k; ++ky) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          Real* dst = dx.ptr() + ((static_cast<std::size_t>(n) * g.h + iy) * g.w + ix0) * g.c;
          const Real* src = row + ky * g.k * g.c;
          for (int i = kx_lo * g.c; i < kx_hi * g.c; ++i) dst[i] += src[i];
        }
      }
    }
  }
  return dx;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Tensor::Tensor(std::vector<int> dims, Real fill) : shape(std::move(dims)) {
  for (int d : shape)
    require(d > 0, [&] {
      return std::string("tensor dimensions must be positive, got " + shape_string(shape));
    });
  data.assign(element_count(shape), fill);
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(std::max(d, 0));
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Layers

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const ConvGeometry g = conv_geometry(x, w, stride, pad);
  const bool has_bias = !b.data.empty();
  if (has_bias) require(b.rank() == 1 && b.dim(0) == g.f, "conv bias must have shape [F]");
  const MatR cols = im2col(x, g);
  Tensor y({g.n, g.ho, g.wo, g.f});
  MapR ym = as_matrix(y, static_cast<int>(cols.rows()), g.f);
  ym.noalias() = cols * as_matrix(w, g.k * g.k * g.c, g.f);
  if (has_bias) ym.rowwise() += CVecMap(b.ptr(), g.f);
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                            bool with_input_grad) {
  const ConvGeometry g = conv_geometry(x, w, stride, pad);
  require(dy.shape == std::vector<int>{g.n, g.ho, g.wo, g.f},
          [&] { return std::string("conv output gradient has shape " + shape_string(dy.shape)); });
  const int rows = g.n * g.ho * g.wo;
  const MatR cols = im2col(x, g);
  const CMapR dym = as_matrix(dy, rows, g.f);
  Conv2dGrads out;
  out.dw = Tensor(w.shape);
  as_matrix(out.dw, g.k * g.k * g.c, g.f).noalias() = cols.transpose() * dym;
  out.db = Tensor({g.f});
  VecMap(out.db.ptr(), g.f) = dym.colwise().sum();
  if (with_input_grad) {
    const MatR dcols = dym * as_matrix(w, g.k * g.k * g.c, g.f).transpose();
    out.dx = col2im(dcols, g);
  }
  return out;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (Real& v : y.data) v = std::max<Real>(v, 0.0);
  return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  require(y.shape == dy.shape, "relu gradient shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (y[i] <= 0.0) dx[i] = 0.0;
  }
  return dx;
}

MaxPoolResult maxpool2d_forward(const Tensor& x, int k) {
  require_rank(x, 4, "pool input");
  require(k >= 1 && x.dim(1) >= k && x.dim(2) >= k,
          [&] { return std::string("pool window larger than input " + shape_string(x.shape)); });
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int ho = h / k, wo = w / k;
  MaxPoolResult out;
  out.y = Tensor({n, ho, wo, c});
  out.argmax.resize(out.y.size());
  std::size_t o = 0;
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        for (int ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = ((static_cast<std::size_t>(b) * h + oy * k) * w + ox * k) * c + ch;
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
              const std::size_t i =
                  ((static_cast<std::size_t>(b) * h + oy * k + dy) * w + ox * k + dx) * c + ch;
              if (x[i] > x[best]) best = i;
            }
          }
          out.y[o] = x[best];
          out.argmax[o] = best;
        }
      }
    }
  }
  return out;
}

Tensor maxpool2d_backward(const std::vector<int>& x_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& dy) {
  require(argmax.size() == dy.size(), "pool gradient shape mismatch");
  Tensor dx(x_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
  return dx;
}

Tensor avgpool2d_forward(const Tensor& x, int k) {
  require_rank(x, 4, "pool input");
  require(k >= 1 && x.dim(1) >= k && x.dim(2) >= k,
          [&] { return std::string("pool window larger than input " + shape_string(x.shape)); });
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int ho = h / k, wo = w / k;
  Tensor y({n, ho, wo, c});
  const Real inv = 1.0 / (k * k);
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        Real* dst = y.ptr() + ((static_cast<std::size_t>(b) * ho + oy) * wo + ox) * c;
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            const Real* src =
                x.ptr() + ((static_cast<std::size_t>(b) * h + oy * k + dy) * w + ox * k + dx) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
          }
        }
        for (int ch = 0; ch < c; ++ch) dst[ch] *= inv;
      }
    }
  }
  return y;
}

Tensor avgpool2d_backward(const std::vector<int>& x_shape, int k, const Tensor& dy) {
  Tensor dx(x_shape);
  const int n = x_shape[0], h = x_shape[1], w = x_shape[2], c = x_shape[3];
  const int ho = h / k, wo = w / k;
  require(dy.shape == std::vector<int>{n, ho, wo, c}, "pool gradient shape mismatch");
  const Real inv = 1.0 / (k * k);
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Real* src = dy.ptr() + ((static_cast<std::size_t>(b) * ho + oy) * wo + ox) * c;
        for (int ddy = 0; ddy < k; ++ddy) {
          for (int ddx = 0; ddx < k; ++ddx) {
            Real* dst = dx.ptr() +
                        ((static_cast<std::size_t>(b) * h + oy * k + ddy) * w + ox * k + ddx) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch] * inv;
          }
        }
      }
    }
  }
  return dx;
}

Tensor global_avgpool_forward(const Tensor& x) {
  require_rank(x, 4, "global pool input");
  const int n = x.dim(0), hw = x.dim(1) * x.dim(2), c = x.dim(3);
  Tensor y({n, c});
  for (int b = 0; b < n; ++b) {
    VecMap(y.ptr() + static_cast<std::size_t>(b) * c, c) =
        CMapR(x.ptr() + static_cast<std::size_t>(b) * hw * c, hw, c).colwise().mean();
  }
  return y;
}

Tensor global_avgpool_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  const int n = x_shape[0], hw = x_shape[1] * x_shape[2], c = x_shape[3];
  require(dy.shape == std::vector<int>{n, c}, "global pool gradient shape mismatch");
  Tensor dx(x_shape);
  for (int b = 0; b < n; ++b) {
    MapR(dx.ptr() + static_cast<std::size_t>(b) * hw * c, hw, c).rowwise() =
        CVecMap(dy.ptr() + static_cast<std::size_t>(b) * c, c) / static_cast<Real>(hw);
  }
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weights");
  require(w.dim(0) == x.dim(1), [&] {
    return std::string("dense weights expect " + std::to_string(w.dim(0)) + " inputs, got " +
                       std::to_string(x.dim(1)));
  });
  require(b.rank() == 1 && b.dim(0) == w.dim(1), "dense bias must have shape [O]");
  const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
  Tensor y({n, out});
  MapR ym = as_matrix(y, n, out);
  ym.noalias() = as_matrix(x, n, in) * as_matrix(w, in, out);
  ym.rowwise() += CVecMap(b.ptr(), out);
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  require_rank(x, 2, "dense input");
  const int n = x.dim(0), in = x.dim(1), out = w.dim(1);
  require(dy.shape == std::vector<int>{n, out}, "dense output gradient shape mismatch");
  DenseGrads g;
  const CMapR dym = as_matrix(dy, n, out);
  g.dx = Tensor({n, in});
  as_matrix(g.dx, n, in).noalias() = dym * as_matrix(w, in, out).transpose();
  g.dw = Tensor({in, out});
  as_matrix(g.dw, in, out).noalias() = as_matrix(x, n, in).transpose() * dym;
  g.db = Tensor({out});
  VecMap(g.db.ptr(), out) = dym.colwise().sum();
  return g;
}

// ---------------------------------------------------------------------------
// LSTM

namespace {

void check_lstm(const LstmParams& p) {
  require_rank(p.w, 2, "lstm input weights");
  require_rank(p.u, 2, "lstm recurrent weights");
  require_rank(p.b, 1, "lstm bias");
  const int d = p.u.dim(0);
  require(p.u.dim(1) == 4 * d && p.w.dim(1) == 4 * d && p.b.dim(0) == 4 * d,
          "lstm parameter shapes disagree on the hidden size");
}

// Returns activated gates [N, 4d] and the next state.
LstmState lstm_step_impl(const LstmState& s, const Tensor& x, const LstmParams& p,
                         Tensor* gates_out) {
  check_lstm(p);
  const int d = p.hidden_dim();
  require_rank(x, 2, "lstm input");
  const int n = x.dim(0);
  require(x.dim(1) == p.input_dim(), [&] {
    return std::string("lstm input has " + std::to_string(x.dim(1)) + " features, expected " +
                       std::to_string(p.input_dim()));
  });
  require(s.h.shape == std::vector<int>{n, d} && s.c.shape == std::vector<int>{n, d},
          "lstm state shape mismatch");
  Tensor z({n, 4 * d});
  MapR zm = as_matrix(z, n, 4 * d);
  zm.noalias() = as_matrix(x, n, p.input_dim()) * as_matrix(p.w, p.input_dim(), 4 * d);
  zm.noalias() += as_matrix(s.h, n, d) * as_matrix(p.u, d, 4 * d);
  zm.rowwise() += CVecMap(p.b.ptr(), 4 * d);
  LstmState next{Tensor({n, d}), Tensor({n, d})};
  for (int r = 0; r < n; ++r) {
    Real* zr = z.ptr() + static_cast<std::size_t>(r) * 4 * d;
    for (int j = 0; j < d; ++j) {
      const double ig = sigmoid(zr[j]);
      const double fg = sigmoid(zr[d + j]);
      const double gg = std::tanh(zr[2 * d + j]);
      const double og = sigmoid(zr[3 * d + j]);
      zr[j] = ig;
      zr[d + j] = fg;
      zr[2 * d + j] = gg;
      zr[3 * d + j] = og;
      const std::size_t k = static_cast<std::size_t>(r) * d + j;
      next.c[k] = fg * s.c[k] + ig * gg;
      next.h[k] = og * std::tanh(next.c[k]);
    }
  }
  if (gates_out) *gates_out = std::move(z);
  return next;
}

}  // namespace

LstmState lstm_zero_state(int batch, int hidden) {
  return LstmState{Tensor({batch, hidden}), Tensor({batch, hidden})};
}

LstmState lstm_step(const LstmState& state, const Tensor& x, const LstmParams& p) {
  return lstm_step_impl(state, x, p, nullptr);
}

LstmCache lstm_forward(const std::vector<Tensor>& xs, const LstmParams& p) {
  check_lstm(p);
  require(!xs.empty(), "lstm sequence is empty");
  LstmCache cache;
  cache.xs = xs;
  cache.states.push_back(lstm_zero_state(xs.front().dim(0), p.hidden_dim()));
  for (const Tensor& x : xs) {
    Tensor gates;
    cache.states.push_back(lstm_step_impl(cache.states.back(), x, p, &gates));
    cache.gates.push_back(std::move(gates));
  }
  return cache;
}

LstmGrads lstm_backward(const LstmCache& cache, const LstmParams& p,
                        const std::vector<Tensor>& dhs) {
  const int steps = static_cast<int>(cache.xs.size());
  require(static_cast<int>(dhs.size()) == steps, "lstm gradient sequence length mismatch");
  const int d = p.hidden_dim();
  const int in = p.input_dim();
  const int n = cache.xs.front().dim(0);
  LstmGrads g;
  g.dw = Tensor(p.w.shape);
  g.du = Tensor(p.u.shape);
  g.db = Tensor(p.b.shape);
  g.dxs.resize(static_cast<std::size_t>(steps));
  Tensor dh_next({n, d});
  Tensor dc_next({n, d});
  Tensor dz({n, 4 * d});
  for (int t = steps - 1; t >= 0; --t) {
    const Tensor& gates = cache.gates[static_cast<std::size_t>(t)];
    const LstmState& prev = cache.states[static_cast<std::size_t>(t)];
    const LstmState& cur = cache.states[static_cast<std::size_t>(t) + 1];
    const Tensor& dh_out = dhs[static_cast<std::size_t>(t)];
    require(dh_out.shape == std::vector<int>{n, d}, "lstm hidden gradient shape mismatch");
    for (int r = 0; r < n; ++r) {
      const Real* gr = gates.ptr() + static_cast<std::size_t>(r) * 4 * d;
      Real* dzr = dz.ptr() + static_cast<std::size_t>(r) * 4 * d;
      for (int j = 0; j < d; ++j) {
        const std::size_t k = static_cast<std::size_t>(r) * d + j;
        const double ig = gr[j], fg = gr[d + j], gg = gr[2 * d + j], og = gr[3 * d + j];
        const double tc = std::tanh(cur.c[k]);
        const double dh = dh_out[k] + dh_next[k];
        const double dc = dc_next[k] + dh * og * (1.0 - tc * tc);
        dzr[j] = dc * gg * ig * (1.0 - ig);
        dzr[d + j] = dc * prev.c[k] * fg * (1.0 - fg);
        dzr[2 * d + j] = dc * ig * (1.0 - gg * gg);
        dzr[3 * d + j] = dh * tc * og * (1.0 - og);
        dc_next[k] = dc * fg;
      }
    }
    const CMapR dzm(dz.ptr(), n, 4 * d);
    const Tensor& x = cache.xs[static_cast<std::size_t>(t)];
    as_matrix(g.dw, in, 4 * d).noalias() += as_matrix(x, n, in).transpose() * dzm;
    as_matrix(g.du, d, 4 * d).noalias() += as_matrix(prev.h, n, d).transpose() * dzm;
    VecMap(g.db.ptr(), 4 * d) += dzm.colwise().sum();
    Tensor dx({n, in});
    as_matrix(dx, n, in).noalias() = dzm * as_matrix(p.w, in, 4 * d).transpose();
    g.dxs[static_cast<std::size_t>(t)] = std::move(dx);
    as_matrix(dh_next, n, d).noalias() = dzm * as_matrix(p.u, d, 4 * d).transpose();
  }
  return g;
}

double huber_loss(double pred, double target, double kappa) {
  const double e = std::abs(pred - target);
  return e <= kappa ? 0.5 * e * e : kappa * (e - 0.5 * kappa);
}

double huber_grad(double pred, double target, double kappa) {
  const double e = pred - target;
  return std::clamp(e, -kappa, kappa);
}

// ---------------------------------------------------------------------------
// Model

struct Model::Activations {
  int batch = 0;
  Tensor stem;
  std::array<Tensor, 4> conv_in;
  std::array<Tensor, 4> relu_out;
  std::array<std::vector<std::size_t>, 4> pool_argmax;
  std::vector<int> gap_in_shape;
  Tensor pooled;
  Tensor embed;
  LstmCache lstm;
  std::vector<std::array<double, kClipLength>> y;  // normalized head outputs
};

namespace {

void fill_uniform(Tensor& t, double limit, Rng& rng) {
  for (Real& v : t.data) v = rng.uniform(-limit, limit);
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require(cfg.input_rows > 0 && cfg.input_cols > 0 && cfg.input_channels > 0, "bad input shape");
  require(cfg.stem_pool >= 1 && cfg.first_stride >= 1, "stem pool and stride must be >= 1");
  require(cfg.embed_dim > 0 && cfg.hidden_dim > 0, "embedding and hidden sizes must be positive");
  require(cfg.input_scale > 0.0 && cfg.output_scale > 0.0,
          "input and output scales must be positive");
  int rows = cfg.input_rows / cfg.stem_pool;
  int cols = cfg.input_cols / cfg.stem_pool;
  for (int l = 0; l < 4; ++l) {
    const int s = l == 0 ? cfg.first_stride : 1;
    rows = (rows - 1) / s + 1;
    cols = (cols - 1) / s + 1;
    rows /= 2;
    cols /= 2;
    require(rows >= 1 && cols >= 1, "input too small for four pooling blocks");
    require(cfg.widths[static_cast<std::size_t>(l)] > 0, "conv widths must be positive");
  }

  Rng rng(mix_seed(seed, 0x494e4954));
  int in_ch = cfg.input_channels;
  for (int l = 0; l < 4; ++l) {
    const int out_ch = cfg.widths[static_cast<std::size_t>(l)];
    const std::string name = "conv" + std::to_string(l + 1);
    Tensor w({3, 3, in_ch, out_ch});
    fill_uniform(w, std::sqrt(6.0 / (9.0 * in_ch)), rng);
    params_.push_back({name + ".w", std::move(w)});
    params_.push_back({name + ".b", Tensor({out_ch})});
    in_ch = out_ch;
  }
  Tensor ew({in_ch, cfg.embed_dim});
  fill_uniform(ew, std::sqrt(6.0 / in_ch), rng);
  params_.push_back({"embed.w", std::move(ew)});
  params_.push_back({"embed.b", Tensor({cfg.embed_dim})});
  const int d = cfg.hidden_dim;
  const double lim = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor lw({cfg.embed_dim, 4 * d});
  fill_uniform(lw, lim, rng);
  Tensor lu({d, 4 * d});
  fill_uniform(lu, lim, rng);
  Tensor lb({4 * d});
  for (int j = d; j < 2 * d; ++j) lb[static_cast<std::size_t>(j)] = 1.0;
  params_.push_back({"lstm.w", std::move(lw)});
  params_.push_back({"lstm.u", std::move(lu)});
  params_.push_back({"lstm.b", std::move(lb)});
  Tensor hw({d});
  fill_uniform(hw, lim, rng);
  params_.push_back({"head.w", std::move(hw)});
  params_.push_back({"head.b", Tensor({1})});
}

Tensor& Model::param(const std::string& name) {
  for (NamedTensor& p : params_) {
    if (p.name == name) return p.value;
  }
  throw DomainError("no parameter named '" + name + "'");
}

const Tensor& Model::param(const std::string& name) const {
  return const_cast<Model*>(this)->param(name);
}

std::vector<Tensor> Model::zero_grads() const {
  std::vector<Tensor> g;
  g.reserve(params_.size());
  for (const NamedTensor& p : params_) g.emplace_back(p.value.shape);
  return g;
}

Tensor Model::clip_input(const std::vector<const SelectedClip*>& clips) const {
  require(!clips.empty(), "empty clip batch");
  const int n = static_cast<int>(clips.size()) * kClipLength;
  Tensor x({n, cfg_.input_rows, cfg_.input_cols, cfg_.input_channels});
  const std::size_t per =
      static_cast<std::size_t>(cfg_.input_rows) * cfg_.input_cols * cfg_.input_channels;
  std::size_t o = 0;
  for (const SelectedClip* clip : clips) {
    for (const TactileFrame& f : clip->frames) {
      require(f.rows == cfg_.input_rows && f.cols == cfg_.input_cols && f.rgb.size() == per, [&] {
        return std::string("clip frame is " + std::to_string(f.rows) + "x" +
                           std::to_string(f.cols) + ", model expects " +
                           std::to_string(cfg_.input_rows) + "x" + std::to_string(cfg_.input_cols));
      });
      for (std::size_t i = 0; i < per; ++i)
        x[o + i] = cfg_.input_scale * static_cast<Real>(f.rgb[i]);
      o += per;
    }
  }
  return x;
}

void Model::run(const Tensor& input, int batch, Activations& act) const {
  act.batch = batch;
  act.stem = cfg_.stem_pool > 1 ? avgpool2d_forward(input, cfg_.stem_pool) : input;
  const Tensor* x = &act.stem;
  Tensor pooled_out;
  for (int l = 0; l < 4; ++l) {
    const std::size_t li = static_cast<std::size_t>(l);
    act.conv_in[li] = *x;
    const Tensor& w = params_[2 * li].value;
    const Tensor& b = params_[2 * li + 1].value;
    act.relu_out[li] =
        relu_forward(conv2d_forward(act.conv_in[li], w, b, l == 0 ? cfg_.first_stride : 1, 1));
    MaxPoolResult mp = maxpool2d_forward(act.relu_out[li], 2);
    act.pool_argmax[li] = std::move(mp.argmax);
    pooled_out = std::move(mp.y);
    x = &pooled_out;
  }
  act.gap_in_shape = pooled_out.shape;
  act.pooled = global_avgpool_forward(pooled_out);
  act.embed = relu_forward(dense_forward(act.pooled, param("embed.w"), param("embed.b")));

  const int e = cfg_.embed_dim;
  std::vector<Tensor> xs;
  for (int t = 0; t < kClipLength; ++t) {
    Tensor xt({batch, e});
    for (int b = 0; b < batch; ++b) {
      const Real* src = act.embed.ptr() + (static_cast<std::size_t>(b) * kClipLength + t) * e;
      std::copy(src, src + e, xt.ptr() + static_cast<std::size_t>(b) * e);
    }
    xs.push_back(std::move(xt));
  }
  const LstmParams lp{param("lstm.w"), param("lstm.u"), param("lstm.b")};
  act.lstm = lstm_forward(xs, lp);
  const Tensor& hw = param("head.w");
  const double hb = param("head.b")[0];
  const int d = cfg_.hidden_dim;
  act.y.assign(static_cast<std::size_t>(batch), {});
  for (int t = 0; t < kClipLength; ++t) {
    const Tensor& h = act.lstm.states[static_cast<std::size_t>(t) + 1].h;
    for (int b = 0; b < batch; ++b) {
      double acc = hb;
      for (int j = 0; j < d; ++j)
        acc += h[static_cast<std::size_t>(b) * d + j] * hw[static_cast<std::size_t>(j)];
      act.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)] = acc;
    }
  }
}

std::vector<ClipOutputs> Model::forward(const std::vector<const SelectedClip*>& clips) const {
  Activations act;
  run(clip_input(clips), static_cast<int>(clips.size()), act);
  std::vector<ClipOutputs> out(clips.size());
  for (std::size_t b = 0; b < clips.size(); ++b) {
    for (int t = 0; t < kClipLength; ++t) {
      out[b][static_cast<std::size_t>(t)] =
          cfg_.output_scale * act.y[b][static_cast<std::size_t>(t)];
    }
  }
  return out;
}

ClipOutputs Model::forward(const SelectedClip& clip) const { return forward({&clip}).front(); }

double Model::loss_and_grad(const std::vector<const SelectedClip*>& clips,
                            const std::vector<double>& targets, double kappa,
                            std::vector<Tensor>& grads) const {
  require(clips.size() == targets.size(), "one target per clip required");
  require(kappa > 0.0, "Huber kappa must be positive");
  const int batch = static_cast<int>(clips.size());
  Activations act;
  run(clip_input(clips), batch, act);
  grads = zero_grads();

  const double norm = 1.0 / (static_cast<double>(batch) * kClipLength);
  const int d = cfg_.hidden_dim;
  const Tensor& hw = param("head.w");
  std::vector<Tensor> dhs;
  double loss = 0.0;
  Tensor& g_hw = grads[params_.size() - 2];
  Tensor& g_hb = grads[params_.size() - 1];
  for (int t = 0; t < kClipLength; ++t) {
    Tensor dh({batch, d});
    const Tensor& h = act.lstm.states[static_cast<std::size_t>(t) + 1].h;
    for (int b = 0; b < batch; ++b) {
      const double target = targets[static_cast<std::size_t>(b)] / cfg_.output_scale;
      const double pred = act.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)];
      loss += norm * huber_loss(pred, target, kappa);
      const double dy = norm * huber_grad(pred, target, kappa);
      g_hb[0] += dy;
      for (int j = 0; j < d; ++j) {
        const std::size_t k = static_cast<std::size_t>(b) * d + j;
        g_hw[static_cast<std::size_t>(j)] += dy * h[k];
        dh[k] = dy * hw[static_cast<std::size_t>(j)];
      }
    }
    dhs.push_back(std::move(dh));
  }

  const LstmParams lp{param("lstm.w"), param("lstm.u"), param("lstm.b")};
  LstmGrads lg = lstm_backward(act.lstm, lp, dhs);
  grads[10] = std::move(lg.dw);
  grads[11] = std::move(lg.du);
  grads[12] = std::move(lg.db);

  const int e = cfg_.embed_dim;
  Tensor d_embed({batch * kClipLength, e});
  for (int t = 0; t < kClipLength; ++t) {
    const Tensor& dx = lg.dxs[static_cast<std::size_t>(t)];
    for (int b = 0; b < batch; ++b) {
      const Real* src = dx.ptr() + static_cast<std::size_t>(b) * e;
      std::copy(src, src + e, d_embed.ptr() + (static_cast<std::size_t>(b) * kClipLength + t) * e);
    }
  }
  DenseGrads dg = dense_backward(act.pooled, param("embed.w"), relu_backward(act.embed, d_embed));
  grads[8] = std::move(dg.dw);
  grads[9] = std::move(dg.db);

  Tensor dx = global_avgpool_backward(act.gap_in_shape, dg.dx);
  for (int l = 3; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    const Tensor d_relu = maxpool2d_backward(act.relu_out[li].shape, act.pool_argmax[li], dx);
    const Tensor d_conv = relu_backward(act.relu_out[li], d_relu);
    Conv2dGrads cg = conv2d_backward(act.conv_in[li], params_[2 * li].value,
                                     l == 0 ? cfg_.first_stride : 1, 1, d_conv, l > 0);
    grads[2 * li] = std::move(cg.dw);
    grads[2 * li + 1] = std::move(cg.db);
    dx = std::move(cg.dx);
  }
  return loss;
}

Shore00 predict_hardness(const ClipOutputs& y) {
  const double mean = (y[2] + y[3] + y[4]) / 3.0;
  return Shore00(std::isfinite(mean) ? std::clamp(mean, 0.0, 100.0) : 0.0);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'G', 'H', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("checkpoint descriptor has a malformed number '" + s + "'");
  }
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw DataError("checkpoint is truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::string Model::descriptor() const {
  std::ostringstream os;
  os << "architecture conv4-lstm\n";
  os << "input " << cfg_.input_rows << ' ' << cfg_.input_cols << ' ' << cfg_.input_channels << '\n';
  os << "stem_pool " << cfg_.stem_pool << '\n';
  os << "first_stride " << cfg_.first_stride << '\n';
  os << "widths " << cfg_.widths[0] << ' ' << cfg_.widths[1] << ' ' << cfg_.widths[2] << ' '
     << cfg_.widths[3] << '\n';
  os << "embed_dim " << cfg_.embed_dim << '\n';
  os << "hidden_dim " << cfg_.hidden_dim << '\n';
  os << "input_scale " << format_double(cfg_.input_scale) << '\n';
  os << "output_scale " << format_double(cfg_.output_scale) << '\n';
  for (const NamedTensor& p : params_) {
    os << "param " << p.name;
    for (int d : p.value.shape) os << ' ' << d;
    os << '\n';
  }
  return os.str();
}

void Model::save(std::ostream& os) const {
  const std::string desc = descriptor();
  os.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(os, kFormatVersion);
  write_le<std::uint64_t>(os, desc.size());
  os.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  for (const NamedTensor& p : params_) {
    for (Real v : p.value.data) write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw DataError("failed to write checkpoint");
}

void Model::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  save(os);
}

Model Model::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError("not a model checkpoint (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  const auto len = read_le<std::uint64_t>(is);
  if (len > (1u << 20)) throw DataError("checkpoint descriptor is implausibly large");
  std::string desc(len, '\0');
  if (!is.read(desc.data(), static_cast<std::streamsize>(len)))
    throw DataError("checkpoint is truncated");

  ModelConfig cfg;
  std::vector<std::pair<std::string, std::vector<int>>> shapes;
  std::istringstream ds(desc);
  std::string line;
  while (std::getline(ds, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto ints = [&](int count) {
      std::vector<int> v(static_cast<std::size_t>(count));
      for (int& x : v) {
        if (!(ls >> x)) throw DataError("checkpoint descriptor line '" + line + "' is malformed");
      }
      return v;
    };
    if (key == "architecture") {
      std::string arch;
      ls >> arch;
      if (arch != "conv4-lstm") throw DataError("unknown architecture '" + arch + "'");
    } else if (key == "input") {
      const auto v = ints(3);
      cfg.input_rows = v[0];
      cfg.input_cols = v[1];
      cfg.input_channels = v[2];
    } else if (key == "stem_pool") {
      cfg.stem_pool = ints(1)[0];
    } else if (key == "first_stride") {
      cfg.first_stride = ints(1)[0];
    } else if (key == "widths") {
      const auto v = ints(4);
      std::copy(v.begin(), v.end(), cfg.widths.begin());
    } else if (key == "embed_dim") {
      cfg.embed_dim = ints(1)[0];
    } else if (key == "hidden_dim") {
      cfg.hidden_dim = ints(1)[0];
    } else if (key == "input_scale" || key == "output_scale") {
      std::string v;
      ls >> v;
      (key == "input_scale" ? cfg.input_scale : cfg.output_scale) = parse_double(v);
    } else if (key == "param") {
      std::string name;
      ls >> name;
      std::vector<int> shape;
      int d = 0;
      while (ls >> d) shape.push_back(d);
      shapes.emplace_back(name, shape);
    } else if (!key.empty()) {
      throw DataError("unknown checkpoint descriptor key '" + key + "'");
    }
  }

  Model m;
  try {
    m = Model(cfg, 0);
  } catch (const DomainError& e) {
    throw DataError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
  if (shapes.size() != m.params_.size())
    throw DataError("checkpoint parameter list does not match its architecture");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    NamedTensor& p = m.params_[i];
    if (shapes[i].first != p.name || shapes[i].second != p.value.shape) {
      throw DataError("checkpoint parameter '" + shapes[i].first + "' " +
                      shape_string(shapes[i].second) + " does not match expected '" + p.name +
                      "' " + shape_string(p.value.shape));
    }
    for (Real& v : p.value.data) {
      v = std::bit_cast<double>(read_le<std::uint64_t>(is));
      if (!std::isfinite(v)) throw DataError("checkpoint parameter '" + p.name + "' is not finite");
    }
  }
  return m;
}

Model Model::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path + "'");
  Model m = load(is);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint '" + path + "' has trailing bytes");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Optimizers

Optimizer::Optimizer(const OptimizerConfig& cfg, const std::vector<NamedTensor>& params)
    : cfg_(cfg) {
  for (const NamedTensor& p : params) {
    m_.emplace_back(p.value.shape);
    v_.emplace_back(p.value.shape);
  }
}

void Optimizer::step(std::vector<NamedTensor>& params, std::vector<Tensor>& grads, double lr) {
  require(params.size() == grads.size() && params.size() == m_.size(),
          "optimizer parameter count mismatch");
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (Real v : g.data) sq += v * v;
  }
  if (!std::isfinite(sq)) throw DivergenceError("gradient is not finite");
  if (cfg_.clip_norm > 0.0 && sq > cfg_.clip_norm * cfg_.clip_norm) {
    const double s = cfg_.clip_norm / std::sqrt(sq);
    for (Tensor& g : grads) {
      for (Real& v : g.data) v *= s;
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].value;
    const Tensor& g = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (cfg_.kind == OptimizerKind::kSgd) {
        m[k] = cfg_.momentum * m[k] + g[k];
        p[k] -= lr * m[k];
      } else {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.epsilon);
      }
    }
  }
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

}  // namespace gelhard
