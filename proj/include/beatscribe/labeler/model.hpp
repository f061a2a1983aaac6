#pragma once

// Encoder-only Transformer tagger: linear input projection, sinusoidal
// positions, post-norm self-attention blocks, per-tick class logits.
// Forward and backward passes are written out by hand and templated on the
// scalar type so the same code runs in float for training and in double for
// gradient checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "beatscribe/errors.hpp"
#include "beatscribe/labeler/labels.hpp"
#include "beatscribe/matrix.hpp"

namespace beatscribe {

struct LabelerConfig {
  int layers = 2;
  int model_dim = 64;
  int heads = 4;
  int ff_dim = 256;
  int input_dim = 229;
  int max_ticks = 384;
  std::uint64_t seed = 0;
  Vocabulary vocab = Vocabulary::kMelody;
  bool positional_encoding = true;

  int num_classes() const { return beatscribe::num_classes(vocab); }

  void validate() const {
    if (layers < 0 || model_dim < 1 || heads < 1 || ff_dim < 1 || input_dim < 1) {
      throw InputError("labeler dimensions must be positive");
    }
    if (model_dim % heads != 0) throw InputError("model_dim must be divisible by heads");
    if (max_ticks < kTicksPerBeat || max_ticks % kTicksPerBeat != 0) {
      throw InputError("max_ticks must be a positive multiple of 4");
    }
  }

  /// Four layers, 512 wide, 8 heads, 2048 feed-forward.
  static LabelerConfig full_scale(int input_dim) {
    LabelerConfig c;
    c.layers = 4;
    c.model_dim = 512;
    c.heads = 8;
    c.ff_dim = 2048;
    c.input_dim = input_dim;
    return c;
  }

  friend bool operator==(const LabelerConfig&, const LabelerConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::size_t offset;

  std::size_t size() const { return rows * cols; }
};

/// Offsets of every named tensor inside one flat parameter vector.
class ParamLayout {
 public:
  struct Layer {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };

  explicit ParamLayout(const LabelerConfig& c) {
    c.validate();
    const auto d_in = static_cast<std::size_t>(c.input_dim);
    const auto d = static_cast<std::size_t>(c.model_dim);
    const auto f = static_cast<std::size_t>(c.ff_dim);
    const auto k = static_cast<std::size_t>(c.num_classes());
    in_w = add("input.weight", d_in, d);
    in_b = add("input.bias", 1, d);
    for (int l = 0; l < c.layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      Layer L{};
      L.wq = add(p + "attn.q.weight", d, d);
      L.bq = add(p + "attn.q.bias", 1, d);
      L.wk = add(p + "attn.k.weight", d, d);
      L.bk = add(p + "attn.k.bias", 1, d);
      L.wv = add(p + "attn.v.weight", d, d);
      L.bv = add(p + "attn.v.bias", 1, d);
      L.wo = add(p + "attn.out.weight", d, d);
      L.bo = add(p + "attn.out.bias", 1, d);
      L.ln1_g = add(p + "norm1.gain", 1, d);
      L.ln1_b = add(p + "norm1.bias", 1, d);
      L.w1 = add(p + "ff1.weight", d, f);
      L.b1 = add(p + "ff1.bias", 1, f);
      L.w2 = add(p + "ff2.weight", f, d);
      L.b2 = add(p + "ff2.bias", 1, d);
      L.ln2_g = add(p + "norm2.gain", 1, d);
      L.ln2_b = add(p + "norm2.bias", 1, d);
      layers.push_back(L);
    }
    out_w = add("output.weight", d, k);
    out_b = add("output.bias", 1, k);
  }

  std::size_t total() const { return total_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  std::size_t in_w, in_b, out_w, out_b;
  std::vector<Layer> layers;

 private:
  std::size_t add(std::string name, std::size_t r, std::size_t c) {
    tensors_.push_back({std::move(name), r, c, total_});
    const std::size_t off = total_;
    total_ += r * c;
    return off;
  }

  std::size_t total_ = 0;
  std::vector<TensorInfo> tensors_;
};

template <class T>
struct LabelerParams {
  LabelerConfig config;
  std::vector<T> values;

  ParamLayout layout() const { return ParamLayout(config); }

  friend bool operator==(const LabelerParams&, const LabelerParams&) = default;
};

/// Xavier-uniform weights, zero biases, unit norm gains; seeded by
/// `config.seed`.
template <class T>
LabelerParams<T> init_params(const LabelerConfig& config) {
  const ParamLayout lay(config);
  LabelerParams<T> p{config, std::vector<T>(lay.total(), T(0))};
  std::mt19937_64 rng(config.seed);
  for (const auto& t : lay.tensors()) {
    const bool gain = t.name.ends_with(".gain");
    const bool weight = t.name.ends_with(".weight");
    for (std::size_t i = 0; i < t.size(); ++i) {
      T& v = p.values[t.offset + i];
      if (gain) {
        v = T(1);
      } else if (weight) {
        const double a = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        v = static_cast<T>((std::generate_canonical<double, 53>(rng) * 2.0 - 1.0) * a);
      }
    }
  }
  return p;
}

template <class U, class T>
LabelerParams<U> cast_params(const LabelerParams<T>& p) {
  return {p.config, std::vector<U>(p.values.begin(), p.values.end())};
}

namespace detail {

// C (m x n) (+)= A (m x k) * B (k x n)
template <class T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C (m x n) += A^T * B with A (k x m), B (k x n)
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* ap = a + p * m;
    const T* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = ap[i];
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C (m x n) (+)= A * B^T with A (m x k), B (n x k)
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T s = 0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

template <class T>
void add_bias(T* x, const T* b, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) x[i * cols + j] += b[j];
}

template <class T>
void colsum_into(const T* x, T* out, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += x[i * cols + j];
}

inline constexpr double kLayerNormEps = 1e-5;

template <class T>
void layer_norm(const std::vector<T>& x, const T* g, const T* b, std::size_t rows, std::size_t cols,
                std::vector<T>& xhat, std::vector<T>& inv_std, std::vector<T>& y) {
  xhat.resize(rows * cols);
  inv_std.resize(rows);
  y.resize(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const T* xi = x.data() + i * cols;
    T mean = 0;
    for (std::size_t j = 0; j < cols; ++j) mean += xi[j];
    mean /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t j = 0; j < cols; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<T>(cols);
    const T is = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    inv_std[i] = is;
    for (std::size_t j = 0; j < cols; ++j) {
      const T h = (xi[j] - mean) * is;
      xhat[i * cols + j] = h;
      y[i * cols + j] = g[j] * h + b[j];
    }
  }
}

// Writes dx; accumulates dg, db.
template <class T>
void layer_norm_backward(const std::vector<T>& dy, const std::vector<T>& xhat, const std::vector<T>& inv_std,
                         const T* g, T* dg, T* db, std::size_t rows, std::size_t cols, std::vector<T>& dx) {
  dx.resize(rows * cols);
  std::vector<T> dxhat(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    T sum = 0, sum_xh = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      const T d = dy[i * cols + j];
      dg[j] += d * xhat[i * cols + j];
      db[j] += d;
      dxhat[j] = d * g[j];
      sum += dxhat[j];
      sum_xh += dxhat[j] * xhat[i * cols + j];
    }
    const T n = static_cast<T>(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      dx[i * cols + j] = inv_std[i] / n * (n * dxhat[j] - sum - xhat[i * cols + j] * sum_xh);
    }
  }
}

}  // namespace detail

/// Sinusoidal position code for `ticks` positions of width `dim`.
template <class T>
std::vector<T> positional_encoding(std::size_t ticks, std::size_t dim) {
  std::vector<T> pe(ticks * dim);
  for (std::size_t pos = 0; pos < ticks; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
      pe[pos * dim + i] = static_cast<T>(std::sin(pos * freq));
      if (i + 1 < dim) pe[pos * dim + i + 1] = static_cast<T>(std::cos(pos * freq));
    }
  }
  return pe;
}

/// Activations retained by `forward` for `backward`.
template <class T>
struct ForwardCache {
  struct Layer {
    std::vector<T> x_in, q, k, v, attn, ctx, xhat1, inv_std1, h1, f_pre, f_act, xhat2, inv_std2;
  };
  std::size_t ticks = 0;
  std::vector<T> input;
  std::vector<Layer> layers;
  std::vector<T> final_hidden;
};

/// Logits (ticks x classes) for one sequence of features (ticks x input_dim).
template <class T>
Matrix<T> forward(const LabelerParams<T>& params, const Matrix<T>& x, ForwardCache<T>* cache = nullptr) {
  const LabelerConfig& c = params.config;
  if (x.cols != static_cast<std::size_t>(c.input_dim)) {
    throw ShapeError("features have dim " + std::to_string(x.cols) + ", labeler expects " +
                     std::to_string(c.input_dim));
  }
  if (x.rows > static_cast<std::size_t>(c.max_ticks)) {
    throw ShapeError("sequence of " + std::to_string(x.rows) + " ticks exceeds max_ticks " +
                     std::to_string(c.max_ticks));
  }
  const ParamLayout lay(c);
  if (params.values.size() != lay.total()) throw ShapeError("parameter count does not match config");
  const T* w = params.values.data();
  const std::size_t n = x.rows;
  const auto d = static_cast<std::size_t>(c.model_dim);
  const auto f = static_cast<std::size_t>(c.ff_dim);
  const auto heads = static_cast<std::size_t>(c.heads);
  const std::size_t dh = d / heads;
  const auto k_cls = static_cast<std::size_t>(c.num_classes());
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  ForwardCache<T> local;
  ForwardCache<T>& fc = cache != nullptr ? *cache : local;
  fc.ticks = n;
  fc.input = x.data;
  fc.layers.assign(lay.layers.size(), {});

  std::vector<T> h(n * d);
  detail::gemm(x.data.data(), w + lay.in_w, h.data(), n, x.cols, d, false);
  detail::add_bias(h.data(), w + lay.in_b, n, d);
  if (c.positional_encoding) {
    const auto pe = positional_encoding<T>(n, d);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += pe[i];
  }

  for (std::size_t l = 0; l < lay.layers.size(); ++l) {
    const auto& L = lay.layers[l];
    auto& C = fc.layers[l];
    C.x_in = h;
    C.q.resize(n * d);
    C.k.resize(n * d);
    C.v.resize(n * d);
    detail::gemm(h.data(), w + L.wq, C.q.data(), n, d, d, false);
    detail::add_bias(C.q.data(), w + L.bq, n, d);
    detail::gemm(h.data(), w + L.wk, C.k.data(), n, d, d, false);
    detail::add_bias(C.k.data(), w + L.bk, n, d);
    detail::gemm(h.data(), w + L.wv, C.v.data(), n, d, d, false);
    detail::add_bias(C.v.data(), w + L.bv, n, d);

    C.attn.assign(heads * n * n, T(0));
    C.ctx.assign(n * d, T(0));
    for (std::size_t hd = 0; hd < heads; ++hd) {
      T* a = C.attn.data() + hd * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        const T* qi = C.q.data() + i * d + hd * dh;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const T* kj = C.k.data() + j * d + hd * dh;
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += qi[e] * kj[e];
          a[i * n + j] = s * scale;
          mx = std::max(mx, a[i * n + j]);
        }
        T sum = 0;
        for (std::size_t j = 0; j < n; ++j) sum += (a[i * n + j] = std::exp(a[i * n + j] - mx));
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= sum;
        T* ci = C.ctx.data() + i * d + hd * dh;
        for (std::size_t j = 0; j < n; ++j) {
          const T aij = a[i * n + j];
          const T* vj = C.v.data() + j * d + hd * dh;
          for (std::size_t e = 0; e < dh; ++e) ci[e] += aij * vj[e];
        }
      }
    }
    std::vector<T> r1(h);
    detail::gemm(C.ctx.data(), w + L.wo, r1.data(), n, d, d, true);
    detail::add_bias(r1.data(), w + L.bo, n, d);
    detail::layer_norm(r1, w + L.ln1_g, w + L.ln1_b, n, d, C.xhat1, C.inv_std1, C.h1);

    C.f_pre.resize(n * f);
    detail::gemm(C.h1.data(), w + L.w1, C.f_pre.data(), n, d, f, false);
    detail::add_bias(C.f_pre.data(), w + L.b1, n, f);
    C.f_act.resize(n * f);
    for (std::size_t i = 0; i < C.f_pre.size(); ++i) C.f_act[i] = C.f_pre[i] > T(0) ? C.f_pre[i] : T(0);
    std::vector<T> r2(C.h1);
    detail::gemm(C.f_act.data(), w + L.w2, r2.data(), n, f, d, true);
    detail::add_bias(r2.data(), w + L.b2, n, d);
    detail::layer_norm(r2, w + L.ln2_g, w + L.ln2_b, n, d, C.xhat2, C.inv_std2, h);
  }
  fc.final_hidden = h;

  Matrix<T> logits(n, k_cls);
  detail::gemm(h.data(), w + lay.out_w, logits.data.data(), n, d, k_cls, false);
  detail::add_bias(logits.data.data(), w + lay.out_b, n, k_cls);
  return logits;
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
template <class T>
void backward(const LabelerParams<T>& params, const ForwardCache<T>& fc, const Matrix<T>& dlogits,
              std::vector<T>& grad) {
  const LabelerConfig& c = params.config;
  const ParamLayout lay(c);
  if (grad.size() != lay.total()) grad.assign(lay.total(), T(0));
  const T* w = params.values.data();
  T* g = grad.data();
  const std::size_t n = fc.ticks;
  const auto d = static_cast<std::size_t>(c.model_dim);
  const auto f = static_cast<std::size_t>(c.ff_dim);
  const auto heads = static_cast<std::size_t>(c.heads);
  const std::size_t dh = d / heads;
  const auto k_cls = static_cast<std::size_t>(c.num_classes());
  const auto d_in = static_cast<std::size_t>(c.input_dim);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  detail::gemm_tn(fc.final_hidden.data(), dlogits.data.data(), g + lay.out_w, d, n, k_cls);
  detail::colsum_into(dlogits.data.data(), g + lay.out_b, n, k_cls);
  std::vector<T> dh_vec(n * d);
  detail::gemm_nt(dlogits.data.data(), w + lay.out_w, dh_vec.data(), n, k_cls, d, false);

  std::vector<T> dr, dtmp;
  for (std::size_t li = lay.layers.size(); li-- > 0;) {
    const auto& L = lay.layers[li];
    const auto& C = fc.layers[li];

    // Second sublayer: h2 = LN(h1 + FF(h1)).
    detail::layer_norm_backward(dh_vec, C.xhat2, C.inv_std2, w + L.ln2_g, g + L.ln2_g, g + L.ln2_b, n, d, dr);
    std::vector<T> dh1(dr);
    detail::gemm_tn(C.f_act.data(), dr.data(), g + L.w2, f, n, d);
    detail::colsum_into(dr.data(), g + L.b2, n, d);
    std::vector<T> dff(n * f);
    detail::gemm_nt(dr.data(), w + L.w2, dff.data(), n, d, f, false);
    for (std::size_t i = 0; i < dff.size(); ++i) {
      if (!(C.f_pre[i] > T(0))) dff[i] = T(0);
    }
    detail::gemm_tn(C.h1.data(), dff.data(), g + L.w1, d, n, f);
    detail::colsum_into(dff.data(), g + L.b1, n, f);
    detail::gemm_nt(dff.data(), w + L.w1, dh1.data(), n, f, d, true);

    // First sublayer: h1 = LN(x + Attn(x)).
    detail::layer_norm_backward(dh1, C.xhat1, C.inv_std1, w + L.ln1_g, g + L.ln1_g, g + L.ln1_b, n, d, dr);
    std::vector<T> dx(dr);
    detail::gemm_tn(C.ctx.data(), dr.data(), g + L.wo, d, n, d);
    detail::colsum_into(dr.data(), g + L.bo, n, d);
    std::vector<T> dctx(n * d);
    detail::gemm_nt(dr.data(), w + L.wo, dctx.data(), n, d, d, false);

    std::vector<T> dq(n * d, T(0)), dk(n * d, T(0)), dv(n * d, T(0));
    std::vector<T> da(n);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const T* a = C.attn.data() + hd * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        const T* dci = dctx.data() + i * d + hd * dh;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const T* vj = C.v.data() + j * d + hd * dh;
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += dci[e] * vj[e];
          da[j] = s;
          dot += s * a[i * n + j];
          T* dvj = dv.data() + j * d + hd * dh;
          const T aij = a[i * n + j];
          for (std::size_t e = 0; e < dh; ++e) dvj[e] += aij * dci[e];
        }
        const T* qi = C.q.data() + i * d + hd * dh;
        T* dqi = dq.data() + i * d + hd * dh;
        for (std::size_t j = 0; j < n; ++j) {
          const T ds = a[i * n + j] * (da[j] - dot) * scale;
          const T* kj = C.k.data() + j * d + hd * dh;
          T* dkj = dk.data() + j * d + hd * dh;
          for (std::size_t e = 0; e < dh; ++e) {
            dqi[e] += ds * kj[e];
            dkj[e] += ds * qi[e];
          }
        }
      }
    }
    detail::gemm_tn(C.x_in.data(), dq.data(), g + L.wq, d, n, d);
    detail::colsum_into(dq.data(), g + L.bq, n, d);
    detail::gemm_tn(C.x_in.data(), dk.data(), g + L.wk, d, n, d);
    detail::colsum_into(dk.data(), g + L.bk, n, d);
    detail::gemm_tn(C.x_in.data(), dv.data(), g + L.wv, d, n, d);
    detail::colsum_into(dv.data(), g + L.bv, n, d);
    detail::gemm_nt(dq.data(), w + L.wq, dx.data(), n, d, d, true);
    detail::gemm_nt(dk.data(), w + L.wk, dx.data(), n, d, d, true);
    detail::gemm_nt(dv.data(), w + L.wv, dx.data(), n, d, d, true);
    dh_vec = std::move(dx);
  }

  detail::gemm_tn(fc.input.data(), dh_vec.data(), g + lay.in_w, d_in, n, d);
  detail::colsum_into(dh_vec.data(), g + lay.in_b, n, d);
}

/// Loss and parameter gradient (accumulated into `grad`) for one sequence.
template <class T>
LossResult<T> loss_and_gradient(const LabelerParams<T>& params, const Matrix<T>& x,
                                const DenseLabelSequence& labels, std::vector<T>& grad) {
  ForwardCache<T> cache;
  const Matrix<T> logits = forward(params, x, &cache);
  Matrix<T> dlogits;
  const auto result = octave_tolerant_loss(logits, labels, &dlogits);
  backward(params, cache, dlogits, grad);
  return result;
}

}  // namespace beatscribe
