#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::nn {

using Rng = std::mt19937_64;
using Index = Eigen::Index;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// Named trainable tensor with its accumulated gradient.
template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
};

/// Owns every parameter of a model. Element addresses are stable, so layers
/// keep raw pointers into the store.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Param<T>& add(std::string name, Index rows, Index cols) {
    if (find(name) != nullptr) throw Error(Errc::BadConfig, fmt::format("duplicate parameter '{}'", name));
    params_.push_back(Param<T>{std::move(name), Mat<T>::Zero(rows, cols), Mat<T>::Zero(rows, cols)});
    return params_.back();
  }

  Param<T>* find(std::string_view name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  std::deque<Param<T>>& items() { return params_; }
  const std::deque<Param<T>>& items() const { return params_; }

  /// Parameters whose name starts with `prefix`.
  std::vector<Param<T>*> with_prefix(std::string_view prefix) {
    std::vector<Param<T>*> out;
    for (auto& p : params_)
      if (std::string_view(p.name).substr(0, prefix.size()) == prefix) out.push_back(&p);
    return out;
  }

  std::vector<Param<T>*> all() { return with_prefix(""); }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

 private:
  std::deque<Param<T>> params_;
};

// ---------------------------------------------------------------- init

/// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); fan_in = cols.
template <typename T>
void xavier_uniform(Mat<T>& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> d(-a, a);
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(d(rng));
}

/// Each consecutive block of `block` rows becomes a matrix with orthonormal
/// rows (or columns, whichever is shorter), from the QR factor of a Gaussian
/// draw with the sign convention diag(R) > 0.
template <typename T>
void orthogonal_blocks(Mat<T>& m, Index block, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  for (Index r0 = 0; r0 < m.rows(); r0 += block) {
    const Index rows = std::min(block, m.rows() - r0);
    const bool tall = rows >= m.cols();
    Eigen::MatrixXd g(tall ? rows : m.cols(), tall ? m.cols() : rows);
    for (Index c = 0; c < g.cols(); ++c)
      for (Index r = 0; r < g.rows(); ++r) g(r, c) = d(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    const Eigen::MatrixXd R = qr.matrixQR();
    for (Index k = 0; k < g.cols(); ++k)
      if (R(k, k) < 0) q.col(k) = -q.col(k);
    if (!tall) q.transposeInPlace();
    m.block(r0, 0, rows, m.cols()) = q.cast<T>();
  }
}

// ---------------------------------------------------------------- elementwise

template <typename T>
Mat<T> sigmoid(const Mat<T>& z) {
  return z.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
}

/// Inverted dropout mask: entries are 0 with probability p, else 1/(1-p).
template <typename T>
Mat<T> dropout_mask(Index rows, Index cols, double p, Rng& rng) {
  Mat<T> m(rows, cols);
  std::bernoulli_distribution keep(1.0 - p);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = keep(rng) ? scale : T(0);
  return m;
}

inline void expect_rows(Index got, Index want, std::string_view what) {
  if (got != want) {
    throw Error(Errc::ShapeMismatch, fmt::format("{}: expected {} rows, got {}", what, want, got));
  }
}

// ---------------------------------------------------------------- dense

/// y = W x + b over the columns of X.
template <typename T>
struct Dense {
  Param<T>* W = nullptr;
  Param<T>* b = nullptr;

  Dense() = default;
  Dense(ParamStore<T>& store, const std::string& name, Index in, Index out, Rng& rng) {
    W = &store.add(name + ".W", out, in);
    b = &store.add(name + ".b", out, 1);
    xavier_uniform(W->value, rng);
  }

  Index in() const { return W->value.cols(); }
  Index out() const { return W->value.rows(); }

  Mat<T> forward(const Mat<T>& X) const {
    expect_rows(X.rows(), in(), W->name);
    return (W->value * X).colwise() + b->value.col(0);
  }

  /// Accumulates dW, db; returns dX.
  Mat<T> backward(const Mat<T>& X, const Mat<T>& dY) const {
    W->grad.noalias() += dY * X.transpose();
    b->grad += dY.rowwise().sum();
    return W->value.transpose() * dY;
  }
};

// ---------------------------------------------------------------- LSTM

/// Everything one cell step needs for its backward pass. `gates` holds the
/// activated [f; i; g; o] blocks.
template <typename T>
struct LstmStepCache {
  Mat<T> x, h_prev, c_prev, gates, c, tanh_c;
};

/// One LSTM step over a batch held in columns. W is 4H x in, U is 4H x H and
/// b is 4H x 1, gate blocks ordered forget, input, candidate, output.
template <typename T>
std::pair<Mat<T>, Mat<T>> lstm_cell_step(const Mat<T>& W, const Mat<T>& U, const Mat<T>& b, const Mat<T>& x,
                                         const Mat<T>& h, const Mat<T>& c, LstmStepCache<T>* cache = nullptr) {
  const Index H = U.cols();
  if (W.rows() != 4 * H || U.rows() != 4 * H || b.rows() != 4 * H) {
    throw Error(Errc::ShapeMismatch, "lstm: parameter shapes disagree");
  }
  expect_rows(x.rows(), W.cols(), "lstm input");
  expect_rows(h.rows(), H, "lstm hidden state");
  expect_rows(c.rows(), H, "lstm cell state");
  if (x.cols() != h.cols() || h.cols() != c.cols()) throw Error(Errc::ShapeMismatch, "lstm: batch widths differ");

  Mat<T> z = W * x + U * h;
  z.colwise() += b.col(0);
  Mat<T> gates(4 * H, x.cols());
  gates.topRows(2 * H) = sigmoid<T>(z.topRows(2 * H));
  gates.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
  gates.bottomRows(H) = sigmoid<T>(z.bottomRows(H));

  Mat<T> c_next = gates.topRows(H).cwiseProduct(c) + gates.middleRows(H, H).cwiseProduct(gates.middleRows(2 * H, H));
  Mat<T> tanh_c = c_next.array().tanh().matrix();
  Mat<T> h_next = gates.bottomRows(H).cwiseProduct(tanh_c);
  if (cache != nullptr) *cache = LstmStepCache<T>{x, h, c, std::move(gates), c_next, std::move(tanh_c)};
  return {std::move(h_next), std::move(c_next)};
}

/// Backward through one step. On entry dh and dc are the gradients w.r.t. the
/// step's outputs; on exit they hold the gradients w.r.t. its inputs h, c.
/// Returns dx and accumulates into dW, dU, db.
template <typename T>
Mat<T> lstm_cell_backward(const Mat<T>& W, const Mat<T>& U, const LstmStepCache<T>& s, Mat<T>& dh, Mat<T>& dc,
                          Mat<T>& dW, Mat<T>& dU, Mat<T>& db) {
  const Index H = U.cols();
  const auto f = s.gates.topRows(H).array();
  const auto i = s.gates.middleRows(H, H).array();
  const auto g = s.gates.middleRows(2 * H, H).array();
  const auto o = s.gates.bottomRows(H).array();
  const auto tc = s.tanh_c.array();

  const Mat<T> dct = (dc.array() + dh.array() * o * (T(1) - tc * tc)).matrix();
  Mat<T> dz(4 * H, s.x.cols());
  dz.topRows(H) = (dct.array() * s.c_prev.array() * f * (T(1) - f)).matrix();
  dz.middleRows(H, H) = (dct.array() * g * i * (T(1) - i)).matrix();
  dz.middleRows(2 * H, H) = (dct.array() * i * (T(1) - g * g)).matrix();
  dz.bottomRows(H) = (dh.array() * tc * o * (T(1) - o)).matrix();

  dW.noalias() += dz * s.x.transpose();
  dU.noalias() += dz * s.h_prev.transpose();
  db += dz.rowwise().sum();
  dc = (dct.array() * f).matrix();
  dh = U.transpose() * dz;
  return W.transpose() * dz;
}

/// Single LSTM layer unrolled over a sequence with zero initial state.
template <typename T>
struct LstmLayer {
  Param<T>* W = nullptr;
  Param<T>* U = nullptr;
  Param<T>* b = nullptr;
  std::vector<LstmStepCache<T>> cache;

  LstmLayer() = default;
  LstmLayer(ParamStore<T>& store, const std::string& name, Index in, Index hidden, Rng& rng) {
    W = &store.add(name + ".W", 4 * hidden, in);
    U = &store.add(name + ".U", 4 * hidden, hidden);
    b = &store.add(name + ".b", 4 * hidden, 1);
    for (Index k = 0; k < 4; ++k) {
      Mat<T> block(hidden, in);
      xavier_uniform(block, rng);
      W->value.middleRows(k * hidden, hidden) = block;
    }
    orthogonal_blocks(U->value, hidden, rng);
  }

  Index hidden() const { return U->value.cols(); }

  std::vector<Mat<T>> forward(const std::vector<Mat<T>>& xs) {
    cache.assign(xs.size(), {});
    std::vector<Mat<T>> hs;
    hs.reserve(xs.size());
    if (xs.empty()) return hs;
    Mat<T> h = Mat<T>::Zero(hidden(), xs[0].cols());
    Mat<T> c = h;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto [hn, cn] = lstm_cell_step<T>(W->value, U->value, b->value, xs[t], h, c, &cache[t]);
      h = std::move(hn);
      c = std::move(cn);
      hs.push_back(h);
    }
    return hs;
  }

  /// dhs[t] is the gradient w.r.t. the step-t output; returns input gradients.
  std::vector<Mat<T>> backward(const std::vector<Mat<T>>& dhs) {
    std::vector<Mat<T>> dxs(cache.size());
    if (cache.empty()) return dxs;
    Mat<T> dh = Mat<T>::Zero(hidden(), cache[0].x.cols());
    Mat<T> dc = dh;
    for (std::size_t t = cache.size(); t-- > 0;) {
      dh += dhs[t];
      dxs[t] = lstm_cell_backward<T>(W->value, U->value, cache[t], dh, dc, W->grad, U->grad, b->grad);
    }
    return dxs;
  }
};

/// Stacked LSTM layers with inverted dropout on every layer's output.
template <typename T>
struct LstmStack {
  std::vector<LstmLayer<T>> layers;
  double dropout = 0.0;
  std::vector<std::vector<Mat<T>>> masks;

  LstmStack() = default;
  LstmStack(ParamStore<T>& store, const std::string& name, Index in, Index hidden, int n_layers, double p,
            Rng& rng)
      : dropout(p) {
    for (int l = 0; l < n_layers; ++l) {
      layers.emplace_back(store, fmt::format("{}.{}", name, l), l == 0 ? in : hidden, hidden, rng);
    }
  }

  std::vector<Mat<T>> forward(const std::vector<Mat<T>>& xs, bool training, Rng& rng) {
    masks.assign(layers.size(), {});
    std::vector<Mat<T>> cur = xs;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      cur = layers[l].forward(cur);
      if (training && dropout > 0.0) {
        for (auto& h : cur) {
          masks[l].push_back(dropout_mask<T>(h.rows(), h.cols(), dropout, rng));
          h = h.cwiseProduct(masks[l].back());
        }
      }
    }
    return cur;
  }

  std::vector<Mat<T>> backward(std::vector<Mat<T>> dhs) {
    for (std::size_t l = layers.size(); l-- > 0;) {
      if (!masks[l].empty()) {
        for (std::size_t t = 0; t < dhs.size(); ++t) dhs[t] = dhs[t].cwiseProduct(masks[l][t]);
      }
      dhs = layers[l].backward(dhs);
    }
    return dhs;
  }
};

// ---------------------------------------------------------------- attention

template <typename T>
struct AttentionCache {
  Mat<T> X, Y, Q, K, V, O;
  std::vector<Mat<T>> A;  ///< per head, Lq x Lk attention weights
};

/// Multi-head scaled dot-product attention without projection biases.
/// Tokens are columns: X is d x Lq (queries), Y is d x Lk (keys and values).
template <typename T>
struct MultiHeadAttention {
  Param<T>* Wq = nullptr;
  Param<T>* Wk = nullptr;
  Param<T>* Wv = nullptr;
  Param<T>* Wo = nullptr;
  int heads = 1;
  bool causal = false;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore<T>& store, const std::string& name, Index d, int n_heads, bool is_causal, Rng& rng)
      : heads(n_heads), causal(is_causal) {
    if (n_heads < 1 || d % n_heads != 0) {
      throw Error(Errc::BadConfig, fmt::format("width {} not divisible by {} heads", d, n_heads));
    }
    Wq = &store.add(name + ".Wq", d, d);
    Wk = &store.add(name + ".Wk", d, d);
    Wv = &store.add(name + ".Wv", d, d);
    Wo = &store.add(name + ".Wo", d, d);
    for (auto* p : {Wq, Wk, Wv, Wo}) xavier_uniform(p->value, rng);
  }

  Index width() const { return Wq->value.rows(); }

  Mat<T> forward(const Mat<T>& X, const Mat<T>& Y, AttentionCache<T>* cache = nullptr) const {
    const Index d = width();
    expect_rows(X.rows(), d, Wq->name);
    expect_rows(Y.rows(), d, Wk->name);
    if (causal && X.cols() != Y.cols()) throw Error(Errc::ShapeMismatch, "causal attention needs Lq == Lk");
    const Index dh = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Mat<T> Q = Wq->value * X, K = Wk->value * Y, V = Wv->value * Y;
    Mat<T> O(d, X.cols());
    std::vector<Mat<T>> As;
    for (int h = 0; h < heads; ++h) {
      Mat<T> S = scale * (Q.middleRows(h * dh, dh).transpose() * K.middleRows(h * dh, dh));
      for (Index i = 0; i < S.rows(); ++i) {
        const Index last = causal ? i : S.cols() - 1;
        const T mx = S.row(i).head(last + 1).maxCoeff();
        T sum = 0;
        for (Index j = 0; j < S.cols(); ++j) {
          S(i, j) = j <= last ? std::exp(S(i, j) - mx) : T(0);
          sum += S(i, j);
        }
        S.row(i) /= sum;
      }
      O.middleRows(h * dh, dh) = V.middleRows(h * dh, dh) * S.transpose();
      As.push_back(std::move(S));
    }
    Mat<T> out = Wo->value * O;
    if (cache != nullptr) *cache = AttentionCache<T>{X, Y, std::move(Q), std::move(K), std::move(V), std::move(O), std::move(As)};
    return out;
  }

  /// Returns (dX, dY); for self-attention the caller adds them.
  std::pair<Mat<T>, Mat<T>> backward(const AttentionCache<T>& c, const Mat<T>& dOut) const {
    const Index d = width();
    const Index dh = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Wo->grad.noalias() += dOut * c.O.transpose();
    const Mat<T> dO = Wo->value.transpose() * dOut;
    Mat<T> dQ(d, c.Q.cols()), dK(d, c.K.cols()), dV(d, c.V.cols());
    for (int h = 0; h < heads; ++h) {
      const auto& A = c.A[static_cast<std::size_t>(h)];
      const auto dOh = dO.middleRows(h * dh, dh);
      dV.middleRows(h * dh, dh) = dOh * A;
      const Mat<T> dA = dOh.transpose() * c.V.middleRows(h * dh, dh);
      const Eigen::Matrix<T, Eigen::Dynamic, 1> rows = dA.cwiseProduct(A).rowwise().sum();
      const Mat<T> dS = (A.array() * (dA.colwise() - rows).array()).matrix();
      dQ.middleRows(h * dh, dh) = scale * (c.K.middleRows(h * dh, dh) * dS.transpose());
      dK.middleRows(h * dh, dh) = scale * (c.Q.middleRows(h * dh, dh) * dS);
    }
    Wq->grad.noalias() += dQ * c.X.transpose();
    Wk->grad.noalias() += dK * c.Y.transpose();
    Wv->grad.noalias() += dV * c.Y.transpose();
    Mat<T> dX = Wq->value.transpose() * dQ;
    Mat<T> dY = Wk->value.transpose() * dK + Wv->value.transpose() * dV;
    return {std::move(dX), std::move(dY)};
  }
};

/// Weights of a self-attention block, as plain matrices.
template <typename T>
struct AttentionParams {
  Mat<T> Wq, Wk, Wv, Wo;
  int heads = 1;
};

/// Self-attention over the rows of X (L x d tokens); returns L x d.
template <typename T>
Mat<T> attention_forward(const AttentionParams<T>& p, const Mat<T>& X) {
  ParamStore<T> store;
  Rng rng(0);
  MultiHeadAttention<T> mha(store, "a", p.Wq.rows(), p.heads, false, rng);
  if (X.cols() != p.Wq.rows()) throw Error(Errc::ShapeMismatch, "attention: token width differs from d");
  mha.Wq->value = p.Wq;
  mha.Wk->value = p.Wk;
  mha.Wv->value = p.Wv;
  mha.Wo->value = p.Wo;
  const Mat<T> Xt = X.transpose();
  return mha.forward(Xt, Xt).transpose();
}

// ---------------------------------------------------------------- layer norm

template <typename T>
struct LayerNormCache {
  Mat<T> xhat;
  RowVec<T> inv_std;
};

/// Normalizes each column over its d entries, then applies gamma and beta.
template <typename T>
struct LayerNorm {
  Param<T>* gamma = nullptr;
  Param<T>* beta = nullptr;
  T eps = T(1e-5);

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& name, Index d) {
    gamma = &store.add(name + ".gamma", d, 1);
    beta = &store.add(name + ".beta", d, 1);
    gamma->value.setOnes();
  }

  Mat<T> forward(const Mat<T>& X, LayerNormCache<T>* cache = nullptr) const {
    expect_rows(X.rows(), gamma->value.rows(), gamma->name);
    const T n = static_cast<T>(X.rows());
    const RowVec<T> mean = X.colwise().sum() / n;
    Mat<T> xc = X.rowwise() - mean;
    const RowVec<T> var = xc.array().square().colwise().sum() / n;
    const RowVec<T> inv = (var.array() + eps).rsqrt().matrix();
    Mat<T> xhat = xc.array().rowwise() * inv.array();
    Mat<T> y = (xhat.array().colwise() * gamma->value.col(0).array()).matrix();
    y.colwise() += beta->value.col(0);
    if (cache != nullptr) *cache = LayerNormCache<T>{std::move(xhat), inv};
    return y;
  }

  Mat<T> backward(const LayerNormCache<T>& c, const Mat<T>& dY) const {
    gamma->grad += dY.cwiseProduct(c.xhat).rowwise().sum();
    beta->grad += dY.rowwise().sum();
    const T n = static_cast<T>(dY.rows());
    const Mat<T> dxhat = (dY.array().colwise() * gamma->value.col(0).array()).matrix();
    const RowVec<T> s1 = dxhat.colwise().sum();
    const RowVec<T> s2 = dxhat.cwiseProduct(c.xhat).colwise().sum();
    Mat<T> dX = (n * dxhat.array()).matrix();
    dX.rowwise() -= s1;
    dX -= (c.xhat.array().rowwise() * s2.array()).matrix();
    return (dX.array().rowwise() * (c.inv_std.array() / n)).matrix();
  }
};

// ---------------------------------------------------------------- positional encoding

/// Sinusoidal encoding, L x d: PE[p, 2k] = sin(p / 10000^(2k/d)) and
/// PE[p, 2k+1] = cos of the same angle. Throws Error(OddWidth).
Eigen::MatrixXd positional_encoding(Index L, Index d);

// ---------------------------------------------------------------- losses

enum class LossKind { Mse, Bce };

inline constexpr double kBceClip = 1e-7;

template <typename T>
T loss(LossKind kind, const Mat<T>& pred, const Mat<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(Errc::ShapeMismatch, "loss: prediction and target shapes differ");
  }
  if (pred.size() == 0) return T(0);
  const T n = static_cast<T>(pred.size());
  if (kind == LossKind::Mse) return (pred - target).squaredNorm() / n;
  const T lo = T(kBceClip), hi = T(1) - T(kBceClip);
  T sum = 0;
  for (Index c = 0; c < pred.cols(); ++c)
    for (Index r = 0; r < pred.rows(); ++r) {
      const T p = std::clamp(pred(r, c), lo, hi);
      const T y = target(r, c);
      sum -= y * std::log(p) + (T(1) - y) * std::log(T(1) - p);
    }
  return sum / n;
}

/// Gradient of `loss` w.r.t. `pred`.
template <typename T>
Mat<T> loss_grad(LossKind kind, const Mat<T>& pred, const Mat<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(Errc::ShapeMismatch, "loss: prediction and target shapes differ");
  }
  const T n = static_cast<T>(std::max<Index>(pred.size(), 1));
  if (kind == LossKind::Mse) return (T(2) / n) * (pred - target);
  const T lo = T(kBceClip), hi = T(1) - T(kBceClip);
  Mat<T> g(pred.rows(), pred.cols());
  for (Index c = 0; c < pred.cols(); ++c)
    for (Index r = 0; r < pred.rows(); ++r) {
      const T p = std::clamp(pred(r, c), lo, hi);
      const T y = target(r, c);
      g(r, c) = (-(y / p) + (T(1) - y) / (T(1) - p)) / n;
    }
  return g;
}

// ---------------------------------------------------------------- optimizer

struct AdamHyper {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamMoments {
  Mat<T> m, v;
};

/// One AdamW update at step t >= 1: decoupled decay theta *= (1 - lr*wd),
/// then theta -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename T>
void adam_step(Mat<T>& theta, const Mat<T>& grad, AdamMoments<T>& s, const AdamHyper& h, long t) {
  if (t < 1) throw Error(Errc::BadConfig, "adam step counter must start at 1");
  if (grad.rows() != theta.rows() || grad.cols() != theta.cols()) {
    throw Error(Errc::ShapeMismatch, "adam: gradient shape differs from parameter");
  }
  if (s.m.size() == 0) {
    s.m = Mat<T>::Zero(theta.rows(), theta.cols());
    s.v = Mat<T>::Zero(theta.rows(), theta.cols());
  }
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  s.m = b1 * s.m + (T(1) - b1) * grad;
  s.v = b2 * s.v + (T(1) - b2) * grad.cwiseAbs2();
  const T c1 = static_cast<T>(1.0 - std::pow(h.beta1, static_cast<double>(t)));
  const T c2 = static_cast<T>(1.0 - std::pow(h.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(h.lr);
  if (h.weight_decay != 0.0) theta *= static_cast<T>(1.0 - h.lr * h.weight_decay);
  theta.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + static_cast<T>(h.eps));
}

/// Global L2 norm of the gradients.
template <typename T>
double grad_norm(const std::vector<Param<T>*>& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += static_cast<double>(p->grad.squaredNorm());
  return std::sqrt(sq);
}

/// Rescales all gradients by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm before clipping.
template <typename T>
double clip_gradients(const std::vector<Param<T>*>& params, double max_norm) {
  if (!(max_norm > 0.0)) throw Error(Errc::BadConfig, "max_norm must be > 0");
  const double norm = grad_norm(params);
  if (norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto* p : params) p->grad *= s;
  }
  return norm;
}

template <typename T>
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<Param<T>*> params, AdamHyper hyper) : params_(std::move(params)), hyper_(hyper) {
    state_.resize(params_.size());
  }

  void step() {
    ++t_;
    for (std::size_t k = 0; k < params_.size(); ++k) adam_step(params_[k]->value, params_[k]->grad, state_[k], hyper_, t_);
  }

  const std::vector<Param<T>*>& params() const { return params_; }
  long steps() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<AdamMoments<T>> state_;
  AdamHyper hyper_;
  long t_ = 0;
};

}  // namespace tw::nn
