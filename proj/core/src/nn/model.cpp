#include "tw/nn/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::nn {
namespace {

constexpr std::uint64_t kInitStream = 0x5eed'1417'0000'0001ULL;

template <typename T>
Mat<T> hcat(const Seq<T>& seq) {
  if (seq.empty()) return {};
  const Index B = seq[0].cols();
  Mat<T> out(seq[0].rows(), B * static_cast<Index>(seq.size()));
  for (std::size_t t = 0; t < seq.size(); ++t) out.middleCols(static_cast<Index>(t) * B, B) = seq[t];
  return out;
}

template <typename T>
Seq<T> hsplit(const Mat<T>& m, std::size_t steps) {
  Seq<T> out;
  const Index B = steps == 0 ? 0 : m.cols() / static_cast<Index>(steps);
  for (std::size_t t = 0; t < steps; ++t) out.push_back(m.middleCols(static_cast<Index>(t) * B, B));
  return out;
}

template <typename T>
Mat<T> relu(const Mat<T>& m) {
  return m.cwiseMax(T(0));
}

template <typename T>
void check_finite(T value, const char* what) {
  if (!std::isfinite(static_cast<double>(value))) {
    throw Error(Errc::NonFiniteLoss, fmt::format("{} is not finite ({})", what, static_cast<double>(value)));
  }
}

// ------------------------------------------------------------------ LstmRecon

/// Stacked LSTM over steps [0, L-1) predicting the output features of steps
/// [1, L).
template <typename T>
class LstmRecon final : public Model<T> {
 public:
  explicit LstmRecon(const ModelConfig& cfg) : Model<T>(cfg) {
    Rng rng(cfg.seed ^ kInitStream);
    stack_ = LstmStack<T>(this->store_, "lstm", cfg.input_size, cfg.hidden_size, cfg.n_layers, cfg.dropout, rng);
    head_ = Dense<T>(this->store_, "head", cfg.hidden_size, static_cast<Index>(this->outputs_.size()), rng);
  }

  T forward_backward(const Seq<T>& x, bool training, Rng& rng) override {
    const Mat<T> pred = forward(x, training, rng);
    const Mat<T> target = targets(x);
    const T value = loss<T>(LossKind::Mse, pred, target);
    const Mat<T> dH = head_.backward(hidden_, loss_grad<T>(LossKind::Mse, pred, target));
    stack_.backward(hsplit<T>(dH, x.size() - 1));
    return value;
  }

  Mat<T> feature_errors(const Seq<T>& x) override {
    Rng unused(0);
    const Mat<T> sq = (forward(x, false, unused) - targets(x)).array().square().matrix();
    const Index B = x[0].cols();
    const auto steps = static_cast<Index>(x.size() - 1);
    Mat<T> out = Mat<T>::Zero(sq.rows(), B);
    for (Index t = 0; t < steps; ++t) out += sq.middleCols(t * B, B);
    return out / static_cast<T>(steps);
  }

 private:
  Mat<T> forward(const Seq<T>& x, bool training, Rng& rng) {
    this->check_input(x);
    const Seq<T> inputs(x.begin(), x.end() - 1);
    hidden_ = hcat<T>(stack_.forward(inputs, training, rng));
    return head_.forward(hidden_);
  }

  Mat<T> targets(const Seq<T>& x) const {
    const Seq<T> next(x.begin() + 1, x.end());
    return this->select_outputs(hcat<T>(next));
  }

  LstmStack<T> stack_;
  Dense<T> head_;
  Mat<T> hidden_;
};

// ------------------------------------------------------------------ GanLstm

/// Generator (noise -> LSTM -> linear), discriminator (LSTM -> linear ->
/// sigmoid) and an encoder (LSTM -> linear to noise space). A window is
/// scored by how well G(E(x)) reproduces it.
template <typename T>
class GanLstm final : public Model<T> {
 public:
  explicit GanLstm(const ModelConfig& cfg) : Model<T>(cfg) {
    Rng rng(cfg.seed ^ kInitStream);
    const Index F = cfg.input_size, H = cfg.hidden_size, Z = cfg.latent_size;
    gen_ = LstmStack<T>(this->store_, "gen.lstm", Z, H, cfg.n_layers, cfg.dropout, rng);
    gen_head_ = Dense<T>(this->store_, "gen.head", H, F, rng);
    disc_ = LstmStack<T>(this->store_, "disc.lstm", F, H, cfg.n_layers, cfg.dropout, rng);
    disc_head_ = Dense<T>(this->store_, "disc.head", H, 1, rng);
    enc_ = LstmStack<T>(this->store_, "enc.lstm", F, H, cfg.n_layers, cfg.dropout, rng);
    enc_head_ = Dense<T>(this->store_, "enc.head", H, Z, rng);
  }

  T forward_backward(const Seq<T>& x, bool training, Rng& rng) override {
    this->check_input(x);
    const Mat<T> z = encode(x, training, rng);
    const Mat<T> out = generate(z, x.size(), training, rng);
    const Mat<T> pred = this->select_outputs(out);
    const Mat<T> target = this->select_outputs(hcat<T>(x));
    const T value = loss<T>(LossKind::Mse, pred, target);
    encode_backward(generate_backward(scatter_outputs(loss_grad<T>(LossKind::Mse, pred, target))));
    return value;
  }

  Mat<T> feature_errors(const Seq<T>& x) override {
    this->check_input(x);
    Rng unused(0);
    const Mat<T> out = generate(encode(x, false, unused), x.size(), false, unused);
    const Mat<T> sq = (this->select_outputs(out) - this->select_outputs(hcat<T>(x))).array().square().matrix();
    const Index B = x[0].cols();
    Mat<T> err = Mat<T>::Zero(sq.rows(), B);
    for (std::size_t t = 0; t < x.size(); ++t) err += sq.middleCols(static_cast<Index>(t) * B, B);
    return err / static_cast<T>(x.size());
  }

  void prepare_training(const OptimHyper& hyper) override {
    this->hyper_ = hyper;
    const AdamHyper ah{hyper.lr, hyper.weight_decay, hyper.beta1, hyper.beta2, hyper.eps};
    disc_params_ = this->store_.with_prefix("disc.");
    ge_params_ = this->store_.with_prefix("gen.");
    for (auto* p : this->store_.with_prefix("enc.")) ge_params_.push_back(p);
    disc_opt_ = AdamW<T>(disc_params_, ah);
    ge_opt_ = AdamW<T>(ge_params_, ah);
  }

  T train_batch(const Seq<T>& x, Rng& rng) override {
    this->check_input(x);
    const Index B = x[0].cols();
    const std::size_t L = x.size();
    const Index Z = this->config_.latent_size;
    const T w = static_cast<T>(this->config_.adversarial_weight);

    // Discriminator: real windows labelled 1, generated windows 0.
    this->store_.zero_grad();
    const Mat<T> fake = generate(noise(Z, B, rng), L, true, rng);
    Seq<T> both(L);
    const Seq<T> fake_seq = hsplit<T>(fake, L);
    for (std::size_t t = 0; t < L; ++t) {
      both[t].resize(x[t].rows(), 2 * B);
      both[t] << x[t], fake_seq[t];
    }
    const Mat<T> p = discriminate(both, true, rng);
    Mat<T> labels(1, 2 * B);
    labels << Mat<T>::Ones(1, B), Mat<T>::Zero(1, B);
    const T d_loss = loss<T>(LossKind::Bce, p, labels);
    check_finite(d_loss, "discriminator loss");
    discriminate_backward(loss_grad<T>(LossKind::Bce, p, labels));
    clip_gradients(disc_params_, this->hyper_.max_grad_norm);
    disc_opt_.step();

    // Generator and encoder: cycle reconstruction plus fooling the discriminator.
    this->store_.zero_grad();
    const Mat<T> z = encode(x, true, rng);
    Mat<T> zz(Z, 2 * B);
    zz << z, noise(Z, B, rng);
    const Mat<T> out = generate(zz, L, true, rng);
    Mat<T> recon(out.rows(), B * static_cast<Index>(L)), gen(out.rows(), B * static_cast<Index>(L));
    for (std::size_t t = 0; t < L; ++t) {
      const auto c0 = static_cast<Index>(t) * 2 * B;
      recon.middleCols(static_cast<Index>(t) * B, B) = out.middleCols(c0, B);
      gen.middleCols(static_cast<Index>(t) * B, B) = out.middleCols(c0 + B, B);
    }
    const Mat<T> pred = this->select_outputs(recon);
    const Mat<T> target = this->select_outputs(hcat<T>(x));
    const T rec = loss<T>(LossKind::Mse, pred, target);
    const Mat<T> pf = discriminate(hsplit<T>(gen, L), true, rng);
    const Mat<T> ones = Mat<T>::Ones(1, B);
    const T adv = loss<T>(LossKind::Bce, pf, ones);
    check_finite(rec, "reconstruction loss");
    check_finite(adv, "adversarial loss");

    const Mat<T> d_gen = hcat<T>(discriminate_backward(w * loss_grad<T>(LossKind::Bce, pf, ones)));
    const Mat<T> d_rec = scatter_outputs(loss_grad<T>(LossKind::Mse, pred, target));
    Mat<T> d_out(out.rows(), out.cols());
    for (std::size_t t = 0; t < L; ++t) {
      const auto c0 = static_cast<Index>(t) * 2 * B;
      d_out.middleCols(c0, B) = d_rec.middleCols(static_cast<Index>(t) * B, B);
      d_out.middleCols(c0 + B, B) = d_gen.middleCols(static_cast<Index>(t) * B, B);
    }
    const Mat<T> dzz = generate_backward(d_out);
    encode_backward(dzz.leftCols(B));
    clip_gradients(ge_params_, this->hyper_.max_grad_norm);
    ge_opt_.step();
    return rec;
  }

 private:
  static Mat<T> noise(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Mat<T> z(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) z(r, c) = static_cast<T>(d(rng));
    return z;
  }

  /// Full-width gradient from one restricted to the output rows.
  Mat<T> scatter_outputs(const Mat<T>& g) const {
    Mat<T> full = Mat<T>::Zero(this->config_.input_size, g.cols());
    for (std::size_t k = 0; k < this->outputs_.size(); ++k) full.row(this->outputs_[k]) = g.row(static_cast<Index>(k));
    return full;
  }

  Mat<T> encode(const Seq<T>& x, bool training, Rng& rng) {
    const Seq<T> hs = enc_.forward(x, training, rng);
    enc_last_ = hs.back();
    enc_steps_ = hs.size();
    return enc_head_.forward(enc_last_);
  }

  void encode_backward(const Mat<T>& dz) {
    Seq<T> dhs(enc_steps_, Mat<T>::Zero(enc_last_.rows(), enc_last_.cols()));
    dhs.back() = enc_head_.backward(enc_last_, dz);
    enc_.backward(std::move(dhs));
  }

  /// Returns F x (L * batch), step-major.
  Mat<T> generate(const Mat<T>& z, std::size_t L, bool training, Rng& rng) {
    const Seq<T> zs(L, z);
    gen_hidden_ = hcat<T>(gen_.forward(zs, training, rng));
    gen_steps_ = L;
    return gen_head_.forward(gen_hidden_);
  }

  /// Returns the gradient w.r.t. the noise input.
  Mat<T> generate_backward(const Mat<T>& d_out) {
    const Mat<T> dH = gen_head_.backward(gen_hidden_, d_out);
    const Seq<T> dzs = gen_.backward(hsplit<T>(dH, gen_steps_));
    Mat<T> dz = dzs[0];
    for (std::size_t t = 1; t < dzs.size(); ++t) dz += dzs[t];
    return dz;
  }

  Mat<T> discriminate(const Seq<T>& x, bool training, Rng& rng) {
    const Seq<T> hs = disc_.forward(x, training, rng);
    disc_last_ = hs.back();
    disc_steps_ = hs.size();
    disc_p_ = sigmoid<T>(disc_head_.forward(disc_last_));
    return disc_p_;
  }

  /// Returns the gradient w.r.t. the discriminator's input sequence.
  Seq<T> discriminate_backward(const Mat<T>& dp) {
    const Mat<T> dlogit = dp.cwiseProduct(disc_p_.cwiseProduct((Mat<T>::Ones(1, dp.cols()) - disc_p_)));
    Seq<T> dhs(disc_steps_, Mat<T>::Zero(disc_last_.rows(), disc_last_.cols()));
    dhs.back() = disc_head_.backward(disc_last_, dlogit);
    return disc_.backward(std::move(dhs));
  }

  LstmStack<T> gen_, disc_, enc_;
  Dense<T> gen_head_, disc_head_, enc_head_;
  Mat<T> gen_hidden_, enc_last_, disc_last_, disc_p_;
  std::size_t gen_steps_ = 0, enc_steps_ = 0, disc_steps_ = 0;
  std::vector<Param<T>*> disc_params_, ge_params_;
  AdamW<T> disc_opt_, ge_opt_;
};

// ------------------------------------------------------------------ Tst

template <typename T>
struct Sublayer {
  Mat<T> mask;  ///< dropout mask, empty when inactive

  Mat<T> apply(const Mat<T>& m, double p, bool training, Rng& rng) {
    if (!training || p <= 0.0) {
      mask.resize(0, 0);
      return m;
    }
    mask = dropout_mask<T>(m.rows(), m.cols(), p, rng);
    return m.cwiseProduct(mask);
  }
  Mat<T> back(const Mat<T>& d) const { return mask.size() == 0 ? d : d.cwiseProduct(mask); }
};

/// Attention applied independently to each window's block of L columns.
template <typename T>
struct BlockAttention {
  MultiHeadAttention<T> mha;
  std::vector<AttentionCache<T>> caches;

  Mat<T> forward(const Mat<T>& X, const Mat<T>& Y, Index L) {
    const Index B = X.cols() / L;
    caches.assign(static_cast<std::size_t>(B), {});
    Mat<T> out(X.rows(), X.cols());
    for (Index b = 0; b < B; ++b) {
      out.middleCols(b * L, L) = mha.forward(X.middleCols(b * L, L), Y.middleCols(b * L, L), &caches[static_cast<std::size_t>(b)]);
    }
    return out;
  }

  std::pair<Mat<T>, Mat<T>> backward(const Mat<T>& dOut, Index L) const {
    Mat<T> dX(dOut.rows(), dOut.cols()), dY(dOut.rows(), dOut.cols());
    for (Index b = 0; b < static_cast<Index>(caches.size()); ++b) {
      auto [dx, dy] = mha.backward(caches[static_cast<std::size_t>(b)], dOut.middleCols(b * L, L));
      dX.middleCols(b * L, L) = dx;
      dY.middleCols(b * L, L) = dy;
    }
    return {std::move(dX), std::move(dY)};
  }
};

template <typename T>
struct FeedForward {
  Dense<T> in, out;
  Mat<T> x, pre;

  Mat<T> forward(const Mat<T>& X) {
    x = X;
    pre = in.forward(X);
    const Mat<T> act = relu<T>(pre);
    return out.forward(act);
  }

  Mat<T> backward(const Mat<T>& dY) {
    const Mat<T> dact = out.backward(relu<T>(pre), dY);
    const Mat<T> dpre = (pre.array() > T(0)).select(dact, Mat<T>::Zero(dact.rows(), dact.cols()));
    return in.backward(x, dpre);
  }
};

template <typename T>
struct EncoderLayer {
  BlockAttention<T> attn;
  LayerNorm<T> ln1, ln2;
  FeedForward<T> ff;
  Sublayer<T> drop1, drop2;
  LayerNormCache<T> c1, c2;

  Mat<T> forward(const Mat<T>& X, Index L, double p, bool training, Rng& rng) {
    const Mat<T> A = drop1.apply(attn.forward(X, X, L), p, training, rng);
    const Mat<T> E1 = ln1.forward(X + A, &c1);
    const Mat<T> F = drop2.apply(ff.forward(E1), p, training, rng);
    return ln2.forward(E1 + F, &c2);
  }

  Mat<T> backward(const Mat<T>& dY, Index L) {
    const Mat<T> dR2 = ln2.backward(c2, dY);
    const Mat<T> dE1 = dR2 + ff.backward(drop2.back(dR2));
    const Mat<T> dR1 = ln1.backward(c1, dE1);
    auto [dx, dy] = attn.backward(drop1.back(dR1), L);
    return dR1 + dx + dy;
  }
};

template <typename T>
struct DecoderLayer {
  BlockAttention<T> self_attn, cross_attn;
  LayerNorm<T> ln1, ln2, ln3;
  FeedForward<T> ff;
  Sublayer<T> drop1, drop2, drop3;
  LayerNormCache<T> c1, c2, c3;

  Mat<T> forward(const Mat<T>& D, const Mat<T>& M, Index L, double p, bool training, Rng& rng) {
    const Mat<T> S = drop1.apply(self_attn.forward(D, D, L), p, training, rng);
    const Mat<T> D1 = ln1.forward(D + S, &c1);
    const Mat<T> C = drop2.apply(cross_attn.forward(D1, M, L), p, training, rng);
    const Mat<T> D2 = ln2.forward(D1 + C, &c2);
    const Mat<T> F = drop3.apply(ff.forward(D2), p, training, rng);
    return ln3.forward(D2 + F, &c3);
  }

  /// Returns dD and adds the memory gradient to dM.
  Mat<T> backward(const Mat<T>& dY, Index L, Mat<T>& dM) {
    const Mat<T> dR3 = ln3.backward(c3, dY);
    const Mat<T> dD2 = dR3 + ff.backward(drop3.back(dR3));
    const Mat<T> dR2 = ln2.backward(c2, dD2);
    auto [dq, dm] = cross_attn.backward(drop2.back(dR2), L);
    dM += dm;
    const Mat<T> dD1 = dR2 + dq;
    const Mat<T> dR1 = ln1.backward(c1, dD1);
    auto [dx, dy] = self_attn.backward(drop1.back(dR1), L);
    return dR1 + dx + dy;
  }
};

/// Encoder-decoder transformer. Windows occupy consecutive blocks of L
/// columns. The decoder reads the encoder output shifted one step later and
/// a linear head reconstructs each step's output features.
template <typename T>
class Tst final : public Model<T> {
 public:
  explicit Tst(const ModelConfig& cfg) : Model<T>(cfg) {
    Rng rng(cfg.seed ^ kInitStream);
    const Index d = cfg.hidden_size;
    if (d % 2 != 0) throw Error(Errc::BadConfig, "tst hidden_size must be even for the positional encoding");
    pe_ = positional_encoding(cfg.seq_len, d).transpose().cast<T>();
    embed_ = Dense<T>(this->store_, "tst.embed", cfg.input_size, d, rng);
    for (int l = 0; l < cfg.n_layers; ++l) {
      const std::string n = fmt::format("tst.enc{}", l);
      EncoderLayer<T> e;
      e.attn.mha = MultiHeadAttention<T>(this->store_, n + ".attn", d, cfg.n_heads, false, rng);
      e.ln1 = LayerNorm<T>(this->store_, n + ".ln1", d);
      e.ff.in = Dense<T>(this->store_, n + ".ff1", d, cfg.ff_size, rng);
      e.ff.out = Dense<T>(this->store_, n + ".ff2", cfg.ff_size, d, rng);
      e.ln2 = LayerNorm<T>(this->store_, n + ".ln2", d);
      enc_.push_back(std::move(e));
    }
    for (int l = 0; l < cfg.n_layers; ++l) {
      const std::string n = fmt::format("tst.dec{}", l);
      DecoderLayer<T> dl;
      dl.self_attn.mha = MultiHeadAttention<T>(this->store_, n + ".self", d, cfg.n_heads, true, rng);
      dl.ln1 = LayerNorm<T>(this->store_, n + ".ln1", d);
      dl.cross_attn.mha = MultiHeadAttention<T>(this->store_, n + ".cross", d, cfg.n_heads, false, rng);
      dl.ln2 = LayerNorm<T>(this->store_, n + ".ln2", d);
      dl.ff.in = Dense<T>(this->store_, n + ".ff1", d, cfg.ff_size, rng);
      dl.ff.out = Dense<T>(this->store_, n + ".ff2", cfg.ff_size, d, rng);
      dl.ln3 = LayerNorm<T>(this->store_, n + ".ln3", d);
      dec_.push_back(std::move(dl));
    }
    head_ = Dense<T>(this->store_, "tst.head", d, static_cast<Index>(this->outputs_.size()), rng);
  }

  T forward_backward(const Seq<T>& x, bool training, Rng& rng) override {
    const Mat<T> pred = forward(x, training, rng);
    const Mat<T> target = this->select_outputs(xcat_);
    const T value = loss<T>(LossKind::Mse, pred, target);
    backward(loss_grad<T>(LossKind::Mse, pred, target));
    return value;
  }

  Mat<T> feature_errors(const Seq<T>& x) override {
    Rng unused(0);
    const Mat<T> pred = forward(x, false, unused);
    const Mat<T> sq = (pred - this->select_outputs(xcat_)).array().square().matrix();
    const Index L = static_cast<Index>(x.size());
    const Index B = x[0].cols();
    Mat<T> out(sq.rows(), B);
    for (Index b = 0; b < B; ++b) out.col(b) = sq.middleCols(b * L, L).rowwise().sum() / static_cast<T>(L);
    return out;
  }

 private:
  Mat<T> forward(const Seq<T>& x, bool training, Rng& rng) {
    this->check_input(x);
    const Index L = static_cast<Index>(x.size());
    if (L != pe_.cols()) {
      throw Error(Errc::ShapeMismatch, fmt::format("tst built for windows of {}, got {}", pe_.cols(), L));
    }
    const Index B = x[0].cols();
    const double p = this->config_.dropout;
    xcat_.resize(x[0].rows(), B * L);
    for (Index b = 0; b < B; ++b)
      for (Index t = 0; t < L; ++t) xcat_.col(b * L + t) = x[static_cast<std::size_t>(t)].col(b);

    Mat<T> h = embed_.forward(xcat_);
    for (Index b = 0; b < B; ++b) h.middleCols(b * L, L) += pe_;
    h = embed_drop_.apply(h, p, training, rng);
    for (auto& e : enc_) h = e.forward(h, L, p, training, rng);
    memory_ = h;

    Mat<T> dcur = shift(memory_, L);
    for (auto& dl : dec_) dcur = dl.forward(dcur, memory_, L, p, training, rng);
    dec_out_ = dcur;
    return head_.forward(dec_out_);
  }

  void backward(const Mat<T>& dpred) {
    const Index L = pe_.cols();
    Mat<T> dD = head_.backward(dec_out_, dpred);
    Mat<T> dM = Mat<T>::Zero(memory_.rows(), memory_.cols());
    for (std::size_t l = dec_.size(); l-- > 0;) dD = dec_[l].backward(dD, L, dM);
    dM += unshift(dD, L);
    for (std::size_t l = enc_.size(); l-- > 0;) dM = enc_[l].backward(dM, L);
    embed_.backward(xcat_, embed_drop_.back(dM));
  }

  /// Within each block, column t takes column t - 1; column 0 is zero.
  static Mat<T> shift(const Mat<T>& m, Index L) {
    Mat<T> out = Mat<T>::Zero(m.rows(), m.cols());
    for (Index b = 0; b < m.cols() / L; ++b) out.middleCols(b * L + 1, L - 1) = m.middleCols(b * L, L - 1);
    return out;
  }

  static Mat<T> unshift(const Mat<T>& d, Index L) {
    Mat<T> out = Mat<T>::Zero(d.rows(), d.cols());
    for (Index b = 0; b < d.cols() / L; ++b) out.middleCols(b * L, L - 1) = d.middleCols(b * L + 1, L - 1);
    return out;
  }

  Mat<T> pe_;
  Dense<T> embed_, head_;
  Sublayer<T> embed_drop_;
  std::vector<EncoderLayer<T>> enc_;
  std::vector<DecoderLayer<T>> dec_;
  Mat<T> xcat_, memory_, dec_out_;
};

}  // namespace

template <typename T>
Model<T>::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  outputs_ = config_.resolved_outputs();
}

template <typename T>
void Model<T>::prepare_training(const OptimHyper& hyper) {
  hyper_ = hyper;
  opt_ = AdamW<T>(store_.all(), AdamHyper{hyper.lr, hyper.weight_decay, hyper.beta1, hyper.beta2, hyper.eps});
}

template <typename T>
T Model<T>::train_batch(const Seq<T>& x, Rng& rng) {
  store_.zero_grad();
  const T value = forward_backward(x, true, rng);
  check_finite(value, "training loss");
  clip_gradients(opt_.params(), hyper_.max_grad_norm);
  opt_.step();
  return value;
}

template <typename T>
void Model<T>::check_input(const Seq<T>& x) const {
  if (x.empty() || x[0].cols() == 0) throw Error(Errc::EmptyBatch, "empty window batch");
  for (const auto& step : x) expect_rows(step.rows(), config_.input_size, "model input");
}

template <typename T>
Mat<T> Model<T>::select_outputs(const Mat<T>& m) const {
  Mat<T> out(static_cast<Index>(outputs_.size()), m.cols());
  for (std::size_t k = 0; k < outputs_.size(); ++k) out.row(static_cast<Index>(k)) = m.row(outputs_[k]);
  return out;
}

template <typename T>
std::unique_ptr<Model<T>> make_model(const ModelConfig& config) {
  config.validate();
  switch (config.kind) {
    case ModelKind::LstmRecon: return std::make_unique<LstmRecon<T>>(config);
    case ModelKind::GanLstm: return std::make_unique<GanLstm<T>>(config);
    case ModelKind::Tst: return std::make_unique<Tst<T>>(config);
  }
  throw Error(Errc::BadConfig, "unknown model kind");
}

template class Model<float>;
template class Model<double>;
template std::unique_ptr<Model<float>> make_model<float>(const ModelConfig&);
template std::unique_ptr<Model<double>> make_model<double>(const ModelConfig&);

}  // namespace tw::nn
