#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tug/datastore.hpp"
#include "tug/embeddings.hpp"
#include "tug/error.hpp"
#include "tug/random.hpp"

namespace tug::model {

using embeddings::Vector;

inline constexpr std::size_t kRoundsPerPlayer = 10;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kCosineEps = 1e-12;

// ---------------------------------------------------------------------------
// Player traces

/// Ten round embeddings for one player.
struct PlayerTrace {
  std::vector<Vector> rounds;
};

/// Componentwise mean of the round embeddings.
inline Vector pool_player(const PlayerTrace& trace) {
  if (trace.rounds.size() != kRoundsPerPlayer) {
    throw Error(ErrorCode::wrong_round_count,
                "a player trace has exactly 10 rounds, got " + std::to_string(trace.rounds.size()));
  }
  const std::size_t dim = trace.rounds.front().size();
  Vector out(dim, 0.0);
  for (const auto& r : trace.rounds) {
    if (r.size() != dim) throw Error(ErrorCode::dimension_mismatch, "round embeddings differ in dimension");
    for (std::size_t i = 0; i < dim; ++i) out[i] += r[i];
  }
  for (double& x : out) x /= static_cast<double>(kRoundsPerPlayer);
  return out;
}

/// Pooled inputs for both players of a pair plus its label.
struct PairFeatures {
  Vector x1;
  Vector x2;
  double y = 0.0;
};

inline std::array<PlayerTrace, 2> traces_for(const datastore::LabeledPair& pair, const embeddings::EmbeddingTable& table) {
  std::array<PlayerTrace, 2> t;
  for (const auto& r : pair.rounds) {
    t[0].rounds.push_back(embeddings::embed_round(r.theme, r.keyword, r.sel_a, table));
    t[1].rounds.push_back(embeddings::embed_round(r.theme, r.keyword, r.sel_b, table));
  }
  return t;
}

inline std::vector<PairFeatures> build_features(const std::vector<datastore::LabeledPair>& pairs,
                                                const embeddings::EmbeddingTable& table) {
  std::vector<PairFeatures> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto t = traces_for(p, table);
    out.push_back({pool_player(t[0]), pool_player(t[1]), p.label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

struct Dims {
  std::size_t input = 384;
  std::size_t hidden = 256;
  std::size_t latent = 128;

  bool operator==(const Dims&) const = default;
};

enum Tensor : std::size_t { W1, B1, G1, S1, W2, B2, G2, S2, WH, BH, kTensorCount };

inline constexpr std::array<const char*, kTensorCount> kTensorNames = {
    "layer1.weight", "layer1.bias", "layer1.norm_gain", "layer1.norm_shift", "layer2.weight",
    "layer2.bias",   "layer2.norm_gain", "layer2.norm_shift", "aux.weight", "aux.bias"};

/// Every trainable value lives in one flat buffer; tensors are views into it.
/// Weight matrices are row-major [out x in].
class EncoderParams {
 public:
  explicit EncoderParams(Dims dims = {}) : dims_(dims) {
    std::size_t off = 0;
    for (std::size_t t = 0; t < kTensorCount; ++t) {
      const auto [r, c] = shape(static_cast<Tensor>(t));
      offsets_[t] = off;
      off += r * c;
    }
    offsets_[kTensorCount] = off;
    values_.assign(off, 0.0);
  }

  const Dims& dims() const noexcept { return dims_; }

  std::pair<std::size_t, std::size_t> shape(Tensor t) const {
    switch (t) {
      case W1: return {dims_.hidden, dims_.input};
      case B1: case G1: case S1: return {dims_.hidden, 1};
      case W2: return {dims_.latent, dims_.hidden};
      case B2: case G2: case S2: return {dims_.latent, 1};
      case WH: return {1, dims_.latent};
      case BH: return {1, 1};
      default: break;
    }
    throw Error(ErrorCode::invalid_argument, "bad tensor id");
  }

  std::span<double> operator[](Tensor t) { return {values_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]}; }
  std::span<const double> operator[](Tensor t) const {
    return {values_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
  }
  std::size_t offset(Tensor t) const { return offsets_[t]; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const EncoderParams& o) const { return dims_ == o.dims_ && values_ == o.values_; }

 private:
  Dims dims_;
  std::array<std::size_t, kTensorCount + 1> offsets_{};
  std::vector<double> values_;
};

/// Weights uniform in ±1/sqrt(fan_in); biases and shifts 0; gains 1.
inline EncoderParams init_params(std::uint64_t seed, Dims dims = {}) {
  EncoderParams p(dims);
  Rng rng(seed);
  auto fill_uniform = [&](Tensor t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : p[t]) w = rng.uniform(-bound, bound);
  };
  fill_uniform(W1, dims.input);
  fill_uniform(W2, dims.hidden);
  fill_uniform(WH, dims.latent);
  std::fill(p[G1].begin(), p[G1].end(), 1.0);
  std::fill(p[G2].begin(), p[G2].end(), 1.0);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

struct LayerCache {
  Vector input;   // layer input
  Vector xhat;    // normalized pre-activation
  double inv_std = 0.0;
  Vector normed;  // gain * xhat + shift (pre-ReLU)
  Vector output;  // ReLU(normed)
};

inline void affine_norm_relu(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                             std::span<const double> g, std::span<const double> s, LayerCache& c) {
  const std::size_t out = b.size();
  const std::size_t in = x.size();
  c.input.assign(x.begin(), x.end());
  c.xhat.resize(out);
  c.normed.resize(out);
  c.output.resize(out);
  double mean = 0.0;
  for (std::size_t i = 0; i < out; ++i) {
    const double* row = w.data() + i * in;
    double a = b[i];
    for (std::size_t j = 0; j < in; ++j) a += row[j] * x[j];
    c.xhat[i] = a;
    mean += a;
  }
  mean /= static_cast<double>(out);
  double var = 0.0;
  for (double a : c.xhat) var += (a - mean) * (a - mean);
  var /= static_cast<double>(out);
  c.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  for (std::size_t i = 0; i < out; ++i) {
    c.xhat[i] = (c.xhat[i] - mean) * c.inv_std;
    c.normed[i] = g[i] * c.xhat[i] + s[i];
    c.output[i] = c.normed[i] > 0.0 || std::isnan(c.normed[i]) ? c.normed[i] : 0.0;
  }
}

/// Accumulates parameter gradients for one layer; returns d(input) if asked.
inline void affine_norm_relu_backward(std::span<const double> d_out, const LayerCache& c, std::span<const double> w,
                                      std::span<const double> g, std::span<double> dw, std::span<double> db,
                                      std::span<double> dg, std::span<double> ds, Vector* d_input) {
  const std::size_t out = c.output.size();
  const std::size_t in = c.input.size();
  Vector dxhat(out);
  double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < out; ++i) {
    const double dn = c.normed[i] > 0.0 ? d_out[i] : 0.0;
    dg[i] += dn * c.xhat[i];
    ds[i] += dn;
    dxhat[i] = dn * g[i];
    mean_dxhat += dxhat[i];
    mean_dxhat_xhat += dxhat[i] * c.xhat[i];
  }
  mean_dxhat /= static_cast<double>(out);
  mean_dxhat_xhat /= static_cast<double>(out);
  if (d_input) d_input->assign(in, 0.0);
  for (std::size_t i = 0; i < out; ++i) {
    const double da = c.inv_std * (dxhat[i] - mean_dxhat - c.xhat[i] * mean_dxhat_xhat);
    if (da == 0.0) continue;
    db[i] += da;
    double* drow = dw.data() + i * in;
    for (std::size_t j = 0; j < in; ++j) drow[j] += da * c.input[j];
    if (d_input) {
      const double* row = w.data() + i * in;
      for (std::size_t j = 0; j < in; ++j) (*d_input)[j] += da * row[j];
    }
  }
}

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace detail

struct EncoderCache {
  detail::LayerCache layer1;
  detail::LayerCache layer2;
};

/// affine -> layer norm -> ReLU, twice: input -> hidden -> latent.
inline Vector encode(std::span<const double> pooled, const EncoderParams& p, EncoderCache* cache = nullptr) {
  if (pooled.size() != p.dims().input) throw Error(ErrorCode::dimension_mismatch, "encoder input has wrong dimension");
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  detail::affine_norm_relu(pooled, p[W1], p[B1], p[G1], p[S1], c.layer1);
  detail::affine_norm_relu(c.layer1.output, p[W2], p[B2], p[G2], p[S2], c.layer2);
  return c.layer2.output;
}

/// Cosine of the two latents with norms floored at 1e-12.
inline double predict_pair(std::span<const double> z1, std::span<const double> z2) {
  const double n1 = std::max(embeddings::norm(z1), kCosineEps);
  const double n2 = std::max(embeddings::norm(z2), kCosineEps);
  return embeddings::dot(z1, z2) / (n1 * n2);
}

inline double aux_head(std::span<const double> z, const EncoderParams& p) {
  return detail::sigmoid(embeddings::dot(z, p[WH]) + p[BH][0]);
}

struct PairPrediction {
  double y_hat = 0.0;
  double y1_hat = 0.0;
  double y2_hat = 0.0;
};

inline PairPrediction predict(const EncoderParams& p, std::span<const double> x1, std::span<const double> x2) {
  const auto z1 = encode(x1, p);
  const auto z2 = encode(x2, p);
  return {predict_pair(z1, z2), aux_head(z1, p), aux_head(z2, p)};
}

/// MSE(y_hat, y) + alpha * [MSE(y1_hat, y) + MSE(y2_hat, y)] for one pair.
inline double loss(double y_hat, double y1_hat, double y2_hat, double y, double alpha = 0.1) {
  const auto sq = [](double d) { return d * d; };
  return sq(y_hat - y) + alpha * (sq(y1_hat - y) + sq(y2_hat - y));
}

struct BatchLoss {
  double loss = 0.0;  // mean composite loss
  double mse = 0.0;   // mean (y_hat - y)^2
};

inline BatchLoss evaluate_loss(const EncoderParams& p, std::span<const PairFeatures> batch, double alpha) {
  BatchLoss b;
  for (const auto& ex : batch) {
    const auto pr = predict(p, ex.x1, ex.x2);
    b.loss += loss(pr.y_hat, pr.y1_hat, pr.y2_hat, ex.y, alpha);
    b.mse += (pr.y_hat - ex.y) * (pr.y_hat - ex.y);
  }
  if (!batch.empty()) {
    b.loss /= static_cast<double>(batch.size());
    b.mse /= static_cast<double>(batch.size());
  }
  return b;
}

/// Mean batch loss and its gradient (same layout as the parameters).
inline double loss_and_gradient(const EncoderParams& p, std::span<const PairFeatures> batch, double alpha,
                                std::vector<double>& grad) {
  grad.assign(p.values().size(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  auto span_of = [&](Tensor t) { return std::span<double>(grad.data() + p.offset(t), p[t].size()); };
  const auto dW1 = span_of(W1), dB1 = span_of(B1), dG1 = span_of(G1), dS1 = span_of(S1);
  const auto dW2 = span_of(W2), dB2 = span_of(B2), dG2 = span_of(G2), dS2 = span_of(S2);
  const auto dWH = span_of(WH), dBH = span_of(BH);

  double total = 0.0;
  EncoderCache c1, c2;
  Vector dz1, dz2, dh1;
  for (const auto& ex : batch) {
    const auto z1 = encode(ex.x1, p, &c1);
    const auto z2 = encode(ex.x2, p, &c2);
    const double raw1 = embeddings::norm(z1), raw2 = embeddings::norm(z2);
    const double n1 = std::max(raw1, kCosineEps), n2 = std::max(raw2, kCosineEps);
    const double y_hat = embeddings::dot(z1, z2) / (n1 * n2);
    const double y1 = aux_head(z1, p), y2 = aux_head(z2, p);
    total += loss(y_hat, y1, y2, ex.y, alpha);

    const double g_main = 2.0 * (y_hat - ex.y) * inv_n;
    const double g_u1 = 2.0 * alpha * (y1 - ex.y) * y1 * (1.0 - y1) * inv_n;
    const double g_u2 = 2.0 * alpha * (y2 - ex.y) * y2 * (1.0 - y2) * inv_n;
    const std::size_t L = z1.size();
    dz1.assign(L, 0.0);
    dz2.assign(L, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
      dz1[i] = g_main * (z2[i] / (n1 * n2) - (raw1 > kCosineEps ? y_hat * z1[i] / (n1 * n1) : 0.0));
      dz2[i] = g_main * (z1[i] / (n1 * n2) - (raw2 > kCosineEps ? y_hat * z2[i] / (n2 * n2) : 0.0));
      dz1[i] += g_u1 * p[WH][i];
      dz2[i] += g_u2 * p[WH][i];
      dWH[i] += g_u1 * z1[i] + g_u2 * z2[i];
    }
    dBH[0] += g_u1 + g_u2;

    for (auto [dz, cache] : {std::pair{&dz1, &c1}, std::pair{&dz2, &c2}}) {
      detail::affine_norm_relu_backward(*dz, cache->layer2, p[W2], p[G2], dW2, dB2, dG2, dS2, &dh1);
      detail::affine_norm_relu_backward(dh1, cache->layer1, p[W1], p[G1], dW1, dB1, dG1, dS1, nullptr);
    }
  }
  return total * inv_n;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t samples = 0;
};

/// Relative error |a - n| / max(|a| + |n|, floor). The floor keeps parameters
/// whose true gradient is ~0 from dividing rounding noise by ~0.
inline constexpr double kGradCheckFloor = 1e-8;

/// Compares analytic gradients with central differences at `samples` randomly
/// chosen parameters, cycling over all tensors.
inline GradientCheck gradient_check(const EncoderParams& params, std::span<const PairFeatures> batch, double h = 1e-5,
                                    std::size_t samples = 200, double alpha = 0.1, std::uint64_t seed = 17) {
  std::vector<double> grad;
  loss_and_gradient(params, batch, alpha, grad);
  EncoderParams probe = params;
  Rng rng(seed);
  GradientCheck out;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto t = static_cast<Tensor>(k % kTensorCount);
    const std::size_t idx = probe.offset(t) + rng.below(probe[t].size());
    const double saved = probe.values()[idx];
    probe.values()[idx] = saved + h;
    const double up = evaluate_loss(probe, batch, alpha).loss;
    probe.values()[idx] = saved - h;
    const double down = evaluate_loss(probe, batch, alpha).loss;
    probe.values()[idx] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad[idx];
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), kGradCheckFloor);
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.samples;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double alpha = 0.1;
  std::size_t batch_size = 32;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_mse = 0.0;
  double val_loss = 0.0;
  double val_mse = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

struct TrainResult {
  EncoderParams params;
  TrainReport report;
};

class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& cfg) : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      params[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_eps);
    }
  }

 private:
  std::vector<double> m_, v_;
  TrainConfig cfg_;
  std::uint64_t t_ = 0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle, then the first floor(n * val_fraction) indices go to validation.
inline Split split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::empty_dataset, "dataset is empty");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(idx.begin(), idx.end());
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction));
  if (n_val == 0) throw Error(ErrorCode::invalid_split, "validation split is empty for " + std::to_string(n) + " pairs");
  if (n_val >= n) throw Error(ErrorCode::invalid_split, "training split is empty");
  Split s;
  s.val.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  return s;
}

namespace detail {

/// One pass of mini-batch Adam over `set` in a freshly shuffled order.
inline void run_epoch(EncoderParams& params, Adam& adam, const std::vector<PairFeatures>& set,
                      std::vector<std::size_t>& order, Rng& order_rng, const TrainConfig& cfg, std::size_t epoch) {
  std::vector<double> grad;
  std::vector<PairFeatures> batch;
  order_rng.shuffle(order.begin(), order.end());
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    batch.clear();
    for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) batch.push_back(set[order[k]]);
    const double l = loss_and_gradient(params, batch, cfg.alpha, grad);
    if (!std::isfinite(l)) throw Error(ErrorCode::non_finite_loss, "non-finite loss in epoch " + std::to_string(epoch));
    adam.step(params.values(), grad);
  }
}

inline void require_finite(const std::vector<PairFeatures>& data) {
  auto finite = [](const Vector& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!finite(data[i].x1) || !finite(data[i].x2) || !std::isfinite(data[i].y)) {
      throw Error(ErrorCode::invalid_argument, "pair " + std::to_string(i) + " has non-finite features or label");
    }
  }
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

/// Mini-batch Adam on the composite loss with early stopping on validation
/// loss. Returns the parameters from the best validation epoch.
inline TrainResult train(const std::vector<PairFeatures>& data, const TrainConfig& cfg, Dims dims = {}) {
  if (data.empty()) throw Error(ErrorCode::empty_dataset, "dataset is empty");
  auto split = split_indices(data.size(), cfg.val_fraction, cfg.seed);
  if (data.size() < 10) throw Error(ErrorCode::invalid_split, "training needs at least 10 pairs");
  detail::require_finite(data);
  if (cfg.batch_size == 0) throw Error(ErrorCode::invalid_argument, "batch size must be positive");

  std::vector<PairFeatures> train_set, val_set;
  for (auto i : split.train) train_set.push_back(data[i]);
  for (auto i : split.val) val_set.push_back(data[i]);

  EncoderParams params = init_params(derive_seed(cfg.seed, "init"), dims);
  TrainResult result{params, {}};
  result.report.train_indices = split.train;
  result.report.val_indices = split.val;

  Adam adam(params.values().size(), cfg);
  Rng order_rng(derive_seed(cfg.seed, "batches"));
  auto order = detail::iota(train_set.size());
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    detail::run_epoch(params, adam, train_set, order, order_rng, cfg, epoch);
    const auto tr = evaluate_loss(params, train_set, cfg.alpha);
    const auto va = evaluate_loss(params, val_set, cfg.alpha);
    if (!std::isfinite(tr.loss) || !std::isfinite(va.loss) || !params.all_finite()) {
      throw Error(ErrorCode::non_finite_loss, "non-finite loss in epoch " + std::to_string(epoch));
    }
    result.report.epochs.push_back({epoch, tr.loss, tr.mse, va.loss, va.mse});
    if (va.loss < best) {
      best = va.loss;
      since_best = 0;
      result.params = params;
      result.report.best_epoch = epoch;
      result.report.best_val_loss = va.loss;
    } else if (++since_best >= cfg.patience) {
      result.report.stopped_early = true;
      break;
    }
  }
  return result;
}

/// Trains on every pair with no validation split or early stopping. Stops
/// when `stop` returns true for an epoch or after max_epochs. Validation
/// columns of the epoch stats are left at zero.
inline TrainResult fit_all(const std::vector<PairFeatures>& data, const TrainConfig& cfg, Dims dims = {},
                           const std::function<bool(const EpochStats&)>& stop = {}) {
  if (data.empty()) throw Error(ErrorCode::empty_dataset, "dataset is empty");
  if (cfg.batch_size == 0) throw Error(ErrorCode::invalid_argument, "batch size must be positive");
  detail::require_finite(data);
  EncoderParams params = init_params(derive_seed(cfg.seed, "init"), dims);
  TrainResult result{params, {}};
  result.report.train_indices = detail::iota(data.size());
  Adam adam(params.values().size(), cfg);
  Rng order_rng(derive_seed(cfg.seed, "batches"));
  auto order = detail::iota(data.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    detail::run_epoch(params, adam, data, order, order_rng, cfg, epoch);
    const auto tr = evaluate_loss(params, data, cfg.alpha);
    if (!std::isfinite(tr.loss) || !params.all_finite()) throw Error(ErrorCode::non_finite_loss, "non-finite loss in epoch " + std::to_string(epoch));
    result.report.epochs.push_back({epoch, tr.loss, tr.mse, 0.0, 0.0});
    result.report.best_epoch = epoch;
    if (stop && stop(result.report.epochs.back())) break;
  }
  result.params = params;
  return result;
}

// ---------------------------------------------------------------------------
// Parameter file: header, dims, then each tensor's shape and row-major values
// in shortest round-trip decimal form.

inline constexpr const char* kParamsMagic = "tug-siamese-params v1";

inline void write_params(const EncoderParams& p, std::ostream& out) {
  out << kParamsMagic << '\n';
  out << "dims " << p.dims().input << ' ' << p.dims().hidden << ' ' << p.dims().latent << '\n';
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    const auto [rows, cols] = p.shape(static_cast<Tensor>(t));
    out << "tensor " << kTensorNames[t] << ' ' << rows << ' ' << cols << '\n';
    const auto v = p[static_cast<Tensor>(t)];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) out << ' ';
        out << embeddings::format_double(v[r * cols + c]);
      }
      out << '\n';
    }
  }
}

inline void save_params(const EncoderParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  write_params(p, out);
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

inline EncoderParams read_params(std::istream& in) {
  auto fail = [](const std::string& why) -> void { throw Error(ErrorCode::parse_error, "params: " + why); };
  std::string line;
  if (!std::getline(in, line) || line != kParamsMagic) fail("missing header");
  std::string word;
  Dims dims;
  if (!(in >> word >> dims.input >> dims.hidden >> dims.latent) || word != "dims") fail("missing dims line");
  EncoderParams p(dims);
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> word >> name >> rows >> cols) || word != "tensor") fail("missing tensor header");
    if (name != kTensorNames[t]) fail("expected tensor " + std::string(kTensorNames[t]) + ", found " + name);
    const auto [er, ec] = p.shape(static_cast<Tensor>(t));
    if (rows != er || cols != ec) fail("tensor " + name + " has the wrong shape");
    auto v = p[static_cast<Tensor>(t)];
    for (auto& x : v) {
      if (!(in >> word)) fail("truncated tensor " + name);
      auto res = std::from_chars(word.data(), word.data() + word.size(), x);
      if (res.ec != std::errc() || !std::isfinite(x)) fail("bad value in tensor " + name);
    }
  }
  return p;
}

inline EncoderParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open params " + path);
  return read_params(in);
}

}  // namespace tug::model
