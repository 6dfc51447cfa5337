#include "minitod/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "minitod/rng.hpp"

namespace minitod {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Row-wise softmax over entries 0..i of row i; masked entries become zero.
void causal_softmax_inplace(Eigen::MatrixXd& s) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) s(i, j) = kNegInf;
    double m = s.row(i).head(i + 1).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) {
      s(i, j) = std::exp(s(i, j) - m);
      denom += s(i, j);
    }
    for (Eigen::Index j = 0; j <= i; ++j) s(i, j) /= denom;
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) s(i, j) = 0.0;
  }
}

// y = g .* (x - mean) / sqrt(var + eps) + b, per row. Returns xhat and the
// inverse std needed by the backward pass.
void layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                const Eigen::VectorXd& b, Eigen::MatrixXd& xhat,
                Eigen::VectorXd& inv_std, Eigen::MatrixXd& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  y.resize(n, d);
  inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mu = x.row(i).mean();
    double var = (x.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(i) = (x.row(i).array() - mu) * inv_std(i);
    y.row(i) = xhat.row(i).cwiseProduct(g.transpose()) + b.transpose();
  }
}

// Backward of layer_norm: accumulates parameter grads, returns dx.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy,
                                    const Eigen::MatrixXd& xhat,
                                    const Eigen::VectorXd& inv_std,
                                    const Eigen::VectorXd& g,
                                    Eigen::VectorXd& dg, Eigen::VectorXd& db) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  dg += (dy.array() * xhat.array()).colwise().sum().matrix().transpose();
  db += dy.colwise().sum().transpose();
  Eigen::MatrixXd dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::ArrayXd dxhat = dy.row(i).transpose().array() * g.array();
    Eigen::ArrayXd xh = xhat.row(i).transpose().array();
    double m1 = dxhat.mean();
    double m2 = (dxhat * xh).mean();
    dx.row(i) = ((dxhat - m1 - xh * m2) * inv_std(i)).matrix().transpose();
  }
  return dx;
}

struct LayerCache {
  Eigen::MatrixXd xin, xhat1, xbar;
  Eigen::VectorXd inv_std1;
  std::vector<Eigen::MatrixXd> q, k, v, att;
  Eigen::MatrixXd concat, h;
  Eigen::MatrixXd xhat2, hbar;
  Eigen::VectorXd inv_std2;
  Eigen::MatrixXd ff_pre, ff_act;
  Eigen::MatrixXd xout;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Eigen::MatrixXd x0, xhatf, yf, logits;
  Eigen::VectorXd inv_stdf;
};

template <class Derived>
double logsumexp_row(const Eigen::MatrixBase<Derived>& row) {
  double m = row.maxCoeff();
  return m + std::log((row.array() - m).exp().sum());
}

}  // namespace

Eigen::MatrixXd positional_encoding(int max_len, int dim) {
  Eigen::MatrixXd p(max_len, dim);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i + 1 < dim; i += 2) {
      double angle = pos / std::pow(10000.0, static_cast<double>(i) / dim);
      p(pos, i) = std::sin(angle);
      p(pos, i + 1) = std::cos(angle);
    }
    if (dim % 2 == 1) {
      double angle =
          pos / std::pow(10000.0, static_cast<double>(dim - 1) / dim);
      p(pos, dim - 1) = std::sin(angle);
    }
  }
  return p;
}

Eigen::MatrixXd causal_attention(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y,
                                 const Eigen::MatrixXd& z) {
  if (x.cols() != y.cols() || y.rows() != z.rows() || x.rows() != y.rows()) {
    throw std::invalid_argument("causal_attention: shape mismatch");
  }
  Eigen::MatrixXd s = x * y.transpose() / std::sqrt(double(y.cols()));
  causal_softmax_inplace(s);
  return s * z;
}

double nll_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("nll_loss: row/target count mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= logits.cols()) {
      throw std::invalid_argument("nll_loss: target id out of range");
    }
    total += logsumexp_row(logits.row(i)) - logits(i, t);
  }
  return targets.empty() ? 0.0 : total / static_cast<double>(targets.size());
}

void ModelConfig::validate() const {
  if (layers < 1 || heads < 1 || dim < 1 || ff < 1 || vocab_size < 2) {
    throw std::invalid_argument("model config: all sizes must be positive");
  }
  if (dim % heads != 0) {
    throw std::invalid_argument("model config: heads must divide dim");
  }
  if (max_len < 2 || max_len > 1024) {
    throw std::invalid_argument("model config: max_len must be in [2, 1024]");
  }
}

Params Params::zeros(const ModelConfig& cfg) {
  Params p;
  p.embedding = Eigen::MatrixXd::Zero(cfg.vocab_size, cfg.dim);
  p.layers.resize(static_cast<std::size_t>(cfg.layers));
  for (auto& l : p.layers) {
    l.wq = Eigen::MatrixXd::Zero(cfg.dim, cfg.dim);
    l.wk = Eigen::MatrixXd::Zero(cfg.dim, cfg.dim);
    l.wv = Eigen::MatrixXd::Zero(cfg.dim, cfg.dim);
    l.wo = Eigen::MatrixXd::Zero(cfg.dim, cfg.dim);
    l.u = Eigen::MatrixXd::Zero(cfg.dim, cfg.ff);
    l.v = Eigen::MatrixXd::Zero(cfg.ff, cfg.dim);
    l.ln1_g = Eigen::VectorXd::Ones(cfg.dim);
    l.ln1_b = Eigen::VectorXd::Zero(cfg.dim);
    l.ln2_g = Eigen::VectorXd::Ones(cfg.dim);
    l.ln2_b = Eigen::VectorXd::Zero(cfg.dim);
  }
  p.lnf_g = Eigen::VectorXd::Ones(cfg.dim);
  p.lnf_b = Eigen::VectorXd::Zero(cfg.dim);
  p.w_vocab = Eigen::MatrixXd::Zero(cfg.dim, cfg.vocab_size);
  return p;
}

Params Params::zero_like(const ModelConfig& cfg) {
  Params p = zeros(cfg);
  p.for_each([](const std::string&, Eigen::Ref<Eigen::MatrixXd> w) {
    w.setZero();
  });
  return p;
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  params_ = Params::zeros(cfg_);
  pos_ = positional_encoding(cfg_.max_len, cfg_.dim);
}

Model Model::random_init(ModelConfig cfg, uint64_t seed, double gain) {
  Model m(cfg);
  Rng rng(seed);
  auto fill = [&](Eigen::Ref<Eigen::MatrixXd> w) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = rng.uniform(-gain, gain);
      }
    }
  };
  fill(m.params_.embedding);
  for (auto& l : m.params_.layers) {
    fill(l.wq);
    fill(l.wk);
    fill(l.wv);
    fill(l.wo);
    fill(l.u);
    fill(l.v);
  }
  fill(m.params_.w_vocab);
  return m;
}

namespace {

void check_tokens(const std::vector<int>& tokens, const ModelConfig& cfg) {
  if (tokens.empty()) throw std::invalid_argument("empty token sequence");
  if (tokens.size() > static_cast<std::size_t>(cfg.max_len)) {
    throw std::invalid_argument("sequence exceeds max_len");
  }
  for (int t : tokens) {
    if (t < 0 || t >= cfg.vocab_size) {
      throw std::invalid_argument("token id out of range: " + std::to_string(t));
    }
  }
}

}  // namespace

namespace {

ForwardCache forward_pass(const ModelConfig& cfg, const Params& params,
                          const Eigen::MatrixXd& pos,
                          const std::vector<int>& input) {
  const Eigen::Index n = static_cast<Eigen::Index>(input.size());
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache cache;
  cache.x0.resize(n, cfg.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    cache.x0.row(i) =
        params.embedding.row(input[static_cast<std::size_t>(i)]) + pos.row(i);
  }

  Eigen::MatrixXd x = cache.x0;
  cache.layers.resize(params.layers.size());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const LayerParams& l = params.layers[li];
    LayerCache& c = cache.layers[li];
    c.xin = x;
    layer_norm(c.xin, l.ln1_g, l.ln1_b, c.xhat1, c.inv_std1, c.xbar);

    c.q.resize(cfg.heads);
    c.k.resize(cfg.heads);
    c.v.resize(cfg.heads);
    c.att.resize(cfg.heads);
    c.concat.resize(n, cfg.dim);
    for (int h = 0; h < cfg.heads; ++h) {
      c.q[h].noalias() = c.xbar * l.wq.middleCols(h * dh, dh);
      c.k[h].noalias() = c.xbar * l.wk.middleCols(h * dh, dh);
      c.v[h].noalias() = c.xbar * l.wv.middleCols(h * dh, dh);
      Eigen::MatrixXd s = c.q[h] * c.k[h].transpose() * scale;
      causal_softmax_inplace(s);
      c.att[h] = std::move(s);
      c.concat.middleCols(h * dh, dh).noalias() = c.att[h] * c.v[h];
    }
    c.h.noalias() = c.concat * l.wo;
    c.h += c.xbar;

    layer_norm(c.h, l.ln2_g, l.ln2_b, c.xhat2, c.inv_std2, c.hbar);
    c.ff_pre.noalias() = c.hbar * l.u;
    c.ff_act = c.ff_pre.cwiseMax(0.0);
    c.xout.noalias() = c.ff_act * l.v;
    c.xout += c.hbar;
    x = c.xout;
  }

  layer_norm(x, params.lnf_g, params.lnf_b, cache.xhatf, cache.inv_stdf,
             cache.yf);
  cache.logits.noalias() = cache.yf * params.w_vocab;
  return cache;
}

// Backward through the whole stack given d(logits); accumulates into grads.
void backward_pass(const ModelConfig& cfg, const Params& params,
                   const std::vector<int>& input, const ForwardCache& cache,
                   const Eigen::MatrixXd& dlogits, Params& grads) {
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  grads.w_vocab.noalias() += cache.yf.transpose() * dlogits;
  Eigen::MatrixXd dy = dlogits * params.w_vocab.transpose();
  Eigen::MatrixXd dx = layer_norm_backward(dy, cache.xhatf, cache.inv_stdf,
                                           params.lnf_g, grads.lnf_g,
                                           grads.lnf_b);

  for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
    const LayerParams& l = params.layers[static_cast<std::size_t>(li)];
    const LayerCache& c = cache.layers[static_cast<std::size_t>(li)];
    LayerParams& gl = grads.layers[static_cast<std::size_t>(li)];

    // xout = relu(hbar U) V + hbar
    const Eigen::MatrixXd& dxout = dx;
    gl.v.noalias() += c.ff_act.transpose() * dxout;
    Eigen::MatrixXd dact = dxout * l.v.transpose();
    Eigen::MatrixXd dpre =
        (c.ff_pre.array() > 0.0).select(dact, Eigen::MatrixXd::Zero(
                                                  dact.rows(), dact.cols()));
    gl.u.noalias() += c.hbar.transpose() * dpre;
    Eigen::MatrixXd dhbar = dxout;
    dhbar.noalias() += dpre * l.u.transpose();

    Eigen::MatrixXd dattn = layer_norm_backward(dhbar, c.xhat2, c.inv_std2,
                                                l.ln2_g, gl.ln2_g, gl.ln2_b);

    // h = concat(heads) Wo + xbar
    gl.wo.noalias() += c.concat.transpose() * dattn;
    Eigen::MatrixXd dconcat = dattn * l.wo.transpose();
    Eigen::MatrixXd dxbar = dattn;  // residual branch
    for (int h = 0; h < cfg.heads; ++h) {
      Eigen::MatrixXd dout = dconcat.middleCols(h * dh, dh);
      Eigen::MatrixXd da = dout * c.v[h].transpose();
      Eigen::MatrixXd dv = c.att[h].transpose() * dout;
      Eigen::ArrayXXd prod = c.att[h].array() * da.array();
      Eigen::VectorXd row_dot = prod.rowwise().sum();
      Eigen::MatrixXd ds =
          (c.att[h].array() * (da.array().colwise() - row_dot.array()))
              .matrix();
      Eigen::MatrixXd dq = ds * c.k[h] * scale;
      Eigen::MatrixXd dk = ds.transpose() * c.q[h] * scale;
      gl.wq.middleCols(h * dh, dh).noalias() += c.xbar.transpose() * dq;
      gl.wk.middleCols(h * dh, dh).noalias() += c.xbar.transpose() * dk;
      gl.wv.middleCols(h * dh, dh).noalias() += c.xbar.transpose() * dv;
      dxbar.noalias() += dq * l.wq.middleCols(h * dh, dh).transpose();
      dxbar.noalias() += dk * l.wk.middleCols(h * dh, dh).transpose();
      dxbar.noalias() += dv * l.wv.middleCols(h * dh, dh).transpose();
    }

    dx = layer_norm_backward(dxbar, c.xhat1, c.inv_std1, l.ln1_g, gl.ln1_g,
                             gl.ln1_b);
  }

  for (Eigen::Index i = 0; i < dx.rows(); ++i) {
    grads.embedding.row(input[static_cast<std::size_t>(i)]) += dx.row(i);
  }
}

}  // namespace

Eigen::MatrixXd Model::logits(const std::vector<int>& input) const {
  check_tokens(input, cfg_);
  return forward_pass(cfg_, params_, pos_, input).logits;
}

namespace {

// Shared loss plumbing. When grads is non-null the analytic gradients of the
// batch loss are accumulated into it.
double batch_loss(const ModelConfig& cfg, const Params& params,
                  const Eigen::MatrixXd& pos,
                  const std::vector<Model::Example>& batch, Params* grads) {
  double total_weight = 0.0;
  for (const auto& ex : batch) {
    if (ex.tokens.size() < 2) {
      throw std::invalid_argument("training example needs at least 2 tokens");
    }
    std::size_t n_targets = ex.tokens.size() - 1;
    if (!ex.mask.empty() && ex.mask.size() != n_targets) {
      throw std::invalid_argument("mask length must equal target count");
    }
    if (ex.mask.empty()) {
      total_weight += static_cast<double>(n_targets);
    } else {
      for (double w : ex.mask) total_weight += w;
    }
  }
  if (total_weight <= 0.0) return 0.0;

  double loss_sum = 0.0;
  for (const auto& ex : batch) {
    check_tokens(ex.tokens, cfg);
    std::vector<int> input(ex.tokens.begin(), ex.tokens.end() - 1);
    ForwardCache cache = forward_pass(cfg, params, pos, input);
    const Eigen::Index rows = cache.logits.rows();
    Eigen::MatrixXd dlogits;
    if (grads) dlogits = Eigen::MatrixXd::Zero(rows, cfg.vocab_size);
    for (Eigen::Index i = 0; i < rows; ++i) {
      double w = ex.mask.empty() ? 1.0 : ex.mask[static_cast<std::size_t>(i)];
      if (w == 0.0) continue;
      int target = ex.tokens[static_cast<std::size_t>(i) + 1];
      double lse = logsumexp_row(cache.logits.row(i));
      loss_sum += w * (lse - cache.logits(i, target));
      if (grads) {
        Eigen::VectorXd p =
            (cache.logits.row(i).transpose().array() - lse).exp();
        dlogits.row(i) = (w / total_weight) * p.transpose();
        dlogits(i, target) -= w / total_weight;
      }
    }
    if (grads) backward_pass(cfg, params, input, cache, dlogits, *grads);
  }
  return loss_sum / total_weight;
}

}  // namespace

double Model::loss(const std::vector<Example>& batch) const {
  return batch_loss(cfg_, params_, pos_, batch, nullptr);
}

double Model::loss_and_grads(const std::vector<Example>& batch,
                             Params& grads) const {
  grads = Params::zero_like(cfg_);
  return batch_loss(cfg_, params_, pos_, batch, &grads);
}

std::vector<double> Model::train(const std::vector<Example>& data,
                                 const TrainOptions& opts) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (opts.steps < 1 || opts.batch_size < 1) {
    throw std::invalid_argument("train: steps and batch_size must be positive");
  }
  Params m = Params::zero_like(cfg_);
  Params v = Params::zero_like(cfg_);

  Rng rng(opts.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(opts.steps));
  for (int step = 1; step <= opts.steps; ++step) {
    std::vector<Example> batch;
    for (int b = 0; b < opts.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }

    Params grads;
    double loss = loss_and_grads(batch, grads);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("training diverged: non-finite loss at step " +
                               std::to_string(step));
    }
    losses.push_back(loss);

    double lr = opts.lr;
    if (opts.warmup > 0) {
      lr *= std::min(1.0, static_cast<double>(step) / opts.warmup);
    }
    double bc1 = 1.0 - std::pow(opts.beta1, step);
    double bc2 = 1.0 - std::pow(opts.beta2, step);

    // Walk the four structures in lockstep; for_each order is fixed.
    std::vector<double*> ptrs_p, ptrs_g, ptrs_m, ptrs_v;
    std::vector<Eigen::Index> sizes;
    params_.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> w) {
      ptrs_p.push_back(w.data());
      sizes.push_back(w.size());
    });
    grads.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> w) {
      ptrs_g.push_back(w.data());
    });
    m.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> w) {
      ptrs_m.push_back(w.data());
    });
    v.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> w) {
      ptrs_v.push_back(w.data());
    });
    for (std::size_t i = 0; i < ptrs_p.size(); ++i) {
      Eigen::Map<Eigen::ArrayXd> p(ptrs_p[i], sizes[i]);
      Eigen::Map<Eigen::ArrayXd> g(ptrs_g[i], sizes[i]);
      Eigen::Map<Eigen::ArrayXd> mm(ptrs_m[i], sizes[i]);
      Eigen::Map<Eigen::ArrayXd> vv(ptrs_v[i], sizes[i]);
      mm = opts.beta1 * mm + (1.0 - opts.beta1) * g;
      vv = opts.beta2 * vv + (1.0 - opts.beta2) * g.square();
      p -= lr * (mm / bc1) / ((vv / bc2).sqrt() + opts.eps);
    }
    if (opts.verbose && (step % 50 == 0 || step == 1)) {
      std::fprintf(stderr, "step %d loss %.4f\n", step, loss);
    }
  }
  return losses;
}

DecodeState Model::make_state() const {
  DecodeState state;
  const int dh = cfg_.head_dim();
  state.k.resize(static_cast<std::size_t>(cfg_.layers));
  state.v.resize(static_cast<std::size_t>(cfg_.layers));
  for (int l = 0; l < cfg_.layers; ++l) {
    state.k[l].assign(static_cast<std::size_t>(cfg_.heads),
                      Eigen::MatrixXd(cfg_.max_len, dh));
    state.v[l].assign(static_cast<std::size_t>(cfg_.heads),
                      Eigen::MatrixXd(cfg_.max_len, dh));
  }
  return state;
}

Eigen::VectorXd Model::step(int token, DecodeState& state) const {
  if (token < 0 || token >= cfg_.vocab_size) {
    throw std::invalid_argument("step: token id out of range");
  }
  if (state.filled >= cfg_.max_len) {
    throw std::invalid_argument("step: sequence already at max_len");
  }
  const int dh = cfg_.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int pos = state.filled;

  Eigen::RowVectorXd x = params_.embedding.row(token) + pos_.row(pos);
  auto norm_row = [&](const Eigen::RowVectorXd& r, const Eigen::VectorXd& g,
                      const Eigen::VectorXd& b) {
    double mu = r.mean();
    double var = (r.array() - mu).square().mean();
    double inv = 1.0 / std::sqrt(var + kLnEps);
    Eigen::RowVectorXd xhat = (r.array() - mu) * inv;
    return Eigen::RowVectorXd(xhat.cwiseProduct(g.transpose()) +
                              b.transpose());
  };

  for (int li = 0; li < cfg_.layers; ++li) {
    const LayerParams& l = params_.layers[static_cast<std::size_t>(li)];
    Eigen::RowVectorXd xbar = norm_row(x, l.ln1_g, l.ln1_b);
    Eigen::RowVectorXd concat(cfg_.dim);
    for (int h = 0; h < cfg_.heads; ++h) {
      Eigen::RowVectorXd q = xbar * l.wq.middleCols(h * dh, dh);
      state.k[li][h].row(pos) = xbar * l.wk.middleCols(h * dh, dh);
      state.v[li][h].row(pos) = xbar * l.wv.middleCols(h * dh, dh);
      Eigen::VectorXd scores =
          state.k[li][h].topRows(pos + 1) * q.transpose() * scale;
      double mx = scores.maxCoeff();
      Eigen::ArrayXd a = (scores.array() - mx).exp();
      a /= a.sum();
      concat.segment(h * dh, dh) =
          (a.matrix().transpose() * state.v[li][h].topRows(pos + 1));
    }
    Eigen::RowVectorXd hrow = concat * l.wo + xbar;
    Eigen::RowVectorXd hbar = norm_row(hrow, l.ln2_g, l.ln2_b);
    Eigen::RowVectorXd act = (hbar * l.u).cwiseMax(0.0);
    x = act * l.v + hbar;
  }
  Eigen::RowVectorXd y = norm_row(x, params_.lnf_g, params_.lnf_b);
  ++state.filled;
  return (y * params_.w_vocab).transpose();
}

std::vector<int> Model::greedy_decode(const std::vector<int>& prefix,
                                      const std::vector<int>& stop_ids,
                                      int max_new) const {
  check_tokens(prefix, cfg_);
  DecodeState state = make_state();
  Eigen::VectorXd logits;
  for (int t : prefix) logits = step(t, state);

  std::vector<int> out;
  for (int produced = 0; produced < max_new; ++produced) {
    if (state.filled >= cfg_.max_len) break;
    int best = 0;
    double best_score = logits(0);
    for (int i = 1; i < cfg_.vocab_size; ++i) {
      if (logits(i) > best_score) {  // strict: ties keep the lowest id
        best_score = logits(i);
        best = i;
      }
    }
    out.push_back(best);
    if (std::find(stop_ids.begin(), stop_ids.end(), best) != stop_ids.end()) {
      break;
    }
    if (state.filled >= cfg_.max_len) break;
    logits = step(best, state);
  }
  return out;
}

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw std::runtime_error("checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    }
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    }
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kMagic[] = "MTODCKP1";

}  // namespace

// Checkpoint layout (all integers and doubles little-endian): 8-byte magic,
// six u64 config fields (layers, heads, dim, ff, vocab_size, max_len), a u32
// block count, then per block: u32 name length, name bytes, u64 rows, u64
// cols, rows*cols doubles in column-major order.
void Model::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, 8);
  put_u64(out, static_cast<uint64_t>(cfg_.layers));
  put_u64(out, static_cast<uint64_t>(cfg_.heads));
  put_u64(out, static_cast<uint64_t>(cfg_.dim));
  put_u64(out, static_cast<uint64_t>(cfg_.ff));
  put_u64(out, static_cast<uint64_t>(cfg_.vocab_size));
  put_u64(out, static_cast<uint64_t>(cfg_.max_len));

  uint32_t count = 0;
  params_.for_each(
      [&](const std::string&, Eigen::Ref<const Eigen::MatrixXd>) { ++count; });
  put_u32(out, count);
  params_.for_each(
      [&](const std::string& name, Eigen::Ref<const Eigen::MatrixXd> w) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u64(out, static_cast<uint64_t>(w.rows()));
        put_u64(out, static_cast<uint64_t>(w.cols()));
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          for (Eigen::Index r = 0; r < w.rows(); ++r) put_f64(out, w(r, c));
        }
      });

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Model Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  Reader r{data};
  if (r.str(8) != std::string(kMagic, 8)) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  ModelConfig cfg;
  cfg.layers = static_cast<int>(r.u64());
  cfg.heads = static_cast<int>(r.u64());
  cfg.dim = static_cast<int>(r.u64());
  cfg.ff = static_cast<int>(r.u64());
  cfg.vocab_size = static_cast<int>(r.u64());
  cfg.max_len = static_cast<int>(r.u64());
  Model model(cfg);

  uint32_t count = r.u32();
  std::vector<std::pair<std::string, Eigen::MatrixXd>> blocks;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    auto rows = static_cast<Eigen::Index>(r.u64());
    auto cols = static_cast<Eigen::Index>(r.u64());
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index rr = 0; rr < rows; ++rr) w(rr, c) = r.f64();
    }
    blocks.emplace_back(std::move(name), std::move(w));
  }
  std::size_t next = 0;
  model.params_.for_each([&](const std::string& name,
                             Eigen::Ref<Eigen::MatrixXd> w) {
    if (next >= blocks.size() || blocks[next].first != name ||
        blocks[next].second.rows() != w.rows() ||
        blocks[next].second.cols() != w.cols()) {
      throw std::runtime_error("checkpoint block mismatch at " + name);
    }
    w = blocks[next].second;
    ++next;
  });
  if (next != blocks.size()) {
    throw std::runtime_error("checkpoint has unexpected extra blocks");
  }
  return model;
}

}  // namespace minitod
