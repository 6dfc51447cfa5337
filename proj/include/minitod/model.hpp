#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace minitod {

// Sinusoidal position table: row p holds sin(p / 10000^(2i/dim)) at even
// columns 2i and cos of the same argument at 2i+1.
Eigen::MatrixXd positional_encoding(int max_len, int dim);

// softmax(mask(X Y^T) / sqrt(Y.cols())) Z with the strictly-upper triangle
// masked to -inf before the softmax, so row i mixes rows 0..i of Z only.
Eigen::MatrixXd causal_attention(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y,
                                 const Eigen::MatrixXd& z);

// Mean negative log-likelihood; logits row i scores targets[i].
double nll_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets);

struct ModelConfig {
  int layers = 2;
  int heads = 4;
  int dim = 128;
  int ff = 512;
  int vocab_size = 0;
  int max_len = 512;

  int head_dim() const { return dim / heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Eigen::MatrixXd wq, wk, wv;  // dim x dim, heads laid out in column blocks
  Eigen::MatrixXd wo;          // dim x dim
  Eigen::MatrixXd u, v;        // dim x ff, ff x dim
  Eigen::VectorXd ln1_g, ln1_b, ln2_g, ln2_b;
};

struct Params {
  Eigen::MatrixXd embedding;  // vocab x dim
  std::vector<LayerParams> layers;
  Eigen::VectorXd lnf_g, lnf_b;
  Eigen::MatrixXd w_vocab;  // dim x vocab

  static Params zeros(const ModelConfig& cfg);

  // All blocks zero, including the layer-norm gains that zeros() sets to
  // one. Shape template for gradients and optimizer moments.
  static Params zero_like(const ModelConfig& cfg);

  // Visits every block in a fixed order shared by the optimizer, the
  // checkpoint format and the gradient tests.
  template <class F>
  void for_each(F&& f) {
    f("embedding", embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto& l = layers[i];
      std::string p = "layer" + std::to_string(i) + ".";
      f(p + "wq", l.wq);
      f(p + "wk", l.wk);
      f(p + "wv", l.wv);
      f(p + "wo", l.wo);
      f(p + "u", l.u);
      f(p + "v", l.v);
      f(p + "ln1_g", l.ln1_g);
      f(p + "ln1_b", l.ln1_b);
      f(p + "ln2_g", l.ln2_g);
      f(p + "ln2_b", l.ln2_b);
    }
    f("final_ln_g", lnf_g);
    f("final_ln_b", lnf_b);
    f("w_vocab", w_vocab);
  }

  template <class F>
  void for_each(F&& f) const {
    const_cast<Params*>(this)->for_each(
        [&](const std::string& name, Eigen::Ref<Eigen::MatrixXd> w) {
          f(name, Eigen::Ref<const Eigen::MatrixXd>(w));
        });
  }
};

// Incremental decoding cache: per layer and head, the key/value rows of every
// position processed so far.
struct DecodeState {
  int filled = 0;
  std::vector<std::vector<Eigen::MatrixXd>> k, v;  // [layer][head]
};

// Decoder-only causal language model over token ids. All arithmetic is in
// 64-bit floats and every operation is deterministic given the seed.
class Model {
 public:
  explicit Model(ModelConfig cfg);
  static Model random_init(ModelConfig cfg, uint64_t seed, double gain = 0.02);

  const ModelConfig& config() const { return cfg_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  // Full forward pass; row i of the result scores the token after input[i].
  Eigen::MatrixXd logits(const std::vector<int>& input) const;

  // One training example: the serialized turn, plus an optional weight for
  // each of the tokens.size()-1 next-token targets (empty means all ones).
  struct Example {
    std::vector<int> tokens;
    std::vector<double> mask;
  };

  // Weighted mean NLL over the batch; total weight zero yields loss 0.
  double loss(const std::vector<Example>& batch) const;
  double loss_and_grads(const std::vector<Example>& batch, Params& grads) const;

  struct TrainOptions {
    int steps = 1000;
    int batch_size = 8;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int warmup = 100;  // linear learning-rate warmup, in steps
    uint64_t seed = 1;
    bool verbose = false;
  };

  // Adam over shuffled batches; returns the per-step loss curve. Throws if
  // the loss becomes non-finite.
  std::vector<double> train(const std::vector<Example>& data,
                            const TrainOptions& opts);

  DecodeState make_state() const;
  // Feeds one token at the next position and returns the logits row.
  Eigen::VectorXd step(int token, DecodeState& state) const;

  // Greedy continuation of `prefix`; stops after emitting any id in
  // `stop_ids`, after max_new tokens, or at the model's max_len. Ties pick
  // the lowest token id. Returns only the newly generated ids.
  std::vector<int> greedy_decode(const std::vector<int>& prefix,
                                 const std::vector<int>& stop_ids,
                                 int max_new) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelConfig cfg_;
  Params params_;
  Eigen::MatrixXd pos_;  // max_len x dim
};

}  // namespace minitod
