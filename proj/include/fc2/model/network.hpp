#ifndef FC2_MODEL_NETWORK_HPP_
#define FC2_MODEL_NETWORK_HPP_

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/core.hpp"
#include "fc2/model/autograd.hpp"
#include "fc2/rng.hpp"

namespace fc2 {

struct ModelConfig {
  int vocab_size = 0;  // filled from the vocabulary at build time
  int hidden = 64;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int attention_heads = 2;
  int feed_forward = 128;
  int beam_n = 4;
  int dur_conv_layers = 5;
  int dur_kernel = 3;
  double dropout = 0.0;
  int max_len = 128;
  std::uint64_t seed = 1;

  void validate() const {
    if (hidden % attention_heads != 0)
      throw std::invalid_argument("hidden must be divisible by attention_heads");
    if (beam_n < 1) throw std::invalid_argument("beam_n must be >= 1");
    if (dur_kernel % 2 == 0) throw std::invalid_argument("dur_kernel must be odd");
    if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  }
};

// Token ids. Id 0 is the empty token Ø (also the padding embedding), id 1
// is the unknown-token fallback for out-of-vocabulary input at inference.
class Vocab {
 public:
  static constexpr int kEmptyId = 0;
  static constexpr int kUnkId = 1;

  Vocab() {
    id_to_token_ = {kEmptyToken, "<unk>"};
    index();
  }

  explicit Vocab(std::vector<Token> tokens) : id_to_token_(std::move(tokens)) {
    index();
  }

  static Vocab build(const std::vector<Sentence>& corpus) {
    std::vector<Token> toks = {kEmptyToken, "<unk>"};
    std::unordered_map<Token, int> seen{{kEmptyToken, 0}, {"<unk>", 1}};
    std::vector<Token> uniq;
    for (const auto& s : corpus)
      for (const auto& t : s)
        if (!seen.count(t)) {
          seen.emplace(t, 1);
          uniq.push_back(t);
        }
    std::sort(uniq.begin(), uniq.end());
    toks.insert(toks.end(), uniq.begin(), uniq.end());
    return Vocab(std::move(toks));
  }

  int id(const Token& t) const {
    auto it = token_to_id_.find(t);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  const Token& token(int id) const { return id_to_token_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<Token>& tokens() const { return id_to_token_; }

  std::vector<int> ids(const std::vector<Token>& toks) const {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(id(t));
    return out;
  }

 private:
  void index() {
    token_to_id_.clear();
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
      token_to_id_[id_to_token_[i]] = static_cast<int>(i);
  }
  std::vector<Token> id_to_token_;
  std::unordered_map<Token, int> token_to_id_;
};

struct Parameter {
  std::string name;
  ag::Mat value;
  ag::Mat grad;
  ag::Mat adam_m, adam_v;  // lazily sized by the optimizer

  void zero_grad() { grad.setZero(); }
};

// The full parameter set: shared token embedding, Pre-Net projection,
// encoder stack, per-candidate duration predictor (conv trunk + two linear
// layers), candidate predictor head, decoder stack with cross attention and
// the output projection.
class CorrectionModel {
 public:
  CorrectionModel(ModelConfig config, Vocab vocab)
      : cfg_(std::move(config)), vocab_(std::move(vocab)) {
    cfg_.vocab_size = vocab_.size();
    cfg_.validate();
    RngStream rng(cfg_.seed);
    const int H = cfg_.hidden, V = cfg_.vocab_size;

    add("emb", V, H, rng, 0.05);
    add("prenet.W", cfg_.beam_n * H, H, rng);
    add_zeros("prenet.b", 1, H);
    for (int l = 0; l < cfg_.encoder_layers; ++l)
      add_transformer_layer("enc" + std::to_string(l), /*cross=*/false, rng);
    add_ln("enc.final_ln", H);
    for (int l = 0; l < cfg_.decoder_layers; ++l)
      add_transformer_layer("dec" + std::to_string(l), /*cross=*/true, rng);
    add_ln("dec.final_ln", H);
    add("out.W", H, V, rng);
    add_zeros("out.b", 1, V);

    for (int l = 0; l < cfg_.dur_conv_layers; ++l) {
      int cin = l == 0 ? 2 * H : H;
      for (int o = 0; o < cfg_.dur_kernel; ++o)
        add("dur.conv" + std::to_string(l) + ".w" + std::to_string(o), cin, H, rng,
            std::sqrt(2.0 / (cin * cfg_.dur_kernel)));
      add_zeros("dur.conv" + std::to_string(l) + ".b", 1, H);
      add_ln("dur.conv" + std::to_string(l) + ".ln", H);
    }
    add("dur.lin1.W", H, H, rng);
    add_zeros("dur.lin1.b", 1, H);
    add("dur.lin2.W", H, 1, rng);
    add_zeros("dur.lin2.b", 1, 1);

    add("cand.W", 2 * H, 1, rng);
    add_zeros("cand.b", 1, 1);

    posenc_ = ag::Mat(cfg_.max_len, H);
    for (int pos = 0; pos < cfg_.max_len; ++pos)
      for (int i = 0; i < H; ++i) {
        double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / H);
        posenc_(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
  }

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  Parameter& param(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("no parameter " + name);
    return *it->second;
  }
  const Parameter& param(const std::string& name) const {
    return const_cast<CorrectionModel*>(this)->param(name);
  }

  std::vector<std::unique_ptr<Parameter>>& params() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& params() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  const ag::Mat& positional_encoding() const { return posenc_; }

 private:
  void add(const std::string& name, int rows, int cols, RngStream& rng, double std_dev = -1.0) {
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value.resize(rows, cols);
    double sd = std_dev > 0 ? std_dev : std::sqrt(2.0 / (rows + cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) p->value(i, j) = rng.next_gaussian() * sd;
    p->grad = ag::Mat::Zero(rows, cols);
    by_name_[name] = p.get();
    params_.push_back(std::move(p));
  }
  void add_zeros(const std::string& name, int rows, int cols) {
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = ag::Mat::Zero(rows, cols);
    p->grad = ag::Mat::Zero(rows, cols);
    by_name_[name] = p.get();
    params_.push_back(std::move(p));
  }
  void add_ln(const std::string& name, int width) {
    auto g = std::make_unique<Parameter>();
    g->name = name + ".g";
    g->value = ag::Mat::Ones(1, width);
    g->grad = ag::Mat::Zero(1, width);
    by_name_[g->name] = g.get();
    params_.push_back(std::move(g));
    add_zeros(name + ".b", 1, width);
  }
  void add_transformer_layer(const std::string& prefix, bool cross, RngStream& rng) {
    const int H = cfg_.hidden, F = cfg_.feed_forward;
    add_ln(prefix + ".ln1", H);
    for (const char* w : {".attn.Wq", ".attn.Wk", ".attn.Wv", ".attn.Wo"})
      add(prefix + w, H, H, rng);
    add_zeros(prefix + ".attn.bo", 1, H);
    if (cross) {
      add_ln(prefix + ".lnx", H);
      for (const char* w : {".xattn.Wq", ".xattn.Wk", ".xattn.Wv", ".xattn.Wo"})
        add(prefix + w, H, H, rng);
      add_zeros(prefix + ".xattn.bo", 1, H);
    }
    add_ln(prefix + ".ln2", H);
    add(prefix + ".ffn.W1", H, F, rng);
    add_zeros(prefix + ".ffn.b1", 1, F);
    add(prefix + ".ffn.W2", F, H, rng);
    add_zeros(prefix + ".ffn.b2", 1, H);
  }

  ModelConfig cfg_;
  Vocab vocab_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
  ag::Mat posenc_;
};

// Per-forward graph context. Training mode enables dropout (driven by a
// dedicated stream) and gradient accumulation into parameter buffers.
class GraphContext {
 public:
  GraphContext(CorrectionModel& model, bool train_mode, RngStream* dropout_rng = nullptr)
      : model_(model), train_(train_mode), rng_(dropout_rng) {}

  ag::NodePtr p(const std::string& name) {
    Parameter& par = model_.param(name);
    auto it = nodes_.find(&par);
    if (it != nodes_.end()) return it->second;
    auto node = train_ ? ag::leaf(par.value, &par.grad) : ag::constant(par.value);
    nodes_.emplace(&par, node);
    return node;
  }

  ag::NodePtr drop(const ag::NodePtr& x) {
    if (!train_ || model_.config().dropout <= 0.0 || !rng_) return x;
    return ag::dropout(x, model_.config().dropout, *rng_);
  }

  ag::NodePtr linear(const ag::NodePtr& x, const std::string& w, const std::string& b) {
    return ag::add_rowvec(ag::matmul(x, p(w)), p(b));
  }

  ag::NodePtr layernorm(const ag::NodePtr& x, const std::string& prefix) {
    return ag::layernorm_rows(x, p(prefix + ".g"), p(prefix + ".b"));
  }

  // Full (non-causal) multi-head attention of queries over keys/values.
  ag::NodePtr attention(const ag::NodePtr& q_in, const ag::NodePtr& kv_in,
                        const std::string& prefix) {
    const int H = model_.config().hidden;
    const int heads = model_.config().attention_heads;
    const int dh = H / heads;
    auto Q = ag::matmul(q_in, p(prefix + ".Wq"));
    auto K = ag::matmul(kv_in, p(prefix + ".Wk"));
    auto V = ag::matmul(kv_in, p(prefix + ".Wv"));
    std::vector<ag::NodePtr> ctx;
    for (int h = 0; h < heads; ++h) {
      auto Qh = ag::slice_cols(Q, h * dh, dh);
      auto Kh = ag::slice_cols(K, h * dh, dh);
      auto Vh = ag::slice_cols(V, h * dh, dh);
      auto scores = ag::scale(ag::matmul_nt(Qh, Kh), 1.0 / std::sqrt(double(dh)));
      ctx.push_back(ag::matmul(ag::softmax_rows(scores), Vh));
    }
    auto merged = ag::concat_cols(ctx);
    return drop(ag::add_rowvec(ag::matmul(merged, p(prefix + ".Wo")), p(prefix + ".bo")));
  }

  ag::NodePtr ffn(const ag::NodePtr& x, const std::string& prefix) {
    auto h = ag::relu(linear(x, prefix + ".W1", prefix + ".b1"));
    return drop(linear(h, prefix + ".W2", prefix + ".b2"));
  }

  // Pre-LN transformer block; optional cross attention over memory.
  ag::NodePtr block(const ag::NodePtr& x_in, const std::string& prefix,
                    const ag::NodePtr& memory = nullptr) {
    auto x = x_in;
    auto h = layernorm(x, prefix + ".ln1");
    x = ag::add(x, attention(h, h, prefix + ".attn"));
    if (memory) {
      auto hx = layernorm(x, prefix + ".lnx");
      x = ag::add(x, attention(hx, memory, prefix + ".xattn"));
    }
    auto h2 = layernorm(x, prefix + ".ln2");
    return ag::add(x, ffn(h2, prefix + ".ffn"));
  }

  ag::NodePtr posenc(Eigen::Index len) {
    if (len > model_.positional_encoding().rows())
      throw std::invalid_argument("sequence longer than max_len");
    return ag::constant(model_.positional_encoding().topRows(len));
  }

  ag::NodePtr embed(const std::vector<int>& ids) {
    return ag::embedding_rows(p("emb"), ids);
  }

  CorrectionModel& model() { return model_; }
  bool training() const { return train_; }

 private:
  CorrectionModel& model_;
  bool train_;
  RngStream* rng_;
  std::unordered_map<const Parameter*, ag::NodePtr> nodes_;
};

// Encoder forward for one aligned grid: per-column concatenation of all
// candidate embeddings, Pre-Net projection, positional encoding and the
// encoder stack. Also hands back the per-row embeddings the predictors
// need.
struct EncodeResult {
  ag::NodePtr encoder_out;                // L x H
  std::vector<ag::NodePtr> row_embeddings;  // beam_n of L x H
  std::vector<std::vector<int>> row_ids;
};

inline EncodeResult prenet_encode(GraphContext& ctx, const AlignmentGrid& grid) {
  const ModelConfig& cfg = ctx.model().config();
  if (static_cast<int>(grid.rows.size()) != cfg.beam_n)
    throw std::invalid_argument("prenet_encode: grid rows != beam_n");
  if (grid.width() == 0)
    throw std::invalid_argument("prenet_encode: empty grid");

  EncodeResult res;
  for (const auto& row : grid.rows) {
    res.row_ids.push_back(ctx.model().vocab().ids(row));
    res.row_embeddings.push_back(ctx.embed(res.row_ids.back()));
  }
  auto x = ctx.linear(ag::concat_cols(res.row_embeddings), "prenet.W", "prenet.b");
  x = ag::add(x, ctx.posenc(x->value.rows()));
  x = ctx.drop(x);
  for (int l = 0; l < cfg.encoder_layers; ++l)
    x = ctx.block(x, "enc" + std::to_string(l));
  res.encoder_out = ctx.layernorm(x, "enc.final_ln");
  return res;
}

// Duration predictor for one candidate row: conv trunk with ReLU, layer
// norm and dropout per layer, then two linear layers to a scalar per
// position. Returns L x 1.
inline ag::NodePtr predict_durations_row(GraphContext& ctx, const ag::NodePtr& encoder_out,
                                         const ag::NodePtr& row_embedding) {
  const ModelConfig& cfg = ctx.model().config();
  if (encoder_out->value.rows() != row_embedding->value.rows())
    throw std::invalid_argument("predict_durations_row: length mismatch");
  auto x = ag::concat_cols(encoder_out, row_embedding);
  const int half = cfg.dur_kernel / 2;
  for (int l = 0; l < cfg.dur_conv_layers; ++l) {
    std::string base = "dur.conv" + std::to_string(l);
    ag::NodePtr acc;
    for (int o = 0; o < cfg.dur_kernel; ++o) {
      auto term = ag::matmul(ag::shift_rows(x, -(o - half)), ctx.p(base + ".w" + std::to_string(o)));
      acc = acc ? ag::add(acc, term) : term;
    }
    x = ag::relu(ag::add_rowvec(acc, ctx.p(base + ".b")));
    x = ctx.layernorm(x, base + ".ln");
    x = ctx.drop(x);
  }
  x = ag::relu(ctx.linear(x, "dur.lin1.W", "dur.lin1.b"));
  return ctx.linear(x, "dur.lin2.W", "dur.lin2.b");
}

// Candidate predictor for one row: global mean pooling over the
// concatenated features, affine head to one scalar (predicted decoder
// loss).
inline ag::NodePtr predict_candidate_loss_row(GraphContext& ctx, const ag::NodePtr& encoder_out,
                                              const ag::NodePtr& row_embedding) {
  if (encoder_out->value.rows() != row_embedding->value.rows())
    throw std::invalid_argument("predict_candidate_loss_row: length mismatch");
  auto pooled = ag::mean_rows(ag::concat_cols(encoder_out, row_embedding));
  return ctx.linear(pooled, "cand.W", "cand.b");
}

inline std::vector<ag::NodePtr> predict_durations(GraphContext& ctx, const EncodeResult& enc) {
  std::vector<ag::NodePtr> out;
  for (const auto& emb : enc.row_embeddings)
    out.push_back(predict_durations_row(ctx, enc.encoder_out, emb));
  return out;
}

inline std::vector<ag::NodePtr> predict_candidate_losses(GraphContext& ctx,
                                                         const EncodeResult& enc) {
  std::vector<ag::NodePtr> out;
  for (const auto& emb : enc.row_embeddings)
    out.push_back(predict_candidate_loss_row(ctx, enc.encoder_out, emb));
  return out;
}

// Non-autoregressive decoder: full self-attention over the adjusted source
// tokens, cross attention to the encoder output, one parallel pass to
// vocabulary logits (T x V).
inline ag::NodePtr decode_parallel(GraphContext& ctx, const std::vector<int>& adjusted_ids,
                                   const ag::NodePtr& encoder_out) {
  if (adjusted_ids.empty())
    throw std::invalid_argument("decode_parallel: empty decoder input");
  const ModelConfig& cfg = ctx.model().config();
  auto x = ctx.embed(adjusted_ids);
  x = ag::add(x, ctx.posenc(x->value.rows()));
  x = ctx.drop(x);
  for (int l = 0; l < cfg.decoder_layers; ++l)
    x = ctx.block(x, "dec" + std::to_string(l), encoder_out);
  x = ctx.layernorm(x, "dec.final_ln");
  return ctx.linear(x, "out.W", "out.b");
}

}  // namespace fc2

#endif  // FC2_MODEL_NETWORK_HPP_
