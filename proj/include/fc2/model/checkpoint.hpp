#ifndef FC2_MODEL_CHECKPOINT_HPP_
#define FC2_MODEL_CHECKPOINT_HPP_

#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "fc2/model/network.hpp"

// Checkpoint container: magic + version, a JSON manifest (model config,
// vocabulary, tensor shapes) and the flat parameter arrays as raw doubles
// in manifest order.

namespace fc2 {

inline constexpr char kCheckpointMagic[8] = {'F', 'C', '2', 'C', 'K', 'P', 'T', '1'};

inline nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"vocab_size", c.vocab_size},
                        {"hidden", c.hidden},
                        {"encoder_layers", c.encoder_layers},
                        {"decoder_layers", c.decoder_layers},
                        {"attention_heads", c.attention_heads},
                        {"feed_forward", c.feed_forward},
                        {"beam_n", c.beam_n},
                        {"dur_conv_layers", c.dur_conv_layers},
                        {"dur_kernel", c.dur_kernel},
                        {"dropout", c.dropout},
                        {"max_len", c.max_len},
                        {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", 0);
  c.hidden = j.value("hidden", c.hidden);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.attention_heads = j.value("attention_heads", c.attention_heads);
  c.feed_forward = j.value("feed_forward", c.feed_forward);
  c.beam_n = j.value("beam_n", c.beam_n);
  c.dur_conv_layers = j.value("dur_conv_layers", c.dur_conv_layers);
  c.dur_kernel = j.value("dur_kernel", c.dur_kernel);
  c.dropout = j.value("dropout", c.dropout);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline void save_checkpoint(std::ostream& out, const CorrectionModel& model) {
  nlohmann::json manifest;
  manifest["config"] = to_json(model.config());
  manifest["vocab"] = model.vocab().tokens();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.params())
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()}});
  manifest["tensors"] = tensors;
  std::string mstr = manifest.dump();

  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  std::uint64_t len = mstr.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  for (const auto& p : model.params())
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  if (!out) throw std::runtime_error("checkpoint write failed");
}

inline void save_checkpoint(const std::string& path, const CorrectionModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  save_checkpoint(out, model);
}

inline std::unique_ptr<CorrectionModel> load_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, sizeof magic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic))
    throw std::runtime_error("not a checkpoint file (bad magic)");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string mstr(len, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint manifest");
  nlohmann::json manifest = nlohmann::json::parse(mstr);

  ModelConfig cfg = model_config_from_json(manifest.at("config"));
  Vocab vocab(manifest.at("vocab").get<std::vector<Token>>());
  auto model = std::make_unique<CorrectionModel>(cfg, std::move(vocab));

  for (const auto& t : manifest.at("tensors")) {
    Parameter& p = model->param(t.at("name").get<std::string>());
    Eigen::Index rows = t.at("rows").get<Eigen::Index>();
    Eigen::Index cols = t.at("cols").get<Eigen::Index>();
    if (p.value.rows() != rows || p.value.cols() != cols)
      throw std::runtime_error("checkpoint tensor shape mismatch for " + p.name);
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(sizeof(double) * p.value.size()));
  }
  if (!in) throw std::runtime_error("truncated checkpoint tensors");
  return model;
}

inline std::unique_ptr<CorrectionModel> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace fc2

#endif  // FC2_MODEL_CHECKPOINT_HPP_
