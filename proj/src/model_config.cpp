#include "stego/model_config.hpp"

namespace stego {

QkvVariant parse_qkv_variant(const std::string& s) {
  if (s == "msg/msg+im") return QkvVariant::MsgQ_MsgImKv;
  if (s == "msg/im") return QkvVariant::MsgQ_ImKv;
  if (s == "im/msg+im") return QkvVariant::ImQ_MsgImKv;
  if (s == "im/msg") return QkvVariant::ImQ_MsgKv;
  if (s == "msg+im/msg+im") return QkvVariant::MsgImQ_MsgImKv;
  throw ConfigError("unknown qkv variant '" + s +
                    "' (expected one of msg/msg+im, msg/im, im/msg+im, im/msg, msg+im/msg+im)");
}

std::string to_string(QkvVariant v) {
  switch (v) {
    case QkvVariant::MsgQ_MsgImKv: return "msg/msg+im";
    case QkvVariant::MsgQ_ImKv: return "msg/im";
    case QkvVariant::ImQ_MsgImKv: return "im/msg+im";
    case QkvVariant::ImQ_MsgKv: return "im/msg";
    case QkvVariant::MsgImQ_MsgImKv: return "msg+im/msg+im";
  }
  return "im/msg+im";
}

Activation parse_activation(const std::string& s) {
  if (s == "gelu") return Activation::Gelu;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + s + "' (expected gelu or relu)");
}

std::string to_string(Activation a) {
  return a == Activation::Gelu ? "gelu" : "relu";
}

void ModelConfig::validate() const {
  layout().validate();
  if (heads < 1) throw ConfigError("model: heads must be positive");
  if (l_ms % 4 != 0)
    throw ConfigError("model: l_ms must be divisible by 4 for the /2-scale regrouping");
  if (h % 4 != 0 || w % 4 != 0) throw ConfigError("model: image size must be divisible by 4");
  for (int s = 0; s < kStages; ++s) {
    if (stage_channels(s) % heads != 0)
      throw ConfigError("model: stage channels not divisible by heads");
    if (stage_grid_h(s) % window != 0 || stage_grid_w(s) % window != 0)
      throw ConfigError("model: window " + std::to_string(window) + " does not tile the " +
                        std::to_string(stage_grid_h(s)) + "x" + std::to_string(stage_grid_w(s)) +
                        " grid at encoder stage " + std::to_string(s + 1));
  }
  for (int s = 0; s < kDecoderStages; ++s) {
    if (decoder_dim(s) % heads != 0)
      throw ConfigError("model: decoder dims not divisible by heads");
    const Index gh = h / decoder_scale(s), gw = w / decoder_scale(s);
    if (gh % window != 0 || gw % window != 0)
      throw ConfigError("model: window " + std::to_string(window) + " does not tile the " +
                        std::to_string(gh) + "x" + std::to_string(gw) +
                        " grid at decoder stage " + std::to_string(s + 1));
  }
}

}  // namespace stego
