#include "spocta/cli/network.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spocta/binary_io.hpp"
#include "spocta/cli/scene_gen.hpp"
#include "spocta/error.hpp"

namespace spocta {

using Json = nlohmann::ordered_json;

template <typename T>
void validate_network(const Network<T>& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    try {
      validate_layer(layer.spec);
      validate_weights(layer.weights);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    if (layer.weights.c_in != layer.spec.c_in || layer.weights.c_out != layer.spec.c_out ||
        layer.weights.kernel != layer.spec.kernel()) {
      throw Error(ErrorCode::ChannelMismatch, where + "weights do not match the layer shape");
    }
    if (i + 1 < net.layers.size() && layer.spec.c_out != net.layers[i + 1].spec.c_in) {
      throw Error(ErrorCode::ChannelMismatch,
                  where + "c_out " + std::to_string(layer.spec.c_out) +
                      " does not feed the next layer's c_in " +
                      std::to_string(net.layers[i + 1].spec.c_in));
    }
    if (layer.spec.op == OpKind::Tconv2) {
      const std::size_t p = *layer.spec.paired_layer;
      if (p >= i || net.layers[p].spec.op != OpKind::Gconv2) {
        throw Error(ErrorCode::InvalidLayer, where + "tconv2 must pair with an earlier gconv2");
      }
    }
  }
}

template void validate_network(const Network<float>&);
template void validate_network(const Network<std::int8_t>&);

namespace {

std::string_view post_name(PostOp::Kind k) {
  switch (k) {
    case PostOp::Kind::BatchNorm: return "batch_norm";
    case PostOp::Kind::Relu: return "relu";
    case PostOp::Kind::Requantize: return "requantize";
  }
  return "unknown";
}

std::filesystem::path weights_path_for(const std::filesystem::path& json_path) {
  std::filesystem::path p = json_path;
  p.replace_extension(".spwt");
  return p;
}

template <typename T>
Json network_json(const Network<T>& net, Dtype dtype, const std::string& weights_file) {
  Json j;
  j["format"] = "spocta-network";
  j["version"] = 1;
  j["dtype"] = std::string(to_string(dtype));
  j["weights"] = weights_file;
  Json layers = Json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    Json lj;
    lj["id"] = i;
    lj["op"] = std::string(to_string(l.spec.op));
    lj["c_in"] = l.spec.c_in;
    lj["c_out"] = l.spec.c_out;
    lj["weight_offset"] = offset;
    lj["weight_scale"] = l.weights.scale;
    lj["quant"] = {{"input_scale", l.spec.quant.input_scale},
                   {"output_scale", l.spec.quant.output_scale}};
    Json post = Json::array();
    for (const PostOp& p : l.spec.postprocess) {
      Json pj;
      pj["kind"] = std::string(post_name(p.kind));
      if (p.kind == PostOp::Kind::BatchNorm) {
        pj["scale"] = p.scale;
        pj["shift"] = p.shift;
      }
      post.push_back(std::move(pj));
    }
    lj["postprocess"] = std::move(post);
    lj["paired_layer"] = l.spec.paired_layer ? Json(*l.spec.paired_layer) : Json(nullptr);
    layers.push_back(std::move(lj));
    offset += l.weights.values.size() * sizeof(T);
  }
  j["layers"] = std::move(layers);
  return j;
}

template <typename T>
void write_weights(const std::filesystem::path& path, const Network<T>& net, Dtype dtype) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  std::uint64_t payload = 0;
  for (const auto& l : net.layers) payload += l.weights.values.size() * sizeof(T);
  os.write("SPWT", 4);
  binio::put<std::uint16_t>(os, kWeightFormatVersion);
  binio::put<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  binio::put<std::uint64_t>(os, payload);
  for (const auto& l : net.layers) {
    for (const T v : l.weights.values) binio::put<T>(os, v);
  }
  if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

PostOp parse_post(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "relu") return PostOp::relu();
  if (kind == "requantize") return PostOp::requantize();
  if (kind == "batch_norm") {
    return PostOp::batch_norm(j.at("scale").get<std::vector<float>>(),
                              j.at("shift").get<std::vector<float>>());
  }
  throw Error(ErrorCode::InvalidLayer, "unknown postprocess kind '" + kind + "'");
}

template <typename T>
Network<T> read_layers(const Json& j, std::istream& weights, std::uint64_t payload) {
  Network<T> net;
  const Json& layers = j.at("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Json& lj = layers[i];
    try {
      if (lj.at("id").get<std::size_t>() != i) {
        throw Error(ErrorCode::InvalidLayer, "ids must count up from 0");
      }
      NetworkLayer<T> l;
      l.spec.op = parse_op_kind(lj.at("op").get<std::string>());
      l.spec.c_in = lj.at("c_in").get<std::size_t>();
      l.spec.c_out = lj.at("c_out").get<std::size_t>();
      const float weight_scale = lj.at("weight_scale").get<float>();
      l.spec.quant.weight_scale = weight_scale;
      if (lj.contains("quant")) {
        l.spec.quant.input_scale = lj["quant"].value("input_scale", 1.0f);
        l.spec.quant.output_scale = lj["quant"].value("output_scale", 1.0f);
      }
      if (lj.contains("postprocess")) {
        for (const Json& p : lj["postprocess"]) l.spec.postprocess.push_back(parse_post(p));
      }
      if (lj.contains("paired_layer") && !lj["paired_layer"].is_null()) {
        l.spec.paired_layer = lj["paired_layer"].get<std::size_t>();
      }
      l.weights = WeightTensor<T>::zeros(l.spec.kernel(), l.spec.c_out, l.spec.c_in);
      l.weights.scale = weight_scale;
      const std::uint64_t offset = lj.at("weight_offset").get<std::uint64_t>();
      const std::uint64_t bytes = l.weights.values.size() * sizeof(T);
      if (offset + bytes > payload) {
        throw Error(ErrorCode::FileFormat, "weights [" + std::to_string(offset) + ", " +
                                               std::to_string(offset + bytes) +
                                               ") exceed the payload of " + std::to_string(payload) +
                                               " bytes");
      }
      weights.clear();
      weights.seekg(static_cast<std::streamoff>(15 + offset));
      for (T& v : l.weights.values) v = binio::get<T>(weights, "weight value");
      net.layers.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FileFormat, "layer " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "layer " + std::to_string(i) + ": " + e.what());
    }
  }
  validate_network(net);
  return net;
}

}  // namespace

void save_network(const std::filesystem::path& json_path, const AnyNetwork& net) {
  const auto wpath = weights_path_for(json_path);
  std::visit(
      [&](const auto& n) {
        const Dtype dtype = std::is_same_v<std::decay_t<decltype(n)>, FloatNetwork> ? Dtype::Float32
                                                                                    : Dtype::Int8;
        validate_network(n);
        write_weights(wpath, n, dtype);
        std::ofstream os(json_path);
        if (!os) throw Error(ErrorCode::Io, "cannot open " + json_path.string() + " for writing");
        os << network_json(n, dtype, wpath.filename().string()).dump(2) << "\n";
        if (!os) throw Error(ErrorCode::Io, "failed writing " + json_path.string());
      },
      net);
}

AnyNetwork load_network(const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  if (!js) throw Error(ErrorCode::Io, "cannot open " + json_path.string());
  Json j;
  try {
    j = Json::parse(js);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::FileFormat, json_path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "spocta-network") {
      throw Error(ErrorCode::FileFormat, "not a network description");
    }
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::FileFormat, "unsupported network version");
    }
    const Dtype dtype = parse_dtype(j.at("dtype").get<std::string>());
    const auto wpath = json_path.parent_path() / j.at("weights").get<std::string>();
    std::ifstream ws(wpath, std::ios::binary);
    if (!ws) throw Error(ErrorCode::Io, "cannot open weight file " + wpath.string());
    binio::expect_magic(ws, "SPWT");
    const auto version = binio::get<std::uint16_t>(ws, "weight version");
    if (version != kWeightFormatVersion) {
      throw Error(ErrorCode::FileFormat,
                  "unsupported weight version " + std::to_string(version) + " at byte offset 4");
    }
    const auto wdtype = binio::get<std::uint8_t>(ws, "weight dtype");
    if (wdtype != static_cast<std::uint8_t>(dtype)) {
      throw Error(ErrorCode::FileFormat, "weight dtype at byte offset 6 disagrees with the network");
    }
    const auto payload = binio::get<std::uint64_t>(ws, "payload size");
    if (dtype == Dtype::Int8) return read_layers<std::int8_t>(j, ws, payload);
    return read_layers<float>(j, ws, payload);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FileFormat, json_path.string() + ": " + e.what());
  }
}

NetworkPreset parse_preset(std::string_view text) {
  if (text == "identity") return NetworkPreset::Identity;
  if (text == "unet") return NetworkPreset::UNet;
  if (text == "down3") return NetworkPreset::Down3;
  throw Error(ErrorCode::ConfigInvalid, "unknown network preset '" + std::string(text) + "'");
}

namespace {

template <typename T>
NetworkLayer<T> random_layer(OpKind op, std::size_t c_in, std::size_t c_out, std::mt19937_64& rng,
                             std::vector<PostOp> post, std::optional<std::size_t> paired = {}) {
  NetworkLayer<T> l;
  l.spec.op = op;
  l.spec.c_in = c_in;
  l.spec.c_out = c_out;
  l.spec.postprocess = std::move(post);
  l.spec.paired_layer = paired;
  l.weights = WeightTensor<T>::zeros(kernel_size(op), c_out, c_in);
  if constexpr (std::is_same_v<T, float>) {
    for (float& v : l.weights.values) v = static_cast<float>(static_cast<int>(bounded_draw(rng, 201)) - 100) / 1000.0f;
  } else {
    for (std::int8_t& v : l.weights.values) v = static_cast<std::int8_t>(static_cast<int>(bounded_draw(rng, 33)) - 16);
    // Accumulators land near int8 range after a 2^-8 (K=3) or 2^-6 (K=2) rescale.
    l.spec.quant = QuantParams{0.5f, 0.5f, kernel_size(op) == 3 ? 1.0f / 256 : 1.0f / 64};
  }
  l.weights.scale = l.spec.quant.weight_scale;
  return l;
}

template <typename T>
Network<T> build_preset(NetworkPreset preset, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<PostOp> act{PostOp::relu(), PostOp::requantize()};
  Network<T> net;
  switch (preset) {
    case NetworkPreset::Identity: {
      NetworkLayer<T> l;
      l.spec.op = OpKind::Subm3;
      l.spec.c_in = l.spec.c_out = c;
      l.weights = WeightTensor<T>::zeros(3, c, c);
      for (std::size_t o = 0; o < c; ++o) l.weights.at(o, o, kCenterOffsetId) = T{1};
      net.layers.push_back(std::move(l));
      break;
    }
    case NetworkPreset::UNet: {
      net.layers.push_back(random_layer<T>(OpKind::Subm3, c, c, rng, act));
      net.layers.push_back(random_layer<T>(OpKind::Gconv2, c, 2 * c, rng, act));
      std::vector<float> scale(2 * c), shift(2 * c);
      for (std::size_t i = 0; i < 2 * c; ++i) {
        scale[i] = 0.5f + static_cast<float>(bounded_draw(rng, 101)) / 100.0f;
        shift[i] = static_cast<float>(static_cast<int>(bounded_draw(rng, 17)) - 8);
      }
      net.layers.push_back(random_layer<T>(
          OpKind::Subm3, 2 * c, 2 * c, rng,
          {PostOp::batch_norm(scale, shift), PostOp::relu(), PostOp::requantize()}));
      net.layers.push_back(random_layer<T>(OpKind::Tconv2, 2 * c, c, rng, act, std::size_t{1}));
      net.layers.push_back(random_layer<T>(OpKind::Subm3, c, c, rng, act));
      break;
    }
    case NetworkPreset::Down3:
      net.layers.push_back(random_layer<T>(OpKind::Subm3, c, c, rng, act));
      net.layers.push_back(random_layer<T>(OpKind::Gconv3, c, 2 * c, rng, act));
      net.layers.push_back(random_layer<T>(OpKind::Subm3, 2 * c, 2 * c, rng, act));
      break;
  }
  validate_network(net);
  return net;
}

}  // namespace

AnyNetwork make_network(NetworkPreset preset, std::size_t channels, Dtype dtype, std::uint64_t seed) {
  if (channels == 0) throw Error(ErrorCode::ConfigInvalid, "channel count must be positive");
  if (dtype == Dtype::Int8) return build_preset<std::int8_t>(preset, channels, seed);
  return build_preset<float>(preset, channels, seed);
}

}  // namespace spocta
