#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taste/error.hpp"
#include "taste/fusion.hpp"

namespace taste {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "taste-ckpt-v1";

}  // namespace

std::string checkpoint_to_json(const FusionModel& model, std::uint64_t seed) {
  json doc;
  doc["format"] = kFormat;
  const ModelDims& d = model.dims();
  doc["dims"] = {{"content", d.content},
                 {"context", d.context},
                 {"hidden", d.hidden},
                 {"mlp_hidden", d.mlp_hidden}};
  doc["fusion"] = to_string(model.mode());
  json params = json::object();
  for (const auto& t : tensors(model.params(), model.mode())) {
    json values = json::array();
    const auto m = t.map();
    for (Eigen::Index r = 0; r < t.rows; ++r) {
      for (Eigen::Index c = 0; c < t.cols; ++c) values.push_back(m(r, c));
    }
    params[std::string(t.name)] = std::move(values);
  }
  doc["params"] = std::move(params);
  doc["seed"] = seed;
  return doc.dump();
}

Checkpoint checkpoint_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw ValidationError("unsupported checkpoint format '" + doc.at("format").get<std::string>() + "'");
    }
    const auto mode = parse_fusion_mode(doc.at("fusion").get<std::string>());
    if (!mode) throw ValidationError("unknown fusion mode in checkpoint");
    ModelDims dims;
    const json& jd = doc.at("dims");
    dims.content = jd.at("content").get<Eigen::Index>();
    dims.context = jd.at("context").get<Eigen::Index>();
    dims.hidden = jd.at("hidden").get<Eigen::Index>();
    dims.mlp_hidden = jd.at("mlp_hidden").get<Eigen::Index>();
    if (dims.content <= 0 || dims.context < 0 || dims.hidden < 0 || dims.mlp_hidden <= 0) {
      throw ShapeError("checkpoint dimensions must be non-negative");
    }

    FusionParams params = zero_params(*mode, dims);
    const json& jp = doc.at("params");
    for (auto& t : tensors(params, *mode)) {
      const std::string name(t.name);
      auto it = jp.find(name);
      if (it == jp.end()) throw ShapeError("checkpoint is missing tensor '" + name + "'");
      if (!it->is_array() || static_cast<Eigen::Index>(it->size()) != t.size()) {
        throw ShapeError("tensor '" + name + "' should hold " + std::to_string(t.size()) + " values");
      }
      auto m = t.map();
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < t.rows; ++r) {
        for (Eigen::Index c = 0; c < t.cols; ++c) m(r, c) = (*it)[i++].get<double>();
      }
    }
    if (jp.size() != tensors(params, *mode).size()) throw ShapeError("checkpoint has unexpected tensors");
    return Checkpoint{FusionModel(*mode, dims, std::move(params)), doc.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const FusionModel& model, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_json(model, seed) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace taste
