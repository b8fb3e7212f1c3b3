#include "rapid/run_config.hpp"

#include "rapid/error.hpp"

#include <json.hpp>

#include <fstream>
#include <numbers>
#include <sstream>

namespace rapid {

using json = nlohmann::json;

namespace {

template <typename T>
void read(const json& section, const char* key, T& into) {
  if (section.contains(key)) into = section.at(key).get<T>();
}

void read_path(const json& section, const char* key, std::filesystem::path& into) {
  if (section.contains(key)) into = section.at(key).get<std::string>();
}

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  if (!doc.contains(name)) return empty;
  const json& s = doc.at(name);
  if (!s.is_object()) {
    throw Error(ErrorCode::InvalidArgument, std::string("config section '") + name +
                                                "' must be an object");
  }
  return s;
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "gelu") return Activation::Gelu;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + s + "'");
}

const char* name_of(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Gelu: return "gelu";
  }
  return "gelu";
}

}  // namespace

SensorGeometry RunConfig::sensor() const {
  constexpr double deg = std::numbers::pi / 180.0;
  return SensorGeometry::from_fov(beams, fov_up_deg * deg, fov_down_deg * deg, columns);
}

void RunConfig::validate() const {
  features.validate();
  if (!(fov_up_deg > fov_down_deg)) {
    throw Error(ErrorCode::InvalidArgument, "fov_up_deg must exceed fov_down_deg");
  }
  if (beams == 0 || columns == 0) {
    throw Error(ErrorCode::InvalidArgument, "beams and columns must be > 0");
  }
  if (!(voxel_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel_size must be > 0");
  if (latent == 0 || width == 0 || compressed == 0 || compressed > width || stages == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "embedding needs latent, width, stages >= 1 and 1 <= compressed <= width");
  }
  if (fusion_ratio == 0) throw Error(ErrorCode::InvalidArgument, "fusion ratio must be >= 1");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be an object");

    const json& in = section(doc, "input");
    read_path(in, "scan", c.scan);
    read_path(in, "labels", c.labels);
    read(in, "synthetic_seed", c.synthetic_seed);
    read(in, "noise_sigma", c.noise_sigma);

    const json& sensor = section(doc, "sensor");
    read(sensor, "beams", c.beams);
    read(sensor, "fov_up_deg", c.fov_up_deg);
    read(sensor, "fov_down_deg", c.fov_down_deg);
    read(sensor, "columns", c.columns);

    const json& feat = section(doc, "features");
    if (feat.contains("preset")) {
      const auto preset = feat.at("preset").get<std::string>();
      if (preset == "semantic-kitti") {
        c.features = RangeAwareConfig::semantic_kitti();
      } else if (preset == "nuscenes") {
        c.features = RangeAwareConfig::nuscenes();
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown feature preset '" + preset + "'");
      }
    }
    if (feat.contains("k")) {
      const auto k = feat.at("k").get<std::vector<std::uint32_t>>();
      if (k.size() != 3) throw Error(ErrorCode::InvalidArgument, "features.k needs 3 values");
      c.features.k_close = k[0];
      c.features.k_mid = k[1];
      c.features.k_far = k[2];
    }
    if (feat.contains("band_edges")) {
      const auto e = feat.at("band_edges").get<std::vector<double>>();
      if (e.size() != 2) {
        throw Error(ErrorCode::InvalidArgument, "features.band_edges needs 2 values");
      }
      c.features.close_mid_edge = e[0];
      c.features.mid_far_edge = e[1];
    }
    read(feat, "delta", c.features.delta);

    const json& emb = section(doc, "embedding");
    read(emb, "voxel_size", c.voxel_size);
    read(emb, "latent", c.latent);
    read(emb, "width", c.width);
    read(emb, "compressed", c.compressed);
    read(emb, "stages", c.stages);
    if (emb.contains("activation")) {
      c.activation = parse_activation(emb.at("activation").get<std::string>());
    }
    read_path(emb, "weights", c.weights);

    read(section(doc, "fusion"), "ratio", c.fusion_ratio);

    const json& loss = section(doc, "loss");
    read(loss, "alpha", c.alpha);
    read(loss, "lambda", c.lambda);
    if (loss.contains("similarity")) {
      const auto s = loss.at("similarity").get<std::string>();
      if (s == "cosine") c.similarity = Similarity::Cosine;
      else if (s == "dot") c.similarity = Similarity::Dot;
      else throw Error(ErrorCode::InvalidArgument, "unknown similarity '" + s + "'");
    }

    const json& run = section(doc, "run");
    read(run, "workers", c.workers);
    read(run, "seed", c.seed);

    read_path(section(doc, "output"), "dir", c.output_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  json doc;
  doc["input"] = {{"scan", c.scan.string()},
                  {"labels", c.labels.string()},
                  {"synthetic_seed", c.synthetic_seed},
                  {"noise_sigma", c.noise_sigma}};
  doc["sensor"] = {{"beams", c.beams},
                   {"fov_up_deg", c.fov_up_deg},
                   {"fov_down_deg", c.fov_down_deg},
                   {"columns", c.columns}};
  doc["features"] = {{"k", {c.features.k_close, c.features.k_mid, c.features.k_far}},
                     {"band_edges", {c.features.close_mid_edge, c.features.mid_far_edge}},
                     {"delta", c.features.delta}};
  doc["embedding"] = {{"voxel_size", c.voxel_size}, {"latent", c.latent},
                      {"width", c.width},           {"compressed", c.compressed},
                      {"stages", c.stages},         {"activation", name_of(c.activation)},
                      {"weights", c.weights.string()}};
  doc["fusion"] = {{"ratio", c.fusion_ratio}};
  doc["loss"] = {{"alpha", c.alpha},
                 {"lambda", c.lambda},
                 {"similarity", c.similarity == Similarity::Cosine ? "cosine" : "dot"}};
  doc["run"] = {{"workers", c.workers}, {"seed", c.seed}};
  doc["output"] = {{"dir", c.output_dir.string()}};
  return doc.dump(2);
}

}  // namespace rapid
