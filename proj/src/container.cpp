#include "rapid/container.hpp"

#include "byte_order.hpp"
#include "rapid/error.hpp"
#include "rapid/scene_io.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace rapid {

using detail::append_le;
using detail::read_le;
using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'R', 'A', 'P', 'D'};

std::vector<std::byte> wrap(const json& header, const std::vector<std::byte>& payload) {
  const std::string text = header.dump();
  std::vector<std::byte> out;
  out.reserve(12 + text.size() + payload.size());
  for (char c : kMagic) out.push_back(std::byte(c));
  append_le(out, kContainerVersion);
  append_le(out, std::uint32_t(text.size()));
  for (char c : text) out.push_back(std::byte(c));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct Unwrapped {
  json header;
  std::span<const std::byte> payload;
};

Unwrapped unwrap(std::span<const std::byte> bytes, const char* kind) {
  if (bytes.size() < 12) throw Error(ErrorCode::Format, "container shorter than its preamble");
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != std::byte(kMagic[i])) throw Error(ErrorCode::Format, "bad magic bytes");
  }
  const auto version = read_le<std::uint32_t>(bytes, 4);
  if (version != kContainerVersion) {
    throw Error(ErrorCode::Format, "unsupported container version " + std::to_string(version));
  }
  const auto header_len = read_le<std::uint32_t>(bytes, 8);
  if (bytes.size() - 12 < header_len) throw Error(ErrorCode::Format, "truncated header");
  Unwrapped u;
  try {
    const auto* first = reinterpret_cast<const char*>(bytes.data() + 12);
    u.header = json::parse(first, first + header_len);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("header is not valid JSON: ") + e.what());
  }
  if (u.header.value("kind", "") != kind) {
    throw Error(ErrorCode::Format, std::string("container does not hold ") + kind);
  }
  u.payload = bytes.subspan(12 + header_len);
  if (u.payload.size() != u.header.value("payload_bytes", std::size_t{0})) {
    throw Error(ErrorCode::Format, "payload size disagrees with header (truncated file?)");
  }
  return u;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double null_as_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

void check_range(std::size_t offset, std::size_t bytes, std::size_t available) {
  if (offset > available || bytes > available - offset) {
    throw Error(ErrorCode::Format, "record extends past the payload");
  }
}

}  // namespace

std::vector<std::byte> encode_features(std::span<const RapidMatrix> matrices) {
  json records = json::array();
  std::vector<std::byte> payload;
  std::size_t point_count = 0;
  for (const RapidMatrix& m : matrices) {
    if (m.values.size() != m.rows() * m.k) {
      throw Error(ErrorCode::Contract, "matrix value count does not match rows x k");
    }
    json r;
    r["roi_id"] = m.roi_id;
    r["group"] = m.group;
    r["band"] = to_string(m.band);
    r["k"] = m.k;
    r["rows"] = m.rows();
    r["padded"] = m.padded;
    r["delta"] = finite_or_null(m.delta);
    r["norm_min"] = m.norm_min;
    r["norm_max"] = m.norm_max;
    r["outliers"] = m.outliers;
    r["scale"] = {{"r_min", m.scale.r_min},
                  {"r_max", m.scale.r_max},
                  {"d_min", m.scale.d_min},
                  {"d_max", m.scale.d_max}};
    r["offset"] = payload.size();
    for (PointIndex a : m.anchors) append_le(payload, std::uint32_t(a));
    for (double v : m.values) append_le(payload, float(v));
    records.push_back(std::move(r));
    point_count += m.rows();
  }
  json header = {{"kind", "features"},
                 {"point_count", point_count},
                 {"records", std::move(records)},
                 {"payload_bytes", payload.size()}};
  return wrap(header, payload);
}

std::vector<RapidMatrix> decode_features(std::span<const std::byte> bytes) {
  const Unwrapped u = unwrap(bytes, "features");
  std::vector<RapidMatrix> out;
  try {
    for (const json& r : u.header.at("records")) {
      RapidMatrix m;
      m.roi_id = r.at("roi_id").get<std::int64_t>();
      m.group = r.at("group").get<std::int64_t>();
      const std::string band = r.at("band").get<std::string>();
      if (band == "close") m.band = RangeBand::Close;
      else if (band == "mid") m.band = RangeBand::Mid;
      else if (band == "far") m.band = RangeBand::Far;
      else throw Error(ErrorCode::Format, "unknown band " + band);
      m.k = r.at("k").get<std::uint32_t>();
      m.padded = r.at("padded").get<bool>();
      m.delta = null_as_inf(r.at("delta"));
      m.norm_min = r.at("norm_min").get<double>();
      m.norm_max = r.at("norm_max").get<double>();
      m.outliers = r.at("outliers").get<std::uint32_t>();
      const json& s = r.at("scale");
      m.scale = {s.at("r_min").get<double>(), s.at("r_max").get<double>(),
                 s.at("d_min").get<double>(), s.at("d_max").get<double>()};
      const auto rows = r.at("rows").get<std::size_t>();
      const auto offset = r.at("offset").get<std::size_t>();
      check_range(offset, rows * 4 * (1 + std::size_t(m.k)), u.payload.size());
      m.anchors.resize(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        m.anchors[i] = read_le<std::uint32_t>(u.payload, offset + 4 * i);
      }
      const std::size_t values_at = offset + 4 * rows;
      m.values.resize(rows * m.k);
      for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values[i] = read_le<float>(u.payload, values_at + 4 * i);
      }
      out.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed feature header: ") + e.what());
  }
  return out;
}

void save_features(std::span<const RapidMatrix> matrices, const std::filesystem::path& path) {
  write_file(path, encode_features(matrices));
}

std::vector<RapidMatrix> load_features(const std::filesystem::path& path) {
  return decode_features(read_file(path));
}

std::vector<std::byte> encode_tensors(const TensorMap& tensors) {
  json records = json::array();
  std::vector<std::byte> payload;
  for (const auto& [name, t] : tensors) {
    std::size_t count = 1;
    for (std::size_t d : t.shape) count *= d;
    if (count != t.data.size()) {
      throw Error(ErrorCode::Contract, "tensor " + name + " shape does not match its data");
    }
    records.push_back({{"name", name}, {"shape", t.shape}, {"offset", payload.size()}});
    for (double v : t.data) append_le(payload, float(v));
  }
  json header = {{"kind", "weights"}, {"records", std::move(records)},
                 {"payload_bytes", payload.size()}};
  return wrap(header, payload);
}

TensorMap decode_tensors(std::span<const std::byte> bytes) {
  const Unwrapped u = unwrap(bytes, "weights");
  TensorMap out;
  try {
    for (const json& r : u.header.at("records")) {
      NamedTensor t;
      t.shape = r.at("shape").get<std::vector<std::size_t>>();
      std::size_t count = 1;
      for (std::size_t d : t.shape) count *= d;
      const auto offset = r.at("offset").get<std::size_t>();
      check_range(offset, 4 * count, u.payload.size());
      t.data.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.data[i] = read_le<float>(u.payload, offset + 4 * i);
      }
      out.emplace(r.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed weight header: ") + e.what());
  }
  return out;
}

void save_tensors(const TensorMap& tensors, const std::filesystem::path& path) {
  write_file(path, encode_tensors(tensors));
}

TensorMap load_tensors(const std::filesystem::path& path) {
  return decode_tensors(read_file(path));
}

}  // namespace rapid
