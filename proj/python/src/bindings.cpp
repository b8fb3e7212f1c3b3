#include "rapid/container.hpp"
#include "rapid/error.hpp"
#include "rapid/geometry.hpp"
#include "rapid/metrics.hpp"
#include "rapid/partition.hpp"
#include "rapid/rapid.hpp"
#include "rapid/scene_io.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <limits>
#include <optional>
#include <string>

namespace py = pybind11;
using namespace rapid;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

std::vector<Point3> to_points(const Array<double>& xyz) {
  if (xyz.ndim() != 2 || xyz.shape(1) != 3) {
    throw Error(ErrorCode::InvalidArgument, "points must have shape (n, 3)");
  }
  std::vector<Point3> out(std::size_t(xyz.shape(0)));
  const auto v = xyz.unchecked<2>();
  for (py::ssize_t i = 0; i < xyz.shape(0); ++i) out[std::size_t(i)] = Point3(v(i, 0), v(i, 1), v(i, 2));
  return out;
}

template <typename T>
std::vector<T> to_vector(const Array<T>& a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v, std::vector<py::ssize_t> shape) {
  py::array_t<T> out(shape);
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(T));
  return out;
}

PointCloud make_cloud(const Array<double>& points, const Array<double>& remission,
                      const std::optional<Array<std::uint32_t>>& ring,
                      const std::optional<Array<std::uint32_t>>& labels) {
  std::optional<std::vector<std::uint32_t>> r, l;
  if (ring) r = to_vector(*ring);
  if (labels) l = to_vector(*labels);
  return PointCloud(to_points(points), to_vector(remission), std::move(r), std::move(l));
}

RangeAwareConfig make_config(const std::string& preset, std::optional<std::vector<std::uint32_t>> k,
                             double delta) {
  RangeAwareConfig c;
  if (preset == "nuscenes") c = RangeAwareConfig::nuscenes();
  else if (preset != "semantic-kitti") throw Error(ErrorCode::InvalidArgument, "unknown preset " + preset);
  if (k) {
    if (k->size() != 3) throw Error(ErrorCode::InvalidArgument, "k needs three values");
    c.k_close = (*k)[0];
    c.k_mid = (*k)[1];
    c.k_far = (*k)[2];
  }
  c.delta = delta;
  c.validate();
  return c;
}

py::tuple cloud_tuple(const PointCloud& cloud) {
  std::vector<double> xyz;
  xyz.reserve(cloud.size() * 3);
  for (const Point3& p : cloud.points()) xyz.insert(xyz.end(), {p.x(), p.y(), p.z()});
  const auto r = cloud.remission();
  return py::make_tuple(to_array(xyz, {py::ssize_t(cloud.size()), 3}),
                        to_array(std::vector<double>(r.begin(), r.end()), {py::ssize_t(r.size())}));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Range-aware sorted distance-distribution features for LiDAR scans";

  static py::exception<Error> error(m, "RapidError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<RapidMatrix>(m, "RapidMatrix")
      .def_readonly("roi_id", &RapidMatrix::roi_id)
      .def_readonly("group", &RapidMatrix::group)
      .def_property_readonly("band", [](const RapidMatrix& x) { return std::string(to_string(x.band)); })
      .def_readonly("k", &RapidMatrix::k)
      .def_readonly("padded", &RapidMatrix::padded)
      .def_readonly("outliers", &RapidMatrix::outliers)
      .def_readonly("delta", &RapidMatrix::delta)
      .def_property_readonly("norm_range", [](const RapidMatrix& x) { return py::make_tuple(x.norm_min, x.norm_max); })
      .def_property_readonly("scale", [](const RapidMatrix& x) {
        py::dict d;
        d["r_min"] = x.scale.r_min;
        d["r_max"] = x.scale.r_max;
        d["d_min"] = x.scale.d_min;
        d["d_max"] = x.scale.d_max;
        return d;
      })
      .def_property_readonly("anchors", [](const RapidMatrix& x) {
        return to_array(x.anchors, {py::ssize_t(x.rows())});
      })
      .def_property_readonly("values", [](const RapidMatrix& x) {
        return to_array(x.values, {py::ssize_t(x.rows()), py::ssize_t(x.k)});
      })
      .def_property_readonly("raw", [](const RapidMatrix& x) {
        return to_array(x.raw, {py::ssize_t(x.rows()), py::ssize_t(x.k)});
      })
      .def("__repr__", [](const RapidMatrix& x) {
        return "<RapidMatrix roi " + std::to_string(x.roi_id) + " " + std::to_string(x.rows()) +
               "x" + std::to_string(x.k) + (x.padded ? " padded>" : ">");
      });

  m.def(
      "rapid_matrix",
      [](const Array<double>& points, const Array<double>& remission, std::size_t k, double delta,
         std::optional<Array<std::uint32_t>> subset) {
        const PointCloud cloud = make_cloud(points, remission, std::nullopt, std::nullopt);
        std::vector<PointIndex> ids;
        if (subset) ids = to_vector(*subset);
        else {
          ids.resize(cloud.size());
          for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = PointIndex(i);
        }
        py::gil_scoped_release release;
        return rapid::rapid(ids, cloud, k, delta);
      },
      py::arg("points"), py::arg("remission"), py::arg("k"),
      py::arg("delta") = std::numeric_limits<double>::infinity(), py::arg("subset") = py::none(),
      "Sorted, normalized u x k distance matrix of one region.");

  m.def(
      "extract",
      [](const Array<double>& points, const Array<double>& remission,
         std::optional<Array<std::uint32_t>> ring, std::optional<Array<std::uint32_t>> labels,
         const std::string& mode, const std::string& preset,
         std::optional<std::vector<std::uint32_t>> k, double delta, std::uint32_t beams,
         double fov_up_deg, double fov_down_deg, std::uint32_t columns, std::size_t workers) {
        const PointCloud cloud = make_cloud(points, remission, ring, labels);
        const RangeAwareConfig config = make_config(preset, std::move(k), delta);
        const double rad = 3.14159265358979323846 / 180.0;
        const SensorGeometry sensor =
            SensorGeometry::from_fov(beams, fov_up_deg * rad, fov_down_deg * rad, columns);
        FeatureExtraction fx;
        {
          py::gil_scoped_release release;
          if (mode == "ring") fx = r_rapid(cloud, sensor, config, {workers, nullptr});
          else if (mode == "class") fx = c_rapid(cloud, config, {workers, nullptr});
          else throw Error(ErrorCode::InvalidArgument, "mode must be 'ring' or 'class'");
        }
        const auto& pw = fx.pointwise;
        py::dict out;
        out["matrices"] = fx.matrices;
        out["features"] = to_array(pw.values, {py::ssize_t(pw.size()), py::ssize_t(pw.width)});
        out["roi_of"] = to_array(pw.roi_of, {py::ssize_t(pw.size())});
        out["valid_width"] = to_array(pw.valid_width, {py::ssize_t(pw.size())});
        return out;
      },
      py::arg("points"), py::arg("remission"), py::arg("ring") = py::none(),
      py::arg("labels") = py::none(), py::arg("mode") = "ring", py::arg("preset") = "semantic-kitti",
      py::arg("k") = py::none(), py::arg("delta") = 2.0, py::arg("beams") = 64,
      py::arg("fov_up_deg") = 3.0, py::arg("fov_down_deg") = -25.0, py::arg("columns") = 2048,
      py::arg("workers") = 1,
      "Per-region matrices and per-point rows padded with 1.0 to the widest k.");

  m.def(
      "knn",
      [](const Array<double>& points, std::size_t k, std::optional<Array<double>> channel,
         bool brute) {
        const std::vector<Point3> pts = to_points(points);
        std::vector<double> ch;
        if (channel) ch = to_vector(*channel);
        const DistanceMetric metric = channel ? DistanceMetric(pts, ch) : DistanceMetric(pts);
        std::vector<PointIndex> ids(pts.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = PointIndex(i);
        std::vector<NeighborList> lists;
        {
          py::gil_scoped_release release;
          lists = brute ? knn_brute(ids, metric, k) : knn_indexed(ids, metric, k);
        }
        std::vector<PointIndex> n;
        std::vector<double> d;
        for (const NeighborList& l : lists) {
          n.insert(n.end(), l.neighbors.begin(), l.neighbors.end());
          d.insert(d.end(), l.distances.begin(), l.distances.end());
        }
        const std::vector<py::ssize_t> shape{py::ssize_t(lists.size()), py::ssize_t(k)};
        return py::make_tuple(to_array(n, shape), to_array(d, shape));
      },
      py::arg("points"), py::arg("k"), py::arg("channel") = py::none(), py::arg("brute") = false,
      "Exact k nearest neighbors, ties broken by index. Returns (indices, distances).");

  m.def(
      "load_kitti_scan", [](const std::filesystem::path& p) { return cloud_tuple(load_kitti_scan(p)); },
      py::arg("path"), "Returns (points (n, 3), remission (n,)).");
  m.def(
      "synthetic_scene",
      [](std::uint64_t seed, std::uint32_t beams, std::uint32_t columns, double noise) {
        const double rad = 3.14159265358979323846 / 180.0;
        const PointCloud cloud = synthesize_scene(
            street_scene(seed, SensorGeometry::from_fov(beams, 3.0 * rad, -25.0 * rad, columns), noise));
        py::tuple t = cloud_tuple(cloud);
        const auto labels = cloud.labels();
        return py::make_tuple(t[0], t[1],
                              to_array(std::vector<Label>(labels.begin(), labels.end()),
                                       {py::ssize_t(labels.size())}));
      },
      py::arg("seed") = 0, py::arg("beams") = 64, py::arg("columns") = 2048,
      py::arg("noise") = 0.02, "Labeled synthetic street scan: (points, remission, labels).");

  m.def(
      "save_features",
      [](const std::vector<RapidMatrix>& matrices, const std::filesystem::path& p) {
        save_features(matrices, p);
      },
      py::arg("matrices"), py::arg("path"));
  m.def("load_features", [](const std::filesystem::path& p) { return load_features(p); },
        py::arg("path"));

  m.def(
      "iou",
      [](const Array<std::uint32_t>& truth, const Array<std::uint32_t>& pred, std::size_t classes,
         std::vector<Label> ignore) {
        ConfusionMatrix cm(classes, std::move(ignore));
        cm.accumulate(to_vector(truth), to_vector(pred));
        std::vector<std::optional<double>> per_class(classes);
        for (Label c = 0; c < classes; ++c) per_class[c] = iou(cm, c);
        return py::make_tuple(per_class, miou(cm));
      },
      py::arg("truth"), py::arg("pred"), py::arg("classes"), py::arg("ignore") = std::vector<Label>{},
      "Per-class IoU (None where undefined) and the mean over defined classes.");
}
