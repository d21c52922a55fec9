#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "earscan/denoise_pol.hpp"
#include "earscan/error.hpp"
#include "earscan/geometry.hpp"
#include "earscan/io.hpp"
#include "earscan/loss_eval.hpp"
#include "earscan/mesh_bvh.hpp"
#include "earscan/metrics.hpp"
#include "earscan/noise_synth.hpp"
#include "earscan/occlusion.hpp"
#include "earscan/parallel.hpp"
#include "earscan/spectral.hpp"
#include "earscan/version.hpp"

namespace py = pybind11;
using namespace earscan;

namespace {

using RowsX3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FacesX3 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Vec3> to_points(const Eigen::Ref<const RowsX3>& m) {
    std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
    return out;
}

RowsX3 from_points(const std::vector<Vec3>& pts) {
    RowsX3 m(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    return m;
}

PointCloud make_cloud(const Eigen::Ref<const RowsX3>& positions, std::optional<RowsX3> normals,
                      std::optional<std::vector<double>> ao) {
    PointCloud c;
    c.positions = to_points(positions);
    if (normals) c.normals = to_points(*normals);
    c.ao = std::move(ao);
    validate(c);
    return c;
}

TriangleMesh make_mesh(const Eigen::Ref<const RowsX3>& vertices, const Eigen::Ref<const FacesX3>& faces,
                       std::optional<RowsX3> normals, std::optional<std::vector<double>> ao) {
    TriangleMesh m;
    m.vertices = to_points(vertices);
    for (Eigen::Index i = 0; i < faces.rows(); ++i) {
        Face f{};
        for (int k = 0; k < 3; ++k) {
            const auto v = faces(i, k);
            if (v < 0 || v > std::numeric_limits<std::uint32_t>::max())
                throw Error(ErrorKind::Index, "face index out of range");
            f[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(v);
        }
        m.faces.push_back(f);
    }
    if (normals) m.vertex_normals = to_points(*normals);
    m.vertex_ao = std::move(ao);
    validate(m);
    return m;
}

py::dict report_dict(const MetricReport& r) {
    py::dict d;
    d["acc"] = r.acc;
    d["cmp"] = r.cmp;
    d["avg"] = r.avg;
    d["max"] = r.max;
    d["cd"] = r.cd;
    d["hd"] = r.hd;
    d["md"] = r.md;
    d["n_power"] = r.n_power;
    if (r.per_point_d) d["per_point_d"] = *r.per_point_d;
    if (r.per_point_weighted_d) d["per_point_weighted_d"] = *r.per_point_weighted_d;
    return d;
}

DtfSet make_dtf(std::vector<double> freqs, const Eigen::MatrixXd& mags) {
    DtfSet d;
    d.frequencies = std::move(freqs);
    d.magnitudes_db = mags;
    d.directions.assign(static_cast<std::size_t>(mags.rows()), {0.0, 0.0});
    validate(d);
    return d;
}

}  // namespace

PYBIND11_MODULE(_earscan, m) {
    m.doc() = "Ear point-cloud geometry: metrics, ambient occlusion, synthetic scan error, POL denoising";
    m.attr("__version__") = kVersion;

    static PyObject* error_type = PyErr_NewException("earscan.EarscanError", PyExc_RuntimeError, nullptr);
    m.attr("EarscanError") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error_type)(std::string(to_string(e.kind())) + ": " + e.what());
            exc.attr("kind") = to_string(e.kind());
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    m.def("set_thread_count", &set_thread_count, py::arg("threads"));

    py::class_<PointCloud>(m, "PointCloud")
        .def(py::init(&make_cloud), py::arg("positions"), py::arg("normals") = py::none(),
             py::arg("ao") = py::none())
        .def("__len__", &PointCloud::size)
        .def_property_readonly("positions", [](const PointCloud& c) { return from_points(c.positions); })
        .def_property_readonly("normals",
                               [](const PointCloud& c) -> std::optional<RowsX3> {
                                   if (!c.normals) return std::nullopt;
                                   return from_points(*c.normals);
                               })
        .def_readonly("ao", &PointCloud::ao)
        .def("subset", &PointCloud::subset, py::arg("indices"));

    py::class_<TriangleMesh>(m, "TriangleMesh")
        .def(py::init(&make_mesh), py::arg("vertices"), py::arg("faces"), py::arg("normals") = py::none(),
             py::arg("ao") = py::none())
        .def_property_readonly("vertices", [](const TriangleMesh& t) { return from_points(t.vertices); })
        .def_property_readonly("faces",
                               [](const TriangleMesh& t) {
                                   FacesX3 f(static_cast<Eigen::Index>(t.faces.size()), 3);
                                   for (std::size_t i = 0; i < t.faces.size(); ++i)
                                       for (int k = 0; k < 3; ++k)
                                           f(static_cast<Eigen::Index>(i), k) = t.faces[i][static_cast<std::size_t>(k)];
                                   return f;
                               })
        .def_readonly("ao", &TriangleMesh::vertex_ao)
        .def("with_ao", [](TriangleMesh t, std::vector<double> ao) {
            t.vertex_ao = std::move(ao);
            validate(t);
            return t;
        })
        .def("vertex_cloud", [](TriangleMesh t) {
            if (!t.vertex_normals) t.vertex_normals = t.compute_vertex_normals();
            return t.vertex_cloud();
        });

    py::class_<MeshBVH>(m, "MeshBVH")
        .def(py::init<const TriangleMesh&>(), py::arg("mesh"))
        .def_property_readonly("epsilon", &MeshBVH::epsilon)
        .def("closest_point",
             [](const MeshBVH& b, const Vec3& q) {
                 const auto c = b.closest_point(q);
                 return py::make_tuple(c.distance, c.face, c.point);
             })
        .def("first_hit", [](const MeshBVH& b, const Vec3& o, const Vec3& d) -> py::object {
            const auto h = b.first_hit(o, d);
            if (!h) return py::none();
            return py::make_tuple(h->t, h->face);
        });

    m.def("load_point_cloud", &load_point_cloud, py::arg("path"));
    m.def("load_mesh", &load_mesh, py::arg("path"));
    m.def("save_point_cloud", &save_point_cloud, py::arg("path"), py::arg("cloud"));
    m.def("save_mesh", &save_mesh, py::arg("path"), py::arg("mesh"));

    m.def("mirror_cloud", &mirror_cloud, py::arg("cloud"));
    m.def("extract_ear_disc", &extract_ear_disc, py::arg("mesh"), py::arg("center"), py::arg("radius"));
    m.def("select_near_mesh", &select_near_mesh, py::arg("cloud"), py::arg("bvh"), py::arg("threshold"));

    m.def(
        "compute_ao",
        [](TriangleMesh mesh, int rays, std::uint64_t seed, const std::string& sampling) {
            if (!mesh.vertex_normals) mesh.vertex_normals = mesh.compute_vertex_normals();
            AoConfig cfg;
            cfg.ray_count = rays;
            cfg.seed = seed;
            cfg.hemisphere = parse_hemisphere_sampling(sampling);
            const MeshBVH bvh(mesh);
            return compute_ao(mesh, bvh, cfg);
        },
        py::arg("mesh"), py::arg("rays") = 256, py::arg("seed") = 0, py::arg("sampling") = "stratified");
    m.def("transfer_ao", &transfer_ao, py::arg("cloud"), py::arg("mesh"));
    m.def("occlusion_weight", &occlusion_weight, py::arg("ao"), py::arg("n"));
    m.def("normalized_weights", &normalized_weights, py::arg("cloud"), py::arg("n"));

    m.def("chamfer", &chamfer, py::arg("x"), py::arg("y"));
    m.def("hausdorff", &hausdorff, py::arg("x"), py::arg("y"));
    m.def("mesh_distance", &mesh_distance, py::arg("cloud"), py::arg("bvh"));
    m.def("completeness", &completeness, py::arg("reference"), py::arg("scan"), py::arg("threshold") = 1.0);
    m.def("percentile", [](std::vector<double> v, double p) { return percentile(v, p); }, py::arg("values"),
          py::arg("p"));
    m.def("pearson", [](std::vector<double> a, std::vector<double> b) { return pearson(a, b); }, py::arg("a"),
          py::arg("b"));
    m.def("noise_reduction", &noise_reduction, py::arg("before"), py::arg("after"));
    m.def(
        "metric_report",
        [](const PointCloud& scan, const PointCloud& ref, const MeshBVH& bvh, int n, double threshold,
           bool per_point) {
            MetricOptions opt;
            opt.cmp_threshold = threshold;
            opt.keep_per_point = per_point;
            return report_dict(metric_report(scan, ref, bvh, n, opt));
        },
        py::arg("scan"), py::arg("reference"), py::arg("bvh"), py::arg("n") = 0, py::arg("threshold") = 1.0,
        py::arg("per_point") = false);

    m.def("sample_student_t", &sample_student_t, py::arg("nu"), py::arg("mu"), py::arg("sigma"), py::arg("count"),
          py::arg("seed"));
    m.def("clamp_scale", [](std::vector<double> t, double max_med) { return clamp_scale(t, max_med); },
          py::arg("t"), py::arg("max_med"));
    m.def("cmp_schedule", [](double sigma) { return cmp_schedule(sigma, NoiseParams{}); }, py::arg("sigma"));
    m.def("occlusion_subsample", &occlusion_subsample, py::arg("cloud"), py::arg("keep_fraction"),
          py::arg("ao_power") = 3, py::arg("seed") = 0);
    m.def(
        "synthesize_scan",
        [](const PointCloud& cloud, double sigma, std::uint64_t seed) {
            NoiseParams p;
            p.sigma = sigma;
            p.seed = seed;
            const auto s = synthesize_scan(cloud, p);
            py::dict d;
            d["cloud"] = s.cloud;
            d["kept"] = s.kept;
            d["displacement"] = s.displacement;
            d["diagonal"] = s.diagonal;
            d["cmp_target"] = s.cmp_target;
            return d;
        },
        py::arg("cloud"), py::arg("sigma") = 0.002, py::arg("seed") = 0);

    m.def(
        "denoise_pol",
        [](const PointCloud& cloud, double radius, int iterations, int min_neighbors) {
            PolConfig cfg;
            cfg.radius = radius;
            cfg.iterations = iterations;
            cfg.min_neighbors = min_neighbors;
            auto r = denoise_pol(cloud, cfg);
            return py::make_tuple(std::move(r.cloud), std::move(r.pass_through));
        },
        py::arg("cloud"), py::arg("radius") = 3.0, py::arg("iterations") = 1, py::arg("min_neighbors") = 6);

    m.def("loss_total", &loss_total, py::arg("ls_hat"), py::arg("lr"), py::arg("alpha") = 0.99);
    m.def(
        "loss_terms",
        [](const Vec3& denoised, const PointCloud& patch, double ao_weight) {
            const auto t = loss_terms(denoised, patch, ao_weight);
            return py::make_tuple(t.ls_hat, t.lr);
        },
        py::arg("denoised"), py::arg("patch"), py::arg("ao_weight") = 1.0);

    m.def("erb_centers", &erb_centers, py::arg("fmin") = 700.0, py::arg("fmax") = 18000.0);
    m.def(
        "issd",
        [](std::vector<double> freqs, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double fmin, double fmax) {
            const auto da = make_dtf(freqs, a);
            const auto db = make_dtf(freqs, b);
            return issd(da, db, gammatone_weights(erb_centers(fmin, fmax), da.frequencies));
        },
        py::arg("frequencies"), py::arg("a"), py::arg("b"), py::arg("fmin") = 700.0, py::arg("fmax") = 18000.0);
}
