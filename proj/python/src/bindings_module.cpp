// Python bindings for the core operations: volumes and NIfTI I/O, atlas
// statistics, deterministic tracking, connectivity matrices and tractographic
// features, the lesion feature families, feature selection, the linear SVM and
// the segmentation-side kernels.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tractosurv/atlas.hpp"
#include "tractosurv/connectome.hpp"
#include "tractosurv/feature_pipeline.hpp"
#include "tractosurv/lesion_features.hpp"
#include "tractosurv/nifti.hpp"
#include "tractosurv/pipeline.hpp"
#include "tractosurv/seg_numerics.hpp"
#include "tractosurv/survival_cv.hpp"
#include "tractosurv/tracking.hpp"
#include "tractosurv/volume.hpp"

namespace py = pybind11;
using namespace tractosurv;

namespace {

Affine affine_from_rows(const std::vector<double>& m) {
    if (m.size() != 16) throw Error(ErrorKind::data, "affine needs 16 values, row-major");
    std::array<double, 16> a{};
    std::copy(m.begin(), m.end(), a.begin());
    return Affine(a);
}

std::vector<double> affine_rows(const Affine& a) {
    return {a.data().begin(), a.data().end()};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "tumor tractographic features and survival classification";

    py::register_exception<Error>(m, "TractosurvError");

    py::enum_<VolumeKind>(m, "VolumeKind")
        .value("scalar", VolumeKind::scalar)
        .value("label", VolumeKind::label)
        .value("mask", VolumeKind::mask);

    py::class_<Affine>(m, "Affine")
        .def(py::init(&affine_from_rows), py::arg("values"))
        .def_static("identity", &Affine::identity)
        .def_static("scaling", &Affine::scaling)
        .def_static("translation", &Affine::translation)
        .def("inverse", &Affine::inverse)
        .def("compose", &Affine::compose)
        .def("apply",
             [](const Affine& a, double x, double y, double z) {
                 const Vec3 p = a.apply({x, y, z});
                 return py::make_tuple(p.x, p.y, p.z);
             })
        .def_property_readonly("values", &affine_rows);

    py::class_<Volume>(m, "Volume")
        .def(py::init([](std::array<int, 3> dims, std::array<double, 3> spacing,
                         const Affine& affine, VolumeKind kind, std::vector<double> data) {
                 return Volume(dims, spacing, affine, kind, std::move(data));
             }),
             py::arg("dims"), py::arg("spacing"), py::arg("affine"), py::arg("kind"),
             py::arg("data"))
        .def_static("zeros", &Volume::zeros)
        .def_property_readonly("dims", &Volume::dims)
        .def_property_readonly("spacing", &Volume::spacing)
        .def_property_readonly("affine", &Volume::affine)
        .def_property_readonly("kind", &Volume::kind)
        .def_property_readonly("data", [](const Volume& v) { return v.data(); })
        .def("at", [](const Volume& v, int x, int y, int z) { return v.at(x, y, z); })
        .def("set", [](Volume& v, int x, int y, int z, double value) { v.at(x, y, z) = value; });

    m.def("load_nifti", &load_nifti, py::arg("path"), py::arg("kind"));
    m.def("save_nifti", &save_nifti, py::arg("volume"), py::arg("path"));

    py::enum_<ResampleMode>(m, "ResampleMode")
        .value("nearest", ResampleMode::nearest)
        .value("trilinear", ResampleMode::trilinear);

    m.def(
        "resample",
        [](const Volume& src, std::array<int, 3> dims, std::array<double, 3> spacing,
           const Affine& affine, const Affine& transform, ResampleMode mode) {
            return resample(src, GridSpec{dims, spacing, affine}, transform, mode);
        },
        py::arg("src"), py::arg("target_dims"), py::arg("target_spacing"),
        py::arg("target_affine"), py::arg("transform"), py::arg("mode"));
    m.def("zscore_within_mask", &zscore_within_mask, py::arg("volume"), py::arg("brain_mask"));
    m.def("mask_union", &mask_union);

    py::class_<ParcellationAtlas>(m, "ParcellationAtlas")
        .def(py::init([](Volume labels, int n_regions, std::vector<std::string> names) {
                 ParcellationAtlas a{std::move(labels), n_regions, std::move(names)};
                 a.validate();
                 return a;
             }),
             py::arg("labels"), py::arg("n_regions"), py::arg("names"))
        .def_readonly("labels", &ParcellationAtlas::labels)
        .def_readonly("n_regions", &ParcellationAtlas::n_regions)
        .def_readonly("names", &ParcellationAtlas::names);

    m.def("load_atlas", &load_atlas, py::arg("labels_path"), py::arg("sidecar_path"));
    m.def("region_volumes", &region_volumes);
    m.def(
        "lesion_region_distribution",
        [](const std::vector<std::pair<std::string, Volume>>& lesions,
           const ParcellationAtlas& atlas) {
            std::vector<std::pair<std::string, const Volume*>> refs;
            refs.reserve(lesions.size());
            for (const auto& [name, vol] : lesions) refs.emplace_back(name, &vol);
            const auto d = lesion_region_distribution(refs, atlas);
            py::dict out;
            for (size_t i = 0; i < d.lesion_names.size(); ++i)
                out[py::str(d.lesion_names[i])] = d.ratios[i];
            return out;
        },
        py::arg("lesions"), py::arg("atlas"));
    m.def("onehot_channels", &onehot_channels);

    py::class_<TrackingParams>(m, "TrackingParams")
        .def(py::init<>())
        .def_readwrite("target_tracts", &TrackingParams::target_tracts)
        .def_readwrite("step_mm", &TrackingParams::step_mm)
        .def_readwrite("angle_max_deg", &TrackingParams::angle_max_deg)
        .def_readwrite("qa_threshold", &TrackingParams::qa_threshold)
        .def_readwrite("min_length_mm", &TrackingParams::min_length_mm)
        .def_readwrite("max_length_mm", &TrackingParams::max_length_mm)
        .def_readwrite("rng_seed", &TrackingParams::rng_seed);

    py::class_<PeakField>(m, "PeakField")
        .def(py::init([](std::array<int, 3> dims, std::array<double, 3> spacing,
                         const Affine& affine, int k_peaks, std::vector<float> dirs,
                         std::vector<float> qa) {
                 return PeakField(dims, spacing, affine, k_peaks, std::move(dirs), std::move(qa));
             }),
             py::arg("dims"), py::arg("spacing"), py::arg("affine"), py::arg("k_peaks"),
             py::arg("dirs"), py::arg("qa"))
        .def_property_readonly("dims", &PeakField::dims)
        .def_property_readonly("k_peaks", &PeakField::k_peaks);

    m.def("load_peak_field", &load_peak_field, py::arg("nii_path"), py::arg("sidecar_path"));
    m.def("save_peak_field", &save_peak_field, py::arg("field"), py::arg("nii_path"),
          py::arg("sidecar_path"));

    py::class_<Streamline>(m, "Streamline")
        .def_property_readonly("points",
                               [](const Streamline& s) {
                                   std::vector<std::array<double, 3>> pts;
                                   pts.reserve(s.points.size());
                                   for (const auto& p : s.points) pts.push_back({p.x, p.y, p.z});
                                   return pts;
                               })
        .def_readonly("seed_index", &Streamline::seed_index);

    m.def(
        "seed_points",
        [](const Volume& mask, const TrackingParams& params) {
            std::vector<std::array<double, 3>> out;
            for (const auto& p : seed_points(mask, params)) out.push_back({p.x, p.y, p.z});
            return out;
        },
        py::arg("mask"), py::arg("params"));
    m.def(
        "track_all",
        [](const Volume& mask, const PeakField& field, const TrackingParams& params, int workers) {
            py::gil_scoped_release release;
            return track_all(mask, field, params, workers);
        },
        py::arg("mask"), py::arg("field"), py::arg("params"), py::arg("workers") = 1);
    m.def("save_streamlines", &save_streamlines, py::arg("tracts"), py::arg("path"));
    m.def("load_streamlines", &load_streamlines, py::arg("path"));

    py::enum_<MatrixKind>(m, "MatrixKind")
        .value("pass_type", MatrixKind::pass)
        .value("end_type", MatrixKind::end);
    py::enum_<MatrixVariant>(m, "MatrixVariant")
        .value("original", MatrixVariant::original)
        .value("normalized", MatrixVariant::normalized)
        .value("binarized", MatrixVariant::binarized);

    py::class_<ConnectivityMatrix>(m, "ConnectivityMatrix")
        .def_readonly("n", &ConnectivityMatrix::n)
        .def_readonly("kind", &ConnectivityMatrix::kind)
        .def_readonly("variant", &ConnectivityMatrix::variant)
        .def_readonly("w", &ConnectivityMatrix::w)
        .def("max_value", &ConnectivityMatrix::max_value);

    m.def("build_matrix", &build_matrix, py::arg("streamlines"), py::arg("atlas"), py::arg("kind"),
          py::arg("workers") = 1);
    m.def("normalize_matrix", &normalize, py::arg("matrix"));
    m.def("binarize_matrix", &binarize, py::arg("matrix"));
    m.def("column_sums", &column_sums, py::arg("matrix"));

    py::class_<CoverageWeights>(m, "CoverageWeights")
        .def_readonly("alpha", &CoverageWeights::alpha)
        .def_readonly("tumor_voxels", &CoverageWeights::tumor_voxels)
        .def_readonly("region_voxels", &CoverageWeights::region_voxels);
    m.def("coverage_weights", &coverage_weights, py::arg("tumor_mask"), py::arg("atlas"));

    py::class_<TractographicFeature>(m, "TractographicFeature")
        .def_readonly("kind", &TractographicFeature::kind)
        .def_readonly("variant", &TractographicFeature::variant)
        .def_readonly("v", &TractographicFeature::v)
        .def_readonly("v_wei", &TractographicFeature::v_wei);
    m.def("tractographic_features", &tractographic_features, py::arg("streamlines"),
          py::arg("atlas"), py::arg("tumor_mask"), py::arg("workers") = 1);

    py::class_<LesionSet>(m, "LesionSet")
        .def_static("from_masks", &LesionSet::from_masks, py::arg("necrosis_net"),
                    py::arg("edema"), py::arg("enhancing"))
        .def_readonly("whole_tumor", &LesionSet::whole_tumor)
        .def_readonly("tumor_core", &LesionSet::tumor_core);

    py::class_<FeatureRow>(m, "FeatureRow")
        .def_readonly("subject_id", &FeatureRow::subject_id)
        .def_readonly("names", &FeatureRow::names)
        .def_readonly("values", &FeatureRow::values);

    m.def("volumetric_features", &volumetric_features, py::arg("lesions"), py::arg("brain_mask"));
    m.def("spatial_features", &spatial_features, py::arg("lesions"), py::arg("to_mni"));
    m.def("volumetric_spatial_features", &volumetric_spatial_features, py::arg("lesions"),
          py::arg("atlas"), py::arg("to_mni"));
    m.def("morphological_features", &morphological_features, py::arg("lesions"));

    py::class_<DataMatrix>(m, "DataMatrix")
        .def(py::init([](size_t rows, size_t cols, std::vector<double> values) {
                 if (values.size() != rows * cols)
                     throw Error(ErrorKind::data, "values length must be rows*cols");
                 return DataMatrix{rows, cols, std::move(values)};
             }),
             py::arg("rows"), py::arg("cols"), py::arg("values"))
        .def_readonly("rows", &DataMatrix::rows)
        .def_readonly("cols", &DataMatrix::cols)
        .def_readonly("values", &DataMatrix::values);

    py::class_<FeatureTable>(m, "FeatureTable")
        .def(py::init([](std::vector<std::string> ids, std::vector<std::string> names,
                         DataMatrix values) {
                 FeatureTable t{std::move(ids), std::move(names), std::move(values)};
                 t.validate();
                 return t;
             }),
             py::arg("subject_ids"), py::arg("feature_names"), py::arg("values"))
        .def_readonly("subject_ids", &FeatureTable::subject_ids)
        .def_readonly("feature_names", &FeatureTable::feature_names)
        .def_readonly("values", &FeatureTable::values);

    m.def("variance_filter", &variance_filter, py::arg("table"), py::arg("threshold") = 1e-8);

    py::class_<Scaler>(m, "Scaler")
        .def_static("fit", &Scaler::fit, py::arg("train"))
        .def("apply", &Scaler::apply, py::arg("rows"))
        .def_readonly("mean", &Scaler::mean)
        .def_readonly("stddev", &Scaler::stddev);

    py::class_<CVConfig>(m, "CVConfig")
        .def(py::init<>())
        .def_readwrite("folds", &CVConfig::folds)
        .def_readwrite("repeats", &CVConfig::repeats)
        .def_readwrite("seed", &CVConfig::seed);

    py::class_<SvmParams>(m, "SvmParams")
        .def(py::init<>())
        .def_readwrite("C", &SvmParams::C)
        .def_readwrite("tol", &SvmParams::tol)
        .def_readwrite("max_iter", &SvmParams::max_iter);

    py::class_<SelectionResult>(m, "SelectionResult")
        .def_readonly("retained", &SelectionResult::retained)
        .def_readonly("curve", &SelectionResult::curve)
        .def_readonly("chosen_count", &SelectionResult::chosen_count);

    m.def(
        "rfe_cv",
        [](const FeatureTable& table, const std::vector<int>& y, int n_classes, const CVConfig& cv,
           const SvmParams& svm, int workers) {
            py::gil_scoped_release release;
            return rfe_cv(table, y, n_classes, cv, svm, workers);
        },
        py::arg("table"), py::arg("y"), py::arg("n_classes"), py::arg("cv"), py::arg("svm"),
        py::arg("workers") = 1);

    py::class_<LinearSvmModel>(m, "LinearSvmModel")
        .def_readonly("class_names", &LinearSvmModel::class_names)
        .def_readonly("weights", &LinearSvmModel::weights)
        .def_readonly("bias", &LinearSvmModel::bias)
        .def_readonly("n_features", &LinearSvmModel::n_features);

    m.def("svm_fit", &svm_fit, py::arg("X"), py::arg("y"), py::arg("class_names"),
          py::arg("params"));
    m.def(
        "svm_predict",
        [](const LinearSvmModel& model, const DataMatrix& X) { return svm_predict(model, X); },
        py::arg("model"), py::arg("X"));

    py::enum_<SurvivalClass>(m, "SurvivalClass")
        .value("short_survivor", SurvivalClass::short_survivor)
        .value("mid_survivor", SurvivalClass::mid_survivor)
        .value("long_survivor", SurvivalClass::long_survivor);

    m.def("class_of_days", &class_of_days, py::arg("days"));
    m.def("survival_class_names", &survival_class_names);
    m.def("stratified_folds", &stratified_folds, py::arg("y"), py::arg("n_classes"), py::arg("cv"),
          py::arg("repeat_index"));

    py::class_<CVAccuracy>(m, "CVAccuracy")
        .def_readonly("mean", &CVAccuracy::mean)
        .def_readonly("stddev", &CVAccuracy::stddev)
        .def_readonly("evaluations", &CVAccuracy::evaluations);

    m.def(
        "repeated_cv_accuracy",
        [](const DataMatrix& X, const std::vector<int>& y, int n_classes, const CVConfig& cv,
           const SvmParams& svm, int workers) {
            py::gil_scoped_release release;
            return repeated_cv_accuracy(X, y, n_classes, cv, svm, workers);
        },
        py::arg("X"), py::arg("y"), py::arg("n_classes"), py::arg("cv"), py::arg("svm"),
        py::arg("workers") = 1);

    py::class_<FeatureMap>(m, "FeatureMap")
        .def(py::init([](int n, int c, int d, int h, int w, std::vector<double> data) {
                 FeatureMap fm = FeatureMap::zeros(n, c, d, h, w);
                 if (!data.empty()) {
                     if (data.size() != fm.size())
                         throw Error(ErrorKind::data, "data length must be n*c*d*h*w");
                     fm.data = std::move(data);
                 }
                 return fm;
             }),
             py::arg("n"), py::arg("c"), py::arg("d"), py::arg("h"), py::arg("w"),
             py::arg("data") = std::vector<double>{})
        .def_readonly("n", &FeatureMap::n)
        .def_readonly("c", &FeatureMap::c)
        .def_readonly("d", &FeatureMap::d)
        .def_readonly("h", &FeatureMap::h)
        .def_readonly("w", &FeatureMap::w)
        .def_readonly("data", &FeatureMap::data);

    m.def("group_norm_forward", &group_norm_forward, py::arg("x"), py::arg("groups"),
          py::arg("gamma"), py::arg("beta"), py::arg("eps") = 1e-5);
    m.def(
        "hard_negative_select",
        [](const std::vector<double>& loss, const std::vector<bool>& positive, double ratio,
           size_t floor_count) {
            LossMap l;
            l.loss = loss;
            l.positive.assign(positive.begin(), positive.end());
            const auto sel = hard_negative_select(l, ratio, floor_count);
            std::vector<bool> out(sel.begin(), sel.end());
            return out;
        },
        py::arg("loss"), py::arg("positive"), py::arg("ratio") = 3.0,
        py::arg("zero_positive_floor") = 128);
    m.def("ensemble_average", &ensemble_average, py::arg("maps"));
    m.def("decode_labels", &decode_labels, py::arg("probabilities"),
          py::arg("label_values") = std::vector<int>{0, 1, 2, 4});
}
