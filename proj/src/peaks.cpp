#include <cmath>

#include <json.hpp>

#include "tractosurv/nifti.hpp"
#include "tractosurv/text_io.hpp"
#include "tractosurv/tracking.hpp"

namespace tractosurv {

PeakField::PeakField(std::array<int, 3> dims, std::array<double, 3> spacing, const Affine& affine,
                     int k_peaks, std::vector<float> dirs, std::vector<float> qa)
    : dims_(dims), spacing_(spacing), affine_(affine), inverse_affine_(affine.inverse()),
      k_(k_peaks), dirs_(std::move(dirs)), qa_(std::move(qa)) {
    for (int d : dims_)
        if (d <= 0) throw_data("peak field dims must be positive");
    if (k_ < 1) throw_data("peak field needs at least one peak slot");
    const size_t n = voxel_count();
    if (dirs_.size() != n * static_cast<size_t>(k_) * 3 || qa_.size() != n * static_cast<size_t>(k_))
        throw_data("peak field buffer sizes do not match dims and k_peaks");
    for (size_t v = 0; v < n; ++v)
        for (int k = 0; k < k_; ++k) {
            const double q = peak_qa(v, k);
            if (q < 0) throw_data("peak QA values must be non-negative");
            const double norm = peak_dir(v, k).norm();
            if (q > 0 && std::abs(norm - 1.0) > 1e-5)
                throw_data("peak directions must be unit vectors");
        }
}

PeakField load_peak_field(const std::string& nii_path, const std::string& sidecar_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw_data("invalid peak field sidecar " + sidecar_path + ": " + e.what());
    }
    if (!j.contains("k_peaks")) throw_data("peak field sidecar must contain k_peaks");
    const int k = j["k_peaks"].get<int>();
    if (k < 1) throw_data("k_peaks must be positive");

    NiftiData raw = read_nifti(nii_path);
    if (raw.ndim != 4) throw_data("peak field image must be 4-D: " + nii_path);
    if (raw.dims[3] != 4 * k)
        throw_data("peak field image must have 4*k_peaks channels: " + nii_path);

    const size_t n = static_cast<size_t>(raw.dims[0]) * static_cast<size_t>(raw.dims[1]) *
                     static_cast<size_t>(raw.dims[2]);
    std::vector<float> dirs(n * static_cast<size_t>(k) * 3);
    std::vector<float> qa(n * static_cast<size_t>(k));
    // channel c is the slowest axis in the file; repack voxel-major
    for (int c = 0; c < 3 * k; ++c)
        for (size_t v = 0; v < n; ++v) {
            const int peak = c / 3, comp = c % 3;
            dirs[(v * static_cast<size_t>(k) + static_cast<size_t>(peak)) * 3 +
                 static_cast<size_t>(comp)] =
                static_cast<float>(raw.data[static_cast<size_t>(c) * n + v]);
        }
    for (int c = 0; c < k; ++c)
        for (size_t v = 0; v < n; ++v)
            qa[v * static_cast<size_t>(k) + static_cast<size_t>(c)] =
                static_cast<float>(raw.data[static_cast<size_t>(3 * k + c) * n + v]);

    return PeakField({raw.dims[0], raw.dims[1], raw.dims[2]},
                     {raw.pixdim[0], raw.pixdim[1], raw.pixdim[2]}, raw.affine, k,
                     std::move(dirs), std::move(qa));
}

void save_peak_field(const PeakField& field, const std::string& nii_path,
                     const std::string& sidecar_path) {
    const int k = field.k_peaks();
    const size_t n = field.voxel_count();
    std::vector<double> data(n * static_cast<size_t>(4 * k), 0.0);
    for (int c = 0; c < 3 * k; ++c)
        for (size_t v = 0; v < n; ++v) {
            const int peak = c / 3, comp = c % 3;
            data[static_cast<size_t>(c) * n + v] =
                field.dirs()[(v * static_cast<size_t>(k) + static_cast<size_t>(peak)) * 3 +
                             static_cast<size_t>(comp)];
        }
    for (int c = 0; c < k; ++c)
        for (size_t v = 0; v < n; ++v)
            data[static_cast<size_t>(3 * k + c) * n + v] =
                field.qa()[v * static_cast<size_t>(k) + static_cast<size_t>(c)];

    std::array<int, 7> dims{field.dims()[0], field.dims()[1], field.dims()[2], 4 * k, 1, 1, 1};
    std::array<double, 7> pixdim{field.spacing()[0], field.spacing()[1], field.spacing()[2],
                                 1, 1, 1, 1};
    write_nifti(nii_path, 4, dims, pixdim, field.affine(), kNiftiFloat32, data);

    nlohmann::json j;
    j["k_peaks"] = k;
    write_file_atomic(sidecar_path, j.dump(2) + "\n");
}

} // namespace tractosurv
