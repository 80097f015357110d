#pragma once

// Shared builders for synthetic volumes, atlases and peak fields. Everything
// here is deterministic so expected values can be frozen into the tests.

#include <filesystem>
#include <string>
#include <vector>

#include "tractosurv/atlas.hpp"
#include "tractosurv/rng.hpp"
#include "tractosurv/tracking.hpp"
#include "tractosurv/volume.hpp"

namespace tsv_test {

using namespace tractosurv;

inline Volume make_volume(std::array<int, 3> dims, VolumeKind kind,
                          const std::vector<double>& data,
                          std::array<double, 3> spacing = {1, 1, 1},
                          const Affine& affine = Affine::identity()) {
    return Volume(dims, spacing, affine, kind, data);
}

// Axis-aligned box mask over voxel index ranges [lo, hi] inclusive.
inline Volume make_box_mask(std::array<int, 3> dims, std::array<int, 3> lo, std::array<int, 3> hi,
                            std::array<double, 3> spacing = {1, 1, 1},
                            const Affine& affine = Affine::identity()) {
    Volume v = Volume::zeros(dims, spacing, affine, VolumeKind::mask);
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x) v.at(x, y, z) = 1.0;
    return v;
}

inline Volume random_mask(std::array<int, 3> dims, double fill, uint64_t seed,
                          std::array<double, 3> spacing = {1, 1, 1},
                          const Affine& affine = Affine::identity()) {
    Volume v = Volume::zeros(dims, spacing, affine, VolumeKind::mask);
    PhiloxEngine eng(seed);
    for (auto& d : v.data()) d = eng.unit() < fill ? 1.0 : 0.0;
    return v;
}

inline Volume random_scalar(std::array<int, 3> dims, uint64_t seed,
                            std::array<double, 3> spacing = {1, 1, 1},
                            const Affine& affine = Affine::identity()) {
    Volume v = Volume::zeros(dims, spacing, affine, VolumeKind::scalar);
    PhiloxEngine eng(seed);
    for (auto& d : v.data()) d = eng.normal() * 3.0 + 0.5;
    return v;
}

inline Volume random_labels(std::array<int, 3> dims, int n_regions, uint64_t seed,
                            std::array<double, 3> spacing = {1, 1, 1},
                            const Affine& affine = Affine::identity()) {
    Volume v = Volume::zeros(dims, spacing, affine, VolumeKind::label);
    PhiloxEngine eng(seed);
    for (auto& d : v.data()) d = eng.below(static_cast<uint32_t>(n_regions + 1));
    return v;
}

inline ParcellationAtlas make_atlas(Volume labels, int n_regions) {
    ParcellationAtlas atlas;
    atlas.labels = std::move(labels);
    atlas.n_regions = n_regions;
    for (int i = 1; i <= n_regions; ++i) atlas.names.push_back("region_" + std::to_string(i));
    return atlas;
}

// Uniform unidirectional field: every voxel carries `dir` (unit) at `qa`,
// remaining peak slots empty.
inline PeakField uniform_peak_field(std::array<int, 3> dims, Vec3 dir, double qa, int k_peaks = 1,
                                    std::array<double, 3> spacing = {1, 1, 1},
                                    const Affine& affine = Affine::identity()) {
    const double norm = dir.norm();
    dir = dir * (1.0 / norm);
    const size_t n = static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
                     static_cast<size_t>(dims[2]);
    std::vector<float> dirs(n * static_cast<size_t>(k_peaks) * 3, 0.0f);
    std::vector<float> qas(n * static_cast<size_t>(k_peaks), 0.0f);
    for (size_t v = 0; v < n; ++v) {
        dirs[v * static_cast<size_t>(k_peaks) * 3 + 0] = static_cast<float>(dir.x);
        dirs[v * static_cast<size_t>(k_peaks) * 3 + 1] = static_cast<float>(dir.y);
        dirs[v * static_cast<size_t>(k_peaks) * 3 + 2] = static_cast<float>(dir.z);
        qas[v * static_cast<size_t>(k_peaks)] = static_cast<float>(qa);
    }
    return PeakField(dims, spacing, affine, k_peaks, std::move(dirs), std::move(qas));
}

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        namespace fs = std::filesystem;
        base_ = fs::temp_directory_path() / ("tractosurv_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(base_);
        fs::create_directories(base_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(base_, ec);
    }
    std::string path(const std::string& rel) const { return (base_ / rel).string(); }
    std::string root() const { return base_.string(); }

private:
    std::filesystem::path base_;
};

} // namespace tsv_test
