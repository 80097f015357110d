#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tractosurv/volume.hpp"

namespace tractosurv {

// Per-voxel principal fiber directions with an anisotropy (QA) score each.
// Directions are unit vectors in world (template mm) frame; a slot with
// qa == 0 is empty. Layout: dirs[(voxel*K + k)*3 + c], qa[voxel*K + k].
class PeakField {
public:
    PeakField(std::array<int, 3> dims, std::array<double, 3> spacing, const Affine& affine,
              int k_peaks, std::vector<float> dirs, std::vector<float> qa);

    const std::array<int, 3>& dims() const { return dims_; }
    const std::array<double, 3>& spacing() const { return spacing_; }
    const Affine& affine() const { return affine_; }
    const Affine& world_to_voxel() const { return inverse_affine_; }
    int k_peaks() const { return k_; }
    size_t voxel_count() const {
        return static_cast<size_t>(dims_[0]) * static_cast<size_t>(dims_[1]) *
               static_cast<size_t>(dims_[2]);
    }

    size_t voxel_index(int x, int y, int z) const {
        return static_cast<size_t>(x) +
               static_cast<size_t>(dims_[0]) *
                   (static_cast<size_t>(y) + static_cast<size_t>(dims_[1]) * static_cast<size_t>(z));
    }

    bool in_bounds(long long x, long long y, long long z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
    }

    Vec3 peak_dir(size_t voxel, int k) const {
        const size_t o = (voxel * static_cast<size_t>(k_) + static_cast<size_t>(k)) * 3;
        return {dirs_[o], dirs_[o + 1], dirs_[o + 2]};
    }
    double peak_qa(size_t voxel, int k) const {
        return qa_[voxel * static_cast<size_t>(k_) + static_cast<size_t>(k)];
    }

    const std::vector<float>& dirs() const { return dirs_; }
    const std::vector<float>& qa() const { return qa_; }

    GridSpec grid() const { return {dims_, spacing_, affine_}; }

private:
    std::array<int, 3> dims_;
    std::array<double, 3> spacing_;
    Affine affine_;
    Affine inverse_affine_;
    int k_;
    std::vector<float> dirs_;
    std::vector<float> qa_;
};

// Stored as one 4-D float32 NIfTI with 4K channels (3K direction components,
// then K QA values) plus a JSON sidecar {"k_peaks": K}.
PeakField load_peak_field(const std::string& nii_path, const std::string& sidecar_path);
void save_peak_field(const PeakField& field, const std::string& nii_path,
                     const std::string& sidecar_path);

struct TrackingParams {
    uint64_t target_tracts = 1000000;
    double step_mm = 0.5;
    double angle_max_deg = 60.0;
    double qa_threshold = 0.05;
    double min_length_mm = 10.0;
    double max_length_mm = 300.0;
    uint64_t rng_seed = 0;

    void validate(double min_spacing_mm) const;
};

struct Streamline {
    std::vector<Vec3> points; // world mm, consecutive points step_mm apart
    uint64_t seed_index = 0;

    double length_mm(double step_mm) const {
        return points.empty() ? 0.0 : static_cast<double>(points.size() - 1) * step_mm;
    }
};

// Exactly target_tracts points uniformly distributed over the union of
// mask-voxel cubes. Point i is a pure function of (rng_seed, i), so the set is
// identical however the work is split.
std::vector<Vec3> seed_points(const Volume& mask, const TrackingParams& params);

// Deterministic bidirectional tracking from one seed. Returns nullopt when the
// tract is rejected (shorter than min_length_mm or no usable initial peak).
std::optional<Streamline> track_one(const Vec3& seed, const PeakField& field,
                                    const TrackingParams& params);

// track_one over every seed, in seed order, distributed over `workers`
// threads. Output is bit-identical for any worker count.
std::vector<Streamline> track_all(const Volume& mask, const PeakField& field,
                                  const TrackingParams& params, int workers = 1);

// Flat little-endian tract file: magic "TRK0", u32 tract count, then per tract
// u32 point count followed by points as 3 x float32 mm.
void save_streamlines(const std::vector<Streamline>& tracts, const std::string& path);
std::vector<Streamline> load_streamlines(const std::string& path);

} // namespace tractosurv
