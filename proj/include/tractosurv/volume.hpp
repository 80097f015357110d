#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tractosurv/errors.hpp"

namespace tractosurv {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

// 4x4 homogeneous voxel-index -> world-mm map, row-major. The last row must
// stay (0,0,0,1) and the 3x3 part invertible.
class Affine {
public:
    Affine() : m_{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1} {}

    explicit Affine(const std::array<double, 16>& m);

    static Affine identity() { return Affine(); }
    static Affine scaling(double sx, double sy, double sz);
    static Affine translation(double tx, double ty, double tz);

    double at(int r, int c) const { return m_[static_cast<size_t>(r * 4 + c)]; }
    double& at(int r, int c) { return m_[static_cast<size_t>(r * 4 + c)]; }
    const std::array<double, 16>& data() const { return m_; }

    Vec3 apply(const Vec3& p) const {
        return {m_[0] * p.x + m_[1] * p.y + m_[2] * p.z + m_[3],
                m_[4] * p.x + m_[5] * p.y + m_[6] * p.z + m_[7],
                m_[8] * p.x + m_[9] * p.y + m_[10] * p.z + m_[11]};
    }

    double det3() const;
    Affine inverse() const;                 // throws on singular 3x3 part
    Affine compose(const Affine& rhs) const; // this * rhs

    bool operator==(const Affine& o) const { return m_ == o.m_; }

private:
    std::array<double, 16> m_;
};

enum class VolumeKind { scalar, label, mask };

// 3-D grid with spacing and a voxel->world affine. Scalar data is real-valued;
// label/mask grids hold non-negative integers stored in the same double array
// (exact for anything below 2^53).
class Volume {
public:
    Volume() = default;
    Volume(std::array<int, 3> dims, std::array<double, 3> spacing, Affine affine,
           VolumeKind kind, std::vector<double> data);

    static Volume zeros(std::array<int, 3> dims, std::array<double, 3> spacing,
                        const Affine& affine, VolumeKind kind);

    const std::array<int, 3>& dims() const { return dims_; }
    const std::array<double, 3>& spacing() const { return spacing_; }
    const Affine& affine() const { return affine_; }
    VolumeKind kind() const { return kind_; }
    size_t voxel_count() const { return data_.size(); }
    double voxel_volume_mm3() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    size_t index(int x, int y, int z) const {
        return static_cast<size_t>(x) +
               static_cast<size_t>(dims_[0]) *
                   (static_cast<size_t>(y) + static_cast<size_t>(dims_[1]) * static_cast<size_t>(z));
    }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
    }

    double at(int x, int y, int z) const { return data_[index(x, y, z)]; }
    double& at(int x, int y, int z) { return data_[index(x, y, z)]; }

    Vec3 voxel_center_world(int x, int y, int z) const {
        return affine_.apply({static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)});
    }

    bool same_grid(const Volume& o) const {
        return dims_ == o.dims_ && spacing_ == o.spacing_ && affine_ == o.affine_;
    }

    // Enforces the value constraints of the kind (mask in {0,1}, label
    // non-negative integer); called on construction and after I/O.
    void validate_values() const;

private:
    std::array<int, 3> dims_{0, 0, 0};
    std::array<double, 3> spacing_{1, 1, 1};
    Affine affine_;
    VolumeKind kind_ = VolumeKind::scalar;
    std::vector<double> data_;
};

struct GridSpec {
    std::array<int, 3> dims;
    std::array<double, 3> spacing;
    Affine affine;

    static GridSpec of(const Volume& v) { return {v.dims(), v.spacing(), v.affine()}; }
};

enum class ResampleMode { nearest, trilinear };

// Samples `src` on `target`: each target voxel center is pulled back through
// transform^-1 into source world space. Out-of-grid samples read 0.
// `transform` maps source world coordinates to target world coordinates.
Volume resample(const Volume& src, const GridSpec& target, const Affine& transform,
                ResampleMode mode);

// Z-score within the mask (sample n-1 std), zero outside.
Volume zscore_within_mask(const Volume& v, const Volume& brain_mask);

// Elementwise union of masks on a shared grid.
Volume mask_union(const Volume& a, const Volume& b);

// NIfTI-1 single-file I/O. save_nifti maps kinds to fixed on-disk datatypes:
// mask -> uint8, label -> int32, scalar -> float32.
Volume load_nifti(const std::string& path, VolumeKind kind);
void save_nifti(const Volume& v, const std::string& path);

} // namespace tractosurv
