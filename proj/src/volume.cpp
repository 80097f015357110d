#include "tractosurv/volume.hpp"

#include <cmath>

namespace tractosurv {

Affine::Affine(const std::array<double, 16>& m) : m_(m) {
    if (m_[12] != 0.0 || m_[13] != 0.0 || m_[14] != 0.0 || m_[15] != 1.0)
        throw_data("affine last row must be (0,0,0,1)");
    if (std::abs(det3()) < 1e-12) throw_data("affine has singular 3x3 part");
}

Affine Affine::scaling(double sx, double sy, double sz) {
    return Affine({sx, 0, 0, 0, 0, sy, 0, 0, 0, 0, sz, 0, 0, 0, 0, 1});
}

Affine Affine::translation(double tx, double ty, double tz) {
    return Affine({1, 0, 0, tx, 0, 1, 0, ty, 0, 0, 1, tz, 0, 0, 0, 1});
}

double Affine::det3() const {
    const auto& m = m_;
    return m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
}

Affine Affine::inverse() const {
    const double d = det3();
    if (std::abs(d) < 1e-12) throw_data("cannot invert singular affine");
    const auto& m = m_;
    const double inv = 1.0 / d;
    std::array<double, 16> r{};
    // inverse of the 3x3 block
    r[0] = (m[5] * m[10] - m[6] * m[9]) * inv;
    r[1] = (m[2] * m[9] - m[1] * m[10]) * inv;
    r[2] = (m[1] * m[6] - m[2] * m[5]) * inv;
    r[4] = (m[6] * m[8] - m[4] * m[10]) * inv;
    r[5] = (m[0] * m[10] - m[2] * m[8]) * inv;
    r[6] = (m[2] * m[4] - m[0] * m[6]) * inv;
    r[8] = (m[4] * m[9] - m[5] * m[8]) * inv;
    r[9] = (m[1] * m[8] - m[0] * m[9]) * inv;
    r[10] = (m[0] * m[5] - m[1] * m[4]) * inv;
    // translation: -R^-1 * t
    r[3] = -(r[0] * m[3] + r[1] * m[7] + r[2] * m[11]);
    r[7] = -(r[4] * m[3] + r[5] * m[7] + r[6] * m[11]);
    r[11] = -(r[8] * m[3] + r[9] * m[7] + r[10] * m[11]);
    r[15] = 1.0;
    return Affine(r);
}

Affine Affine::compose(const Affine& rhs) const {
    std::array<double, 16> r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += at(i, k) * rhs.at(k, j);
            r[static_cast<size_t>(i * 4 + j)] = s;
        }
    return Affine(r);
}

Volume::Volume(std::array<int, 3> dims, std::array<double, 3> spacing, Affine affine,
               VolumeKind kind, std::vector<double> data)
    : dims_(dims), spacing_(spacing), affine_(affine), kind_(kind), data_(std::move(data)) {
    for (int d : dims_)
        if (d <= 0) throw_data("volume dims must be positive");
    for (double s : spacing_)
        if (!(s > 0)) throw_data("volume spacing must be positive");
    const size_t n = static_cast<size_t>(dims_[0]) * static_cast<size_t>(dims_[1]) *
                     static_cast<size_t>(dims_[2]);
    if (data_.size() != n) throw_data("volume data length does not match dims");
    validate_values();
}

Volume Volume::zeros(std::array<int, 3> dims, std::array<double, 3> spacing,
                     const Affine& affine, VolumeKind kind) {
    const size_t n = static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
                     static_cast<size_t>(dims[2]);
    return Volume(dims, spacing, affine, kind, std::vector<double>(n, 0.0));
}

void Volume::validate_values() const {
    if (kind_ == VolumeKind::scalar) return;
    for (double v : data_) {
        if (kind_ == VolumeKind::mask) {
            if (v != 0.0 && v != 1.0) throw_data("mask volume contains values outside {0,1}");
        } else {
            if (v < 0.0 || v != std::floor(v))
                throw_data("label volume contains negative or non-integer values");
        }
    }
}

namespace {

inline long long round_index(double v) { return std::llround(v); }

double sample_nearest(const Volume& src, const Vec3& idx) {
    const long long x = round_index(idx.x);
    const long long y = round_index(idx.y);
    const long long z = round_index(idx.z);
    if (x < 0 || y < 0 || z < 0 || x >= src.dims()[0] || y >= src.dims()[1] || z >= src.dims()[2])
        return 0.0;
    return src.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
}

double sample_trilinear(const Volume& src, const Vec3& idx) {
    const double fx = std::floor(idx.x), fy = std::floor(idx.y), fz = std::floor(idx.z);
    const long long x0 = static_cast<long long>(fx);
    const long long y0 = static_cast<long long>(fy);
    const long long z0 = static_cast<long long>(fz);
    const double dx = idx.x - fx, dy = idx.y - fy, dz = idx.z - fz;
    double acc = 0.0;
    for (int cz = 0; cz <= 1; ++cz)
        for (int cy = 0; cy <= 1; ++cy)
            for (int cx = 0; cx <= 1; ++cx) {
                const long long x = x0 + cx, y = y0 + cy, z = z0 + cz;
                const double w = (cx ? dx : 1.0 - dx) * (cy ? dy : 1.0 - dy) * (cz ? dz : 1.0 - dz);
                if (w == 0.0) continue;
                if (x < 0 || y < 0 || z < 0 || x >= src.dims()[0] || y >= src.dims()[1] ||
                    z >= src.dims()[2])
                    continue; // out-of-grid corners contribute 0
                acc += w * src.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
            }
    return acc;
}

} // namespace

Volume resample(const Volume& src, const GridSpec& target, const Affine& transform,
                ResampleMode mode) {
    if (mode == ResampleMode::trilinear && src.kind() != VolumeKind::scalar)
        throw_data("trilinear resampling requires a scalar volume; use nearest for labels/masks");
    const Affine pullback = src.affine().inverse().compose(transform.inverse()).compose(target.affine);
    Volume out = Volume::zeros(target.dims, target.spacing, target.affine, src.kind());
    for (int z = 0; z < target.dims[2]; ++z)
        for (int y = 0; y < target.dims[1]; ++y)
            for (int x = 0; x < target.dims[0]; ++x) {
                const Vec3 src_idx = pullback.apply(
                    {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)});
                out.at(x, y, z) = mode == ResampleMode::nearest ? sample_nearest(src, src_idx)
                                                                : sample_trilinear(src, src_idx);
            }
    return out;
}

Volume zscore_within_mask(const Volume& v, const Volume& brain_mask) {
    if (!v.same_grid(brain_mask)) throw_data("volume and brain mask grids differ");
    if (brain_mask.kind() != VolumeKind::mask) throw_data("brain mask must be a mask volume");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < v.voxel_count(); ++i)
        if (brain_mask.data()[i] != 0.0) {
            sum += v.data()[i];
            ++n;
        }
    if (n < 2) throw_numeric("brain mask must contain at least 2 voxels");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (size_t i = 0; i < v.voxel_count(); ++i)
        if (brain_mask.data()[i] != 0.0) {
            const double d = v.data()[i] - mean;
            ss += d * d;
        }
    const double var = ss / static_cast<double>(n - 1);
    if (var <= 0.0) throw_numeric("zero intensity variance inside brain mask");
    const double inv_std = 1.0 / std::sqrt(var);
    Volume out = Volume::zeros(v.dims(), v.spacing(), v.affine(), VolumeKind::scalar);
    for (size_t i = 0; i < v.voxel_count(); ++i)
        if (brain_mask.data()[i] != 0.0) out.data()[i] = (v.data()[i] - mean) * inv_std;
    return out;
}

Volume mask_union(const Volume& a, const Volume& b) {
    if (!a.same_grid(b)) throw_data("mask grids differ");
    Volume out = a;
    for (size_t i = 0; i < out.voxel_count(); ++i)
        out.data()[i] = (a.data()[i] != 0.0 || b.data()[i] != 0.0) ? 1.0 : 0.0;
    return out;
}

} // namespace tractosurv
