#include "tractosurv/lesion_features.hpp"

#include <algorithm>
#include <cmath>

namespace tractosurv {

namespace {

constexpr double kMidlineHalfWidthMm = 5.0;

double safe_ratio(double num, double den) { return den != 0.0 ? num / den : 0.0; }

int64_t mask_voxels(const Volume& m) {
    int64_t n = 0;
    for (double v : m.data())
        if (v != 0.0) ++n;
    return n;
}

double mask_volume_mm3(const Volume& m) {
    return static_cast<double>(mask_voxels(m)) * m.voxel_volume_mm3();
}

// Eigenvalues of a symmetric 3x3 matrix, ascending (trigonometric method).
std::array<double, 3> sym3_eigenvalues(double a00, double a01, double a02, double a11, double a12,
                                       double a22) {
    const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
    const double q = (a00 + a11 + a22) / 3.0;
    if (p1 == 0.0) {
        std::array<double, 3> ev{a00, a11, a22};
        std::sort(ev.begin(), ev.end());
        return ev;
    }
    const double p2 = (a00 - q) * (a00 - q) + (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) +
                      2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const double b00 = (a00 - q) / p, b11 = (a11 - q) / p, b22 = (a22 - q) / p;
    const double b01 = a01 / p, b02 = a02 / p, b12 = a12 / p;
    const double detB = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) +
                        b02 * (b01 * b12 - b11 * b02);
    double r = detB / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::array<double, 3> ev{e3, e2, e1};
    std::sort(ev.begin(), ev.end());
    return ev;
}

struct ShapeStats {
    double major_axis = 0;
    double minor_axis = 0;
    double irregularity = 0;
    double sphericity = 0;
};

// Face-count surface area overestimates a smooth boundary by 3/2 (each surface
// patch is charged |nx|+|ny|+|nz| >= 1 of its true area), so a 2/3 factor makes
// the estimator exact-in-expectation for spheres.
double surface_area_mm2(const Volume& m) {
    const auto& d = m.dims();
    const auto& s = m.spacing();
    const double face_area[3] = {s[1] * s[2], s[0] * s[2], s[0] * s[1]};
    double area = 0.0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (m.at(x, y, z) == 0.0) continue;
                const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                                      {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                for (int f = 0; f < 6; ++f) {
                    const int axis = f / 2;
                    const bool exposed = !m.in_bounds(nb[f][0], nb[f][1], nb[f][2]) ||
                                         m.at(nb[f][0], nb[f][1], nb[f][2]) == 0.0;
                    if (exposed) area += face_area[axis];
                }
            }
    return area * (2.0 / 3.0);
}

ShapeStats shape_stats(const Volume& m) {
    ShapeStats st;
    const int64_t n = mask_voxels(m);
    if (n == 0) return st;

    // population covariance of voxel-center world coordinates (mm)
    Vec3 mean{0, 0, 0};
    const auto& d = m.dims();
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x)
                if (m.at(x, y, z) != 0.0) mean = mean + m.voxel_center_world(x, y, z);
    mean = mean * (1.0 / static_cast<double>(n));

    double c00 = 0, c01 = 0, c02 = 0, c11 = 0, c12 = 0, c22 = 0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (m.at(x, y, z) == 0.0) continue;
                const Vec3 p = m.voxel_center_world(x, y, z) - mean;
                c00 += p.x * p.x;
                c01 += p.x * p.y;
                c02 += p.x * p.z;
                c11 += p.y * p.y;
                c12 += p.y * p.z;
                c22 += p.z * p.z;
            }
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto ev = sym3_eigenvalues(c00 * inv_n, c01 * inv_n, c02 * inv_n, c11 * inv_n,
                                     c12 * inv_n, c22 * inv_n);
    st.major_axis = 2.0 * std::sqrt(std::max(0.0, ev[2]));
    st.minor_axis = 2.0 * std::sqrt(std::max(0.0, ev[0]));

    const double volume = static_cast<double>(n) * m.voxel_volume_mm3();
    const double area = surface_area_mm2(m);
    const double sphere_area = std::cbrt(36.0 * M_PI * volume * volume);
    st.irregularity = safe_ratio(area, sphere_area);
    st.sphericity = safe_ratio(sphere_area, area);
    return st;
}

Vec3 mask_centroid(const Volume& m, const Affine& to_mni) {
    Vec3 acc{0, 0, 0};
    int64_t n = 0;
    const auto& d = m.dims();
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x)
                if (m.at(x, y, z) != 0.0) {
                    acc = acc + to_mni.apply(m.voxel_center_world(x, y, z));
                    ++n;
                }
    return n > 0 ? acc * (1.0 / static_cast<double>(n)) : Vec3{0, 0, 0};
}

const char* kLesionTypeNames[3] = {"necrosis_net", "edema", "enhancing"};
const char* kRegionNames[5] = {"necrosis_net", "edema", "enhancing", "whole_tumor", "tumor_core"};

} // namespace

LesionSet LesionSet::from_masks(Volume necrosis_net, Volume edema, Volume enhancing) {
    if (!necrosis_net.same_grid(edema) || !necrosis_net.same_grid(enhancing))
        throw_data("lesion masks must share one grid");
    for (const Volume* m : {&necrosis_net, &edema, &enhancing})
        if (m->kind() != VolumeKind::mask) throw_data("lesion compartments must be mask volumes");
    for (size_t i = 0; i < necrosis_net.voxel_count(); ++i) {
        const double sum =
            necrosis_net.data()[i] + edema.data()[i] + enhancing.data()[i];
        if (sum > 1.0) throw_data("lesion compartment masks overlap");
    }
    LesionSet l;
    l.whole_tumor = mask_union(mask_union(necrosis_net, edema), enhancing);
    l.tumor_core = mask_union(necrosis_net, enhancing);
    l.necrosis_net = std::move(necrosis_net);
    l.edema = std::move(edema);
    l.enhancing = std::move(enhancing);
    return l;
}

void FeatureRow::validate_finite() const {
    if (names.size() != values.size()) throw_data("feature row names/values length mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw_numeric("feature row contains a non-finite value");
}

std::vector<std::string> volumetric_feature_names() {
    std::vector<std::string> names;
    for (const char* r : kRegionNames) names.push_back(std::string("volume_") + r + "_mm3");
    names.push_back("volume_brain_mm3");
    for (const char* r : kRegionNames) names.push_back(std::string("ratio_") + r + "_brain");
    names.insert(names.end(),
                 {"ratio_enhancing_whole_tumor", "ratio_enhancing_tumor_core",
                  "ratio_tumor_core_whole_tumor", "ratio_necrosis_net_whole_tumor",
                  "ratio_necrosis_net_tumor_core", "ratio_edema_whole_tumor",
                  "ratio_necrosis_net_enhancing", "ratio_edema_tumor_core"});
    return names;
}

FeatureRow volumetric_features(const LesionSet& l, const Volume& brain_mask) {
    if (!l.whole_tumor.same_grid(brain_mask)) throw_data("brain mask grid differs from lesion grid");
    const double brain = mask_volume_mm3(brain_mask);
    if (brain <= 0.0) throw_numeric("brain mask is empty");

    const double vol[5] = {mask_volume_mm3(l.necrosis_net), mask_volume_mm3(l.edema),
                           mask_volume_mm3(l.enhancing), mask_volume_mm3(l.whole_tumor),
                           mask_volume_mm3(l.tumor_core)};
    const double et = vol[2], wt = vol[3], tc = vol[4], nec = vol[0], ed = vol[1];

    FeatureRow row;
    row.names = volumetric_feature_names();
    for (double v : vol) row.values.push_back(v);
    row.values.push_back(brain);
    for (double v : vol) row.values.push_back(v / brain);
    row.values.push_back(safe_ratio(et, wt));
    row.values.push_back(safe_ratio(et, tc));
    row.values.push_back(safe_ratio(tc, wt));
    row.values.push_back(safe_ratio(nec, wt));
    row.values.push_back(safe_ratio(nec, tc));
    row.values.push_back(safe_ratio(ed, wt));
    row.values.push_back(safe_ratio(nec, et));
    row.values.push_back(safe_ratio(ed, tc));
    row.validate_finite();
    return row;
}

std::vector<std::string> spatial_feature_names() {
    std::vector<std::string> names;
    for (const char* r : {"whole_tumor", "tumor_core", "enhancing"})
        for (const char* c : {"x", "y", "z"})
            names.push_back(std::string("centroid_") + r + "_" + c + "_mm");
    return names;
}

FeatureRow spatial_features(const LesionSet& l, const Affine& to_mni) {
    if (mask_voxels(l.whole_tumor) == 0) throw_numeric("whole tumor is empty");
    const Vec3 wt = mask_centroid(l.whole_tumor, to_mni);
    const Vec3 tc = mask_voxels(l.tumor_core) > 0 ? mask_centroid(l.tumor_core, to_mni) : wt;
    const Vec3 et = mask_voxels(l.enhancing) > 0 ? mask_centroid(l.enhancing, to_mni) : wt;

    FeatureRow row;
    row.names = spatial_feature_names();
    for (const Vec3& c : {wt, tc, et}) {
        row.values.push_back(c.x);
        row.values.push_back(c.y);
        row.values.push_back(c.z);
    }
    row.validate_finite();
    return row;
}

std::vector<std::string> volumetric_spatial_feature_names(int n_regions) {
    std::vector<std::string> names;
    for (const char* t : kLesionTypeNames) {
        for (int r = 0; r <= n_regions; ++r) {
            std::string label = std::to_string(r);
            if (label.size() < 2) label = "0" + label;
            names.push_back(std::string("vol_") + t + "_label_" + label + "_mm3");
        }
        names.push_back(std::string("vol_") + t + "_left_mm3");
        names.push_back(std::string("vol_") + t + "_middle_mm3");
        names.push_back(std::string("vol_") + t + "_right_mm3");
        // the uncovered-brain bin reported under its own column
        names.push_back(std::string("vol_") + t + "_other_mm3");
    }
    return names;
}

FeatureRow volumetric_spatial_features(const LesionSet& l, const ParcellationAtlas& atlas,
                                       const Affine& to_mni) {
    atlas.validate();
    if (!l.whole_tumor.same_grid(atlas.labels))
        throw_data("lesion masks must be resampled to the atlas grid first");

    const int bins = atlas.n_regions + 1;
    const double voxel_mm3 = atlas.labels.voxel_volume_mm3();
    const Volume* types[3] = {&l.necrosis_net, &l.edema, &l.enhancing};

    FeatureRow row;
    row.names = volumetric_spatial_feature_names(atlas.n_regions);
    for (const Volume* m : types) {
        std::vector<double> label_vol(static_cast<size_t>(bins), 0.0);
        double left = 0, middle = 0, right = 0;
        const auto& d = m->dims();
        for (int z = 0; z < d[2]; ++z)
            for (int y = 0; y < d[1]; ++y)
                for (int x = 0; x < d[0]; ++x) {
                    if (m->at(x, y, z) == 0.0) continue;
                    const auto label = static_cast<size_t>(atlas.labels.at(x, y, z));
                    label_vol[label] += voxel_mm3;
                    const double wx = to_mni.apply(m->voxel_center_world(x, y, z)).x;
                    if (wx < -kMidlineHalfWidthMm) left += voxel_mm3;
                    else if (wx > kMidlineHalfWidthMm) right += voxel_mm3;
                    else middle += voxel_mm3;
                }
        for (double v : label_vol) row.values.push_back(v);
        row.values.push_back(left);
        row.values.push_back(middle);
        row.values.push_back(right);
        row.values.push_back(label_vol[0]); // "other brain region" = label-0 bin
    }
    row.validate_finite();
    return row;
}

std::vector<std::string> morphological_feature_names() {
    std::vector<std::string> names;
    for (const char* r : kRegionNames) {
        names.push_back(std::string("major_axis_") + r + "_mm");
        names.push_back(std::string("minor_axis_") + r + "_mm");
        names.push_back(std::string("surface_irregularity_") + r);
    }
    for (const char* r : {"whole_tumor", "tumor_core", "enhancing"})
        names.push_back(std::string("elongation_") + r);
    names.push_back("sphericity_whole_tumor");
    return names;
}

FeatureRow morphological_features(const LesionSet& l) {
    if (mask_voxels(l.whole_tumor) == 0) throw_numeric("whole tumor is empty");
    const Volume* regions[5] = {&l.necrosis_net, &l.edema, &l.enhancing, &l.whole_tumor,
                                &l.tumor_core};
    ShapeStats stats[5];
    for (int i = 0; i < 5; ++i) stats[i] = shape_stats(*regions[i]);

    FeatureRow row;
    row.names = morphological_feature_names();
    for (const auto& st : stats) {
        row.values.push_back(st.major_axis);
        row.values.push_back(st.minor_axis);
        row.values.push_back(st.irregularity);
    }
    // elongation for whole tumor, tumor core, enhancing (indices 3, 4, 2)
    for (int i : {3, 4, 2}) row.values.push_back(safe_ratio(stats[i].major_axis, stats[i].minor_axis));
    row.values.push_back(stats[3].sphericity);
    row.validate_finite();
    return row;
}

} // namespace tractosurv
