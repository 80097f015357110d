#pragma once

#include <string>
#include <vector>

#include "tractosurv/atlas.hpp"
#include "tractosurv/volume.hpp"

namespace tractosurv {

// The three annotated lesion compartments on one grid, pairwise disjoint.
// whole_tumor = union of all three; tumor_core = necrosis_net ∪ enhancing.
struct LesionSet {
    Volume necrosis_net;
    Volume edema;
    Volume enhancing;
    Volume whole_tumor;
    Volume tumor_core;

    static LesionSet from_masks(Volume necrosis_net, Volume edema, Volume enhancing);
};

struct FeatureRow {
    std::string subject_id;
    std::vector<std::string> names;
    std::vector<double> values;

    void validate_finite() const;
};

// 19 values: 5 compartment volumes (mm^3), brain volume, 5 lesion/brain
// ratios, 8 compartment ratios. Any ratio with a zero denominator is 0.
FeatureRow volumetric_features(const LesionSet& l, const Volume& brain_mask);

// 9 values: centroids of whole tumor, tumor core and enhancing tumor after
// mapping voxel-center world coordinates through to_mni. Empty core/enhancing
// fall back to the whole-tumor centroid.
FeatureRow spatial_features(const LesionSet& l, const Affine& to_mni);

// 78 values: per lesion type (necrosis_net, edema, enhancing), its volume in
// each atlas bin 0..N plus left (x < -5mm), middle (|x| <= 5mm) and right
// (x > 5mm) bands. Masks must already live on the atlas grid.
FeatureRow volumetric_spatial_features(const LesionSet& l, const ParcellationAtlas& atlas,
                                       const Affine& to_mni);

// 19 values: per region (necrosis_net, edema, enhancing, whole tumor, tumor
// core) major/minor axis length and surface irregularity, plus elongation of
// whole tumor / tumor core / enhancing and sphericity of the whole tumor.
// Empty regions contribute zeros.
FeatureRow morphological_features(const LesionSet& l);

// Fixed schemas shared by every subject; used for golden-file checks.
std::vector<std::string> volumetric_feature_names();
std::vector<std::string> spatial_feature_names();
std::vector<std::string> volumetric_spatial_feature_names(int n_regions);
std::vector<std::string> morphological_feature_names();

} // namespace tractosurv
