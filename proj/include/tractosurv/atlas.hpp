#pragma once

#include <string>
#include <vector>

#include "tractosurv/volume.hpp"

namespace tractosurv {

// Parcellation atlas: label volume with labels in 0..n_regions, 0 meaning
// background / not covered, plus one name per region.
struct ParcellationAtlas {
    Volume labels;
    int n_regions = 0;
    std::vector<std::string> names;

    void validate() const;
};

// Atlas = label NIfTI + JSON sidecar {"n_regions": N, "names": [...]}.
ParcellationAtlas load_atlas(const std::string& labels_path, const std::string& sidecar_path);
void save_atlas_sidecar(const ParcellationAtlas& atlas, const std::string& sidecar_path);

// Voxel count per label 0..N; entries sum to the total voxel count.
std::vector<int64_t> region_volumes(const ParcellationAtlas& atlas);

// Per lesion name, an N+1 vector of |lesion ∩ region r| / |region r| ratios
// (index 0 = label 0; empty regions report 0). Masks sharing a name are
// pooled: both numerator and denominator sum over them, which is how a
// cohort-level distribution is produced from per-subject masks.
struct LesionDistribution {
    std::vector<std::string> lesion_names;            // unique, first-seen order
    std::vector<std::vector<double>> ratios;          // [lesion][label 0..N]
};

LesionDistribution lesion_region_distribution(
    const std::vector<std::pair<std::string, const Volume*>>& lesions,
    const ParcellationAtlas& atlas);

std::string lesion_distribution_csv(const LesionDistribution& d);

// One binary channel per region 1..N; label-0 voxels are zero everywhere.
std::vector<Volume> onehot_channels(const ParcellationAtlas& atlas);

} // namespace tractosurv
