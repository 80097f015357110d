#include "tractosurv/atlas.hpp"

#include <json.hpp>

#include "tractosurv/text_io.hpp"

namespace tractosurv {

void ParcellationAtlas::validate() const {
    if (n_regions < 1) throw_data("atlas must have at least one region");
    if (labels.kind() != VolumeKind::label) throw_data("atlas labels must be a label volume");
    if (names.size() != static_cast<size_t>(n_regions))
        throw_data("atlas names length must equal n_regions");
    for (double v : labels.data())
        if (v > n_regions) throw_data("atlas contains a label above n_regions");
}

ParcellationAtlas load_atlas(const std::string& labels_path, const std::string& sidecar_path) {
    ParcellationAtlas atlas;
    atlas.labels = load_nifti(labels_path, VolumeKind::label);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw_data("invalid atlas sidecar " + sidecar_path + ": " + e.what());
    }
    if (!j.contains("n_regions") || !j.contains("names"))
        throw_data("atlas sidecar must contain n_regions and names: " + sidecar_path);
    atlas.n_regions = j["n_regions"].get<int>();
    atlas.names = j["names"].get<std::vector<std::string>>();
    atlas.validate();
    return atlas;
}

void save_atlas_sidecar(const ParcellationAtlas& atlas, const std::string& sidecar_path) {
    nlohmann::json j;
    j["n_regions"] = atlas.n_regions;
    j["names"] = atlas.names;
    write_file_atomic(sidecar_path, j.dump(2) + "\n");
}

std::vector<int64_t> region_volumes(const ParcellationAtlas& atlas) {
    atlas.validate();
    std::vector<int64_t> counts(static_cast<size_t>(atlas.n_regions) + 1, 0);
    for (double v : atlas.labels.data()) ++counts[static_cast<size_t>(v)];
    return counts;
}

LesionDistribution lesion_region_distribution(
    const std::vector<std::pair<std::string, const Volume*>>& lesions,
    const ParcellationAtlas& atlas) {
    atlas.validate();
    const auto volumes = region_volumes(atlas);
    const size_t bins = volumes.size();

    LesionDistribution out;
    std::vector<std::vector<int64_t>> intersect; // [lesion][label]
    std::vector<int64_t> mask_count;             // masks pooled per name

    auto name_index = [&](const std::string& name) -> size_t {
        for (size_t i = 0; i < out.lesion_names.size(); ++i)
            if (out.lesion_names[i] == name) return i;
        out.lesion_names.push_back(name);
        intersect.emplace_back(bins, 0);
        mask_count.push_back(0);
        return out.lesion_names.size() - 1;
    };

    for (const auto& [name, mask] : lesions) {
        if (mask == nullptr) throw_data("null lesion mask for " + name);
        if (!mask->same_grid(atlas.labels))
            throw_data("lesion mask grid differs from atlas grid for " + name);
        const size_t li = name_index(name);
        ++mask_count[li];
        for (size_t i = 0; i < mask->voxel_count(); ++i)
            if (mask->data()[i] != 0.0)
                ++intersect[li][static_cast<size_t>(atlas.labels.data()[i])];
    }

    out.ratios.resize(out.lesion_names.size());
    for (size_t li = 0; li < out.lesion_names.size(); ++li) {
        out.ratios[li].assign(bins, 0.0);
        for (size_t r = 0; r < bins; ++r) {
            const int64_t denom = volumes[r] * mask_count[li];
            out.ratios[li][r] = denom > 0
                                    ? static_cast<double>(intersect[li][r]) / static_cast<double>(denom)
                                    : 0.0;
        }
    }
    return out;
}

std::string lesion_distribution_csv(const LesionDistribution& d) {
    std::vector<std::string> header{"region_label"};
    for (const auto& n : d.lesion_names) header.push_back(n);
    std::string out = join_csv(header);
    const size_t bins = d.ratios.empty() ? 0 : d.ratios[0].size();
    for (size_t r = 0; r < bins; ++r) {
        std::vector<std::string> row{std::to_string(r)};
        for (const auto& ratios : d.ratios) row.push_back(format_double(ratios[r]));
        out += join_csv(row);
    }
    return out;
}

std::vector<Volume> onehot_channels(const ParcellationAtlas& atlas) {
    atlas.validate();
    std::vector<Volume> channels;
    channels.reserve(static_cast<size_t>(atlas.n_regions));
    for (int r = 1; r <= atlas.n_regions; ++r) {
        Volume ch = Volume::zeros(atlas.labels.dims(), atlas.labels.spacing(),
                                  atlas.labels.affine(), VolumeKind::mask);
        for (size_t i = 0; i < ch.voxel_count(); ++i)
            if (atlas.labels.data()[i] == static_cast<double>(r)) ch.data()[i] = 1.0;
        channels.push_back(std::move(ch));
    }
    return channels;
}

} // namespace tractosurv
