#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tractosurv/connectome.hpp"
#include "tractosurv/feature_pipeline.hpp"
#include "tractosurv/survival_cv.hpp"
#include "tractosurv/tracking.hpp"

namespace tractosurv {

// One JSON config drives every subcommand; a single top-level seed feeds all
// randomness so a run is reproducible from the file alone.
struct PipelineConfig {
    uint64_t seed = 0;
    int threads = 1;

    std::string atlas_labels;
    std::string atlas_sidecar;
    std::string peak_field;
    std::string peak_sidecar;
    std::string manifest;
    std::string subject_dir;
    std::string output_dir;

    TrackingParams tracking;
    CVConfig cv;
    SvmParams svm;
    int rfecv_repeats = 20;
    double variance_threshold = 1e-8;

    bool family_volumetric = true;
    bool family_spatial = true;
    bool family_volumetric_spatial = true;
    bool family_morphological = true;
    bool family_tractographic = true;

    MatrixKind train_kind = MatrixKind::pass;
    MatrixVariant train_variant = MatrixVariant::binarized;
    bool write_matrices = false;

    static PipelineConfig load(const std::string& path);
    void validate_numerics() const;
};

// Per-subject on-disk layout under subject_dir/<id>/:
//   necrosis_net.nii, edema.nii, enhancing.nii   lesion compartments
//   brain.nii                                     brain mask (volumetric family)
//   to_template.txt                               optional 4x4 world affine
struct SubjectPaths {
    std::string id;
    std::string dir;

    std::string mask(const std::string& name) const { return dir + "/" + name + ".nii"; }
    std::string affine_file() const { return dir + "/to_template.txt"; }
};

Affine load_affine_text(const std::string& path);
std::string affine_to_text(const Affine& a);

struct CommandOutcome {
    std::vector<std::string> written_files;
    std::vector<std::pair<std::string, std::string>> subject_errors; // (id, reason)
};

CommandOutcome cmd_track(const PipelineConfig& config);
CommandOutcome cmd_extract(const PipelineConfig& config);
CommandOutcome cmd_train(const PipelineConfig& config);
CommandOutcome cmd_cross_validate(const PipelineConfig& config);
CommandOutcome cmd_predict(const PipelineConfig& config, const std::string& model_path);
CommandOutcome cmd_lesion_distribution(const PipelineConfig& config);

} // namespace tractosurv
