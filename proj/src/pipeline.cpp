#include "tractosurv/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "tractosurv/lesion_features.hpp"
#include "tractosurv/text_io.hpp"

namespace fs = std::filesystem;

namespace tractosurv {

namespace {

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw_config("config is missing a path for " + what);
    if (!fs::exists(path)) throw_config(what + " does not exist: " + path);
}

uint64_t fnv1a(const void* data, size_t size) {
    uint64_t h = 0xcbf29ce484222325ULL;
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Subject-level tracking seed: stable under cohort reordering.
uint64_t subject_seed(uint64_t top_seed, const std::string& id) { return top_seed ^ fnv1a(id); }

std::vector<SubjectPaths> subject_paths(const PipelineConfig& config,
                                        const std::vector<SubjectRecord>& records) {
    std::vector<SubjectPaths> out;
    for (const auto& r : records) out.push_back({r.id, config.subject_dir + "/" + r.id});
    return out;
}

LesionSet load_lesions(const SubjectPaths& s) {
    return LesionSet::from_masks(load_nifti(s.mask("necrosis_net"), VolumeKind::mask),
                                 load_nifti(s.mask("edema"), VolumeKind::mask),
                                 load_nifti(s.mask("enhancing"), VolumeKind::mask));
}

Affine subject_affine(const SubjectPaths& s) {
    if (!fs::exists(s.affine_file())) return Affine::identity();
    return load_affine_text(s.affine_file());
}

std::string out_path(const PipelineConfig& config, const std::string& rel) {
    fs::create_directories(config.output_dir);
    return config.output_dir + "/" + rel;
}

std::string tracts_path(const PipelineConfig& config, const std::string& id) {
    fs::create_directories(config.output_dir + "/tracts");
    return config.output_dir + "/tracts/" + id + ".trk0";
}

nlohmann::json subject_error_json(const CommandOutcome& outcome) {
    nlohmann::json errors = nlohmann::json::object();
    for (const auto& [id, reason] : outcome.subject_errors) errors[id] = reason;
    return errors;
}

// Distinct survival classes present among labeled GTR records.
std::vector<int> survival_labels(const std::vector<SubjectRecord>& records) {
    std::vector<int> y;
    for (const auto& r : records) {
        if (!r.survival_days)
            throw_data("training subject " + r.id + " has no survival_days in the manifest");
        y.push_back(static_cast<int>(class_of_days(*r.survival_days)));
    }
    return y;
}

struct TrainingData {
    std::vector<SubjectRecord> gtr;
    std::vector<int> y;
    FeatureTable table; // raw training features, joined on the manifest order
};

// Loads the configured tractographic rows as the training table: one row per
// subject made of the vwei columns for (train_kind, train_variant).
TrainingData load_training_features(const PipelineConfig& config) {
    TrainingData td;
    const auto records = load_manifest(config.manifest);
    td.gtr = filter_gtr(records);
    if (td.gtr.size() < 2) throw_numeric("fewer than two GTR subjects after filtering");
    td.y = survival_labels(td.gtr);

    const std::string path = out_path(config, "features_tractographic.csv");
    require_file(path, "tractographic feature table (run extract first)");
    const FeatureTable all = feature_table_from_csv(read_text_file(path), path);

    // rows are keyed subject_id + kind + variant; pick the configured pair
    size_t kind_col = SIZE_MAX, variant_col = SIZE_MAX;
    std::vector<size_t> vwei_cols;
    std::vector<std::string> vwei_names;
    for (size_t c = 0; c < all.feature_names.size(); ++c) {
        if (all.feature_names[c] == "kind") kind_col = c;
        else if (all.feature_names[c] == "variant") variant_col = c;
        else if (all.feature_names[c].rfind("vwei_", 0) == 0) {
            vwei_cols.push_back(c);
            vwei_names.push_back(all.feature_names[c]);
        }
    }
    if (kind_col == SIZE_MAX || variant_col == SIZE_MAX || vwei_cols.empty())
        throw_data("tractographic feature table lacks kind/variant/vwei columns: " + path);

    const auto kind_code = static_cast<double>(config.train_kind == MatrixKind::pass ? 0 : 1);
    const auto variant_code = static_cast<double>(static_cast<int>(config.train_variant));

    td.table.feature_names = vwei_names;
    td.table.values = DataMatrix::zeros(td.gtr.size(), vwei_cols.size());
    for (size_t s = 0; s < td.gtr.size(); ++s) {
        bool found = false;
        for (size_t r = 0; r < all.values.rows; ++r) {
            if (all.subject_ids[r] != td.gtr[s].id) continue;
            if (all.values.at(r, kind_col) != kind_code) continue;
            if (all.values.at(r, variant_col) != variant_code) continue;
            for (size_t k = 0; k < vwei_cols.size(); ++k)
                td.table.values.at(s, k) = all.values.at(r, vwei_cols[k]);
            found = true;
            break;
        }
        if (!found)
            throw_data("no tractographic feature row for subject " + td.gtr[s].id +
                       " with the configured kind/variant");
        td.table.subject_ids.push_back(td.gtr[s].id);
    }
    td.table.validate();
    return td;
}

// Scaler folded into the weights so the persisted model applies to raw
// feature rows: w'_j = w_j / sigma_j, b' = b - sum_j w_j mu_j / sigma_j.
LinearSvmModel fold_scaler(const LinearSvmModel& model, const Scaler& scaler) {
    LinearSvmModel out = model;
    for (size_t c = 0; c < model.weights.size(); ++c) {
        for (size_t j = 0; j < model.n_features; ++j) {
            out.weights[c][j] = model.weights[c][j] / scaler.stddev[j];
            out.bias[c] -= model.weights[c][j] * scaler.mean[j] / scaler.stddev[j];
        }
    }
    return out;
}

struct SelectionRun {
    TrainingData data;
    std::vector<size_t> kept_by_variance;
    FeatureTable filtered;    // post variance filter, raw values
    Scaler scaler;            // fitted on filtered training rows
    FeatureTable scaled;      // z-scored training table
    SelectionResult selection;
};

SelectionRun run_selection(const PipelineConfig& config) {
    SelectionRun run;
    run.data = load_training_features(config);

    run.kept_by_variance = variance_filter(run.data.table, config.variance_threshold);
    if (run.kept_by_variance.empty())
        throw_numeric("variance filter removed every feature");
    run.filtered = run.data.table.select_columns(run.kept_by_variance);

    run.scaler = Scaler::fit(run.filtered.values);
    run.scaled = run.filtered;
    run.scaled.values = run.scaler.apply(run.filtered.values);

    CVConfig rfe_cv_config = config.cv;
    rfe_cv_config.seed = config.seed;
    rfe_cv_config.repeats = config.rfecv_repeats;
    run.selection = rfe_cv(run.scaled, run.data.y, 3, rfe_cv_config, config.svm, config.threads);
    return run;
}

} // namespace

Affine load_affine_text(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::array<double, 16> m{};
    for (double& v : m)
        if (!(in >> v)) throw_data("affine file must hold 16 numbers: " + path);
    return Affine(m);
}

std::string affine_to_text(const Affine& a) {
    std::string out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (c) out += ' ';
            out += format_double(a.at(r, c));
        }
        out += '\n';
    }
    return out;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const Error&) {
        throw_config("cannot open config file: " + path);
    } catch (const nlohmann::json::exception& e) {
        throw_config("invalid config JSON " + path + ": " + e.what());
    }

    PipelineConfig c;
    try {
        c.seed = j.value("seed", uint64_t{0});
        c.threads = j.value("threads", 1);
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            c.atlas_labels = p.value("atlas_labels", "");
            c.atlas_sidecar = p.value("atlas_sidecar", "");
            c.peak_field = p.value("peak_field", "");
            c.peak_sidecar = p.value("peak_sidecar", "");
            c.manifest = p.value("manifest", "");
            c.subject_dir = p.value("subject_dir", "");
            c.output_dir = p.value("output_dir", "");
        }
        if (j.contains("tracking")) {
            const auto& t = j["tracking"];
            c.tracking.target_tracts = t.value("target_tracts", c.tracking.target_tracts);
            c.tracking.step_mm = t.value("step_mm", c.tracking.step_mm);
            c.tracking.angle_max_deg = t.value("angle_max_deg", c.tracking.angle_max_deg);
            c.tracking.qa_threshold = t.value("qa_threshold", c.tracking.qa_threshold);
            c.tracking.min_length_mm = t.value("min_length_mm", c.tracking.min_length_mm);
            c.tracking.max_length_mm = t.value("max_length_mm", c.tracking.max_length_mm);
        }
        if (j.contains("cv")) {
            const auto& v = j["cv"];
            c.cv.folds = v.value("folds", c.cv.folds);
            c.cv.repeats = v.value("repeats", c.cv.repeats);
        }
        if (j.contains("svm")) {
            const auto& s = j["svm"];
            c.svm.C = s.value("C", c.svm.C);
            c.svm.tol = s.value("tol", c.svm.tol);
            c.svm.max_iter = s.value("max_iter", c.svm.max_iter);
        }
        c.rfecv_repeats = j.value("rfecv_repeats", c.rfecv_repeats);
        c.variance_threshold = j.value("variance_threshold", c.variance_threshold);
        if (j.contains("features")) {
            const auto& f = j["features"];
            c.family_volumetric = f.value("volumetric", true);
            c.family_spatial = f.value("spatial", true);
            c.family_volumetric_spatial = f.value("volumetric_spatial", true);
            c.family_morphological = f.value("morphological", true);
            c.family_tractographic = f.value("tractographic", true);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            const std::string kind = t.value("kind", "pass");
            const std::string variant = t.value("variant", "binarized");
            if (kind == "pass") c.train_kind = MatrixKind::pass;
            else if (kind == "end") c.train_kind = MatrixKind::end;
            else throw_config("train.kind must be pass or end");
            if (variant == "original") c.train_variant = MatrixVariant::original;
            else if (variant == "normalized") c.train_variant = MatrixVariant::normalized;
            else if (variant == "binarized") c.train_variant = MatrixVariant::binarized;
            else throw_config("train.variant must be original, normalized or binarized");
        }
        c.write_matrices = j.value("write_matrices", false);
    } catch (const nlohmann::json::exception& e) {
        throw_config("config field has the wrong type in " + path + ": " + e.what());
    }

    c.cv.seed = c.seed;
    c.tracking.rng_seed = c.seed;
    c.validate_numerics();
    return c;
}

void PipelineConfig::validate_numerics() const {
    if (threads < 1) throw_config("threads must be at least 1");
    if (tracking.step_mm <= 0) throw_config("tracking.step_mm must be positive");
    if (!(tracking.angle_max_deg > 0 && tracking.angle_max_deg <= 90))
        throw_config("tracking.angle_max_deg must be in (0,90]");
    if (tracking.qa_threshold < 0) throw_config("tracking.qa_threshold must be non-negative");
    if (tracking.min_length_mm < 0) throw_config("tracking.min_length_mm must be non-negative");
    if (!(tracking.min_length_mm < tracking.max_length_mm))
        throw_config("tracking.min_length_mm must be below tracking.max_length_mm");
    cv.validate();
    if (svm.C <= 0) throw_config("svm.C must be positive");
    if (svm.tol <= 0) throw_config("svm.tol must be positive");
    if (svm.max_iter < 1) throw_config("svm.max_iter must be at least 1");
    if (rfecv_repeats < 1) throw_config("rfecv_repeats must be at least 1");
    if (variance_threshold < 0) throw_config("variance_threshold must be non-negative");
}

CommandOutcome cmd_track(const PipelineConfig& config) {
    require_file(config.peak_field, "peak field image");
    require_file(config.peak_sidecar, "peak field sidecar");
    require_file(config.manifest, "subject manifest");
    require_file(config.subject_dir, "subject directory");

    const PeakField field = load_peak_field(config.peak_field, config.peak_sidecar);
    const auto records = load_manifest(config.manifest);
    const auto subjects = subject_paths(config, records);

    CommandOutcome outcome;
    nlohmann::json report_subjects = nlohmann::json::object();
    for (const auto& s : subjects) {
        try {
            const LesionSet lesions = load_lesions(s);
            const Affine to_template = subject_affine(s);
            const Volume tumor_template =
                resample(lesions.whole_tumor, field.grid(), to_template, ResampleMode::nearest);

            TrackingParams params = config.tracking;
            params.rng_seed = subject_seed(config.seed, s.id);
            const auto tracts = track_all(tumor_template, field, params, config.threads);

            const std::string path = tracts_path(config, s.id);
            save_streamlines(tracts, path);
            outcome.written_files.push_back(path);
            const auto bytes = read_binary_file(path);
            report_subjects[s.id] = {{"seeds", params.target_tracts},
                                     {"accepted", tracts.size()},
                                     {"rejected", params.target_tracts - tracts.size()},
                                     {"tracts_fnv64", hex64(fnv1a(bytes.data(), bytes.size()))}};
        } catch (const Error& e) {
            outcome.subject_errors.emplace_back(s.id, e.what());
        }
    }

    nlohmann::json report;
    report["subjects"] = report_subjects;
    report["errors"] = subject_error_json(outcome);
    const std::string report_path = out_path(config, "track_report.json");
    write_file_atomic(report_path, report.dump(2) + "\n");
    outcome.written_files.push_back(report_path);
    return outcome;
}

CommandOutcome cmd_extract(const PipelineConfig& config) {
    require_file(config.manifest, "subject manifest");
    require_file(config.subject_dir, "subject directory");
    const bool needs_atlas =
        config.family_volumetric_spatial || config.family_tractographic;
    ParcellationAtlas atlas;
    if (needs_atlas) {
        require_file(config.atlas_labels, "atlas labels image");
        require_file(config.atlas_sidecar, "atlas sidecar");
        atlas = load_atlas(config.atlas_labels, config.atlas_sidecar);
    }

    const auto records = load_manifest(config.manifest);
    const auto subjects = subject_paths(config, records);

    CommandOutcome outcome;
    std::vector<FeatureRow> volumetric, spatial, volspatial, morphological;
    std::vector<std::string> tracto_ids;
    std::vector<std::vector<TractographicFeature>> tracto_rows;

    for (const auto& s : subjects) {
        try {
            const LesionSet lesions = load_lesions(s);
            const Affine to_template = subject_affine(s);

            if (config.family_volumetric) {
                const Volume brain = load_nifti(s.mask("brain"), VolumeKind::mask);
                FeatureRow row = volumetric_features(lesions, brain);
                row.subject_id = s.id;
                volumetric.push_back(std::move(row));
            }
            if (config.family_spatial) {
                FeatureRow row = spatial_features(lesions, to_template);
                row.subject_id = s.id;
                spatial.push_back(std::move(row));
            }
            if (config.family_volumetric_spatial || config.family_tractographic) {
                const GridSpec grid = GridSpec::of(atlas.labels);
                LesionSet on_atlas = LesionSet::from_masks(
                    resample(lesions.necrosis_net, grid, to_template, ResampleMode::nearest),
                    resample(lesions.edema, grid, to_template, ResampleMode::nearest),
                    resample(lesions.enhancing, grid, to_template, ResampleMode::nearest));

                if (config.family_volumetric_spatial) {
                    FeatureRow row =
                        volumetric_spatial_features(on_atlas, atlas, Affine::identity());
                    row.subject_id = s.id;
                    volspatial.push_back(std::move(row));
                }
                if (config.family_tractographic) {
                    const auto tracts = load_streamlines(tracts_path(config, s.id));
                    auto features = tractographic_features(tracts, atlas, on_atlas.whole_tumor,
                                                           config.threads);
                    if (config.write_matrices) {
                        for (MatrixKind kind : {MatrixKind::pass, MatrixKind::end}) {
                            const auto m = build_matrix(tracts, atlas, kind, config.threads);
                            const std::string mpath = out_path(
                                config, "matrix_" + s.id + "_" + to_string(kind) + ".csv");
                            write_file_atomic(mpath, matrix_csv(m, atlas.names));
                            outcome.written_files.push_back(mpath);
                        }
                    }
                    tracto_ids.push_back(s.id);
                    tracto_rows.push_back(std::move(features));
                }
            }
            if (config.family_morphological) {
                FeatureRow row = morphological_features(lesions);
                row.subject_id = s.id;
                morphological.push_back(std::move(row));
            }
        } catch (const Error& e) {
            outcome.subject_errors.emplace_back(s.id, e.what());
        }
    }

    auto write_family = [&](const std::vector<FeatureRow>& rows, const std::string& name) {
        if (rows.empty()) return;
        FeatureTable table;
        table.feature_names = rows.front().names;
        table.values = DataMatrix::zeros(rows.size(), table.feature_names.size());
        for (size_t r = 0; r < rows.size(); ++r) {
            table.subject_ids.push_back(rows[r].subject_id);
            for (size_t c = 0; c < rows[r].values.size(); ++c)
                table.values.at(r, c) = rows[r].values[c];
        }
        const std::string path = out_path(config, name);
        write_file_atomic(path, feature_table_csv(table));
        outcome.written_files.push_back(path);
    };
    write_family(volumetric, "features_volumetric.csv");
    write_family(spatial, "features_spatial.csv");
    write_family(volspatial, "features_volumetric_spatial.csv");
    write_family(morphological, "features_morphological.csv");

    if (!tracto_rows.empty()) {
        // one row per (subject, kind, variant); kind/variant also as numeric
        // columns so the file stays a plain feature table
        const int n = atlas.n_regions;
        std::vector<std::string> header{"subject_id", "kind", "variant"};
        for (int i = 1; i <= n; ++i) header.push_back("v_" + std::to_string(i));
        for (int i = 1; i <= n; ++i) header.push_back("vwei_" + std::to_string(i));
        std::string csv = join_csv(header);
        for (size_t s = 0; s < tracto_ids.size(); ++s) {
            for (const auto& f : tracto_rows[s]) {
                std::vector<std::string> row{tracto_ids[s],
                                             std::to_string(f.kind == MatrixKind::pass ? 0 : 1),
                                             std::to_string(static_cast<int>(f.variant))};
                for (double v : f.v) row.push_back(format_double(v));
                for (double v : f.v_wei) row.push_back(format_double(v));
                csv += join_csv(row);
            }
        }
        const std::string path = out_path(config, "features_tractographic.csv");
        write_file_atomic(path, csv);
        outcome.written_files.push_back(path);
    }

    nlohmann::json report;
    report["errors"] = subject_error_json(outcome);
    report["subjects_done"] =
        static_cast<uint64_t>(subjects.size() - outcome.subject_errors.size());
    const std::string report_path = out_path(config, "extract_report.json");
    write_file_atomic(report_path, report.dump(2) + "\n");
    outcome.written_files.push_back(report_path);
    return outcome;
}

CommandOutcome cmd_train(const PipelineConfig& config) {
    SelectionRun run = run_selection(config);

    // selection indices refer to the filtered table's columns
    const FeatureTable chosen = run.scaled.select_columns(run.selection.retained);

    const auto class_names = survival_class_names();
    const LinearSvmModel scaled_model =
        svm_fit(chosen.values, run.data.y, class_names, config.svm);

    // report CV accuracy of the chosen subset at the configured repeat count
    CVConfig final_cv = config.cv;
    final_cv.seed = config.seed;
    const CVAccuracy acc =
        repeated_cv_accuracy(chosen.values, run.data.y, 3, final_cv, config.svm, config.threads);

    // persist in raw-feature space: fold the scaler into weights and bias
    Scaler chosen_scaler;
    for (size_t i : run.selection.retained) {
        chosen_scaler.mean.push_back(run.scaler.mean[i]);
        chosen_scaler.stddev.push_back(run.scaler.stddev[i]);
    }
    const LinearSvmModel model = fold_scaler(scaled_model, chosen_scaler);

    CommandOutcome outcome;
    const std::string model_path = out_path(config, "model.json");
    write_file_atomic(model_path, model_to_json(model, chosen.feature_names));
    outcome.written_files.push_back(model_path);

    // selection recorded against the raw table's column indices
    SelectionResult reported = run.selection;
    for (auto& idx : reported.retained) idx = run.kept_by_variance[idx];
    const std::string sel_path = out_path(config, "selection.json");
    write_file_atomic(sel_path, selection_to_json(reported));
    outcome.written_files.push_back(sel_path);

    std::vector<size_t> class_counts(class_names.size(), 0);
    for (int label : run.data.y) ++class_counts[static_cast<size_t>(label)];
    nlohmann::json report;
    report["cv_mean"] = acc.mean;
    report["cv_std"] = acc.stddev;
    report["evaluations"] = acc.evaluations;
    report["chosen_k"] = run.selection.chosen_count;
    report["n_subjects"] = run.data.gtr.size();
    report["class_counts"] = class_counts;
    const std::string report_path = out_path(config, "cv_report.json");
    write_file_atomic(report_path, report.dump(2) + "\n");
    outcome.written_files.push_back(report_path);
    return outcome;
}

CommandOutcome cmd_cross_validate(const PipelineConfig& config) {
    SelectionRun run = run_selection(config);
    const FeatureTable chosen = run.scaled.select_columns(run.selection.retained);

    CVConfig final_cv = config.cv;
    final_cv.seed = config.seed;
    const CVAccuracy acc =
        repeated_cv_accuracy(chosen.values, run.data.y, 3, final_cv, config.svm, config.threads);

    nlohmann::json report;
    report["cv_mean"] = acc.mean;
    report["cv_std"] = acc.stddev;
    report["evaluations"] = acc.evaluations;
    report["chosen_k"] = run.selection.chosen_count;
    report["n_subjects"] = run.data.gtr.size();

    CommandOutcome outcome;
    const std::string report_path = out_path(config, "cv_report.json");
    write_file_atomic(report_path, report.dump(2) + "\n");
    outcome.written_files.push_back(report_path);
    return outcome;
}

CommandOutcome cmd_predict(const PipelineConfig& config, const std::string& model_path) {
    require_file(model_path, "model JSON");
    require_file(config.manifest, "subject manifest");

    std::vector<std::string> feature_names;
    const LinearSvmModel model = model_from_json(read_text_file(model_path), feature_names);

    const std::string feat_path = out_path(config, "features_tractographic.csv");
    require_file(feat_path, "tractographic feature table (run extract first)");
    const FeatureTable all = feature_table_from_csv(read_text_file(feat_path), feat_path);

    const auto kind_code = static_cast<double>(config.train_kind == MatrixKind::pass ? 0 : 1);
    const auto variant_code = static_cast<double>(static_cast<int>(config.train_variant));
    size_t kind_col = SIZE_MAX, variant_col = SIZE_MAX;
    std::vector<size_t> model_cols;
    for (const auto& name : feature_names) {
        size_t col = SIZE_MAX;
        for (size_t c = 0; c < all.feature_names.size(); ++c)
            if (all.feature_names[c] == name) col = c;
        if (col == SIZE_MAX)
            throw_data("feature table is missing model column '" + name + "'");
        model_cols.push_back(col);
    }
    for (size_t c = 0; c < all.feature_names.size(); ++c) {
        if (all.feature_names[c] == "kind") kind_col = c;
        if (all.feature_names[c] == "variant") variant_col = c;
    }
    if (kind_col == SIZE_MAX || variant_col == SIZE_MAX)
        throw_data("tractographic feature table lacks kind/variant columns");

    const auto records = load_manifest(config.manifest);
    auto bucket = [](SurvivalClass c) {
        switch (c) {
        case SurvivalClass::short_survivor: return "<10mo";
        case SurvivalClass::mid_survivor: return "10-15mo";
        case SurvivalClass::long_survivor: return ">15mo";
        }
        return "?";
    };

    std::string csv = "id,class,days_bucket\n";
    for (const auto& r : records) {
        if (r.resection_status != ResectionStatus::GTR) {
            csv += r.id + ",skipped,NA\n";
            continue;
        }
        bool found = false;
        DataMatrix x = DataMatrix::zeros(1, feature_names.size());
        for (size_t row = 0; row < all.values.rows; ++row) {
            if (all.subject_ids[row] != r.id) continue;
            if (all.values.at(row, kind_col) != kind_code) continue;
            if (all.values.at(row, variant_col) != variant_code) continue;
            for (size_t k = 0; k < model_cols.size(); ++k) x.at(0, k) = all.values.at(row, model_cols[k]);
            found = true;
            break;
        }
        if (!found) throw_data("no feature row for GTR subject " + r.id);
        const auto pred = svm_predict(model, x);
        const auto cls = static_cast<SurvivalClass>(pred[0]);
        csv += r.id + "," + to_string(cls) + "," + bucket(cls) + "\n";
    }

    CommandOutcome outcome;
    const std::string path = out_path(config, "predictions.csv");
    write_file_atomic(path, csv);
    outcome.written_files.push_back(path);
    return outcome;
}

CommandOutcome cmd_lesion_distribution(const PipelineConfig& config) {
    require_file(config.atlas_labels, "atlas labels image");
    require_file(config.atlas_sidecar, "atlas sidecar");
    require_file(config.manifest, "subject manifest");
    require_file(config.subject_dir, "subject directory");
    const ParcellationAtlas atlas = load_atlas(config.atlas_labels, config.atlas_sidecar);

    const auto records = load_manifest(config.manifest);
    const auto subjects = subject_paths(config, records);

    CommandOutcome outcome;
    std::vector<LesionSet> kept;
    kept.reserve(subjects.size());
    for (const auto& s : subjects) {
        try {
            const LesionSet lesions = load_lesions(s);
            const Affine to_template = subject_affine(s);
            const GridSpec grid = GridSpec::of(atlas.labels);
            kept.push_back(LesionSet::from_masks(
                resample(lesions.necrosis_net, grid, to_template, ResampleMode::nearest),
                resample(lesions.edema, grid, to_template, ResampleMode::nearest),
                resample(lesions.enhancing, grid, to_template, ResampleMode::nearest)));
        } catch (const Error& e) {
            outcome.subject_errors.emplace_back(s.id, e.what());
        }
    }

    std::vector<std::pair<std::string, const Volume*>> pooled;
    for (const auto& l : kept) {
        pooled.emplace_back("necrosis_net", &l.necrosis_net);
        pooled.emplace_back("edema", &l.edema);
        pooled.emplace_back("enhancing", &l.enhancing);
    }
    const LesionDistribution dist = lesion_region_distribution(pooled, atlas);

    const std::string path = out_path(config, "lesion_distribution.csv");
    write_file_atomic(path, lesion_distribution_csv(dist));
    outcome.written_files.push_back(path);

    nlohmann::json report;
    report["errors"] = subject_error_json(outcome);
    const std::string report_path = out_path(config, "lesion_distribution_report.json");
    write_file_atomic(report_path, report.dump(2) + "\n");
    outcome.written_files.push_back(report_path);
    return outcome;
}

} // namespace tractosurv
