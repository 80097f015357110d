// tractosurv — tumor tractographic features and survival classification.
//
// Subcommands: track, extract, train, cross-validate, predict,
// lesion-distribution, segutils-check. Every command is driven by one JSON
// config (--config) and a single seed; reruns with identical inputs produce
// byte-identical outputs.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "tractosurv/nifti.hpp"
#include "tractosurv/pipeline.hpp"
#include "tractosurv/rng.hpp"
#include "tractosurv/seg_numerics.hpp"

using namespace tractosurv;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> repeats;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON")->required();
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--threads", opts.threads, "override the config worker count");
    cmd->add_option("--repeats", opts.repeats, "override cv repeats");
}

PipelineConfig load_config(const CommonOpts& opts) {
    PipelineConfig config = PipelineConfig::load(opts.config_path);
    if (opts.seed) {
        config.seed = *opts.seed;
        config.cv.seed = *opts.seed;
        config.tracking.rng_seed = *opts.seed;
    }
    if (opts.threads) config.threads = *opts.threads;
    if (opts.repeats) config.cv.repeats = *opts.repeats;
    config.validate_numerics();
    return config;
}

void print_outcome(const char* command, const CommandOutcome& outcome) {
    std::printf("%s: wrote %zu file(s)\n", command, outcome.written_files.size());
    for (const auto& [id, reason] : outcome.subject_errors)
        std::printf("%s: subject %s failed: %s\n", command, id.c_str(), reason.c_str());
}

// Decode a multi-channel probability NIfTI (x,y,z,c) into a label volume.
void decode_probability_file(const std::string& prob_path, const std::string& out_path,
                             const std::vector<int>& label_values) {
    const NiftiData raw = read_nifti(prob_path);
    if (raw.ndim != 4) throw_data("probability map must be a 4-D NIfTI: " + prob_path);
    FeatureMap p = FeatureMap::zeros(1, raw.dims[3], raw.dims[2], raw.dims[1], raw.dims[0]);
    p.data = raw.data; // file order: x fastest, channel slowest == NCDHW for n=1
    Volume labels = decode_labels(p, label_values);
    labels = Volume(labels.dims(), {raw.pixdim[0], raw.pixdim[1], raw.pixdim[2]}, raw.affine,
                    VolumeKind::label, labels.data());
    save_nifti(labels, out_path);
    std::printf("segutils-check: decoded %s -> %s\n", prob_path.c_str(), out_path.c_str());
}

// Self-checks for the segmentation-side kernels against closed-form cases;
// exercised from the CLI so deployments can verify the numerics in place.
int run_segutils_check() {
    int failures = 0;
    auto check = [&](bool ok, const char* name) {
        std::printf("segutils-check: %s %s\n", name, ok ? "ok" : "FAILED");
        if (!ok) ++failures;
    };

    {
        FeatureMap x = FeatureMap::zeros(2, 8, 3, 3, 3);
        PhiloxEngine eng(7);
        for (auto& v : x.data) v = eng.normal() * 2.0 + 1.0;
        std::vector<double> gamma(8, 1.0), beta(8, 0.0);
        const FeatureMap y = group_norm_forward(x, 4, gamma, beta);
        bool ok = true;
        const size_t group_size = 2 * x.spatial_size();
        for (int n = 0; n < x.n && ok; ++n)
            for (int g = 0; g < 4 && ok; ++g) {
                double sum = 0, sq = 0;
                for (int cc = 0; cc < 2; ++cc)
                    for (size_t s = 0; s < x.spatial_size(); ++s) {
                        const double v = y.data[y.index(n, g * 2 + cc, s)];
                        sum += v;
                        sq += v * v;
                    }
                const double mean = sum / static_cast<double>(group_size);
                const double var = sq / static_cast<double>(group_size) - mean * mean;
                ok = std::abs(mean) < 1e-5 && std::abs(var - 1.0) < 1e-4;
            }
        check(ok, "group_norm statistics");
    }
    {
        LossMap l;
        l.loss = {0.9, 0.1, 0.8, 0.2, 0.7, 0.3};
        l.positive = {1, 0, 0, 0, 0, 0};
        const auto sel = hard_negative_select(l, 3.0);
        const std::vector<uint8_t> expected = {1, 0, 1, 0, 1, 1};
        check(sel == expected, "hard_negative_select top-k");
    }
    {
        FeatureMap a = FeatureMap::zeros(1, 2, 1, 1, 2);
        FeatureMap b = FeatureMap::zeros(1, 2, 1, 1, 2);
        a.data = {1, 0, 0, 1};
        b.data = {0, 1, 1, 0};
        const FeatureMap avg = ensemble_average({a, b});
        bool ok = true;
        for (double v : avg.data) ok = ok && v == 0.5;
        check(ok, "ensemble_average");
    }
    {
        FeatureMap p = FeatureMap::zeros(1, 4, 1, 1, 3);
        // voxel 0: channel 2 wins; voxel 1: tie -> channel 0; voxel 2: channel 3
        const double probs[4][3] = {{0.1, 0.25, 0.0}, {0.2, 0.25, 0.1}, {0.5, 0.25, 0.2}, {0.2, 0.25, 0.7}};
        for (int c = 0; c < 4; ++c)
            for (size_t s = 0; s < 3; ++s) p.data[p.index(0, c, s)] = probs[c][s];
        const Volume labels = decode_labels(p);
        check(labels.data() == std::vector<double>({2, 0, 4}), "decode_labels argmax");
    }
    std::printf("segutils-check: %s\n", failures == 0 ? "all ok" : "FAILURES");
    return failures == 0 ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tumor tractographic features and survival classification"};
    app.require_subcommand(1);

    CommonOpts track_opts, extract_opts, train_opts, cv_opts, predict_opts, dist_opts;
    std::string model_path;

    auto* track = app.add_subcommand("track", "seed and track tumor streamlines");
    add_common(track, track_opts);
    auto* extract = app.add_subcommand("extract", "extract feature tables");
    add_common(extract, extract_opts);
    auto* train = app.add_subcommand("train", "feature selection and SVM training");
    add_common(train, train_opts);
    auto* crossval = app.add_subcommand("cross-validate", "repeated stratified CV report");
    add_common(crossval, cv_opts);
    auto* predict = app.add_subcommand("predict", "classify subjects with a trained model");
    add_common(predict, predict_opts);
    predict->add_option("--model", model_path, "model JSON (default <output_dir>/model.json)");
    auto* dist = app.add_subcommand("lesion-distribution", "cohort lesion/region distribution");
    add_common(dist, dist_opts);
    auto* segutils = app.add_subcommand("segutils-check", "run segmentation kernel self-checks");
    std::string prob_path, prob_out;
    std::vector<int> prob_labels{0, 1, 2, 4};
    segutils->add_option("--prob", prob_path, "decode a multi-channel probability NIfTI");
    segutils->add_option("--out", prob_out, "label volume output path for --prob");
    segutils->add_option("--labels", prob_labels, "label values per channel");

    CLI11_PARSE(app, argc, argv);

    try {
        if (track->parsed()) {
            print_outcome("track", cmd_track(load_config(track_opts)));
        } else if (extract->parsed()) {
            print_outcome("extract", cmd_extract(load_config(extract_opts)));
        } else if (train->parsed()) {
            print_outcome("train", cmd_train(load_config(train_opts)));
        } else if (crossval->parsed()) {
            print_outcome("cross-validate", cmd_cross_validate(load_config(cv_opts)));
        } else if (predict->parsed()) {
            const PipelineConfig config = load_config(predict_opts);
            const std::string path =
                model_path.empty() ? config.output_dir + "/model.json" : model_path;
            print_outcome("predict", cmd_predict(config, path));
        } else if (dist->parsed()) {
            print_outcome("lesion-distribution", cmd_lesion_distribution(load_config(dist_opts)));
        } else if (!prob_path.empty()) {
            if (prob_out.empty()) throw_config("--prob requires --out");
            decode_probability_file(prob_path, prob_out, prob_labels);
        } else {
            return run_segutils_check();
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
