#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tractosurv/svm.hpp"

namespace tractosurv {

enum class ResectionStatus { GTR, STR, NA };
enum class SurvivalClass { short_survivor = 0, mid_survivor = 1, long_survivor = 2 };

const char* to_string(SurvivalClass c);
const char* to_string(ResectionStatus s);
ResectionStatus resection_from_string(const std::string& s);

inline std::vector<std::string> survival_class_names() { return {"short", "mid", "long"}; }

struct SubjectRecord {
    std::string id;
    double age_years = 0.0;
    std::optional<double> survival_days; // absent for prediction-only subjects
    ResectionStatus resection_status = ResectionStatus::NA;
};

constexpr double kDaysPerMonth = 365.25 / 12.0; // 30.4375

// < 10 months -> short, > 15 months -> long, inclusive bounds -> mid.
SurvivalClass class_of_days(double days);

// Keeps exactly the GTR records, preserving order.
std::vector<SubjectRecord> filter_gtr(const std::vector<SubjectRecord>& records);

// Manifest CSV `id,age_years,survival_days,resection_status`; survival may be
// empty.
std::vector<SubjectRecord> load_manifest(const std::string& path);
std::string manifest_csv(const std::vector<SubjectRecord>& records);

struct CVConfig {
    int folds = 5;
    int repeats = 1000;
    uint64_t seed = 0;

    void validate() const;
};

// Per-sample fold ids for one repeat: class members are dealt across folds so
// per-fold class counts differ by at most one. Pure function of
// (seed, repeat_index) for a fixed y.
std::vector<int> stratified_folds(const std::vector<int>& y, int n_classes, const CVConfig& cv,
                                  uint64_t repeat_index);

struct CVAccuracy {
    double mean = 0.0;
    double stddev = 0.0; // population std over all repeat x fold accuracies
    size_t evaluations = 0;
};

// Fit on the train portion and score the held-out fold, over every
// (repeat, fold). Folds may evaluate in parallel; the aggregation is indexed,
// so results are independent of the worker count.
CVAccuracy repeated_cv_accuracy(const DataMatrix& X, const std::vector<int>& y, int n_classes,
                                const CVConfig& cv, const SvmParams& svm, int workers = 1);

// Model JSON round-trip:
// {"classes": [...], "weights": [[...]], "bias": [...], "C": c, "feature_names": [...]}
std::string model_to_json(const LinearSvmModel& model, const std::vector<std::string>& feature_names);
LinearSvmModel model_from_json(const std::string& json_text, std::vector<std::string>& feature_names);

} // namespace tractosurv
