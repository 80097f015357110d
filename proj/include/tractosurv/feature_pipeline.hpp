#pragma once

#include <string>
#include <vector>

#include "tractosurv/survival_cv.hpp"
#include "tractosurv/svm.hpp"

namespace tractosurv {

// Named per-subject feature vectors.
struct FeatureTable {
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;
    DataMatrix values; // rows = subjects

    void validate() const;
    FeatureTable select_columns(const std::vector<size_t>& keep) const;
};

// Indices of features whose sample variance exceeds `threshold`, in order.
std::vector<size_t> variance_filter(const FeatureTable& table, double threshold = 1e-8);

// Per-feature mean / sample std learned on training rows.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Scaler fit(const DataMatrix& train);
    DataMatrix apply(const DataMatrix& rows) const;
};

struct SelectionResult {
    std::vector<size_t> retained;             // chosen feature subset (table indices, ordered)
    std::vector<std::pair<size_t, double>> curve; // (feature count, mean cv accuracy)
    size_t chosen_count = 0;
};

// Recursive feature elimination: drop the feature with the smallest summed
// squared one-vs-rest weight, refit on the full table, and record the mean
// repeated stratified k-fold accuracy at every feature count. The count with
// the best mean accuracy wins; ties go to the smaller count.
SelectionResult rfe_cv(const FeatureTable& table, const std::vector<int>& y, int n_classes,
                       const CVConfig& cv, const SvmParams& svm, int workers = 1);

std::string selection_to_json(const SelectionResult& r);
SelectionResult selection_from_json(const std::string& json_text);

// Feature-table CSV: header `subject_id,<name>...`, one row per subject.
std::string feature_table_csv(const FeatureTable& table);
FeatureTable feature_table_from_csv(const std::string& csv_text, const std::string& what);

} // namespace tractosurv
