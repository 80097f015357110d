#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tractosurv {

// Row-major sample matrix shared by the SVM and selection code.
struct DataMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    double at(size_t r, size_t c) const { return values[r * cols + c]; }
    double& at(size_t r, size_t c) { return values[r * cols + c]; }

    static DataMatrix zeros(size_t rows, size_t cols) { return {rows, cols, std::vector<double>(rows * cols, 0.0)}; }
};

struct SvmParams {
    double C = 1.0;
    double tol = 1e-4;   // projected-gradient gap tolerance
    int max_iter = 1000; // outer coordinate-descent sweeps
};

// One-vs-rest soft-margin linear classifier. Bias is trained as an augmented
// constant feature, liblinear-style.
struct LinearSvmModel {
    size_t n_features = 0;
    std::vector<std::string> class_names;   // fixed order; argmax ties pick the earliest
    std::vector<std::vector<double>> weights; // [class][feature]
    std::vector<double> bias;                 // [class]
    SvmParams params;

    double decision(size_t cls, const double* x) const {
        double s = bias[cls];
        const auto& w = weights[cls];
        for (size_t j = 0; j < n_features; ++j) s += w[j] * x[j];
        return s;
    }
};

// Trains one binary hinge-loss problem per class (class vs rest) by dual
// coordinate descent. y holds class indices 0..n_classes-1; every class in
// class_names must appear at least once overall and at least two distinct
// classes are required. Deterministic for a fixed row order.
LinearSvmModel svm_fit(const DataMatrix& X, const std::vector<int>& y,
                       const std::vector<std::string>& class_names, const SvmParams& params);

// Argmax class per row; returns class indices, optionally the decision values.
std::vector<int> svm_predict(const LinearSvmModel& model, const DataMatrix& X,
                             DataMatrix* decision_values = nullptr);

} // namespace tractosurv
