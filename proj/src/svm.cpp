#include "tractosurv/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tractosurv/errors.hpp"
#include "tractosurv/rng.hpp"

namespace tractosurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dual coordinate descent for min_w 0.5*||w||^2 + C * sum_i hinge(y_i w·x_i)
// over the augmented feature space (last column fixed to 1 for the bias).
// Follows the projected-gradient shrinking scheme of Hsieh et al. (ICML 2008):
//   min_a 0.5 a^T Q a - e^T a,  0 <= a_i <= C,  Q_ij = y_i y_j x_i·x_j
// Stops when the PG gap over a full pass drops below tol.
void solve_binary(const DataMatrix& X, const std::vector<int8_t>& y, double C, double tol,
                  int max_iter, std::vector<double>& w) {
    const size_t l = X.rows;
    const size_t dim = X.cols + 1; // + bias column
    w.assign(dim, 0.0);

    std::vector<double> alpha(l, 0.0);
    std::vector<double> qd(l);
    std::vector<size_t> index(l);
    for (size_t i = 0; i < l; ++i) {
        double s = 1.0; // bias column contributes 1*1
        for (size_t j = 0; j < X.cols; ++j) s += X.at(i, j) * X.at(i, j);
        qd[i] = s;
        index[i] = i;
    }

    // fixed-key engine: sweeps are shuffled but runs stay reproducible
    PhiloxEngine eng(0x5eed5eedULL);
    size_t active = l;
    double pgmax_old = kInf, pgmin_old = -kInf;

    for (int iter = 0; iter < max_iter; ++iter) {
        double pgmax_new = -kInf, pgmin_new = kInf;
        for (size_t i = 0; i < active; ++i) {
            const size_t j = i + eng.below(static_cast<uint32_t>(active - i));
            std::swap(index[i], index[j]);
        }

        for (size_t s = 0; s < active; ++s) {
            const size_t i = index[s];
            const double yi = y[i];
            double g = w[X.cols]; // bias feature
            for (size_t j = 0; j < X.cols; ++j) g += w[j] * X.at(i, j);
            g = g * yi - 1.0;

            double pg = 0.0;
            if (alpha[i] == 0.0) {
                if (g > pgmax_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (g < 0) pg = g;
            } else if (alpha[i] == C) {
                if (g < pgmin_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (g > 0) pg = g;
            } else {
                pg = g;
            }
            pgmax_new = std::max(pgmax_new, pg);
            pgmin_new = std::min(pgmin_new, pg);

            if (std::abs(pg) > 1e-12) {
                const double alpha_old = alpha[i];
                alpha[i] = std::clamp(alpha[i] - g / qd[i], 0.0, C);
                const double d = (alpha[i] - alpha_old) * yi;
                for (size_t j = 0; j < X.cols; ++j) w[j] += d * X.at(i, j);
                w[X.cols] += d;
            }
        }

        if (pgmax_new - pgmin_new <= tol) {
            if (active == l) break;
            // converged on the shrunken set; re-check all variables once
            active = l;
            pgmax_old = kInf;
            pgmin_old = -kInf;
            continue;
        }
        pgmax_old = pgmax_new <= 0 ? kInf : pgmax_new;
        pgmin_old = pgmin_new >= 0 ? -kInf : pgmin_new;
    }
}

} // namespace

LinearSvmModel svm_fit(const DataMatrix& X, const std::vector<int>& y,
                       const std::vector<std::string>& class_names, const SvmParams& params) {
    if (X.rows != y.size()) throw_data("sample/label count mismatch");
    if (class_names.size() < 2) throw_numeric("svm needs at least two classes");
    for (double v : X.values)
        if (!std::isfinite(v)) throw_data("svm input contains non-finite values");

    std::vector<size_t> class_count(class_names.size(), 0);
    for (int label : y) {
        if (label < 0 || static_cast<size_t>(label) >= class_names.size())
            throw_data("label index out of range");
        ++class_count[static_cast<size_t>(label)];
    }
    size_t present = 0;
    for (size_t c : class_count)
        if (c > 0) ++present;
    if (present < 2) throw_numeric("svm training requires at least two distinct classes");

    LinearSvmModel model;
    model.n_features = X.cols;
    model.class_names = class_names;
    model.params = params;
    model.weights.resize(class_names.size());
    model.bias.resize(class_names.size());

    std::vector<int8_t> yb(X.rows);
    std::vector<double> w;
    for (size_t cls = 0; cls < class_names.size(); ++cls) {
        for (size_t i = 0; i < X.rows; ++i) yb[i] = y[i] == static_cast<int>(cls) ? 1 : -1;
        solve_binary(X, yb, params.C, params.tol, params.max_iter, w);
        model.weights[cls].assign(w.begin(), w.begin() + static_cast<ptrdiff_t>(X.cols));
        model.bias[cls] = w[X.cols];
    }
    return model;
}

std::vector<int> svm_predict(const LinearSvmModel& model, const DataMatrix& X,
                             DataMatrix* decision_values) {
    if (X.cols != model.n_features) throw_data("feature count does not match the model schema");
    const size_t n_classes = model.class_names.size();
    if (decision_values) *decision_values = DataMatrix::zeros(X.rows, n_classes);

    std::vector<int> out(X.rows, 0);
    for (size_t i = 0; i < X.rows; ++i) {
        const double* xi = X.values.data() + i * X.cols;
        int best = 0;
        double best_value = -kInf;
        for (size_t c = 0; c < n_classes; ++c) {
            const double v = model.decision(c, xi);
            if (decision_values) decision_values->at(i, c) = v;
            if (v > best_value) { // strict: ties keep the earliest class
                best_value = v;
                best = static_cast<int>(c);
            }
        }
        out[i] = best;
    }
    return out;
}

} // namespace tractosurv
