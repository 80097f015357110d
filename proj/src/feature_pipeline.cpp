#include "tractosurv/feature_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "tractosurv/errors.hpp"
#include "tractosurv/text_io.hpp"

namespace tractosurv {

void FeatureTable::validate() const {
    if (values.rows != subject_ids.size()) throw_data("feature table row/id count mismatch");
    if (values.cols != feature_names.size()) throw_data("feature table column/name count mismatch");
    if (values.values.size() != values.rows * values.cols)
        throw_data("feature table buffer size mismatch");
    for (double v : values.values)
        if (!std::isfinite(v)) throw_data("feature table contains non-finite values");
}

FeatureTable FeatureTable::select_columns(const std::vector<size_t>& keep) const {
    FeatureTable out;
    out.subject_ids = subject_ids;
    out.feature_names.reserve(keep.size());
    for (size_t c : keep) {
        if (c >= values.cols) throw_data("column index out of range");
        out.feature_names.push_back(feature_names[c]);
    }
    out.values = DataMatrix::zeros(values.rows, keep.size());
    for (size_t r = 0; r < values.rows; ++r)
        for (size_t k = 0; k < keep.size(); ++k) out.values.at(r, k) = values.at(r, keep[k]);
    return out;
}

std::vector<size_t> variance_filter(const FeatureTable& table, double threshold) {
    table.validate();
    if (threshold < 0) throw_config("variance threshold must be non-negative");
    const size_t n = table.values.rows;
    if (n < 2) throw_data("variance filter needs at least two rows");
    std::vector<size_t> keep;
    for (size_t c = 0; c < table.values.cols; ++c) {
        double mean = 0;
        for (size_t r = 0; r < n; ++r) mean += table.values.at(r, c);
        mean /= static_cast<double>(n);
        double ss = 0;
        for (size_t r = 0; r < n; ++r) {
            const double d = table.values.at(r, c) - mean;
            ss += d * d;
        }
        const double var = ss / static_cast<double>(n - 1);
        if (var > threshold) keep.push_back(c);
    }
    return keep;
}

Scaler Scaler::fit(const DataMatrix& train) {
    if (train.rows < 2) throw_data("scaler needs at least two training rows");
    Scaler s;
    s.mean.assign(train.cols, 0.0);
    s.stddev.assign(train.cols, 0.0);
    for (size_t c = 0; c < train.cols; ++c) {
        double mean = 0;
        for (size_t r = 0; r < train.rows; ++r) mean += train.at(r, c);
        mean /= static_cast<double>(train.rows);
        double ss = 0;
        for (size_t r = 0; r < train.rows; ++r) {
            const double d = train.at(r, c) - mean;
            ss += d * d;
        }
        const double var = ss / static_cast<double>(train.rows - 1);
        if (var <= 0)
            throw_numeric("zero-variance column reached the scaler; run the variance filter first");
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(var);
    }
    return s;
}

DataMatrix Scaler::apply(const DataMatrix& rows) const {
    if (rows.cols != mean.size()) throw_data("scaler column count mismatch");
    DataMatrix out = rows;
    for (size_t r = 0; r < rows.rows; ++r)
        for (size_t c = 0; c < rows.cols; ++c)
            out.at(r, c) = (rows.at(r, c) - mean[c]) / stddev[c];
    return out;
}

SelectionResult rfe_cv(const FeatureTable& table, const std::vector<int>& y, int n_classes,
                       const CVConfig& cv, const SvmParams& svm, int workers) {
    table.validate();
    if (table.values.rows != y.size()) throw_data("feature table / label count mismatch");
    {
        std::vector<bool> seen(static_cast<size_t>(n_classes), false);
        for (int label : y) seen[static_cast<size_t>(label)] = true;
        if (std::count(seen.begin(), seen.end(), true) < 2)
            throw_numeric("feature selection needs at least two classes");
    }
    if (table.values.cols == 0) throw_data("feature table has no columns");

    std::vector<std::string> class_names;
    for (int c = 0; c < n_classes; ++c) class_names.push_back("class_" + std::to_string(c));

    std::vector<size_t> active(table.values.cols);
    for (size_t i = 0; i < active.size(); ++i) active[i] = i;

    SelectionResult result;
    std::vector<std::vector<size_t>> subsets; // active set per curve entry

    while (!active.empty()) {
        const FeatureTable sub = table.select_columns(active);
        const CVAccuracy acc = repeated_cv_accuracy(sub.values, y, n_classes, cv, svm, workers);
        result.curve.emplace_back(active.size(), acc.mean);
        subsets.push_back(active);

        if (active.size() == 1) break;

        // rank features by the full-table refit; drop the weakest
        const LinearSvmModel model = svm_fit(sub.values, y, class_names, svm);
        size_t drop = 0;
        double drop_score = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < active.size(); ++j) {
            double score = 0;
            for (const auto& w : model.weights) score += w[j] * w[j];
            if (score < drop_score || (score == drop_score && j > drop)) {
                drop_score = score;
                drop = j;
            }
        }
        active.erase(active.begin() + static_cast<ptrdiff_t>(drop));
    }

    size_t best = 0;
    for (size_t i = 1; i < result.curve.size(); ++i) {
        const bool better = result.curve[i].second > result.curve[best].second;
        const bool tie_smaller = result.curve[i].second == result.curve[best].second &&
                                 result.curve[i].first < result.curve[best].first;
        if (better || tie_smaller) best = i;
    }
    result.chosen_count = result.curve[best].first;
    result.retained = subsets[best];
    return result;
}

std::string selection_to_json(const SelectionResult& r) {
    nlohmann::json j;
    j["retained"] = r.retained;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& [k, acc] : r.curve) curve.push_back({k, acc});
    j["curve"] = curve;
    j["chosen_k"] = r.chosen_count;
    return j.dump(2) + "\n";
}

SelectionResult selection_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid selection JSON: ") + e.what());
    }
    SelectionResult r;
    try {
        r.retained = j.at("retained").get<std::vector<size_t>>();
        r.chosen_count = j.at("chosen_k").get<size_t>();
        for (const auto& entry : j.at("curve"))
            r.curve.emplace_back(entry.at(0).get<size_t>(), entry.at(1).get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("selection JSON missing fields: ") + e.what());
    }
    return r;
}

std::string feature_table_csv(const FeatureTable& table) {
    table.validate();
    std::vector<std::string> header{"subject_id"};
    header.insert(header.end(), table.feature_names.begin(), table.feature_names.end());
    std::string out = join_csv(header);
    for (size_t r = 0; r < table.values.rows; ++r) {
        std::vector<std::string> row{table.subject_ids[r]};
        for (size_t c = 0; c < table.values.cols; ++c)
            row.push_back(format_double(table.values.at(r, c)));
        out += join_csv(row);
    }
    return out;
}

FeatureTable feature_table_from_csv(const std::string& csv_text, const std::string& what) {
    FeatureTable table;
    size_t pos = 0;
    bool first = true;
    std::vector<std::vector<double>> rows;
    while (pos < csv_text.size()) {
        size_t eol = csv_text.find('\n', pos);
        if (eol == std::string::npos) eol = csv_text.size();
        const std::string line = csv_text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (first) {
            first = false;
            if (cells.empty() || cells[0] != "subject_id")
                throw_data("feature CSV must start with subject_id: " + what);
            table.feature_names.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != table.feature_names.size() + 1)
            throw_data("feature CSV row width mismatch in " + what);
        table.subject_ids.push_back(cells[0]);
        std::vector<double> row;
        for (size_t i = 1; i < cells.size(); ++i) row.push_back(parse_double(cells[i], what));
        rows.push_back(std::move(row));
    }
    if (first) throw_data("feature CSV is empty: " + what);
    table.values = DataMatrix::zeros(rows.size(), table.feature_names.size());
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < table.feature_names.size(); ++c) table.values.at(r, c) = rows[r][c];
    table.validate();
    return table;
}

} // namespace tractosurv
