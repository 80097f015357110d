#include "tractosurv/survival_cv.hpp"

#include <cmath>

#include <json.hpp>

#include "tractosurv/errors.hpp"
#include "tractosurv/parallel.hpp"
#include "tractosurv/rng.hpp"
#include "tractosurv/text_io.hpp"

namespace tractosurv {

const char* to_string(SurvivalClass c) {
    switch (c) {
    case SurvivalClass::short_survivor: return "short";
    case SurvivalClass::mid_survivor: return "mid";
    case SurvivalClass::long_survivor: return "long";
    }
    return "?";
}

const char* to_string(ResectionStatus s) {
    switch (s) {
    case ResectionStatus::GTR: return "GTR";
    case ResectionStatus::STR: return "STR";
    case ResectionStatus::NA: return "NA";
    }
    return "?";
}

ResectionStatus resection_from_string(const std::string& s) {
    if (s == "GTR") return ResectionStatus::GTR;
    if (s == "STR") return ResectionStatus::STR;
    if (s == "NA" || s.empty()) return ResectionStatus::NA;
    throw_data("unknown resection status: " + s);
}

SurvivalClass class_of_days(double days) {
    if (days < 0) throw_data("survival days must be non-negative");
    const double months = days / kDaysPerMonth;
    if (months < 10.0) return SurvivalClass::short_survivor;
    if (months > 15.0) return SurvivalClass::long_survivor;
    return SurvivalClass::mid_survivor;
}

std::vector<SubjectRecord> filter_gtr(const std::vector<SubjectRecord>& records) {
    std::vector<SubjectRecord> out;
    for (const auto& r : records)
        if (r.resection_status == ResectionStatus::GTR) out.push_back(r);
    return out;
}

std::vector<SubjectRecord> load_manifest(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<SubjectRecord> out;
    size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (first) {
            first = false;
            if (cells.size() != 4 || cells[0] != "id")
                throw_data("manifest header must be id,age_years,survival_days,resection_status: " +
                           path);
            continue;
        }
        if (cells.size() != 4) throw_data("manifest row with wrong column count in " + path);
        SubjectRecord r;
        r.id = cells[0];
        r.age_years = parse_double(cells[1], "manifest age_years");
        if (!cells[2].empty()) {
            const double days = parse_double(cells[2], "manifest survival_days");
            if (!std::isfinite(days) || days < 0)
                throw_data("manifest survival_days must be finite and non-negative");
            r.survival_days = days;
        }
        r.resection_status = resection_from_string(cells[3]);
        out.push_back(std::move(r));
    }
    return out;
}

std::string manifest_csv(const std::vector<SubjectRecord>& records) {
    std::string out = "id,age_years,survival_days,resection_status\n";
    for (const auto& r : records) {
        out += r.id + ',' + format_double(r.age_years) + ',';
        if (r.survival_days) out += format_double(*r.survival_days);
        out += ',';
        out += to_string(r.resection_status);
        out += '\n';
    }
    return out;
}

void CVConfig::validate() const {
    if (folds < 2) throw_config("cv folds must be at least 2");
    if (repeats < 1) throw_config("cv repeats must be at least 1");
}

std::vector<int> stratified_folds(const std::vector<int>& y, int n_classes, const CVConfig& cv,
                                  uint64_t repeat_index) {
    cv.validate();
    std::vector<std::vector<size_t>> members(static_cast<size_t>(n_classes));
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= n_classes) throw_data("label index out of range");
        members[static_cast<size_t>(y[i])].push_back(i);
    }
    for (size_t c = 0; c < members.size(); ++c)
        if (!members[c].empty() && members[c].size() < static_cast<size_t>(cv.folds))
            throw_numeric("class " + std::to_string(c) + " has fewer members than folds");

    std::vector<int> fold(y.size(), 0);
    for (size_t c = 0; c < members.size(); ++c) {
        // distinct stream per (repeat, class) so fold draws never collide
        PhiloxEngine eng(cv.seed ^ (repeat_index * 0x9E3779B97F4A7C15ULL),
                         static_cast<uint32_t>(c + 1));
        deterministic_shuffle(members[c], eng);
        for (size_t m = 0; m < members[c].size(); ++m)
            fold[members[c][m]] = static_cast<int>(m % static_cast<size_t>(cv.folds));
    }
    return fold;
}

CVAccuracy repeated_cv_accuracy(const DataMatrix& X, const std::vector<int>& y, int n_classes,
                                const CVConfig& cv, const SvmParams& svm, int workers) {
    cv.validate();
    if (X.rows != y.size()) throw_data("sample/label count mismatch");

    std::vector<std::string> generic_names;
    for (int c = 0; c < n_classes; ++c) generic_names.push_back("class_" + std::to_string(c));

    const size_t total = static_cast<size_t>(cv.repeats) * static_cast<size_t>(cv.folds);
    std::vector<double> accuracies(total, 0.0);

    // fold assignments are precomputed so workers share no RNG state
    std::vector<std::vector<int>> folds(static_cast<size_t>(cv.repeats));
    for (int r = 0; r < cv.repeats; ++r)
        folds[static_cast<size_t>(r)] = stratified_folds(y, n_classes, cv, static_cast<uint64_t>(r));

    parallel_for_blocks(total, workers, [&](size_t begin, size_t end, int) {
        for (size_t task = begin; task < end; ++task) {
            const size_t repeat = task / static_cast<size_t>(cv.folds);
            const int fold_id = static_cast<int>(task % static_cast<size_t>(cv.folds));
            const auto& fold = folds[repeat];

            DataMatrix train_x{0, X.cols, {}};
            std::vector<int> train_y;
            std::vector<size_t> test_rows;
            for (size_t i = 0; i < X.rows; ++i) {
                if (fold[i] == fold_id) {
                    test_rows.push_back(i);
                } else {
                    train_x.values.insert(train_x.values.end(), X.values.begin() + static_cast<ptrdiff_t>(i * X.cols),
                                          X.values.begin() + static_cast<ptrdiff_t>((i + 1) * X.cols));
                    train_y.push_back(y[i]);
                    ++train_x.rows;
                }
            }
            const LinearSvmModel model = svm_fit(train_x, train_y, generic_names, svm);

            DataMatrix test_x{test_rows.size(), X.cols, {}};
            test_x.values.reserve(test_rows.size() * X.cols);
            for (size_t i : test_rows)
                test_x.values.insert(test_x.values.end(), X.values.begin() + static_cast<ptrdiff_t>(i * X.cols),
                                     X.values.begin() + static_cast<ptrdiff_t>((i + 1) * X.cols));
            const auto pred = svm_predict(model, test_x);
            size_t hits = 0;
            for (size_t t = 0; t < test_rows.size(); ++t)
                if (pred[t] == y[test_rows[t]]) ++hits;
            accuracies[task] =
                test_rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(test_rows.size());
        }
    });

    CVAccuracy out;
    out.evaluations = total;
    for (double a : accuracies) out.mean += a;
    out.mean /= static_cast<double>(total);
    double ss = 0.0;
    for (double a : accuracies) ss += (a - out.mean) * (a - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(total));
    return out;
}

std::string model_to_json(const LinearSvmModel& model, const std::vector<std::string>& feature_names) {
    if (feature_names.size() != model.n_features)
        throw_data("feature name count does not match model");
    nlohmann::json j;
    j["classes"] = model.class_names;
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["C"] = model.params.C;
    j["feature_names"] = feature_names;
    return j.dump(2) + "\n";
}

LinearSvmModel model_from_json(const std::string& json_text, std::vector<std::string>& feature_names) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid model JSON: ") + e.what());
    }
    LinearSvmModel model;
    try {
        model.class_names = j.at("classes").get<std::vector<std::string>>();
        model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        model.bias = j.at("bias").get<std::vector<double>>();
        model.params.C = j.at("C").get<double>();
        feature_names = j.at("feature_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("model JSON missing fields: ") + e.what());
    }
    model.n_features = feature_names.size();
    if (model.weights.size() != model.class_names.size() ||
        model.bias.size() != model.class_names.size())
        throw_data("model JSON has inconsistent class counts");
    for (const auto& w : model.weights)
        if (w.size() != model.n_features) throw_data("model JSON weight length mismatch");
    return model;
}

} // namespace tractosurv
