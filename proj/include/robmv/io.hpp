#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "robmv/discriminant.hpp"
#include "robmv/pca.hpp"
#include "robmv/pls.hpp"
#include "robmv/regression.hpp"

namespace robmv {

using Json = nlohmann::json;

enum class HeaderMode { detect, present, absent };

struct CsvOptions {
    char delimiter = ',';
    char decimal = '.';
    HeaderMode header = HeaderMode::detect;
};

struct RejectedRow {
    Index line = 0;  // 1-based line in the source
    std::string reason;
};

struct ParseReport {
    Index rows_read = 0;
    Index rows_kept = 0;
    std::vector<RejectedRow> rejected;
};

// Cases in rows. Lines starting with '#' are kept in `comments` without the marker.
struct Dataset {
    std::vector<std::string> columns;
    Matrix values;
    std::string source;
    ParseReport report;
    std::vector<std::string> comments;

    Index n() const { return values.rows(); }
    Index p() const { return values.cols(); }
    Index column_index(const std::string& name) const;  // InputError if absent
    Vector column(const std::string& name) const;
    // Every column not listed, in file order.
    std::vector<std::string> names_except(const std::vector<std::string>& excluded) const;
    Matrix select(const std::vector<std::string>& names) const;
};

// Rows with a missing or non-numeric cell are rejected and reported. Throws IoError
// when nothing is readable.
Dataset parse_csv(std::istream& in, const CsvOptions& options = {}, const std::string& source = "<stream>");
Dataset load_csv(const std::string& path, const CsvOptions& options = {});

// 17 significant digits: parsing the text gives back the same double.
std::string format_double(double value);

void write_csv(std::ostream& out, const std::vector<std::string>& columns, const Eigen::Ref<const Matrix>& values,
               const std::vector<std::string>& comments = {}, char delimiter = ',');
void save_csv(const std::string& path, const std::vector<std::string>& columns, const Eigen::Ref<const Matrix>& values,
              const std::vector<std::string>& comments = {}, char delimiter = ',');

enum class ModelKind { regression, pls, discriminant, pca };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

struct ModelDocument {
    static constexpr int kSchemaVersion = 1;

    int version = kSchemaVersion;
    ModelKind kind = ModelKind::regression;
    std::string method;
    std::vector<std::string> predictors;
    std::string response;  // empty for unsupervised models
    std::string labels;    // label column of discriminant models
    bool intercept = false;
    std::uint64_t seed = 0;
    Json config = Json::object();       // echo of every setting used for the fit
    Json parameters = Json::object();   // everything prediction needs
    Json diagnostics = Json::object();  // iterations, convergence, weight summary

    Json to_json() const;
    static ModelDocument from_json(const Json& j);
};

Json matrix_to_json(const Eigen::Ref<const Matrix>& M);  // row-major nested arrays
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::Ref<const Vector>& v);
Vector vector_from_json(const Json& j);

// Intercept is implied by the document, so predictor rows exclude the column of ones.
ModelDocument regression_document(const RegressionFit& fit, bool intercept);
ModelDocument pls_document(const PLSModel& model);
ModelDocument discriminant_document(const DiscriminantModel& model);
ModelDocument pca_document(const PCAModel& model);

RegressionFit regression_from_document(const ModelDocument& doc);
PLSModel pls_from_document(const ModelDocument& doc);
DiscriminantModel discriminant_from_document(const ModelDocument& doc);
PCAModel pca_from_document(const ModelDocument& doc);

// Regression and PLS: fitted responses; discriminant: group labels; PCA: scores.
Matrix predict(const ModelDocument& doc, const Eigen::Ref<const Matrix>& X);

void save_model(const std::string& path, const ModelDocument& doc);
ModelDocument load_model(const std::string& path);

}  // namespace robmv
