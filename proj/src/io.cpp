#include "robmv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

namespace robmv {

namespace {

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "N/A" || s == "NaN" || s == "nan" || s == "null" ||
           s == "NULL" || s == ".";
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

// Splits one record; quoted fields may contain the delimiter and doubled quotes.
std::vector<std::string> split_record(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

bool quotes_balanced(const std::string& s) { return std::count(s.begin(), s.end(), '"') % 2 == 0; }

std::optional<double> parse_number(std::string s, char decimal) {
    if (decimal != '.') std::replace(s.begin(), s.end(), decimal, '.');
    if (!s.empty() && s.front() == '+') s.erase(s.begin());
    double value = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return value;
}

std::string quote_field(const std::string& s, char delimiter) {
    if (s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string discriminant_kind_name(DiscriminantKind k) { return to_string(k); }

DiscriminantKind parse_discriminant_kind(const std::string& name) {
    if (name == "lda") return DiscriminantKind::lda;
    if (name == "qda") return DiscriminantKind::qda;
    if (name == "fisher") return DiscriminantKind::fisher;
    throw InputError("unknown discriminant kind: " + name);
}

Json weight_summary(const Vector& w) {
    if (w.size() == 0) return Json::object();
    return {{"min", w.minCoeff()}, {"max", w.maxCoeff()}, {"mean", w.mean()},
            {"below_half", Index((w.array() < 0.5).count())}};
}

const Json& field(const Json& j, const char* name) {
    if (!j.contains(name)) throw IoError(std::string("model document: missing field '") + name + "'");
    return j.at(name);
}

}  // namespace

Index Dataset::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InputError("no column named '" + name + "' in " + source);
    return Index(it - columns.begin());
}

Vector Dataset::column(const std::string& name) const { return values.col(column_index(name)); }

std::vector<std::string> Dataset::names_except(const std::vector<std::string>& excluded) const {
    std::vector<std::string> out;
    for (const auto& c : columns)
        if (std::find(excluded.begin(), excluded.end(), c) == excluded.end()) out.push_back(c);
    return out;
}

Matrix Dataset::select(const std::vector<std::string>& names) const {
    Matrix out(n(), Index(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(Index(j)) = column(names[j]);
    return out;
}

Dataset parse_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
    if (options.delimiter == options.decimal) throw InputError("CSV: delimiter and decimal mark must differ");
    Dataset ds;
    ds.source = source;
    std::vector<std::vector<double>> rows;
    std::string line;
    Index line_no = 0;
    bool header_done = options.header == HeaderMode::absent;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const Index first_line = line_no;
        // A quoted field may span lines.
        std::string next;
        while (!quotes_balanced(line) && std::getline(in, next)) {
            ++line_no;
            line += "\n" + next;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.front() == '#') {
            ds.comments.push_back(trim(line.substr(1)));
            continue;
        }
        auto fields = split_record(line, options.delimiter);

        if (!header_done) {
            header_done = true;
            bool textual = options.header == HeaderMode::present;
            if (options.header == HeaderMode::detect)
                for (const auto& f : fields)
                    if (!is_missing_token(f) && !parse_number(f, options.decimal)) textual = true;
            if (textual) {
                ds.columns = fields;
                width = fields.size();
                continue;
            }
        }
        if (width == 0) {
            width = fields.size();
            for (std::size_t j = 0; j < width; ++j) ds.columns.push_back("c" + std::to_string(j + 1));
        }

        ++ds.report.rows_read;
        if (fields.size() != width) {
            ds.report.rejected.push_back({first_line, "expected " + std::to_string(width) + " fields, found " +
                                                          std::to_string(fields.size())});
            continue;
        }
        std::vector<double> row(width);
        std::string reason;
        for (std::size_t j = 0; j < width && reason.empty(); ++j) {
            if (is_missing_token(fields[j])) {
                reason = "missing value in column '" + ds.columns[j] + "'";
            } else if (auto v = parse_number(fields[j], options.decimal)) {
                if (!std::isfinite(*v)) reason = "non-finite value in column '" + ds.columns[j] + "'";
                row[j] = *v;
            } else {
                reason = "non-numeric cell '" + fields[j] + "' in column '" + ds.columns[j] + "'";
            }
        }
        if (!reason.empty()) {
            ds.report.rejected.push_back({first_line, reason});
            continue;
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw IoError("CSV: no usable data rows in " + source);
    ds.values.resize(Index(rows.size()), Index(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) ds.values(Index(i), Index(j)) = rows[i][j];
    ds.report.rows_kept = Index(rows.size());
    return ds;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return parse_csv(in, options, path);
}

std::string format_double(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& columns, const Eigen::Ref<const Matrix>& values,
               const std::vector<std::string>& comments, char delimiter) {
    if (Index(columns.size()) != values.cols()) throw InputError("CSV: column names do not match the matrix");
    for (const auto& c : comments) out << "# " << c << '\n';
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? std::string(1, delimiter) : "") << quote_field(columns[j], delimiter);
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) out << (j ? std::string(1, delimiter) : "") << format_double(values(i, j));
        out << '\n';
    }
}

void save_csv(const std::string& path, const std::vector<std::string>& columns, const Eigen::Ref<const Matrix>& values,
              const std::vector<std::string>& comments, char delimiter) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_csv(out, columns, values, comments, delimiter);
    if (!out) throw IoError("write failed for " + path);
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::regression: return "regression";
        case ModelKind::pls: return "pls";
        case ModelKind::discriminant: return "discriminant";
        case ModelKind::pca: return "pca";
    }
    return "regression";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "regression") return ModelKind::regression;
    if (name == "pls") return ModelKind::pls;
    if (name == "discriminant") return ModelKind::discriminant;
    if (name == "pca") return ModelKind::pca;
    throw IoError("model document: unknown kind '" + name + "'");
}

Json matrix_to_json(const Eigen::Ref<const Matrix>& M) {
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const Json& j) {
    const Index r = field(j, "rows").get<Index>(), c = field(j, "cols").get<Index>();
    const Json& data = field(j, "data");
    if (Index(data.size()) != r) throw IoError("model document: matrix row count mismatch");
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i) {
        if (Index(data[std::size_t(i)].size()) != c) throw IoError("model document: ragged matrix");
        for (Index k = 0; k < c; ++k) {
            const Json& v = data[std::size_t(i)][std::size_t(k)];
            M(i, k) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        }
    }
    return M;
}

Json vector_to_json(const Eigen::Ref<const Vector>& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw IoError("model document: expected an array");
    Vector v(Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[Index(i)] = j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
    return v;
}

Json ModelDocument::to_json() const {
    return {{"schema", "robmv-model"},
            {"version", version},
            {"kind", to_string(kind)},
            {"method", method},
            {"predictors", predictors},
            {"response", response},
            {"labels", labels},
            {"intercept", intercept},
            {"seed", seed},
            {"config", config},
            {"parameters", parameters},
            {"diagnostics", diagnostics}};
}

ModelDocument ModelDocument::from_json(const Json& j) {
    if (!j.is_object() || j.value("schema", "") != "robmv-model") throw IoError("not a model document");
    ModelDocument doc;
    doc.version = field(j, "version").get<int>();
    if (doc.version != kSchemaVersion)
        throw IoError("model document: unsupported schema version " + std::to_string(doc.version));
    doc.kind = parse_model_kind(field(j, "kind").get<std::string>());
    doc.method = field(j, "method").get<std::string>();
    doc.predictors = field(j, "predictors").get<std::vector<std::string>>();
    doc.response = j.value("response", "");
    doc.labels = j.value("labels", "");
    doc.intercept = j.value("intercept", false);
    doc.seed = j.value("seed", std::uint64_t(0));
    doc.config = j.value("config", Json::object());
    doc.parameters = field(j, "parameters");
    doc.diagnostics = j.value("diagnostics", Json::object());
    return doc;
}

ModelDocument regression_document(const RegressionFit& fit, bool intercept) {
    ModelDocument doc;
    doc.kind = ModelKind::regression;
    doc.method = fit.info.method;
    doc.intercept = intercept;
    doc.seed = fit.info.seed;
    doc.parameters = {{"beta", vector_to_json(fit.beta)},
                      {"sigma", fit.sigma.value},
                      {"sigma_consistency", fit.sigma.consistency},
                      {"sigma_method", fit.sigma.method}};
    doc.diagnostics = {{"family", fit.info.family},
                       {"k", fit.info.k},
                       {"h", fit.info.h},
                       {"delta", fit.info.delta},
                       {"efficiency", fit.info.efficiency},
                       {"iterations", fit.info.iterations},
                       {"converged", fit.info.converged},
                       {"n_subsamples", fit.info.n_subsamples},
                       {"skipped_subsamples", fit.info.skipped_subsamples},
                       {"lambda", fit.info.lambda},
                       {"mu", fit.info.mu},
                       {"penalty", fit.info.penalty},
                       {"support", fit.info.support},
                       {"weights", weight_summary(fit.case_weights)}};
    return doc;
}

RegressionFit regression_from_document(const ModelDocument& doc) {
    if (doc.kind != ModelKind::regression) throw IoError("model document is not a regression model");
    RegressionFit fit;
    fit.beta = vector_from_json(field(doc.parameters, "beta"));
    fit.sigma.value = doc.parameters.value("sigma", 0.0);
    fit.sigma.consistency = doc.parameters.value("sigma_consistency", 1.0);
    fit.sigma.method = doc.parameters.value("sigma_method", "");
    fit.info.method = doc.method;
    fit.info.seed = doc.seed;
    fit.info.k = doc.diagnostics.value("k", 0.0);
    fit.info.h = doc.diagnostics.value("h", Index(0));
    fit.info.efficiency = doc.diagnostics.value("efficiency", 0.0);
    fit.info.iterations = doc.diagnostics.value("iterations", 0);
    fit.info.converged = doc.diagnostics.value("converged", true);
    return fit;
}

ModelDocument pls_document(const PLSModel& m) {
    ModelDocument doc;
    doc.kind = ModelKind::pls;
    doc.method = m.method;
    doc.parameters = {{"x_center", vector_to_json(m.x_center)},
                      {"x_scale", vector_to_json(m.x_scale)},
                      {"y_center", vector_to_json(m.y_center)},
                      {"weights", matrix_to_json(m.weights)},
                      {"rotations", matrix_to_json(m.rotations)},
                      {"loadings", matrix_to_json(m.loadings)},
                      {"coefficients", matrix_to_json(m.coefficients)},
                      {"n_components", m.n_components},
                      {"eta", m.eta},
                      {"preprocess", m.preprocess == PlsPreprocess::spatial_sign ? "spatial-sign" : "none"}};
    doc.diagnostics = {{"iterations", m.iterations}, {"converged", m.converged},
                       {"weights", weight_summary(m.case_weights)}};
    return doc;
}

PLSModel pls_from_document(const ModelDocument& doc) {
    if (doc.kind != ModelKind::pls) throw IoError("model document is not a PLS model");
    const Json& p = doc.parameters;
    PLSModel m;
    m.method = doc.method;
    m.x_center = vector_from_json(field(p, "x_center"));
    m.x_scale = vector_from_json(field(p, "x_scale"));
    m.y_center = vector_from_json(field(p, "y_center"));
    m.weights = matrix_from_json(field(p, "weights"));
    m.rotations = matrix_from_json(field(p, "rotations"));
    m.loadings = matrix_from_json(field(p, "loadings"));
    m.coefficients = matrix_from_json(field(p, "coefficients"));
    m.n_components = p.value("n_components", Index(0));
    m.eta = p.value("eta", 0.0);
    m.preprocess = p.value("preprocess", "none") == "spatial-sign" ? PlsPreprocess::spatial_sign : PlsPreprocess::none;
    m.iterations = doc.diagnostics.value("iterations", 0);
    m.converged = doc.diagnostics.value("converged", true);
    return m;
}

ModelDocument discriminant_document(const DiscriminantModel& m) {
    ModelDocument doc;
    doc.kind = ModelKind::discriminant;
    doc.method = discriminant_kind_name(m.kind);
    Json means = Json::array(), scatters = Json::array();
    for (const auto& v : m.means) means.push_back(vector_to_json(v));
    for (const auto& s : m.scatters) scatters.push_back(matrix_to_json(s));
    doc.parameters = {{"estimator", to_string(m.estimator)},
                      {"pooling", to_string(m.pooling)},
                      {"means", means},
                      {"scatters", scatters},
                      {"pooled", matrix_to_json(m.pooled)},
                      {"priors", vector_to_json(m.priors)},
                      {"fisher_basis", matrix_to_json(m.fisher_basis)},
                      {"fisher_eigenvalues", vector_to_json(m.fisher_eigenvalues)}};
    doc.diagnostics = {{"groups", m.groups()}};
    return doc;
}

DiscriminantModel discriminant_from_document(const ModelDocument& doc) {
    if (doc.kind != ModelKind::discriminant) throw IoError("model document is not a discriminant model");
    const Json& p = doc.parameters;
    DiscriminantModel m;
    m.kind = parse_discriminant_kind(doc.method);
    m.estimator = parse_scatter_estimator(field(p, "estimator").get<std::string>());
    m.pooling = parse_pooling(field(p, "pooling").get<std::string>());
    for (const auto& v : field(p, "means")) m.means.push_back(vector_from_json(v));
    for (const auto& s : field(p, "scatters")) m.scatters.push_back(matrix_from_json(s));
    m.pooled = matrix_from_json(field(p, "pooled"));
    m.priors = vector_from_json(field(p, "priors"));
    m.fisher_basis = matrix_from_json(field(p, "fisher_basis"));
    m.fisher_eigenvalues = vector_from_json(field(p, "fisher_eigenvalues"));
    return m;
}

ModelDocument pca_document(const PCAModel& m) {
    ModelDocument doc;
    doc.kind = ModelKind::pca;
    doc.method = m.method;
    doc.parameters = {{"center", vector_to_json(m.center)},
                      {"loadings", matrix_to_json(m.loadings)},
                      {"eigenvalues", vector_to_json(m.eigenvalues)},
                      {"spectrum", vector_to_json(m.spectrum)}};
    doc.diagnostics = {{"iterations", m.iterations}, {"weights", weight_summary(m.case_weights)}};
    return doc;
}

PCAModel pca_from_document(const ModelDocument& doc) {
    if (doc.kind != ModelKind::pca) throw IoError("model document is not a PCA model");
    const Json& p = doc.parameters;
    PCAModel m;
    m.method = doc.method;
    m.center = vector_from_json(field(p, "center"));
    m.loadings = matrix_from_json(field(p, "loadings"));
    m.eigenvalues = vector_from_json(field(p, "eigenvalues"));
    m.spectrum = vector_from_json(field(p, "spectrum"));
    m.iterations = doc.diagnostics.value("iterations", 0);
    return m;
}

Matrix predict(const ModelDocument& doc, const Eigen::Ref<const Matrix>& X) {
    if (!doc.predictors.empty() && X.cols() != Index(doc.predictors.size()))
        throw DimensionError("prediction data has " + std::to_string(X.cols()) + " predictors, the model " +
                         std::to_string(doc.predictors.size()));
    switch (doc.kind) {
        case ModelKind::regression: {
            const RegressionFit fit = regression_from_document(doc);
            if (!doc.intercept) return fit.predict(X);
            Matrix Z(X.rows(), X.cols() + 1);
            Z.col(0).setOnes();
            Z.rightCols(X.cols()) = X;
            return fit.predict(Z);
        }
        case ModelKind::pls: return pls_from_document(doc).predict(X);
        case ModelKind::discriminant: {
            const Labels labels = discriminant_from_document(doc).classify(X);
            Matrix out(X.rows(), 1);
            // Fits from labelled files store the original label values; indices otherwise.
            std::vector<double> values;
            if (doc.parameters.contains("label_values")) values = doc.parameters["label_values"].get<std::vector<double>>();
            for (Index i = 0; i < X.rows(); ++i) {
                const auto g = std::size_t(labels[std::size_t(i)]);
                out(i, 0) = g < values.size() ? values[g] : double(g);
            }
            return out;
        }
        case ModelKind::pca: return pca_from_document(doc).scores(X);
    }
    throw IoError("model document: unknown kind");
}

void save_model(const std::string& path, const ModelDocument& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

ModelDocument load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError("malformed model document " + path + ": " + e.what());
    }
    try {
        return ModelDocument::from_json(j);
    } catch (const Json::exception& e) {
        throw IoError("malformed model document " + path + ": " + e.what());
    }
}

}  // namespace robmv
