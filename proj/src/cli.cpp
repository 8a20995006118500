#include "robmv/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "robmv/discriminant.hpp"
#include "robmv/io.hpp"
#include "robmv/loc_cov.hpp"
#include "robmv/pca.hpp"
#include "robmv/pls.hpp"
#include "robmv/regression.hpp"
#include "robmv/scenarios.hpp"
#include "robmv/sparse.hpp"
#include "robmv/validation.hpp"

namespace robmv::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

// Bad option values detected after parsing; exit code 2 like parse errors.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::set<std::string> kRegressionMethods{"ols", "l1", "huber", "lts", "lms", "s", "mm", "lasso", "enet", "sparse-lts"};
const std::set<std::string> kPlsMethods{"pls", "snipls", "sign-pls", "prm", "sprm"};
const std::set<std::string> kDiscriminantMethods{"lda", "qda", "fisher"};
const std::set<std::string> kPcaMethods{"pca", "spc", "maronna", "pp-pca"};
// Flags naming output files; left out of the embedded command and config so that a
// replay into another path reproduces the artifact byte for byte.
const std::set<std::string> kOutputFlags{"--out", "-o", "--test-out", "--estimates-out"};

std::vector<std::string> set_items(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

std::vector<std::string> all_methods() {
    std::vector<std::string> out;
    for (const auto* s : {&kRegressionMethods, &kPlsMethods, &kDiscriminantMethods, &kPcaMethods})
        out.insert(out.end(), s->begin(), s->end());
    return out;
}

struct Settings {
    std::string in, out, test_out, estimates_out, model;
    std::string y, labels;
    std::vector<std::string> drop;
    std::string delimiter = ",";
    std::string decimal = ".";
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;

    std::string method;
    bool no_intercept = false;
    double efficiency = 0.85;
    double huber_k = 1.345;
    Index h = 0;
    Index subsamples = 0;
    Index components = 2;
    std::string components_grid = "1:5";
    double eta = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    Index q = 2;
    std::string estimator = "classical";
    std::string outlier_estimator = "mcd";
    std::string pooling = "pooled-average";
    std::string index = "mad";

    Index splits = 100;
    double test_fraction = 0.25;
    double trim = 0.15;

    Index replicates = 2000;
    std::string spread = "sd";
    double spread_trim = 0.2;
    double level = 0.95;
    std::string scheme = "n-out-of-n";
    Index n_replace = 0;

    std::string kind = "maxbias";
    Index coefficient = -1;
    Index row = -1;
    double from = -1000.0, to = 1000.0;
    Index steps = 41;
    double x_shift = 0.0;
    std::string m_grid = "0:40";
    Index trials = 10;
    double a_low = 0.0, a_high = 10.0, b_low = 1e4, b_high = 1e5;
    double threshold = 10.0;

    std::string scenario;
    Index n = 0;
    double eps = -1.0;

    std::string pca = "spc";
    bool reweight = false;
};

struct Provenance {
    Json command = Json::array();
    Json options = Json::object();

    std::vector<std::string> comment_lines(std::uint64_t seed) const {
        std::vector<std::string> lines{"command: " + command.dump(), "seed: " + std::to_string(seed)};
        for (const auto& [key, value] : options.items()) lines.push_back("config: " + key + "=" + value.get<std::string>());
        return lines;
    }
    Json config() const { return {{"command", command}, {"options", options}}; }
};

Provenance provenance(int argc, char** argv, const CLI::App& sub) {
    Provenance p;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto eq = arg.find('=');
        if (kOutputFlags.count(arg)) {
            ++i;
            continue;
        }
        if (eq != std::string::npos && kOutputFlags.count(arg.substr(0, eq))) continue;
        p.command.push_back(arg);
    }
    std::istringstream lines(sub.config_to_str(true, false));
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.front() == '[' || line.front() == '#') continue;
        const std::string key = line.substr(0, eq);
        if (kOutputFlags.count("--" + key)) continue;
        std::string value = line.substr(eq + 1);
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        p.options[key] = value;
    }
    return p;
}

char delimiter_of(const Settings& s) {
    if (s.delimiter == "tab" || s.delimiter == "\\t") return '\t';
    if (s.delimiter.size() != 1) throw UsageError("delimiter must be a single character or 'tab'");
    return s.delimiter[0];
}

Dataset read_input(const Settings& s) {
    if (s.in.empty()) throw UsageError("--in is required");
    CsvOptions options;
    options.delimiter = delimiter_of(s);
    if (s.decimal.size() != 1) throw UsageError("decimal mark must be a single character");
    options.decimal = s.decimal[0];
    return load_csv(s.in, options);
}

std::vector<std::string> predictor_names(const Dataset& ds, const Settings& s) {
    std::vector<std::string> excluded = s.drop;
    if (!s.y.empty()) excluded.push_back(s.y);
    if (!s.labels.empty()) excluded.push_back(s.labels);
    for (const auto& name : excluded) ds.column_index(name);
    auto names = ds.names_except(excluded);
    if (names.empty()) throw UsageError("no predictor columns left");
    return names;
}

Vector response_of(const Dataset& ds, const Settings& s) {
    if (s.y.empty()) throw UsageError("--y is required for method " + s.method);
    return ds.column(s.y);
}

Matrix with_ones(const Matrix& X) {
    Matrix Z(X.rows(), X.cols() + 1);
    Z.col(0).setOnes();
    Z.rightCols(X.cols()) = X;
    return Z;
}

void report_rejections(const Dataset& ds, std::ostream& err) {
    for (const auto& r : ds.report.rejected) err << "warning: " << ds.source << ":" << r.line << ": " << r.reason << '\n';
}

std::vector<int> parse_grid(const std::string& spec) {
    std::vector<int> grid;
    try {
        const auto colon = spec.find(':');
        if (colon != std::string::npos) {
            const int a = std::stoi(spec.substr(0, colon)), b = std::stoi(spec.substr(colon + 1));
            if (a > b) throw UsageError("empty grid " + spec);
            for (int k = a; k <= b; ++k) grid.push_back(k);
        } else {
            std::stringstream ss(spec);
            std::string item;
            while (std::getline(ss, item, ',')) grid.push_back(std::stoi(item));
        }
    } catch (const std::logic_error&) {
        throw UsageError("cannot parse grid '" + spec + "' (use a:b or a,b,c)");
    }
    if (grid.empty()) throw UsageError("empty grid");
    return grid;
}

SubsampleOptions subsampling(const Settings& s) {
    SubsampleOptions o;
    o.n_subsamples = s.subsamples;
    o.seed = s.seed;
    return o;
}

RegressionFit fit_regression(const RegressionProblem& pr, const Settings& s) {
    const std::string& m = s.method;
    if (m == "ols") return ols_fit(pr);
    if (m == "l1") return l1_fit(pr);
    if (m == "huber") return m_fit(pr, RhoFamily::huber(s.huber_k));
    if (m == "lts") return lts_fit(pr, s.h, subsampling(s));
    if (m == "lms") return lms_fit(pr, s.h, subsampling(s));
    if (m == "s") return s_fit(pr, subsampling(s));
    if (m == "mm") {
        MMOptions o;
        o.efficiency = s.efficiency;
        o.subsampling = subsampling(s);
        return mm_fit(pr, o);
    }
    if (m == "lasso") return lasso_fit(pr, s.lambda);
    if (m == "enet") return enet_fit(pr, s.lambda, s.mu);
    if (m == "sparse-lts") {
        SparseLtsOptions o;
        o.seed = s.seed;
        o.threads = s.threads;
        return sparse_lts_fit(pr, s.lambda, s.h, o);
    }
    throw UsageError("not a regression method: " + m);
}

PrmOptions prm_options(const Settings& s) {
    PrmOptions o;
    o.seed = s.seed;
    return o;
}

PLSModel fit_pls(const Matrix& X, const Vector& y, Index k, const Settings& s) {
    const std::string& m = s.method;
    if (m == "pls") return pls_fit(X, y, k);
    if (m == "snipls") return snipls_fit(X, y, k, s.eta);
    if (m == "sign-pls") return spatial_sign_pls(X, y, k);
    if (m == "prm") return prm_fit(X, y, k, prm_options(s));
    if (m == "sprm") return sprm_fit(X, y, k, s.eta, prm_options(s));
    throw UsageError("not a PLS method: " + m);
}

PCAModel fit_pca(const Matrix& X, const std::string& method, Index q, const Settings& s) {
    if (method == "pca" || method == "classical") return classical_pca(X, q);
    if (method == "spc") return spherical_pca(X, q);
    if (method == "maronna") return maronna_pca(X, q);
    if (method == "pp-pca" || method == "pp") return pp_pca(X, q, parse_projection_index(s.index));
    throw UsageError("not a PCA method: " + method);
}

// Maps arbitrary numeric labels to 0..g-1 in ascending order.
std::pair<GroupedData, std::vector<double>> grouped(const Matrix& X, const Vector& raw) {
    std::vector<double> values(raw.data(), raw.data() + raw.size());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    GroupedData g;
    g.X = X;
    for (Index i = 0; i < raw.size(); ++i)
        g.labels.push_back(int(std::lower_bound(values.begin(), values.end(), raw[i]) - values.begin()));
    g.n_groups = int(values.size());
    return {g, values};
}

void write_artifact(const std::string& path, const std::vector<std::string>& columns, const Matrix& values,
                    const std::vector<std::string>& comments, std::ostream& out) {
    if (path.empty() || path == "-") {
        write_csv(out, columns, values, comments);
    } else {
        save_csv(path, columns, values, comments);
        out << "wrote: " << path << '\n';
    }
}

int run_fit(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const auto names = predictor_names(ds, s);
    const Matrix X = ds.select(names);
    ModelDocument doc;

    if (kRegressionMethods.count(s.method)) {
        const bool intercept = !s.no_intercept;
        const RegressionProblem pr{intercept ? with_ones(X) : X, response_of(ds, s), intercept};
        const RegressionFit fit = fit_regression(pr, s);
        doc = regression_document(fit, intercept);
        doc.response = s.y;
        if (fit.info.k != 0.0) out << "k: " << fit.info.k << '\n';
    } else if (kPlsMethods.count(s.method)) {
        doc = pls_document(fit_pls(X, response_of(ds, s), s.components, s));
        doc.response = s.y;
    } else if (kDiscriminantMethods.count(s.method)) {
        if (s.labels.empty()) throw UsageError("--labels is required for method " + s.method);
        const auto [data, values] = grouped(X, ds.column(s.labels));
        GroupEstimateOptions o;
        o.seed = s.seed;
        const auto estimator = parse_scatter_estimator(s.estimator);
        DiscriminantModel model = s.method == "lda"   ? lda_fit(data, estimator, parse_pooling(s.pooling), o)
                                  : s.method == "qda" ? qda_fit(data, estimator, o)
                                                      : fisher_fit(data, estimator, o);
        doc = discriminant_document(model);
        doc.labels = s.labels;
        doc.parameters["label_values"] = values;
    } else if (kPcaMethods.count(s.method)) {
        doc = pca_document(fit_pca(X, s.method, s.q, s));
    } else {
        throw UsageError("unknown method " + s.method);
    }
    doc.predictors = names;
    doc.seed = s.seed;
    doc.config = prov.config();
    if (s.out.empty()) throw UsageError("--out is required for fit");
    save_model(s.out, doc);
    out << "method: " << doc.method << '\n' << "seed: " << s.seed << '\n' << "wrote: " << s.out << '\n';
    return 0;
}

int run_predict(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    if (s.model.empty()) throw UsageError("--model is required");
    const ModelDocument doc = load_model(s.model);
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const Matrix P = predict(doc, ds.select(doc.predictors));
    std::vector<std::string> columns;
    if (doc.kind == ModelKind::discriminant) columns = {"label"};
    else if (doc.kind == ModelKind::pca)
        for (Index j = 0; j < P.cols(); ++j) columns.push_back("score" + std::to_string(j + 1));
    else if (P.cols() == 1) columns = {"prediction"};
    else
        for (Index j = 0; j < P.cols(); ++j) columns.push_back("prediction" + std::to_string(j + 1));
    auto comments = prov.comment_lines(doc.seed);
    comments.push_back("model: " + doc.method + " (" + to_string(doc.kind) + ")");
    write_artifact(s.out, columns, P, comments, out);
    return 0;
}

int run_cv(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    if (!kPlsMethods.count(s.method)) throw UsageError("cv supports the PLS methods: pls, snipls, sign-pls, prm, sprm");
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const Matrix X = ds.select(predictor_names(ds, s));
    const Vector y = response_of(ds, s);
    const auto grid = parse_grid(s.components_grid);
    const FitAtComplexity family = [&s](const Matrix& Xt, const Vector& yt, int k) -> Predictor {
        const PLSModel m = fit_pls(Xt, yt, k, s);
        return [m](const Matrix& Z) { return Vector(m.predict(Z).col(0)); };
    };
    CvOptions o;
    o.n_splits = s.splits;
    o.test_fraction = s.test_fraction;
    o.trim = s.trim;
    o.seed = s.seed;
    o.threads = s.threads;
    const CVReport rep = monte_carlo_cv(X, y, family, grid, o);
    Matrix table(Index(grid.size()), 5);
    for (Index c = 0; c < Index(grid.size()); ++c)
        table.row(c) << grid[std::size_t(c)], rep.rmsecv[c], rep.standard_error[c], double(rep.failures[std::size_t(c)]),
            grid[std::size_t(c)] == rep.chosen ? 1.0 : 0.0;
    auto comments = prov.comment_lines(s.seed);
    comments.push_back("chosen: " + std::to_string(rep.chosen));
    comments.push_back("one_se_choice: " + std::to_string(rep.one_se_choice));
    write_artifact(s.out, {"complexity", "rmsecv", "standard_error", "failures", "chosen"}, table, comments, out);
    out << "chosen: " << rep.chosen << '\n';
    return 0;
}

// Coefficients on the raw predictor scale, intercept first.
Vector raw_coefficients(const PLSModel& m) {
    if (m.preprocess != PlsPreprocess::none)
        throw UnsupportedError("bootstrap needs a linear model; spatial-sign PLS is not linear in X");
    const Vector b = m.coefficients.col(0).cwiseQuotient(m.x_scale);
    Vector out(b.size() + 1);
    out[0] = m.y_center[0] - m.x_center.dot(b);
    out.tail(b.size()) = b;
    return out;
}

int run_bootstrap(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const auto names = predictor_names(ds, s);
    Matrix rows(ds.n(), Index(names.size()) + 1);
    rows.leftCols(Index(names.size())) = ds.select(names);
    rows.col(Index(names.size())) = response_of(ds, s);
    const Index p = Index(names.size());

    VectorStatistic stat;
    if (kRegressionMethods.count(s.method)) {
        stat = [&s, p](const Matrix& d) {
            const bool intercept = !s.no_intercept;
            const Matrix X = d.leftCols(p);
            return fit_regression({intercept ? with_ones(X) : X, d.col(p), intercept}, s).beta;
        };
    } else if (kPlsMethods.count(s.method)) {
        stat = [&s, p](const Matrix& d) {
            return raw_coefficients(fit_pls(d.leftCols(p), d.col(p), s.components, s));
        };
    } else {
        throw UsageError("bootstrap supports regression and PLS methods");
    }
    BootstrapOptions o;
    o.replicates = s.replicates;
    o.seed = s.seed;
    o.spread = parse_spread_kind(s.spread);
    o.trim = s.spread_trim;
    o.level = s.level;
    o.scheme = s.scheme == "partial" ? ResampleScheme::partial_replacement : ResampleScheme::n_out_of_n;
    o.n_replace = s.n_replace;
    o.threads = s.threads;
    const ResamplingReport rep = bootstrap(stat, rows, o);

    const Index dim = rep.original.size();
    Matrix table(dim, 8);
    for (Index j = 0; j < dim; ++j)
        table.row(j) << double(j), rep.original[j], rep.sd[j], rep.trimmed_sd[j], rep.percentile_half_width[j],
            rep.spread[j], rep.lower[j], rep.upper[j];
    auto comments = prov.comment_lines(s.seed);
    comments.push_back("replicates: " + std::to_string(rep.replicates));
    comments.push_back("failures: " + std::to_string(rep.failures));
    write_artifact(s.out, {"coefficient", "original", "sd", "trimmed_sd", "percentile_half_width", "spread", "lower", "upper"},
                   table, comments, out);
    if (!s.estimates_out.empty()) {
        std::vector<std::string> cols;
        for (Index j = 0; j < dim; ++j) cols.push_back("b" + std::to_string(j));
        save_csv(s.estimates_out, cols, rep.estimates, comments);
    }
    out << "failures: " << rep.failures << '\n';
    return 0;
}

std::vector<Index> parse_m_grid(const std::string& spec, Index n) {
    std::vector<Index> out;
    for (int m : parse_grid(spec)) {
        if (m < 0 || m > n) throw UsageError("m grid values must lie in [0, n]");
        out.push_back(m);
    }
    return out;
}

int run_diagnose(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    if (!kRegressionMethods.count(s.method)) throw UsageError("diagnose supports the regression methods");
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const auto names = predictor_names(ds, s);
    const Index p = Index(names.size());
    Matrix rows(ds.n(), p + 1);
    rows.leftCols(p) = ds.select(names);
    rows.col(p) = response_of(ds, s);
    const bool intercept = !s.no_intercept;
    const Index coef = s.coefficient >= 0 ? s.coefficient : (intercept ? 1 : 0);
    const auto beta_of = [&s, p, intercept](const Matrix& d) {
        const Matrix X = d.leftCols(p);
        return fit_regression({intercept ? with_ones(X) : X, d.col(p), intercept}, s).beta;
    };
    auto comments = prov.comment_lines(s.seed);

    if (s.kind == "eif") {
        const Index row = s.row >= 0 ? s.row : central_row(rows);
        if (row >= rows.rows()) throw UsageError("--row out of range");
        Matrix points(s.steps, p + 1);
        Vector offsets = Vector::LinSpaced(s.steps, s.from, s.to);
        for (Index k = 0; k < s.steps; ++k) {
            points.row(k) = rows.row(row);
            points.row(k).head(p).array() += s.x_shift;
            points(k, p) += offsets[k];
        }
        const auto curve = empirical_influence([&](const Matrix& d) { return beta_of(d)[coef]; }, rows, points, row);
        Matrix table(s.steps, 2);
        table << offsets, curve.values;
        comments.push_back("replaced_row: " + std::to_string(row));
        write_artifact(s.out, {"offset", "eif"}, table, comments, out);
        return 0;
    }

    ContaminationSpec spec;
    spec.a_low = s.a_low;
    spec.a_high = s.a_high;
    spec.b_low = s.b_low;
    spec.b_high = s.b_high;
    MaxbiasOptions o;
    o.trials = s.trials;
    o.seed = s.seed;
    o.threads = s.threads;
    const VectorStatistic slopes = [&](const Matrix& d) {
        const Vector b = beta_of(d);
        return Vector(intercept ? b.tail(b.size() - 1) : b);
    };
    MaxbiasCurve curve;
    if (s.kind == "maxbias") {
        curve = empirical_maxbias(slopes, rows, spec, parse_m_grid(s.m_grid, rows.rows()), o);
    } else if (s.kind == "breakdown") {
        const BreakdownResult b = breakdown_scan(slopes, rows, spec, s.threshold, o);
        curve = b.curve;
        comments.push_back("breakdown_fraction: " + format_double(b.fraction));
        comments.push_back(std::string("exceeded: ") + (b.exceeded ? "true" : "false"));
        out << "breakdown_fraction: " << format_double(b.fraction) << (b.exceeded ? "" : " (never exceeded)") << '\n';
    } else {
        throw UsageError("--kind must be eif, maxbias or breakdown");
    }
    comments.push_back("lower_bound: the maximum is over sampled contaminations only");
    Matrix table(Index(curve.m_grid.size()), 4);
    for (Index k = 0; k < table.rows(); ++k) {
        const double m = double(curve.m_grid[std::size_t(k)]);
        table.row(k) << m, m / double(curve.n), curve.bias[k], curve.raw_bias[k];
    }
    write_artifact(s.out, {"m", "fraction", "bias", "raw_bias"}, table, comments, out);
    return 0;
}

std::pair<std::vector<std::string>, Matrix> scenario_table(const Matrix& X, const Vector& y, const std::vector<int>& labels,
                                                           const std::vector<bool>& flags) {
    std::vector<std::string> cols;
    for (Index j = 0; j < X.cols(); ++j) cols.push_back("x" + std::to_string(j + 1));
    const bool has_y = y.size() == X.rows() && y.size() > 0;
    const bool has_labels = Index(labels.size()) == X.rows() && !labels.empty();
    const bool has_flags = Index(flags.size()) == X.rows() && !flags.empty();
    if (has_y) cols.push_back("y");
    if (has_labels) cols.push_back("label");
    if (has_flags) cols.push_back("contaminated");
    Matrix t(X.rows(), Index(cols.size()));
    t.leftCols(X.cols()) = X;
    Index c = X.cols();
    if (has_y) t.col(c++) = y;
    if (has_labels)
        for (Index i = 0; i < X.rows(); ++i) t(i, c) = labels[std::size_t(i)];
    if (has_labels) ++c;
    if (has_flags)
        for (Index i = 0; i < X.rows(); ++i) t(i, c) = flags[std::size_t(i)] ? 1.0 : 0.0;
    return {cols, t};
}

int run_simulate(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream&) {
    ScenarioParams params;
    params.n = s.n;
    params.eps = s.eps;
    const Scenario sc = simulate_scenario(s.scenario, s.seed, params);
    auto comments = prov.comment_lines(s.seed);
    comments.push_back("scenario: " + sc.name);
    for (const auto& [k, v] : sc.params) comments.push_back("param: " + k + "=" + format_double(v));
    if (sc.truth.size()) {
        std::string t = "truth:";
        for (Index j = 0; j < sc.truth.size(); ++j) t += " " + format_double(sc.truth[j]);
        comments.push_back(t);
    }
    const auto [cols, table] = scenario_table(sc.X, sc.y, sc.labels, sc.contaminated);
    write_artifact(s.out, cols, table, comments, out);
    if (!s.test_out.empty()) {
        if (sc.X_test.rows() == 0) throw UsageError("scenario " + sc.name + " has no test set");
        const auto [tcols, ttable] = scenario_table(sc.X_test, sc.y_test, sc.labels_test, {});
        save_csv(s.test_out, tcols, ttable, comments);
    }
    return 0;
}

int run_outliers(const Settings& s, const Provenance& prov, std::ostream& out, std::ostream& err) {
    const Dataset ds = read_input(s);
    report_rejections(ds, err);
    const Matrix X = ds.select(predictor_names(ds, s));
    const Index p = X.cols();

    CovarianceEstimate est;
    if (s.outlier_estimator == "mcd") {
        McdOptions o;
        o.h = s.h;
        o.seed = s.seed;
        o.reweight = s.reweight;
        est = mcd_fit(X, o);
    } else if (s.outlier_estimator == "classical") {
        est = classical_covariance(X);
    } else if (s.outlier_estimator == "sd") {
        StahelDonohoOptions o;
        o.seed = s.seed;
        est = stahel_donoho_fit(X, o);
    } else {
        throw UsageError("--estimator must be mcd, classical or sd");
    }
    Vector d2 = est.sq_distances.size() ? est.sq_distances : mahalanobis(X, est.location, est.scatter);
    const Vector classical = mahalanobis(X, column_means(X), sample_covariance(X));
    const double cutoff = chi2_quantile(0.975, double(p));
    Vector weights = est.case_weights.size() == X.rows() ? est.case_weights : Vector::Ones(X.rows());

    std::vector<std::string> cols{"row", "sq_distance", "classical_sq_distance", "case_weight", "flagged"};
    Matrix table(X.rows(), 5);
    for (Index i = 0; i < X.rows(); ++i)
        table.row(i) << double(i), d2[i], classical[i], weights[i], d2[i] > cutoff ? 1.0 : 0.0;
    if (s.pca != "none") {
        const Index q = std::min(s.q, p);
        const PCAModel pca = fit_pca(X, s.pca, q, s);
        const OutlierMap map = outlier_map(pca, X);
        table.conservativeResize(Eigen::NoChange, 7);
        table.col(5) = map.score_distance;
        table.col(6) = map.orthogonal_distance;
        cols.push_back("score_distance");
        cols.push_back("orthogonal_distance");
    }
    auto comments = prov.comment_lines(s.seed);
    comments.push_back("estimator: " + est.method);
    comments.push_back("cutoff: chi2_0.975(" + std::to_string(p) + ") = " + format_double(cutoff));
    write_artifact(s.out, cols, table, comments, out);
    out << "flagged: " << Index((d2.array() > cutoff).count()) << '\n';
    return 0;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
    if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
    if (dynamic_cast<const UnsupportedError*>(&e)) return "UnsupportedError";
    if (dynamic_cast<const InputError*>(&e)) return "InputError";
    if (dynamic_cast<const SingularityError*>(&e)) return "SingularityError";
    if (dynamic_cast<const DegenerateError*>(&e)) return "DegenerateError";
    if (dynamic_cast<const SparsityError*>(&e)) return "SparsityError";
    if (dynamic_cast<const ResamplingError*>(&e)) return "ResamplingError";
    if (dynamic_cast<const IoError*>(&e)) return "IoError";
    return "Error";
}

void add_io(CLI::App* sub, Settings& s, bool response, bool labels) {
    sub->add_option("-i,--in", s.in, "input CSV (cases in rows)");
    sub->add_option("-o,--out", s.out, "output file; '-' or empty writes to stdout");
    if (response) sub->add_option("--y", s.y, "response column");
    if (labels) sub->add_option("--labels", s.labels, "group label column");
    sub->add_option("--drop", s.drop, "columns to ignore");
    sub->add_option("--delimiter", s.delimiter, "field delimiter, or 'tab'")->capture_default_str();
    sub->add_option("--decimal", s.decimal, "decimal mark of the input")->capture_default_str();
    sub->add_option("--seed", s.seed, "seed for every random draw")->capture_default_str();
    sub->add_option("--threads", s.threads, "worker threads, 0 for all cores")->capture_default_str();
}

void add_model_options(CLI::App* sub, Settings& s) {
    sub->add_flag("--no-intercept", s.no_intercept, "fit without an intercept");
    sub->add_option("--efficiency", s.efficiency, "MM efficiency at the normal")->capture_default_str();
    sub->add_option("--huber-k", s.huber_k, "Huber tuning constant")->capture_default_str();
    sub->add_option("--subset-size", s.h, "subset size for LTS/LMS/sparse LTS/MCD, 0 for the default")->capture_default_str();
    sub->add_option("--subsamples", s.subsamples, "random subsets, 0 for the default")->capture_default_str();
    sub->add_option("--components", s.components, "PLS components")->capture_default_str();
    sub->add_option("--eta", s.eta, "sparsity of SNIPLS/SPRM in [0,1)")->capture_default_str();
    sub->add_option("--lambda", s.lambda, "L1 penalty")->capture_default_str();
    sub->add_option("--mu", s.mu, "squared L2 penalty")->capture_default_str();
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust multivariate methods: fitting, prediction, validation and diagnostics", "robmv"};
    app.require_subcommand(1);
    Settings s;

    auto* fit = app.add_subcommand("fit", "fit a model and save it as JSON");
    add_io(fit, s, true, true);
    fit->add_option("--method", s.method, "method")->required()->check(CLI::IsMember(all_methods()));
    add_model_options(fit, s);
    fit->add_option("--q", s.q, "PCA components")->capture_default_str();
    fit->add_option("--estimator", s.estimator, "scatter estimator: classical, mcd, spc-cov")
        ->capture_default_str()
        ->check(CLI::IsMember({"classical", "mcd", "spc-cov"}));
    fit->add_option("--pooling", s.pooling, "LDA pooling: per-group, pooled-average, center-then-joint")
        ->capture_default_str()
        ->check(CLI::IsMember({"per-group", "pooled-average", "center-then-joint"}));
    fit->add_option("--index", s.index, "projection index of pp-pca")
        ->capture_default_str()
        ->check(CLI::IsMember({"variance", "sd", "mad", "m-scale"}));

    auto* pred = app.add_subcommand("predict", "apply a saved model");
    add_io(pred, s, false, false);
    pred->add_option("--model", s.model, "model JSON")->required();

    auto* cv = app.add_subcommand("cv", "Monte Carlo cross-validation over PLS components");
    add_io(cv, s, true, false);
    cv->add_option("--method", s.method, "PLS method")->required()->check(CLI::IsMember(set_items(kPlsMethods)));
    cv->add_option("--components", s.components_grid, "grid a:b or a,b,c")->capture_default_str();
    cv->add_option("--eta", s.eta, "sparsity of SNIPLS/SPRM")->capture_default_str();
    cv->add_option("--splits", s.splits, "random splits")->capture_default_str();
    cv->add_option("--test-fraction", s.test_fraction, "share of cases in each test set")->capture_default_str();
    cv->add_option("--trim", s.trim, "share of the largest squared test residuals dropped")->capture_default_str();

    auto* boot = app.add_subcommand("bootstrap", "case bootstrap of the coefficients");
    add_io(boot, s, true, false);
    boot->add_option("--method", s.method, "regression or PLS method")->required()->check(
        CLI::IsMember([] {
            auto v = set_items(kRegressionMethods);
            for (const auto& m : kPlsMethods) v.push_back(m);
            return v;
        }()));
    add_model_options(boot, s);
    boot->add_option("--replicates", s.replicates, "bootstrap replicates")->capture_default_str();
    boot->add_option("--spread", s.spread, "sd, trimmed or percentile")
        ->capture_default_str()
        ->check(CLI::IsMember({"sd", "trimmed", "percentile"}));
    boot->add_option("--spread-trim", s.spread_trim, "trimming of the trimmed SD")->capture_default_str();
    boot->add_option("--level", s.level, "percentile interval coverage")->capture_default_str();
    boot->add_option("--scheme", s.scheme, "n-out-of-n or partial")
        ->capture_default_str()
        ->check(CLI::IsMember({"n-out-of-n", "partial"}));
    boot->add_option("--n-replace", s.n_replace, "rows replaced per replicate (partial), 0 random")->capture_default_str();
    boot->add_option("--estimates-out", s.estimates_out, "CSV of every replicate estimate");

    auto* diag = app.add_subcommand("diagnose", "influence, maxbias and breakdown curves");
    add_io(diag, s, true, false);
    diag->add_option("--method", s.method, "regression method")->required()->check(
        CLI::IsMember(set_items(kRegressionMethods)));
    add_model_options(diag, s);
    diag->add_option("--kind", s.kind, "eif, maxbias or breakdown")
        ->capture_default_str()
        ->check(CLI::IsMember({"eif", "maxbias", "breakdown"}));
    diag->add_option("--coefficient", s.coefficient, "coefficient traced by eif, -1 for the first slope")
        ->capture_default_str();
    diag->add_option("--row", s.row, "row moved by eif, -1 for the most central")->capture_default_str();
    diag->add_option("--from", s.from, "first response offset (eif)")->capture_default_str();
    diag->add_option("--to", s.to, "last response offset (eif)")->capture_default_str();
    diag->add_option("--steps", s.steps, "grid points (eif)")->capture_default_str();
    diag->add_option("--x-shift", s.x_shift, "shift added to the predictors of the moved row (eif)")
        ->capture_default_str();
    diag->add_option("--m", s.m_grid, "replaced-row counts a:b or a,b,c (maxbias)")->capture_default_str();
    diag->add_option("--trials", s.trials, "contamination draws per m")->capture_default_str();
    diag->add_option("--a-low", s.a_low, "predictor offset range, low")->capture_default_str();
    diag->add_option("--a-high", s.a_high, "predictor offset range, high")->capture_default_str();
    diag->add_option("--b-low", s.b_low, "response offset range, low")->capture_default_str();
    diag->add_option("--b-high", s.b_high, "response offset range, high")->capture_default_str();
    diag->add_option("--threshold", s.threshold, "bias that counts as breakdown")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "write a simulated data set");
    sim->add_option("--scenario", s.scenario, "scenario name")->required()->check(CLI::IsMember([] {
        auto names = scenario_names();
        for (const char* alias : {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "glass",
                                  "mislabels", "fig8/10-lda"})
            names.push_back(alias);
        return names;
    }()));
    sim->add_option("-o,--out", s.out, "output CSV; '-' or empty writes to stdout");
    sim->add_option("--test-out", s.test_out, "CSV for the scenario's test set");
    sim->add_option("--seed", s.seed, "seed")->capture_default_str();
    sim->add_option("--n", s.n, "sample size, 0 for the scenario default")->capture_default_str();
    sim->add_option("--eps", s.eps, "contamination fraction, negative for the default")->capture_default_str();

    auto* outl = app.add_subcommand("outliers", "robust distances, case weights and the PCA outlier map");
    add_io(outl, s, true, true);
    outl->add_option("--estimator", s.outlier_estimator, "mcd, classical or sd")
        ->capture_default_str()
        ->check(CLI::IsMember({"mcd", "classical", "sd"}));
    outl->add_option("--subset-size", s.h, "MCD subset size, 0 for the default")->capture_default_str();
    outl->add_flag("--reweight", s.reweight, "one-step reweighted MCD");
    outl->add_option("--pca", s.pca, "PCA for the outlier map: pca, spc, maronna, pp-pca or none")
        ->capture_default_str()
        ->check(CLI::IsMember({"pca", "spc", "maronna", "pp-pca", "none"}));
    outl->add_option("--q", s.q, "PCA components")->capture_default_str();
    outl->add_option("--index", s.index, "projection index of pp-pca")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const Provenance prov = provenance(argc, argv, *sub);
        const std::string name = sub->get_name();
        if (name == "fit") return run_fit(s, prov, out, err);
        if (name == "predict") return run_predict(s, prov, out, err);
        if (name == "cv") return run_cv(s, prov, out, err);
        if (name == "bootstrap") return run_bootstrap(s, prov, out, err);
        if (name == "diagnose") return run_diagnose(s, prov, out, err);
        if (name == "simulate") return run_simulate(s, prov, out, err);
        if (name == "outliers") return run_outliers(s, prov, out, err);
        throw UsageError("unknown subcommand " + name);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n' << "run with --help for usage\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << Json{{"type", error_type(e)}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
}

}  // namespace robmv::cli
