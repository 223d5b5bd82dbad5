#include "physgrid/pde_library.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "physgrid/errors.hpp"

namespace physgrid {

Partial Factor::partial() const {
    if (dx == 0 && dy == 0) return Partial::Value;
    if (dx == 1 && dy == 0) return Partial::X;
    if (dx == 0 && dy == 1) return Partial::Y;
    if (dx == 2 && dy == 0) return Partial::XX;
    if (dx == 0 && dy == 2) return Partial::YY;
    if (dx == 1 && dy == 1) return Partial::XY;
    throw UsageError("term factor: derivative order above 2");
}

TermSpec::TermSpec(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.size() > 2) throw UsageError("term: at most two factors per term");
    for (const Factor& f : factors_) {
        if (f.dx < 0 || f.dy < 0 || f.order() > 2) throw UsageError("term: derivative order per factor must be <= 2");
    }
    std::sort(factors_.begin(), factors_.end());
}

namespace {

std::string factor_text(const Factor& f, const std::vector<std::string>& names) {
    if (f.var >= names.size()) throw UsageError("term: variable index out of range");
    const std::string& v = names[f.var];
    switch (f.partial()) {
        case Partial::Value: return v;
        case Partial::X: return "d" + v + "/dx";
        case Partial::Y: return "d" + v + "/dy";
        case Partial::XX: return "d2" + v + "/dx2";
        case Partial::YY: return "d2" + v + "/dy2";
        case Partial::XY: return "d2" + v + "/dxdy";
        default: break;
    }
    throw UsageError("term: bad factor");
}

bool strip(std::string& s, const std::string& prefix, const std::string& suffix) {
    if (s.size() <= prefix.size() + suffix.size()) return false;
    if (s.compare(0, prefix.size(), prefix) != 0) return false;
    if (s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
    s = s.substr(prefix.size(), s.size() - prefix.size() - suffix.size());
    return true;
}

Factor parse_factor(std::string s, const std::vector<std::string>& names) {
    auto lookup = [&](const std::string& name) -> std::size_t {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw DataError("term references unknown variable '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    };
    // A plain variable name wins over derivative syntax.
    if (std::find(names.begin(), names.end(), s) != names.end()) return Factor{lookup(s), 0, 0};
    struct Form {
        const char* prefix;
        const char* suffix;
        int dx, dy;
    };
    static const Form forms[] = {{"d2", "/dxdy", 1, 1}, {"d2", "/dx2", 2, 0}, {"d2", "/dy2", 0, 2},
                                 {"d", "/dx", 1, 0},    {"d", "/dy", 0, 1}};
    for (const Form& f : forms) {
        std::string body = s;
        if (strip(body, f.prefix, f.suffix) && std::find(names.begin(), names.end(), body) != names.end()) {
            return Factor{lookup(body), f.dx, f.dy};
        }
    }
    throw DataError("cannot parse term factor '" + s + "'");
}

}  // namespace

std::string TermSpec::text(const std::vector<std::string>& names) const {
    if (factors_.empty()) return "1";
    std::string out = factor_text(factors_[0], names);
    for (std::size_t i = 1; i < factors_.size(); ++i) out += "*" + factor_text(factors_[i], names);
    return out;
}

TermSpec TermSpec::parse(const std::string& text, const std::vector<std::string>& names) {
    if (text == "1") return TermSpec();
    std::vector<Factor> factors;
    std::size_t start = 0;
    while (true) {
        std::size_t star = text.find('*', start);
        factors.push_back(parse_factor(text.substr(start, star - start), names));
        if (star == std::string::npos) break;
        start = star + 1;
    }
    return TermSpec(std::move(factors));
}

double Equation::coefficient(const TermSpec& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i] == term) return coefficients[i];
    }
    return 0.0;
}

void EquationSystem::validate() const {
    for (const Equation& eq : equations) {
        if (eq.variable >= variables.size()) throw DataError("equation: governed variable index out of range");
        if (eq.target_order != 1 && eq.target_order != 2) throw DataError("equation: target order must be 1 or 2");
        if (eq.terms.size() != eq.coefficients.size()) {
            throw DataError("equation for " + variables[eq.variable] + ": " + std::to_string(eq.terms.size()) +
                            " terms but " + std::to_string(eq.coefficients.size()) + " coefficients");
        }
        for (double c : eq.coefficients) {
            if (!std::isfinite(c)) throw NumericalError("equation for " + variables[eq.variable] + ": non-finite coefficient");
        }
        for (const TermSpec& t : eq.terms) {
            for (const Factor& f : t.factors()) {
                if (f.var >= variables.size()) throw DataError("equation: term variable index out of range");
            }
        }
    }
}

JetRequest EquationSystem::required_partials() const {
    JetRequest req;
    req.add(Partial::Value);
    for (const Equation& eq : equations) {
        req.add(eq.target_partial());
        for (const TermSpec& t : eq.terms) {
            for (const Factor& f : t.factors()) req.add(f.partial());
        }
    }
    return req;
}

nlohmann::json EquationSystem::to_json() const {
    nlohmann::json j;
    j["variables"] = variables;
    j["equations"] = nlohmann::json::array();
    for (const Equation& eq : equations) {
        const std::string& v = variables.at(eq.variable);
        nlohmann::json e;
        e["variable"] = v;
        e["target_order"] = eq.target_order;
        e["target"] = eq.target_order == 2 ? "d2" + v + "/dt2" : "d" + v + "/dt";
        std::vector<std::string> terms;
        for (const TermSpec& t : eq.terms) terms.push_back(t.text(variables));
        e["terms"] = terms;
        e["coefficients"] = eq.coefficients;
        e["latent_force"] = eq.latent_force;
        e["ridge"] = eq.ridge;
        e["residual_rms"] = eq.residual_rms;
        j["equations"].push_back(std::move(e));
    }
    return j;
}

EquationSystem EquationSystem::from_json(const nlohmann::json& j) {
    EquationSystem sys;
    try {
        sys.variables = j.at("variables").get<std::vector<std::string>>();
        for (const auto& e : j.at("equations")) {
            Equation eq;
            const auto name = e.at("variable").get<std::string>();
            auto it = std::find(sys.variables.begin(), sys.variables.end(), name);
            if (it == sys.variables.end()) throw DataError("equation for unknown variable '" + name + "'");
            eq.variable = static_cast<std::size_t>(it - sys.variables.begin());
            eq.target_order = e.at("target_order").get<int>();
            for (const auto& t : e.at("terms")) eq.terms.push_back(TermSpec::parse(t.get<std::string>(), sys.variables));
            eq.coefficients = e.at("coefficients").get<std::vector<double>>();
            eq.latent_force = e.value("latent_force", false);
            eq.ridge = e.value("ridge", 1e-6);
            eq.residual_rms = e.value("residual_rms", 0.0);
            sys.equations.push_back(std::move(eq));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("equation system JSON: ") + ex.what());
    }
    sys.validate();
    return sys;
}

std::vector<TermSpec> default_library(const std::vector<std::string>& variables, const EquationConfig& config) {
    std::vector<std::string> missing;
    auto find = [&](const std::string& name) -> std::size_t {
        auto it = std::find(variables.begin(), variables.end(), name);
        if (it == variables.end()) {
            missing.push_back(name);
            return 0;
        }
        return static_cast<std::size_t>(it - variables.begin());
    };
    const std::size_t u = find(config.variable);
    std::size_t wx = 0, wy = 0;
    if (config.advected_by) {
        wx = find(config.advected_by->first);
        wy = find(config.advected_by->second);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw DataError("library references variables absent from the dataset: " + list);
    }

    std::vector<TermSpec> lib{
        TermSpec::constant(),
        TermSpec::of({u, 0, 0}),
        TermSpec::of({u, 1, 0}),
        TermSpec::of({u, 0, 1}),
        TermSpec::of({u, 2, 0}),
        TermSpec::of({u, 0, 2}),
        TermSpec::product({u, 0, 0}, {u, 1, 0}),
        TermSpec::product({u, 0, 0}, {u, 0, 1}),
    };
    if (config.advected_by) {
        lib.push_back(TermSpec::product({wx, 0, 0}, {u, 1, 0}));
        lib.push_back(TermSpec::product({wy, 0, 0}, {u, 0, 1}));
    }
    std::vector<TermSpec> unique;
    std::set<TermSpec> seen;
    for (auto& t : lib) {
        if (seen.insert(t).second) unique.push_back(std::move(t));
    }
    return unique;
}

EquationSystem default_system(const std::vector<std::string>& variables, const std::vector<EquationConfig>& configs) {
    EquationSystem sys;
    sys.variables = variables;
    for (const EquationConfig& c : configs) {
        Equation eq;
        eq.terms = default_library(variables, c);
        eq.variable = static_cast<std::size_t>(std::find(variables.begin(), variables.end(), c.variable) - variables.begin());
        eq.target_order = c.target_order;
        eq.coefficients.assign(eq.terms.size(), 0.0);
        eq.latent_force = c.latent_force;
        sys.equations.push_back(std::move(eq));
    }
    sys.validate();
    return sys;
}

TermMatrix build_term_matrix(const DerivativeBundle& bundle, const Equation& eq, const std::vector<double>* q) {
    const std::size_t rows = bundle.points;
    auto require = [&](Partial p, const std::string& what) -> const Tensor& {
        if (!bundle.has(p)) {
            throw DataError("term matrix: bundle lacks " + std::string(partial_name(p)) + " needed by " + what);
        }
        return bundle.at(p);
    };
    auto check_var = [&](std::size_t v) {
        if (v >= bundle.variables) throw DataError("term matrix: variable index exceeds bundle width");
    };

    TermMatrix m;
    m.columns = Tensor::matrix(rows, eq.terms.size());
    for (std::size_t c = 0; c < eq.terms.size(); ++c) {
        const TermSpec& term = eq.terms[c];
        const std::string label = "term #" + std::to_string(c);
        for (std::size_t r = 0; r < rows; ++r) m.columns(r, c) = 1.0;
        for (const Factor& f : term.factors()) {
            check_var(f.var);
            const Tensor& src = require(f.partial(), label);
            for (std::size_t r = 0; r < rows; ++r) m.columns(r, c) *= src(r, f.var);
        }
    }
    check_var(eq.variable);
    const Tensor& target = require(eq.target_partial(), "the target derivative");
    if (q && q->size() != rows) throw DataError("term matrix: latent force has wrong length");
    m.target.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) m.target[r] = target(r, eq.variable) - (q ? (*q)[r] : 0.0);
    return m;
}

namespace {

FitResult solve_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge) {
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    Eigen::MatrixXd aug(rows + (ridge > 0 ? cols : 0), cols);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
    aug.topRows(rows) = a;
    rhs.head(rows) = b;
    if (ridge > 0) aug.bottomRows(cols) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(cols, cols);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
    if (ridge == 0.0 && qr.rank() < cols) {
        throw NumericalError("coefficient fit: term matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                             " of " + std::to_string(cols) + "); use a ridge > 0");
    }
    Eigen::VectorXd xi = qr.solve(rhs);
    FitResult out;
    out.coefficients.assign(xi.data(), xi.data() + xi.size());
    out.residual_rms = rows > 0 ? std::sqrt((b - a * xi).squaredNorm() / static_cast<double>(rows)) : 0.0;
    return out;
}

}  // namespace

FitResult fit_coefficients(const TermMatrix& m, double ridge, double threshold) {
    const std::size_t rows = m.columns.rows();
    const std::size_t cols = m.target.empty() && rows == 0 ? 0 : m.columns.cols();
    if (ridge < 0 || !std::isfinite(ridge)) throw UsageError("coefficient fit: ridge must be >= 0");
    if (m.target.size() != rows) throw ShapeError("coefficient fit: target length differs from matrix rows");
    if (rows < cols) {
        throw DataError("coefficient fit: " + std::to_string(rows) + " rows for " + std::to_string(cols) + " terms");
    }
    if (!m.columns.all_finite()) throw NumericalError("coefficient fit: term matrix has non-finite entries");

    Eigen::MatrixXd a = m.columns.mat();
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(m.target.data(), static_cast<Eigen::Index>(rows));
    FitResult fit = solve_ridge(a, b, ridge);
    if (threshold <= 0) return fit;

    std::vector<bool> active(cols, true);
    for (int iter = 0; iter < 10; ++iter) {
        bool changed = false;
        for (std::size_t c = 0; c < cols; ++c) {
            if (active[c] && std::abs(fit.coefficients[c]) < threshold) {
                active[c] = false;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<Eigen::Index> keep;
        for (std::size_t c = 0; c < cols; ++c) {
            if (active[c]) keep.push_back(static_cast<Eigen::Index>(c));
        }
        std::vector<double> full(cols, 0.0);
        if (keep.empty()) {
            fit.coefficients = full;
            fit.residual_rms = std::sqrt(b.squaredNorm() / static_cast<double>(rows));
            break;
        }
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(keep[k]);
        FitResult part = solve_ridge(sub, b, ridge);
        for (std::size_t k = 0; k < keep.size(); ++k) full[static_cast<std::size_t>(keep[k])] = part.coefficients[k];
        fit.coefficients = std::move(full);
        fit.residual_rms = part.residual_rms;
    }
    return fit;
}

namespace {

struct BundleAlgebra {
    using Column = Eigen::VectorXd;
    const DerivativeBundle& bundle;

    Column factor(const Factor& f) const {
        if (!bundle.has(f.partial())) {
            throw DataError(std::string("residual: bundle lacks ") + partial_name(f.partial()));
        }
        return bundle.at(f.partial()).mat().col(static_cast<Eigen::Index>(f.var));
    }
    Column mul(const Column& a, const Column& b) const { return a.cwiseProduct(b); }
    Column scale(const Column& a, double c) const { return a * c; }
    Column add(const Column& a, const Column& b) const { return a + b; }
    Column constant(double c) const { return Column::Constant(static_cast<Eigen::Index>(bundle.points), c); }
};

}  // namespace

Tensor pde_residual(const DerivativeBundle& bundle, const EquationSystem& system, const Tensor* q) {
    system.validate();
    if (bundle.variables != system.variables.size()) {
        throw DataError("residual: bundle has " + std::to_string(bundle.variables) + " variables, system has " +
                        std::to_string(system.variables.size()));
    }
    const bool any_force = std::any_of(system.equations.begin(), system.equations.end(),
                                       [](const Equation& e) { return e.latent_force; });
    if (any_force && !q) throw UsageError("residual: latent force values required by the equation system");
    if (!any_force && q) throw UsageError("residual: latent force values given but no equation uses them");
    if (q && (q->rows() != bundle.points || q->cols() != system.equations.size())) {
        throw ShapeError("residual: latent force shape " + shape_string(q->shape()) + " does not match " +
                         std::to_string(bundle.points) + " points x " + std::to_string(system.equations.size()) +
                         " equations");
    }

    Tensor out = Tensor::matrix(bundle.points, system.equations.size());
    BundleAlgebra alg{bundle};
    for (std::size_t e = 0; e < system.equations.size(); ++e) {
        const Equation& eq = system.equations[e];
        if (!bundle.has(eq.target_partial())) {
            throw DataError(std::string("residual: bundle lacks ") + partial_name(eq.target_partial()));
        }
        Eigen::VectorXd r = bundle.at(eq.target_partial()).mat().col(static_cast<Eigen::Index>(eq.variable));
        r -= explicit_terms(eq, alg);
        if (eq.latent_force) r -= q->mat().col(static_cast<Eigen::Index>(e));
        out.mat().col(static_cast<Eigen::Index>(e)) = r;
    }
    return out;
}

}  // namespace physgrid
