#pragma once

#include <compare>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "physgrid/field_net.hpp"
#include "physgrid/tensor.hpp"

namespace physgrid {

/// One factor of a library term: variable `var` differentiated dx times in x
/// and dy times in y.
struct Factor {
    std::size_t var = 0;
    int dx = 0;
    int dy = 0;

    int order() const { return dx + dy; }
    Partial partial() const;

    friend bool operator==(const Factor&, const Factor&) = default;
    /// Canonical order: derivative order, then variable, then x-order.
    friend std::strong_ordering operator<=>(const Factor& a, const Factor& b) {
        if (auto c = a.order() <=> b.order(); c != 0) return c;
        if (auto c = a.var <=> b.var; c != 0) return c;
        return b.dx <=> a.dx;
    }
};

/// Product of at most two factors; no factors is the constant term 1.
class TermSpec {
public:
    TermSpec() = default;
    explicit TermSpec(std::vector<Factor> factors);

    static TermSpec constant() { return TermSpec(); }
    static TermSpec of(Factor f) { return TermSpec({f}); }
    static TermSpec product(Factor a, Factor b) { return TermSpec({a, b}); }

    const std::vector<Factor>& factors() const { return factors_; }
    bool is_constant() const { return factors_.empty(); }

    /// "1", "T", "dT/dx", "d2T/dy2", "U10*dT/dx", ...
    std::string text(const std::vector<std::string>& names) const;
    static TermSpec parse(const std::string& text, const std::vector<std::string>& names);

    friend bool operator==(const TermSpec&, const TermSpec&) = default;
    friend auto operator<=>(const TermSpec& a, const TermSpec& b) { return a.factors_ <=> b.factors_; }

private:
    std::vector<Factor> factors_;
};

/// Governing equation of one variable:
///   d^order(var)/dt^order = sum_i coefficients[i] * terms[i] (+ Q)
struct Equation {
    std::size_t variable = 0;
    int target_order = 1;
    std::vector<TermSpec> terms;
    std::vector<double> coefficients;
    bool latent_force = false;
    double ridge = 1e-6;
    double residual_rms = 0.0;

    Partial target_partial() const { return target_order == 2 ? Partial::TT : Partial::T; }
    /// Coefficient of `term`, 0 when the term is absent.
    double coefficient(const TermSpec& term) const;
};

struct EquationSystem {
    std::vector<std::string> variables;
    std::vector<Equation> equations;

    void validate() const;
    /// Partials a derivative bundle must carry to evaluate every equation.
    JetRequest required_partials() const;

    nlohmann::json to_json() const;
    static EquationSystem from_json(const nlohmann::json& j);
};

/// How to build the candidate library for one governed variable.
struct EquationConfig {
    std::string variable;
    int target_order = 1;
    /// Velocity components (x, y) whose products with the gradient enter as
    /// advection terms, when present in the dataset.
    std::optional<std::pair<std::string, std::string>> advected_by;
    bool latent_force = false;
};

/// Candidates for one variable: 1, u, u_x, u_y, u_xx, u_yy, u*u_x, u*u_y and,
/// with winds (U, V), U*u_x and V*u_y. Throws DataError naming any variable the
/// config references but the dataset lacks.
std::vector<TermSpec> default_library(const std::vector<std::string>& variables, const EquationConfig& config);

/// One equation per config, coefficients zeroed.
EquationSystem default_system(const std::vector<std::string>& variables, const std::vector<EquationConfig>& configs);

/// Rows are collocation points, columns the library terms of one equation.
struct TermMatrix {
    Tensor columns;
    std::vector<double> target;
};

/// Evaluates the library of `eq` on a bundle. With `q` (points x 1) the
/// latent force is moved to the target side: target = d^k u/dt^k - q.
TermMatrix build_term_matrix(const DerivativeBundle& bundle, const Equation& eq,
                             const std::vector<double>* q = nullptr);

struct FitResult {
    std::vector<double> coefficients;
    double residual_rms = 0.0;
};

/// argmin ||target - M xi||^2 + ridge ||xi||^2 via column-pivoted QR of the
/// ridge-augmented system. A positive `threshold` enables sequential
/// thresholded refits (off by default).
FitResult fit_coefficients(const TermMatrix& m, double ridge, double threshold = 0.0);

/// target - Phi Xi - Q per point (rows) and equation (columns), physical
/// units. `q` holds one column per equation and is required exactly when some
/// equation has latent_force set.
Tensor pde_residual(const DerivativeBundle& bundle, const EquationSystem& system, const Tensor* q = nullptr);

/// Shared evaluation of sum_i xi_i phi_i over any column type. Algebra must
/// provide Column factor(const Factor&), Column mul(Column, Column),
/// Column scale(Column, double), Column add(Column, Column) and
/// Column constant(double).
template <class Algebra>
typename Algebra::Column explicit_terms(const Equation& eq, Algebra& alg) {
    using Column = typename Algebra::Column;
    double constant = 0.0;
    std::optional<Column> acc;
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
        const double xi = eq.coefficients[i];
        const TermSpec& term = eq.terms[i];
        if (term.is_constant()) {
            constant += xi;
            continue;
        }
        if (xi == 0.0) continue;
        Column col = alg.factor(term.factors()[0]);
        if (term.factors().size() == 2) col = alg.mul(col, alg.factor(term.factors()[1]));
        col = alg.scale(col, xi);
        acc = acc ? alg.add(*acc, col) : col;
    }
    Column c = alg.constant(constant);
    return acc ? alg.add(*acc, c) : c;
}

}  // namespace physgrid
