#include "physgrid/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cfloat>
#include <cmath>
#include <map>
#include <numbers>

#include "physgrid/errors.hpp"
#include "physgrid/rng.hpp"

namespace physgrid {

using cplx = std::complex<double>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI{0.0, 1.0};

// Forcing modes are kept while the bump's 1D Bessel weight exceeds this.
constexpr double kBesselCutoff = 1e-18;

bool first_order(CaseId id) { return id != CaseId::Wave2D; }

// E(mu, t) = integral_0^t exp(mu s) ds
cplx expint(cplx mu, double t) {
    const cplx z = mu * t;
    if (std::abs(z) < 1e-3) {
        return t * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0);
    }
    return (std::exp(z) - 1.0) / mu;
}

cplx ipow(cplx base, int n) {
    cplx out{1.0, 0.0};
    for (int i = 0; i < n; ++i) out *= base;
    return out;
}

double ipow(double base, int n) {
    double out = 1.0;
    for (int i = 0; i < n; ++i) out *= base;
    return out;
}

// Nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

// Half-plane representative of a wavevector: kx > 0, or kx == 0 and ky >= 0.
bool canonical(int kx, int ky) { return kx > 0 || (kx == 0 && ky >= 0); }

double bump_value(const ForcingBump& b, double x, double y, double t) {
    return b.amplitude * std::exp(b.kappa * (std::cos(x - b.x0 - b.vx * t) + std::cos(y - b.y0 - b.vy * t) - 2.0));
}

}  // namespace

const char* case_name(CaseId id) {
    switch (id) {
        case CaseId::Advection2D: return "advection2d";
        case CaseId::AdvectionDiffusion2D: return "advection-diffusion2d";
        case CaseId::Wave2D: return "wave2d";
    }
    return "?";
}

CaseId parse_case(const std::string& name) {
    std::string s;
    for (char c : name) {
        if (c != '-' && c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (s == "advection2d") return CaseId::Advection2D;
    if (s == "advectiondiffusion2d") return CaseId::AdvectionDiffusion2D;
    if (s == "wave2d") return CaseId::Wave2D;
    throw UsageError("unknown synthetic case '" + name + "' (expected advection2d, advection-diffusion2d or wave2d)");
}

SyntheticCase SyntheticCase::defaults(CaseId id) {
    SyntheticCase c;
    c.id = id;
    switch (id) {
        case CaseId::Advection2D:
            c.a = 0.5;
            c.b = 0.0;
            break;
        case CaseId::AdvectionDiffusion2D:
            c.a = 0.5;
            c.b = 0.3;
            c.nu_x = 0.05;
            c.nu_y = 0.05;
            break;
        case CaseId::Wave2D:
            c.a = c.b = 0.0;
            c.cx2 = c.cy2 = 1.0;
            break;
    }
    return c;
}

void SyntheticCase::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(a) || !finite(b) || !finite(nu_x) || !finite(nu_y) || !finite(cx2) || !finite(cy2) || !finite(dt)) {
        throw UsageError("synthetic case: coefficients must be finite");
    }
    if (nu_x < 0 || nu_y < 0) throw UsageError("synthetic case: negative diffusivity is unstable");
    if (id == CaseId::Advection2D && (nu_x != 0 || nu_y != 0)) {
        throw UsageError("synthetic case: advection2d has no diffusion; use advection-diffusion2d");
    }
    if (id == CaseId::Wave2D && (cx2 <= 0 || cy2 <= 0)) {
        throw UsageError("synthetic case: wave speeds squared must be positive");
    }
    if (nx < 4 || ny < 4 || nt < 3) throw UsageError("synthetic case: grid needs nx, ny >= 4 and nt >= 3");
    if (!(dt > 0)) throw UsageError("synthetic case: dt must be positive");
    if (max_wavenumber < 1 && !initial_modes) throw UsageError("synthetic case: max_wavenumber must be >= 1");
    if (forcing.size() > 3) throw UsageError("synthetic case: at most 3 forcing bumps");
    for (const ForcingBump& f : forcing) {
        if (!(f.kappa > 0) || !std::isfinite(f.amplitude) || !std::isfinite(f.vx) || !std::isfinite(f.vy)) {
            throw UsageError("synthetic case: forcing bumps need kappa > 0 and finite parameters");
        }
    }
    if (noise < 0 || !finite(noise)) throw UsageError("synthetic case: noise must be >= 0");
    if (variable.empty()) throw UsageError("synthetic case: variable name must not be empty");
}

nlohmann::json SyntheticCase::to_json() const {
    nlohmann::json j;
    j["case"] = case_name(id);
    j["variable"] = variable;
    j["a"] = a;
    j["b"] = b;
    j["nu_x"] = nu_x;
    j["nu_y"] = nu_y;
    if (id == CaseId::Wave2D) {
        j["cx2"] = cx2;
        j["cy2"] = cy2;
    }
    j["nx"] = nx;
    j["ny"] = ny;
    j["nt"] = nt;
    j["dt"] = dt;
    j["seed"] = seed;
    j["max_wavenumber"] = max_wavenumber;
    j["noise"] = noise;
    j["forcing"] = nlohmann::json::array();
    for (const ForcingBump& f : forcing) {
        j["forcing"].push_back({{"amplitude", f.amplitude}, {"kappa", f.kappa}, {"x0", f.x0}, {"y0", f.y0},
                                {"vx", f.vx}, {"vy", f.vy}});
    }
    if (initial_modes) {
        j["initial_modes"] = nlohmann::json::array();
        for (const Mode& m : *initial_modes) {
            j["initial_modes"].push_back({{"kx", m.kx}, {"ky", m.ky}, {"re", m.value.real()}, {"im", m.value.imag()},
                                          {"rate_re", m.rate.real()}, {"rate_im", m.rate.imag()}});
        }
    }
    return j;
}

namespace {

std::vector<Mode> random_modes(const SyntheticCase& c) {
    Rng rng(c.seed);
    std::vector<Mode> modes;
    const int k = c.max_wavenumber;
    double energy = 0.0;
    for (int kx = 0; kx <= k; ++kx) {
        for (int ky = -k; ky <= k; ++ky) {
            if (!canonical(kx, ky) || (kx == 0 && ky == 0) || kx * kx + ky * ky > k * k) continue;
            const double damp = 1.0 / (1.0 + kx * kx + ky * ky);
            Mode m;
            m.kx = kx;
            m.ky = ky;
            m.value = cplx(rng.normal(), rng.normal()) * damp;
            if (c.id == CaseId::Wave2D) m.rate = cplx(rng.normal(), rng.normal()) * damp;
            energy += std::norm(m.value);
            modes.push_back(m);
        }
    }
    // Unit spatial RMS at t = 0.
    const double scale = energy > 0 ? 1.0 / std::sqrt(0.5 * energy) : 1.0;
    for (Mode& m : modes) {
        m.value *= scale;
        m.rate *= scale;
    }
    return modes;
}

}  // namespace

SpectralSolution::SpectralSolution(const SyntheticCase& c) : case_(c) {
    case_.validate();
    std::map<std::pair<int, int>, std::size_t> index;
    auto slot = [&](int kx, int ky) -> std::size_t {
        auto [it, fresh] = index.try_emplace({kx, ky}, modes_.size());
        if (fresh) {
            Mode m;
            m.kx = kx;
            m.ky = ky;
            modes_.push_back(m);
        }
        return it->second;
    };

    const std::vector<Mode> initial = case_.initial_modes ? *case_.initial_modes : random_modes(case_);
    for (const Mode& m : initial) {
        int kx = m.kx, ky = m.ky;
        cplx v = m.value, r = m.rate;
        if (!canonical(kx, ky)) {
            // Re(c e^{i k.x}) == Re(conj(c) e^{-i k.x})
            kx = -kx;
            ky = -ky;
            v = std::conj(v);
            r = std::conj(r);
        }
        const std::size_t s = slot(kx, ky);
        if (kx == 0 && ky == 0) {
            v = v.real();
            r = r.real();
        }
        modes_[s].value += v;
        modes_[s].rate += r;
    }

    // exp(kappa (cos th - 1)) = e^{-kappa} sum_n I_n(kappa) e^{i n th}
    std::vector<std::vector<std::pair<cplx, double>>> forcing_by_slot;
    for (const ForcingBump& f : case_.forcing) {
        std::vector<double> weight;
        for (int n = 0;; ++n) {
            const double w = std::exp(-f.kappa) * std::cyl_bessel_i(static_cast<double>(n), f.kappa);
            if (w < kBesselCutoff && n > 0) break;
            weight.push_back(w);
        }
        const int nmax = static_cast<int>(weight.size()) - 1;
        for (int kx = 0; kx <= nmax; ++kx) {
            for (int ky = -nmax; ky <= nmax; ++ky) {
                if (!canonical(kx, ky)) continue;
                const double w = weight[static_cast<std::size_t>(kx)] * weight[static_cast<std::size_t>(std::abs(ky))];
                const double mult = (kx == 0 && ky == 0) ? 1.0 : 2.0;
                const cplx amp = mult * f.amplitude * w * std::exp(-kI * (kx * f.x0 + ky * f.y0));
                const double omega = kx * f.vx + ky * f.vy;
                const std::size_t s = slot(kx, ky);
                if (forcing_by_slot.size() < modes_.size()) forcing_by_slot.resize(modes_.size());
                forcing_by_slot[s].emplace_back(amp, omega);
            }
        }
    }
    forcing_by_slot.resize(modes_.size());
    forcing_ = std::move(forcing_by_slot);
}

cplx SpectralSolution::forcing_derivative(std::size_t mode, double t, int order) const {
    cplx out{0.0, 0.0};
    for (const auto& [amp, omega] : forcing_[mode]) out += amp * ipow(-kI * omega, order) * std::exp(-kI * omega * t);
    return out;
}

cplx SpectralSolution::coefficient(std::size_t mode, double t, int order) const {
    if (order < 0 || order > 4) throw UsageError("spectral solution: time-derivative order must be in [0, 4]");
    const Mode& m = modes_[mode];
    const double kx = m.kx, ky = m.ky;

    if (first_order(case_.id)) {
        const cplx lambda = -kI * (case_.a * kx + case_.b * ky) - case_.nu_x * kx * kx - case_.nu_y * ky * ky;
        const cplx growth = std::exp(lambda * t);
        cplx c = growth * m.value;
        for (const auto& [amp, omega] : forcing_[mode]) c += amp * growth * expint(-lambda - kI * omega, t);
        // c' = lambda c + H, c^(n) = lambda c^(n-1) + H^(n-1)
        for (int n = 1; n <= order; ++n) c = lambda * c + forcing_derivative(mode, t, n - 1);
        return c;
    }

    const double omega2 = case_.cx2 * kx * kx + case_.cy2 * ky * ky;
    const double w = std::sqrt(omega2);
    cplx c, dc;
    if (w == 0.0) {
        c = m.value + m.rate * t;
        dc = m.rate;
        for (const auto& [amp, omega] : forcing_[mode]) {
            // k = 0 never drifts, so omega is 0 here.
            c += amp * 0.5 * t * t * std::exp(-kI * omega * t);
            dc += amp * t;
        }
    } else {
        c = m.value * std::cos(w * t) + m.rate * std::sin(w * t) / w;
        dc = -m.value * w * std::sin(w * t) + m.rate * std::cos(w * t);
        const cplx ep = std::exp(kI * w * t), em = std::exp(-kI * w * t);
        for (const auto& [amp, omega] : forcing_[mode]) {
            const cplx e1 = ep * expint(-kI * (w + omega), t);
            const cplx e2 = em * expint(kI * (w - omega), t);
            c += amp * (e1 - e2) / (2.0 * kI * w);
            dc += amp * 0.5 * (e1 + e2);
        }
    }
    if (order == 0) return c;
    if (order == 1) return dc;
    // c'' = -w^2 c + H, c''' = -w^2 c' + H', c'''' = -w^2 c'' + H''
    const cplx c2 = -omega2 * c + forcing_derivative(mode, t, 0);
    if (order == 2) return c2;
    const cplx c3 = -omega2 * dc + forcing_derivative(mode, t, 1);
    if (order == 3) return c3;
    return -omega2 * c2 + forcing_derivative(mode, t, 2);
}

double SpectralSolution::derivative(double x, double y, double t, int px, int py, int pt) const {
    double out = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        const Mode& m = modes_[k];
        const cplx factor = ipow(kI * static_cast<double>(m.kx), px) * ipow(kI * static_cast<double>(m.ky), py);
        out += std::real(coefficient(k, t, pt) * factor * std::exp(kI * (m.kx * x + m.ky * y)));
    }
    return out;
}

double SpectralSolution::sup_bound(double t, int px, int py, int pt) const {
    double out = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        const double scale = ipow(std::abs(static_cast<double>(modes_[k].kx)), px) *
                             ipow(std::abs(static_cast<double>(modes_[k].ky)), py);
        if (scale == 0.0) continue;
        out += std::abs(coefficient(k, t, pt)) * scale;
    }
    return out;
}

namespace {

// out[j * xs.size() + i] = Re sum_k c_k exp(i (kx xs[i] + ky ys[j])), summed
// row by row so every grid that shares a coordinate gets identical values.
void separable_sum(const std::vector<Mode>& modes, const std::vector<double>& xs, const std::vector<double>& ys,
                   double* out) {
    std::vector<int> kxs, kys;
    for (const Mode& m : modes) {
        kxs.push_back(m.kx);
        kys.push_back(m.ky);
    }
    std::sort(kxs.begin(), kxs.end());
    kxs.erase(std::unique(kxs.begin(), kxs.end()), kxs.end());
    std::sort(kys.begin(), kys.end());
    kys.erase(std::unique(kys.begin(), kys.end()), kys.end());
    auto pos = [](const std::vector<int>& v, int k) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), k) - v.begin());
    };
    const std::size_t nx = xs.size(), ny = ys.size(), na = kxs.size(), nb = kys.size();
    std::vector<cplx> ex(na * nx), ey(nb * ny), coef(na * nb), row(na);
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t i = 0; i < nx; ++i) ex[a * nx + i] = std::exp(kI * (kxs[a] * xs[i]));
    }
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t j = 0; j < ny; ++j) ey[b * ny + j] = std::exp(kI * (kys[b] * ys[j]));
    }
    for (const Mode& m : modes) coef[pos(kxs, m.kx) * nb + pos(kys, m.ky)] += m.value;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t a = 0; a < na; ++a) {
            cplx s{};
            for (std::size_t b = 0; b < nb; ++b) s += coef[a * nb + b] * ey[b * ny + j];
            row[a] = s;
        }
        for (std::size_t i = 0; i < nx; ++i) {
            double v = 0.0;
            for (std::size_t a = 0; a < na; ++a) v += std::real(row[a] * ex[a * nx + i]);
            out[j * nx + i] = v;
        }
    }
}

std::vector<double> axis_points(std::size_t n, double origin, double step, double shift) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (origin + static_cast<double>(i) * step) - shift;
    return v;
}

}  // namespace

GridField SpectralSolution::sample(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes) const {
    GridField out(nt, ny, nx, {case_.variable}, axes);
    const std::vector<double> xs = axis_points(nx, axes.x0, axes.dx, 0.0), ys = axis_points(ny, axes.y0, axes.dy, 0.0);
    std::vector<Mode> frame = modes_;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t k = 0; k < modes_.size(); ++k) frame[k].value = coefficient(k, out.t(ti), 0);
        separable_sum(frame, xs, ys, out.data().data() + out.index(ti, 0, 0, 0));
    }
    return out;
}

GridField sample_characteristics(const SyntheticCase& c, const std::vector<Mode>& initial, std::size_t nt,
                                 std::size_t ny, std::size_t nx, const GridAxes& axes) {
    if (c.id != CaseId::Advection2D || !c.forcing.empty()) {
        throw UsageError("characteristic sampling applies to unforced advection2d only");
    }
    GridField out(nt, ny, nx, {c.variable}, axes);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const double t = out.t(ti);
        // Foot of each characteristic: (x - a t, y - b t).
        separable_sum(initial, axis_points(nx, axes.x0, axes.dx, c.a * t), axis_points(ny, axes.y0, axes.dy, c.b * t),
                      out.data().data() + out.index(ti, 0, 0, 0));
    }
    return out;
}

double SpectralSolution::forcing(double x, double y, double t) const {
    double out = 0.0;
    for (const ForcingBump& f : case_.forcing) out += bump_value(f, x, y, t);
    return out;
}

GridField SpectralSolution::sample_forcing(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes) const {
    GridField out(nt, ny, nx, {"H"}, axes);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) out.at(ti, j, i, 0) = forcing(out.x(i), out.y(j), out.t(ti));
        }
    }
    return out;
}

double characteristic_solution(const SyntheticCase& c, const std::vector<Mode>& initial, double x, double y, double t,
                               int quadrature_nodes) {
    if (c.id != CaseId::Advection2D) throw UsageError("characteristics apply to advection2d only");
    auto g = [&](double px, double py) {
        double v = 0.0;
        for (const Mode& m : initial) v += std::real(m.value * std::exp(kI * (m.kx * px + m.ky * py)));
        return v;
    };
    double u = g(x - c.a * t, y - c.b * t);
    if (c.forcing.empty() || t == 0.0) return u;
    std::vector<double> nodes, weights;
    gauss_legendre(quadrature_nodes, nodes, weights);
    double integral = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double s = nodes[q] * t;
        double h = 0.0;
        for (const ForcingBump& f : c.forcing) h += bump_value(f, x - c.a * (t - s), y - c.b * (t - s), s);
        integral += weights[q] * h;
    }
    return u + t * integral;
}

SelfCheck residual_self_check(const SpectralSolution& solution, const GridField& field) {
    const SyntheticCase& c = solution.problem();
    const GridAxes& ax = field.axes();
    if (field.nt() < 3 || field.ny() < 3 || field.nx() < 3) throw DataError("self-check: grid too small for central stencils");
    const double dt = ax.dt, dx = ax.dx, dy = ax.dy;
    const bool first = first_order(c.id);

    SelfCheck out;
    double sum2 = 0.0;
    std::size_t count = 0;
    double umax = 0.0;
    for (double v : field.data()) umax = std::max(umax, std::abs(v));

    for (std::size_t ti = 1; ti + 1 < field.nt(); ++ti) {
        const double t = field.t(ti);
        // Time sup sampled across the stencil's interval, with margin.
        double mt = 0.0;
        for (double s : {t - dt, t - 0.5 * dt, t, t + 0.5 * dt, t + dt}) {
            mt = std::max(mt, solution.sup_bound(s, 0, 0, first ? 3 : 4));
        }
        mt *= 1.1;
        const double mxxx = solution.sup_bound(t, 3, 0, 0), myyy = solution.sup_bound(t, 0, 3, 0);
        const double mxxxx = solution.sup_bound(t, 4, 0, 0), myyyy = solution.sup_bound(t, 0, 4, 0);
        double bound;
        double amplification;
        if (first) {
            bound = dt * dt / 6.0 * mt + std::abs(c.a) * dx * dx / 6.0 * mxxx + std::abs(c.b) * dy * dy / 6.0 * myyy +
                    c.nu_x * dx * dx / 12.0 * mxxxx + c.nu_y * dy * dy / 12.0 * myyyy;
            amplification = 1.0 / dt + std::abs(c.a) / dx + std::abs(c.b) / dy + 4.0 * c.nu_x / (dx * dx) +
                            4.0 * c.nu_y / (dy * dy);
        } else {
            bound = dt * dt / 12.0 * mt + c.cx2 * dx * dx / 12.0 * mxxxx + c.cy2 * dy * dy / 12.0 * myyyy;
            amplification = 4.0 / (dt * dt) + 4.0 * c.cx2 / (dx * dx) + 4.0 * c.cy2 / (dy * dy);
        }
        // Allowance for rounding in the sampled values.
        bound += 16.0 * DBL_EPSILON * (umax + 1.0) * amplification;
        out.bound = std::max(out.bound, bound);

        for (std::size_t j = 1; j + 1 < field.ny(); ++j) {
            for (std::size_t i = 1; i + 1 < field.nx(); ++i) {
                const double u = field.at(ti, j, i, 0);
                const double ux = (field.at(ti, j, i + 1, 0) - field.at(ti, j, i - 1, 0)) / (2 * dx);
                const double uy = (field.at(ti, j + 1, i, 0) - field.at(ti, j - 1, i, 0)) / (2 * dy);
                const double uxx = (field.at(ti, j, i + 1, 0) - 2 * u + field.at(ti, j, i - 1, 0)) / (dx * dx);
                const double uyy = (field.at(ti, j + 1, i, 0) - 2 * u + field.at(ti, j - 1, i, 0)) / (dy * dy);
                const double h = solution.forcing(field.x(i), field.y(j), t);
                double r;
                if (first) {
                    const double ut = (field.at(ti + 1, j, i, 0) - field.at(ti - 1, j, i, 0)) / (2 * dt);
                    r = ut + c.a * ux + c.b * uy - c.nu_x * uxx - c.nu_y * uyy - h;
                } else {
                    const double utt = (field.at(ti + 1, j, i, 0) - 2 * u + field.at(ti - 1, j, i, 0)) / (dt * dt);
                    r = utt - c.cx2 * uxx - c.cy2 * uyy - h;
                }
                sum2 += r * r;
                out.residual_max = std::max(out.residual_max, std::abs(r));
                ++count;
            }
        }
    }
    out.residual_rms = count ? std::sqrt(sum2 / static_cast<double>(count)) : 0.0;
    out.passed = out.residual_max <= out.bound;
    return out;
}

GridAxes synthetic_axes(const SyntheticCase& c) {
    GridAxes ax;
    ax.x0 = 0.0;
    ax.dx = kTwoPi / static_cast<double>(c.nx);
    ax.y0 = 0.0;
    ax.dy = kTwoPi / static_cast<double>(c.ny);
    ax.t0 = 0.0;
    ax.dt = c.dt;
    ax.space_units = "rad";
    ax.time_units = "s";
    return ax;
}

GeneratedCase generate(const SyntheticCase& c) {
    const SpectralSolution solution(c);
    const GridAxes axes = synthetic_axes(c);

    GeneratedCase out;
    const bool characteristics = c.id == CaseId::Advection2D && c.forcing.empty();
    auto field_on = [&](std::size_t ny, std::size_t nx, const GridAxes& ax) {
        return characteristics ? sample_characteristics(c, solution.initial_modes(), c.nt, ny, nx, ax)
                               : solution.sample(c.nt, ny, nx, ax);
    };
    GridField clean = field_on(c.ny, c.nx, axes);
    out.check = residual_self_check(solution, clean);
    if (!out.check.passed) {
        throw NumericalError("synthetic " + std::string(case_name(c.id)) + ": FD residual " +
                             std::to_string(out.check.residual_max) + " exceeds truncation bound " +
                             std::to_string(out.check.bound));
    }

    auto fine = [&](std::size_t f) {
        return field_on(refined_extent(c.ny, f), refined_extent(c.nx, f), refine_axes(axes, f));
    };
    out.fine2x = fine(2);
    out.fine4x = fine(4);
    out.forcing = solution.sample_forcing(c.nt, c.ny, c.nx, axes);

    out.coarse = clean;
    double rms = 0.0;
    if (c.noise > 0) {
        for (double v : clean.data()) rms += v * v;
        rms = std::sqrt(rms / static_cast<double>(clean.data().size()));
        Rng rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
        for (double& v : out.coarse.data()) v += c.noise * rms * rng.normal();
    }

    EquationConfig cfg;
    cfg.variable = c.variable;
    cfg.target_order = first_order(c.id) ? 1 : 2;
    cfg.latent_force = !c.forcing.empty();
    out.truth = default_system({c.variable}, {cfg});
    Equation& eq = out.truth.equations[0];
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
        const TermSpec& t = eq.terms[i];
        if (t == TermSpec::of({0, 1, 0})) eq.coefficients[i] = first_order(c.id) ? -c.a : 0.0;
        if (t == TermSpec::of({0, 0, 1})) eq.coefficients[i] = first_order(c.id) ? -c.b : 0.0;
        if (t == TermSpec::of({0, 2, 0})) eq.coefficients[i] = first_order(c.id) ? c.nu_x : c.cx2;
        if (t == TermSpec::of({0, 0, 2})) eq.coefficients[i] = first_order(c.id) ? c.nu_y : c.cy2;
    }
    eq.ridge = 0.0;

    out.manifest["generator"] = c.to_json();
    out.manifest["solution"] = characteristics ? "characteristics" : "closed-form Fourier modes";
    out.manifest["domain"] = "periodic [0, 2pi)^2";
    out.manifest["modes"] = solution.initial_modes().size();
    out.manifest["self_check"] = {{"residual_rms", out.check.residual_rms},
                                  {"residual_max", out.check.residual_max},
                                  {"bound", out.check.bound},
                                  {"passed", out.check.passed},
                                  {"field", "noiseless coarse"}};
    if (c.noise > 0) out.manifest["noise_std"] = c.noise * rms;
    return out;
}

}  // namespace physgrid
