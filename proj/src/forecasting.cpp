#include "physgrid/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "physgrid/errors.hpp"
#include "physgrid/optim.hpp"
#include "physgrid/rng.hpp"
#include "physgrid/training.hpp"

namespace physgrid {

void ForecastConfig::validate() const {
    if (s < 1) throw UsageError("forecast: s must be >= 1");
    if (r < 1) throw UsageError("forecast: r must be >= 1");
    if (!(beta >= 0) || !std::isfinite(beta)) throw UsageError("forecast: beta must be >= 0");
    if (hidden_layers == 0 || hidden_width == 0) throw UsageError("forecast: empty architecture");
    if (!(learning_rate > 0)) throw UsageError("forecast: learning_rate must be positive");
    if (batch_windows == 0) throw UsageError("forecast: batch_windows must be positive");
    if (epochs == 0) throw UsageError("forecast: epochs must be positive (nothing to train)");
}

nlohmann::json ForecastConfig::to_json() const {
    return {{"s", s},
            {"r", r},
            {"beta", beta},
            {"hidden_layers", hidden_layers},
            {"hidden_width", hidden_width},
            {"skip", skip},
            {"learning_rate", learning_rate},
            {"batch_windows", batch_windows},
            {"epochs", epochs},
            {"seed", seed},
            {"stencil", stencil_name(stencil)}};
}

std::size_t window_count(std::size_t frames, std::size_t s, std::size_t r) {
    if (s + r + 2 > frames) {
        throw DataError("forecast: " + std::to_string(frames) + " frames leave no windows for s=" + std::to_string(s) +
                        ", r=" + std::to_string(r) + " (need s + r + 2 <= T)");
    }
    return frames - r - s - 1;
}

WindowRange training_windows(std::size_t end, std::size_t s, std::size_t r) {
    return WindowRange{0, window_count(end, s, r)};
}

WindowRange target_windows(std::size_t from, std::size_t to, std::size_t s, std::size_t r) {
    if (from < s + 1 || to < from + r) {
        throw DataError("forecast: range [" + std::to_string(from) + ", " + std::to_string(to) +
                        ") cannot hold a target window");
    }
    return WindowRange{from - s - 1, to - r - from + 1};
}

namespace {

// Cell neighbour tables, edges replicated.
struct Neighbours {
    std::size_t cells = 0;
    // center, west, east, south, north
    std::vector<std::array<std::uint32_t, 5>> of;
};

Neighbours neighbours(std::size_t ny, std::size_t nx) {
    Neighbours n;
    n.cells = ny * nx;
    n.of.resize(n.cells);
    for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
            auto id = [&](std::size_t yy, std::size_t xx) { return static_cast<std::uint32_t>(yy * nx + xx); };
            n.of[y * nx + x] = {id(y, x), id(y, x ? x - 1 : 0), id(y, std::min(nx - 1, x + 1)), id(y ? y - 1 : 0, x),
                                id(std::min(ny - 1, y + 1), x)};
        }
    }
    return n;
}

}  // namespace

ForecastModel::ForecastModel(Mlp mlp, std::size_t s, std::size_t r, std::vector<std::string> names,
                             std::vector<Affine> scaling, bool skip)
    : mlp_(std::move(mlp)), s_(s), r_(r), names_(std::move(names)), scaling_(std::move(scaling)), skip_(skip) {
    if (names_.empty()) throw UsageError("forecast model: no variables");
    if (scaling_.size() != names_.size()) throw ShapeError("forecast model: one scaling per variable required");
    if (mlp_.input_width() != input_width() || mlp_.output_width() != r_ * names_.size()) {
        throw ShapeError("forecast model: network widths do not match s, r and variables");
    }
}

ForecastModel ForecastModel::init(const ForecastConfig& config, std::vector<std::string> names,
                                  std::vector<Affine> scaling) {
    config.validate();
    const std::size_t h = names.size();
    std::vector<std::size_t> widths{(config.s + 1) * 5 * h};
    for (std::size_t l = 0; l < config.hidden_layers; ++l) widths.push_back(config.hidden_width);
    widths.push_back(config.r * h);
    return ForecastModel(Mlp::xavier(widths, config.seed), config.s, config.r, std::move(names), std::move(scaling),
                         config.skip);
}

Tensor ForecastModel::window_input(const GridField& field, std::size_t first) const {
    if (field.nvars() != names_.size()) throw ShapeError("forecast: record variables do not match the model");
    if (first + s_ + 1 > field.nt()) throw UsageError("forecast: window runs past the record");
    const Neighbours nb = neighbours(field.ny(), field.nx());
    const std::size_t h = names_.size();
    Tensor in = Tensor::matrix(nb.cells, input_width());
    const std::size_t frame = field.cells() * h;
    for (std::size_t c = 0; c < nb.cells; ++c) {
        std::size_t col = 0;
        for (std::size_t f = 0; f <= s_; ++f) {
            const double* base = field.data().data() + (first + f) * frame;
            for (std::uint32_t n : nb.of[c]) {
                for (std::size_t v = 0; v < h; ++v) in(c, col++) = scaling_[v].forward(base[n * h + v]);
            }
        }
    }
    return in;
}

namespace {

// Per-column constants turning normalized outputs into physical values:
// phys = (out + skip) * scale + offset.
struct OutputMaps {
    Tensor skip;
    Tensor scale;
    Tensor offset;
};

OutputMaps output_maps(const ForecastModel& m, const GridField& field, std::size_t first) {
    const std::size_t cells = field.cells(), h = m.variables(), r = m.r();
    OutputMaps o{Tensor::matrix(cells, r * h, 0.0), Tensor::matrix(cells, r * h), Tensor::matrix(cells, r * h)};
    const double* last = field.data().data() + (first + m.s()) * cells * h;
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t j = 0; j < r; ++j) {
            for (std::size_t v = 0; v < h; ++v) {
                const std::size_t k = j * h + v;
                if (m.skip()) o.skip(c, k) = m.scaling()[v].forward(last[c * h + v]);
                o.scale(c, k) = m.scaling()[v].scale;
                o.offset(c, k) = m.scaling()[v].offset;
            }
        }
    }
    return o;
}

Tensor target_frames(const GridField& field, std::size_t first, std::size_t s, std::size_t r) {
    const std::size_t cells = field.cells(), h = field.nvars();
    Tensor t = Tensor::matrix(cells, r * h);
    for (std::size_t j = 0; j < r; ++j) {
        const double* base = field.data().data() + (first + s + 1 + j) * cells * h;
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t v = 0; v < h; ++v) t(c, j * h + v) = base[c * h + v];
        }
    }
    return t;
}

}  // namespace

Tensor ForecastModel::predict_window(const GridField& field, std::size_t first) const {
    Tensor out = mlp_.evaluate(window_input(field, first));
    const OutputMaps o = output_maps(*this, field, first);
    auto& d = out.storage();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = (d[i] + o.skip.storage()[i]) * o.scale.storage()[i] + o.offset.storage()[i];
    }
    return out;
}

GridField ForecastModel::forecast(const GridField& history) const {
    if (history.nt() != s_ + 1) {
        throw UsageError("forecast: history must hold s+1 = " + std::to_string(s_ + 1) + " frames, got " +
                         std::to_string(history.nt()));
    }
    const Tensor p = predict_window(history, 0);
    GridAxes a = history.axes();
    a.t0 = history.t(history.nt() - 1) + a.dt;
    GridField out(r_, history.ny(), history.nx(), names_, a);
    const std::size_t h = names_.size();
    for (std::size_t j = 0; j < r_; ++j) {
        for (std::size_t c = 0; c < history.cells(); ++c) {
            for (std::size_t v = 0; v < h; ++v) out.data()[(j * history.cells() + c) * h + v] = p(c, j * h + v);
        }
    }
    return out;
}

Checkpoint ForecastModel::to_checkpoint() const {
    Checkpoint c;
    c.role = NetRole::Forecast;
    c.widths = mlp_.widths();
    c.normalization = NormalizationSpec::identity(names_.size());
    c.normalization.outputs = scaling_;
    c.names = names_;
    c.aux = {static_cast<double>(s_), static_cast<double>(r_), skip_ ? 1.0 : 0.0};
    c.params = mlp_.params();
    return c;
}

ForecastModel ForecastModel::from_checkpoint(const Checkpoint& c) {
    if (c.role != NetRole::Forecast) throw DataError("pgnet: checkpoint is not a forecast model");
    if (c.aux.size() != 3) throw DataError("pgnet: forecast checkpoint lacks window sizes");
    return ForecastModel(Mlp(c.widths, c.params), static_cast<std::size_t>(c.aux[0]), static_cast<std::size_t>(c.aux[1]),
                         c.names, c.normalization.outputs, c.aux[2] != 0.0);
}

GridField persistence(const GridField& history, std::size_t r) {
    if (history.nt() == 0) throw UsageError("persistence: empty history");
    if (r == 0) throw UsageError("persistence: r must be >= 1");
    GridAxes a = history.axes();
    a.t0 = history.t(history.nt() - 1) + a.dt;
    GridField out(r, history.ny(), history.nx(), history.names(), a);
    const std::size_t frame = history.cells() * history.nvars();
    const auto last = history.data().begin() + static_cast<std::ptrdiff_t>((history.nt() - 1) * frame);
    for (std::size_t j = 0; j < r; ++j) {
        std::copy(last, last + static_cast<std::ptrdiff_t>(frame), out.data().begin() + static_cast<std::ptrdiff_t>(j * frame));
    }
    return out;
}

PhysicsTarget PhysicsTarget::from_nets(const EquationSystem& system, const FieldNet* latent_force,
                                       const GridField& grid) {
    system.validate();
    PhysicsTarget t{system, std::nullopt};
    std::vector<std::string> names;
    for (const auto& e : system.equations) {
        if (e.latent_force) names.push_back("Q_" + system.variables[e.variable]);
    }
    if (names.empty()) {
        if (latent_force) throw UsageError("physics target: latent-force net given but no equation uses it");
        return t;
    }
    if (!latent_force) throw UsageError("physics target: equations need a latent-force net");
    t.latent = evaluate_grid(*latent_force, names, grid.nt(), grid.ny(), grid.nx(), grid.axes());
    return t;
}

namespace {

// Interior-cell gather tables for the spatial stencils.
struct Stencils {
    std::vector<std::uint32_t> center, west, east, south, north, sw, se, nw, ne;
    double dx = 1.0, dy = 1.0;
    StencilKind kind = StencilKind::Central;
};

Stencils stencils(const GridField& grid, StencilKind kind) {
    if (grid.nx() < 3 || grid.ny() < 3) throw DataError("forecast physics: grid needs >= 3 points per axis");
    Stencils s;
    s.dx = grid.axes().dx;
    s.dy = grid.axes().dy;
    s.kind = kind;
    const std::size_t nx = grid.nx();
    for (std::size_t y = 1; y + 1 < grid.ny(); ++y) {
        for (std::size_t x = 1; x + 1 < nx; ++x) {
            auto id = [&](std::size_t yy, std::size_t xx) { return static_cast<std::uint32_t>(yy * nx + xx); };
            s.center.push_back(id(y, x));
            s.west.push_back(id(y, x - 1));
            s.east.push_back(id(y, x + 1));
            s.south.push_back(id(y - 1, x));
            s.north.push_back(id(y + 1, x));
            s.sw.push_back(id(y - 1, x - 1));
            s.se.push_back(id(y - 1, x + 1));
            s.nw.push_back(id(y + 1, x - 1));
            s.ne.push_back(id(y + 1, x + 1));
        }
    }
    return s;
}

// Residual assembly shared by the value and tape paths. Ops provides
// Column frame(j, v), history(v), gather(Column, idx), sub, add, mul, scale,
// constant(double), column(std::vector<double>) and accumulate(Column).
template <class Ops>
class FrameAlgebra {
public:
    using Column = typename Ops::Column;

    FrameAlgebra(Ops& ops, const Stencils& st, std::size_t frame) : ops_(ops), st_(st), frame_(frame) {}

    Column factor(const Factor& f) {
        const auto key = std::make_tuple(f.var, f.dx, f.dy);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const Column p = ops_.frame(frame_, f.var);
        auto g = [&](const std::vector<std::uint32_t>& idx) { return ops_.gather(p, idx); };
        Column out;
        if (f.dx == 0 && f.dy == 0) {
            out = g(st_.center);
        } else if (f.dx == 1 && f.dy == 0) {
            out = first(g(st_.west), g(st_.center), g(st_.east), st_.dx);
        } else if (f.dx == 0 && f.dy == 1) {
            out = first(g(st_.south), g(st_.center), g(st_.north), st_.dy);
        } else if (f.dx == 2 && f.dy == 0) {
            out = ops_.scale(ops_.add(ops_.sub(g(st_.east), ops_.scale(g(st_.center), 2.0)), g(st_.west)),
                             1.0 / (st_.dx * st_.dx));
        } else if (f.dx == 0 && f.dy == 2) {
            out = ops_.scale(ops_.add(ops_.sub(g(st_.north), ops_.scale(g(st_.center), 2.0)), g(st_.south)),
                             1.0 / (st_.dy * st_.dy));
        } else if (f.dx == 1 && f.dy == 1) {
            out = ops_.scale(ops_.add(ops_.sub(g(st_.ne), g(st_.nw)), ops_.sub(g(st_.sw), g(st_.se))),
                             1.0 / (4.0 * st_.dx * st_.dy));
        } else {
            throw UsageError("forecast physics: unsupported spatial derivative order");
        }
        cache_.emplace(key, out);
        return out;
    }
    Column mul(Column a, Column b) { return ops_.mul(a, b); }
    Column scale(Column a, double c) { return ops_.scale(a, c); }
    Column add(Column a, Column b) { return ops_.add(a, b); }
    Column constant(double c) { return ops_.constant(c, st_.center.size()); }

private:
    Column first(Column w, Column c, Column e, double h) {
        switch (st_.kind) {
            case StencilKind::Forward: return ops_.scale(ops_.sub(e, c), 1.0 / h);
            case StencilKind::Backward: return ops_.scale(ops_.sub(c, w), 1.0 / h);
            case StencilKind::Central: break;
        }
        return ops_.scale(ops_.sub(e, w), 0.5 / h);
    }

    Ops& ops_;
    const Stencils& st_;
    std::size_t frame_;
    std::map<std::tuple<std::size_t, int, int>, Column> cache_;
};

// Adds the squared residual of every (frame, equation) to ops.
template <class Ops>
void assemble_residual(Ops& ops, const Stencils& st, const PhysicsTarget& target, std::size_t r, double dt,
                       std::size_t first_time) {
    const auto& eqs = target.system.equations;
    std::size_t latent = 0;
    for (const Equation& eq : eqs) {
        if (eq.target_order != 1) throw UsageError("forecast physics: only first-order time targets are supported");
        std::vector<typename Ops::Column> frames;
        for (std::size_t j = 0; j < r; ++j) frames.push_back(ops.frame(j, eq.variable));
        const auto dudt = time_derivative_frames(ops.history(eq.variable), frames, dt, ops);
        for (std::size_t j = 0; j < r; ++j) {
            FrameAlgebra<Ops> alg(ops, st, j);
            auto res = ops.sub(ops.gather(dudt[j], st.center), explicit_terms(eq, alg));
            if (eq.latent_force) {
                const GridField& q = *target.latent;
                const std::size_t t = first_time + j;
                if (t >= q.nt()) throw DataError("forecast physics: latent force not sampled at frame " + std::to_string(t));
                std::vector<double> col(st.center.size());
                for (std::size_t i = 0; i < col.size(); ++i) {
                    col[i] = q.data()[(t * q.cells() + st.center[i]) * q.nvars() + latent];
                }
                res = ops.sub(res, ops.column(std::move(col)));
            }
            ops.accumulate(res);
        }
        if (eq.latent_force) ++latent;
    }
}

// Value path over a predictions tensor (cells x r h).
struct ValueOps {
    using Column = std::vector<double>;

    const Tensor& pred;
    const std::vector<double>& last;  // cells x h
    std::size_t h;
    double sum = 0.0;

    Column frame(std::size_t j, std::size_t v) const {
        Column c(pred.rows());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = pred(i, j * h + v);
        return c;
    }
    Column history(std::size_t v) const {
        Column c(pred.rows());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = last[i * h + v];
        return c;
    }
    Column gather(const Column& a, const std::vector<std::uint32_t>& idx) const {
        Column c(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) c[i] = a[idx[i]];
        return c;
    }
    Column sub(const Column& a, const Column& b) const {
        Column c(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
        return c;
    }
    Column add(const Column& a, const Column& b) const {
        Column c(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
        return c;
    }
    Column mul(const Column& a, const Column& b) const {
        Column c(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
        return c;
    }
    Column scale(Column a, double k) const {
        for (double& v : a) v *= k;
        return a;
    }
    Column constant(double k, std::size_t n) const { return Column(n, k); }
    Column column(Column c) const { return c; }
    void accumulate(const Column& res) {
        for (double v : res) sum += v * v;
    }
};

// Tape path: predictions are a Var (cells x r h).
struct TapeOps {
    using Column = ad::Var;

    ad::Tape& tape;
    ad::Var pred;
    const std::vector<double>& last;
    std::size_t h;
    std::optional<ad::Var> sum;

    Column frame(std::size_t j, std::size_t v) const { return tape.col(pred, j * h + v); }
    Column history(std::size_t v) const {
        const std::size_t cells = last.size() / h;
        Tensor t = Tensor::matrix(cells, 1);
        for (std::size_t i = 0; i < cells; ++i) t(i, 0) = last[i * h + v];
        return tape.constant(std::move(t));
    }
    Column gather(Column a, const std::vector<std::uint32_t>& idx) const { return tape.gather_rows(a, idx); }
    Column sub(Column a, Column b) const { return tape.sub(a, b); }
    Column add(Column a, Column b) const { return tape.add(a, b); }
    Column mul(Column a, Column b) const { return tape.mul(a, b); }
    Column scale(Column a, double k) const { return tape.scale(a, k); }
    Column constant(double k, std::size_t n) const { return tape.constant(Tensor::matrix(n, 1, k)); }
    Column column(std::vector<double> c) const {
        const std::size_t n = c.size();
        return tape.constant(Tensor(Shape{n, 1}, std::move(c)));
    }
    void accumulate(Column res) {
        const ad::Var s = tape.sum(tape.square(res));
        sum = sum ? tape.add(*sum, s) : s;
    }
};

std::vector<double> frame_copy(const GridField& f, std::size_t t) {
    const std::size_t n = f.cells() * f.nvars();
    const auto b = f.data().begin() + static_cast<std::ptrdiff_t>(t * n);
    return std::vector<double>(b, b + static_cast<std::ptrdiff_t>(n));
}

void check_record(const ForecastModel& model, const GridField& record) {
    record.validate();
    if (record.names() != model.names()) throw ShapeError("forecast: record variables do not match the model");
}

WindowRange all_windows(const ForecastModel& model, const GridField& record) {
    return WindowRange{0, window_count(record.nt(), model.s(), model.r())};
}

void check_range(const ForecastModel& model, const GridField& record, const WindowRange& w) {
    if (w.count == 0) throw DataError("forecast: no windows (q <= 0)");
    if (w.begin + w.count - 1 + model.s() + model.r() >= record.nt()) {
        throw UsageError("forecast: window range runs past the record");
    }
}

struct WindowGrad {
    double data = 0.0;
    double physics = 0.0;
    std::vector<double> grad;
};

WindowGrad window_objective(const ForecastModel& model, const GridField& record, std::size_t first,
                            double data_weight, const PhysicsTarget* target, const Stencils* st, double phys_weight,
                            double beta, bool want_grad) {
    ad::Tape tape;
    const Mlp::Bound bound = model.mlp().bind(tape, want_grad);
    const ad::Var x = tape.constant(model.window_input(record, first));
    OutputMaps o = output_maps(model, record, first);
    ad::Var out = model.mlp().forward(tape, bound, x);
    if (model.skip()) out = tape.add(out, tape.constant(std::move(o.skip)));
    const ad::Var pred = tape.add(tape.mul(out, tape.constant(std::move(o.scale))), tape.constant(std::move(o.offset)));
    const ad::Var err = tape.sub(pred, tape.constant(target_frames(record, first, model.s(), model.r())));
    const ad::Var data = tape.scale(tape.sum(tape.square(err)), data_weight);
    ad::Var total = data;
    WindowGrad g;
    g.data = tape.value(data)(0, 0);
    if (target && st && (beta > 0 || !want_grad)) {
        const std::vector<double> last = frame_copy(record, first + model.s());
        TapeOps ops{tape, pred, last, model.variables(), std::nullopt};
        assemble_residual(ops, *st, *target, model.r(), record.axes().dt, first + model.s() + 1);
        const ad::Var phys = tape.scale(*ops.sum, phys_weight);
        g.physics = tape.value(phys)(0, 0);
        if (beta > 0) total = tape.add(total, tape.scale(phys, beta));
    }
    if (want_grad) g.grad = model.mlp().gradient(tape, bound, total);
    return g;
}

}  // namespace

double forecast_data_loss(const ForecastModel& model, const GridField& record, std::optional<WindowRange> windows) {
    check_record(model, record);
    const WindowRange w = windows ? *windows : all_windows(model, record);
    check_range(model, record, w);
    const double weight = 1.0 / static_cast<double>(w.count * record.cells() * model.r() * model.variables());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.count; ++i) {
        const Tensor p = model.predict_window(record, w.begin + i);
        const Tensor t = target_frames(record, w.begin + i, model.s(), model.r());
        double s = 0.0;
        for (std::size_t k = 0; k < p.storage().size(); ++k) {
            const double e = p.storage()[k] - t.storage()[k];
            s += e * e;
        }
        sum += s * weight;
    }
    return sum;
}

double frames_physics_loss(const GridField& last_history, const GridField& predicted, const PhysicsTarget& target,
                           std::size_t first_time, StencilKind stencil) {
    if (last_history.nt() < 1) throw UsageError("forecast physics: empty history");
    if (predicted.nt() == 0) throw UsageError("forecast physics: no predicted frames (r = 0)");
    if (last_history.ny() != predicted.ny() || last_history.nx() != predicted.nx() ||
        last_history.names() != predicted.names()) {
        throw ShapeError("forecast physics: history and predictions are on different grids");
    }
    if (target.system.variables != predicted.names()) throw ShapeError("forecast physics: system variables differ");
    const std::size_t h = predicted.nvars(), cells = predicted.cells(), r = predicted.nt();
    Tensor pred = Tensor::matrix(cells, r * h);
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t v = 0; v < h; ++v) pred(c, j * h + v) = predicted.data()[(j * cells + c) * h + v];
        }
    }
    const std::vector<double> last = frame_copy(last_history, last_history.nt() - 1);
    const Stencils st = stencils(predicted, stencil);
    ValueOps ops{pred, last, h, 0.0};
    assemble_residual(ops, st, target, r, predicted.axes().dt, first_time);
    return ops.sum / static_cast<double>(st.center.size() * r * target.system.equations.size());
}

double forecast_physics_loss(const ForecastModel& model, const GridField& record, const PhysicsTarget& target,
                             StencilKind stencil, std::optional<WindowRange> windows) {
    check_record(model, record);
    const WindowRange w = windows ? *windows : all_windows(model, record);
    check_range(model, record, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.count; ++i) {
        const std::size_t first = w.begin + i;
        const GridField last = record.frames(first + model.s(), first + model.s() + 1);
        const GridField pred = model.forecast(record.frames(first, first + model.s() + 1));
        sum += frames_physics_loss(last, pred, target, first + model.s() + 1, stencil);
    }
    return sum / static_cast<double>(w.count);
}

std::string ForecastTrainResult::history_csv() const {
    std::ostringstream s;
    s.precision(17);
    s << "epoch,data_loss,phys_loss,val_loss,total\n";
    for (const auto& e : history) {
        s << e.epoch << ',' << e.data_loss << ',' << e.physics_loss << ',' << e.validation_loss << ',' << e.total
          << '\n';
    }
    return s.str();
}

ForecastTrainResult fit_forecaster(ForecastModel model, const GridField& record, const ForecastConfig& config,
                                   const PhysicsTarget* target) {
    config.validate();
    check_record(model, record);
    if (model.s() != config.s || model.r() != config.r) throw UsageError("forecast: model and config windows differ");
    const ChronologicalSplit split = chronological_split(record);
    const WindowRange train_w = training_windows(split.train_end, config.s, config.r);
    const WindowRange val_w = target_windows(split.train_end, split.validation_end, config.s, config.r);
    const bool physics = target && config.beta > 0;
    std::optional<Stencils> st;
    if (physics) {
        if (target->system.variables != record.names()) throw ShapeError("forecast: system variables differ");
        st = stencils(record, config.stencil);
    }
    const double data_weight =
        1.0 / static_cast<double>(record.cells() * config.r * model.variables());
    const double phys_weight =
        st ? 1.0 / static_cast<double>(st->center.size() * config.r * target->system.equations.size()) : 0.0;

    Adam opt(model.param_count(), AdamConfig{config.learning_rate});
    Rng rng(config.seed ^ 0x2545f4914f6cdd1dULL);
    ForecastTrainResult result;
    Buffer best = model.mlp().params();
    double best_val = std::numeric_limits<double>::infinity();

    try {
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            std::vector<std::size_t> order(train_w.count);
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = train_w.begin + i;
            shuffle(order, rng);
            ForecastEpoch rec;
            rec.epoch = epoch;
            std::size_t steps = 0;
            for (std::size_t b = 0; b < order.size(); b += config.batch_windows) {
                const std::size_t e = std::min(order.size(), b + config.batch_windows);
                const double inv = 1.0 / static_cast<double>(e - b);
                std::vector<WindowGrad> parts(e - b);
                parallel_for(e - b, [&](std::size_t i) {
                    parts[i] = window_objective(model, record, order[b + i], data_weight * inv,
                                                physics ? target : nullptr, st ? &*st : nullptr, phys_weight * inv,
                                                config.beta, true);
                });
                std::vector<double> grad(model.param_count(), 0.0);
                double d = 0.0, p = 0.0;
                for (const auto& w : parts) {
                    d += w.data;
                    p += w.physics;
                    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += w.grad[k];
                }
                const double total = d + config.beta * p;
                if (!std::isfinite(total)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
                rec.data_loss += d;
                rec.physics_loss += p;
                rec.total += total;
                ++steps;
                opt.step(model.mlp().params(), grad);
            }
            rec.data_loss /= static_cast<double>(steps);
            rec.physics_loss /= static_cast<double>(steps);
            rec.total /= static_cast<double>(steps);
            rec.validation_loss = forecast_data_loss(model, record, val_w);
            if (!std::isfinite(rec.validation_loss)) throw NumericalError("non-finite validation loss");
            result.history.push_back(rec);
            if (rec.validation_loss < best_val) {
                best_val = rec.validation_loss;
                best = model.mlp().params();
                result.best_epoch = epoch;
            }
        }
    } catch (const NumericalError& e) {
        result.aborted = std::string("forecast training diverged: ") + e.what();
    }
    model.mlp().params() = best;
    result.model = std::move(model);
    result.best_validation_loss = best_val;
    return result;
}

ForecastTrainResult pretrain(const GridField& record, const ForecastConfig& config) {
    config.validate();
    record.validate();
    const ChronologicalSplit split = chronological_split(record);
    const GridField& train = split.train;
    const std::size_t h = record.nvars();
    std::vector<double> mean(h, 0.0), sq(h, 0.0);
    for (std::size_t p = 0; p < train.points(); ++p) {
        for (std::size_t v = 0; v < h; ++v) mean[v] += train.data()[p * h + v];
    }
    for (double& m : mean) m /= static_cast<double>(train.points());
    for (std::size_t p = 0; p < train.points(); ++p) {
        for (std::size_t v = 0; v < h; ++v) {
            const double d = train.data()[p * h + v] - mean[v];
            sq[v] += d * d;
        }
    }
    std::vector<Affine> scaling;
    for (std::size_t v = 0; v < h; ++v) {
        const double sd = std::sqrt(sq[v] / static_cast<double>(train.points()));
        scaling.push_back(Affine{mean[v], sd > 0 ? sd : 1.0});
    }
    ForecastConfig c = config;
    c.beta = 0.0;
    return fit_forecaster(ForecastModel::init(c, record.names(), scaling), record, c, nullptr);
}

ForecastTrainResult finetune(const ForecastModel& model, const GridField& record, const PhysicsTarget& target,
                             const ForecastConfig& config) {
    return fit_forecaster(model, record, config, &target);
}

namespace {

WindowedScores finish(std::vector<std::vector<double>>& sums, std::size_t per_lead) {
    WindowedScores s;
    const std::size_t r = sums.size(), h = sums.empty() ? 0 : sums[0].size();
    s.rmse.assign(h, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        std::vector<double> row(h);
        for (std::size_t v = 0; v < h; ++v) {
            row[v] = std::sqrt(sums[j][v] / static_cast<double>(per_lead));
            s.rmse[v] += sums[j][v];
        }
        s.rmse_by_lead.push_back(row);
    }
    for (double& v : s.rmse) v = std::sqrt(v / static_cast<double>(per_lead * r));
    return s;
}

template <class Predict>
WindowedScores score_windows(const GridField& record, const GridField& truth, WindowRange w, std::size_t s,
                             std::size_t r, Predict predict) {
    if (!record.same_layout(truth)) throw ShapeError("forecast evaluation: truth is on a different grid");
    const std::size_t h = record.nvars(), cells = record.cells();
    std::vector<std::vector<double>> sums(r, std::vector<double>(h, 0.0));
    for (std::size_t i = 0; i < w.count; ++i) {
        const std::size_t first = w.begin + i;
        const Tensor p = predict(first);
        const Tensor t = target_frames(truth, first, s, r);
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t j = 0; j < r; ++j) {
                for (std::size_t v = 0; v < h; ++v) {
                    const double e = p(c, j * h + v) - t(c, j * h + v);
                    sums[j][v] += e * e;
                }
            }
        }
    }
    return finish(sums, w.count * cells);
}

}  // namespace

WindowedScores evaluate_windows(const ForecastModel& model, const GridField& record, const GridField& truth,
                                WindowRange windows) {
    check_record(model, record);
    check_range(model, record, windows);
    return score_windows(record, truth, windows, model.s(), model.r(),
                         [&](std::size_t first) { return model.predict_window(record, first); });
}

WindowedScores evaluate_persistence(const GridField& record, const GridField& truth, WindowRange windows,
                                    std::size_t s, std::size_t r) {
    return score_windows(record, truth, windows, s, r, [&](std::size_t first) {
        const std::size_t h = record.nvars(), cells = record.cells();
        Tensor p = Tensor::matrix(cells, r * h);
        const double* last = record.data().data() + (first + s) * cells * h;
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t j = 0; j < r; ++j) {
                for (std::size_t v = 0; v < h; ++v) p(c, j * h + v) = last[c * h + v];
            }
        }
        return p;
    });
}

}  // namespace physgrid
