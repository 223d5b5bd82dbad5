#include "physgrid/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "physgrid/errors.hpp"
#include "physgrid/optim.hpp"
#include "physgrid/rng.hpp"

namespace physgrid {

namespace {

constexpr std::size_t kDataShard = 1024;
constexpr std::size_t kPhysicsShard = 512;

}  // namespace

void TrainConfig::validate() const {
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw UsageError("train: alpha must be >= 0");
    if (!(sigma_theta >= 0) || !(sigma_pi >= 0)) throw UsageError("train: regularization weights must be >= 0");
    if (!(learning_rate > 0)) throw UsageError("train: learning_rate must be positive");
    if (batch_size == 0) throw UsageError("train: batch_size must be positive");
    if (epochs == 0) throw UsageError("train: epochs must be positive (nothing to train)");
    if (refit_period == 0) throw UsageError("train: refit_period must be positive");
    if (refit_points == 0) throw UsageError("train: refit_points must be positive");
    if (hidden_layers == 0 || hidden_width == 0) throw UsageError("train: empty surrogate architecture");
    if (force_hidden_layers == 0 || force_hidden_width == 0) throw UsageError("train: empty latent-force architecture");
    if (!(data_fraction > 0 && data_fraction <= 1)) throw UsageError("train: data_fraction must be in (0, 1]");
    if (!(ridge >= 0) || !(threshold >= 0)) throw UsageError("train: ridge and threshold must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json eqs = nlohmann::json::array();
    for (const auto& e : equations) {
        nlohmann::json j{{"variable", e.variable}, {"target_order", e.target_order}, {"latent_force", e.latent_force}};
        if (e.advected_by) j["advected_by"] = {e.advected_by->first, e.advected_by->second};
        eqs.push_back(j);
    }
    return {{"alpha", alpha},
            {"sigma_theta", sigma_theta},
            {"sigma_pi", sigma_pi},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"collocation_batch", collocation_batch},
            {"epochs", epochs},
            {"collocation", {collocation_nx, collocation_ny, collocation_nt}},
            {"refit_period", refit_period},
            {"warmup_epochs", warmup_epochs},
            {"refit_points", refit_points},
            {"ridge", ridge},
            {"threshold", threshold},
            {"seed", seed},
            {"hidden_layers", hidden_layers},
            {"hidden_width", hidden_width},
            {"force_hidden_layers", force_hidden_layers},
            {"force_hidden_width", force_hidden_width},
            {"data_fraction", data_fraction},
            {"equations", eqs}};
}

DataBatch grid_batch(const GridField& field) {
    DataBatch b;
    b.coords = grid_coords(field);
    b.values = field.data();
    return b;
}

namespace {

struct ShardGrad {
    double loss = 0.0;
    std::vector<double> theta;
    std::vector<double> pi;
};

// sum of squared normalized errors over the shard, times `weight`.
ShardGrad data_shard(const FieldNet& net, const DataBatch& batch, std::span<const std::size_t> rows, double weight,
                     bool want_grad) {
    const NormalizationSpec& norm = net.normalization();
    const std::size_t h = net.outputs();
    std::vector<Coord> coords(rows.size());
    Tensor target = Tensor::matrix(rows.size(), h);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        coords[i] = batch.coords[rows[i]];
        for (std::size_t k = 0; k < h; ++k) target(i, k) = norm.outputs[k].forward(batch.values[rows[i] * h + k]);
    }
    ad::Tape tape;
    const Mlp::Bound bound = net.mlp().bind(tape, want_grad);
    const ad::Var x = tape.constant(coords_tensor(norm, coords));
    const ad::Var y = net.mlp().forward(tape, bound, x);
    const ad::Var loss = tape.scale(tape.sum(tape.square(tape.sub(y, tape.constant(std::move(target))))), weight);
    ShardGrad g;
    g.loss = tape.value(loss)(0, 0);
    if (want_grad) g.theta = net.mlp().gradient(tape, bound, loss);
    return g;
}

class TapeAlgebra {
public:
    using Column = ad::Var;

    TapeAlgebra(ad::Tape& tape, const NetJet& jet, const NormalizationSpec& norm, std::size_t rows)
        : tape_(tape), jet_(jet), norm_(norm), rows_(rows) {}

    Column factor(const Factor& f) {
        const Partial p = f.partial();
        const auto key = std::make_pair(f.var, static_cast<int>(p));
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const ad::Var c = tape_.col(jet_.at(p), f.var);
        const Affine& a = norm_.outputs[f.var];
        const ad::Var out = p == Partial::Value ? tape_.add_scalar(tape_.scale(c, a.scale), a.offset)
                                                : tape_.scale(c, physical_factor(norm_, f.var, p));
        cache_.emplace(key, out);
        return out;
    }
    Column mul(Column a, Column b) { return tape_.mul(a, b); }
    Column scale(Column a, double c) { return tape_.scale(a, c); }
    Column add(Column a, Column b) { return tape_.add(a, b); }
    Column constant(double c) { return tape_.constant(Tensor::matrix(rows_, 1, c)); }
    Column target(const Equation& eq) {
        const Partial p = eq.target_partial();
        return tape_.scale(tape_.col(jet_.at(p), eq.variable), physical_factor(norm_, eq.variable, p));
    }

private:
    ad::Tape& tape_;
    const NetJet& jet_;
    const NormalizationSpec& norm_;
    std::size_t rows_;
    std::map<std::pair<std::size_t, int>, ad::Var> cache_;
};

std::size_t latent_count(const EquationSystem& system) {
    std::size_t n = 0;
    for (const auto& e : system.equations) n += e.latent_force ? 1 : 0;
    return n;
}

void check_latent(const FieldNet* q, const EquationSystem& system) {
    const std::size_t n = latent_count(system);
    if (n > 0 && !q) throw UsageError("physics loss: system has latent-force terms but no latent-force net");
    if (n == 0 && q) throw UsageError("physics loss: latent-force net given but no equation uses it");
    if (q && q->outputs() != n) throw ShapeError("physics loss: latent-force net outputs != latent equations");
}

ShardGrad physics_shard(const FieldNet& net, const FieldNet* q, const EquationSystem& system,
                        std::span<const Coord> coords, double weight, bool want_grad) {
    const NormalizationSpec& norm = net.normalization();
    const std::size_t rows = coords.size();
    ad::Tape tape;
    const Mlp::Bound bound = net.mlp().bind(tape, want_grad);
    std::optional<Mlp::Bound> qbound;
    if (q) qbound = q->mlp().bind(tape, want_grad);
    const ad::Var x = tape.constant(coords_tensor(norm, coords));
    const NetJet jet = forward_jet(tape, net.mlp(), bound, x, system.required_partials());
    std::optional<ad::Var> qout;
    if (q) {
        const ad::Var xq = tape.constant(coords_tensor(q->normalization(), coords));
        qout = q->mlp().forward(tape, *qbound, xq);
    }
    TapeAlgebra alg(tape, jet, norm, rows);
    std::optional<ad::Var> total;
    std::size_t latent = 0;
    for (const Equation& eq : system.equations) {
        ad::Var res = tape.sub(alg.target(eq), explicit_terms(eq, alg));
        if (eq.latent_force) {
            const Affine& a = q->normalization().outputs[latent];
            const ad::Var qc = tape.add_scalar(tape.scale(tape.col(*qout, latent), a.scale), a.offset);
            res = tape.sub(res, qc);
            ++latent;
        }
        const ad::Var sq = tape.sum(tape.square(tape.scale(res, 1.0 / norm.outputs[eq.variable].scale)));
        total = total ? tape.add(*total, sq) : sq;
    }
    const ad::Var loss = tape.scale(*total, weight);
    ShardGrad g;
    g.loss = tape.value(loss)(0, 0);
    if (want_grad) {
        std::vector<ad::Var> wrt = Mlp::parameter_vars(bound);
        const std::size_t ntheta = wrt.size();
        if (q) {
            const auto qv = Mlp::parameter_vars(*qbound);
            wrt.insert(wrt.end(), qv.begin(), qv.end());
        }
        const std::vector<Tensor> grads = tape.grad(loss, wrt);
        g.theta.assign(net.param_count(), 0.0);
        net.mlp().accumulate(std::span(grads).subspan(0, ntheta), g.theta);
        if (q) {
            g.pi.assign(q->param_count(), 0.0);
            q->mlp().accumulate(std::span(grads).subspan(ntheta), g.pi);
        }
    }
    return g;
}

// Runs shards in parallel and reduces them in index order.
ShardGrad reduce(std::vector<ShardGrad>& parts, std::size_t ntheta, std::size_t npi) {
    ShardGrad out;
    out.theta.assign(ntheta, 0.0);
    out.pi.assign(npi, 0.0);
    for (const auto& p : parts) {
        out.loss += p.loss;
        for (std::size_t i = 0; i < p.theta.size(); ++i) out.theta[i] += p.theta[i];
        for (std::size_t i = 0; i < p.pi.size(); ++i) out.pi[i] += p.pi[i];
    }
    return out;
}

ShardGrad data_objective(const FieldNet& net, const DataBatch& batch, std::span<const std::size_t> rows,
                         bool want_grad) {
    const std::size_t shards = (rows.size() + kDataShard - 1) / kDataShard;
    const double weight = 1.0 / static_cast<double>(rows.size() * net.outputs());
    std::vector<ShardGrad> parts(shards);
    parallel_for(shards, [&](std::size_t s) {
        const std::size_t b = s * kDataShard, e = std::min(rows.size(), b + kDataShard);
        parts[s] = data_shard(net, batch, rows.subspan(b, e - b), weight, want_grad);
    });
    return reduce(parts, want_grad ? net.param_count() : 0, 0);
}

ShardGrad physics_objective(const FieldNet& net, const FieldNet* q, const EquationSystem& system,
                            std::span<const Coord> coords, bool want_grad) {
    check_latent(q, system);
    if (coords.empty()) throw UsageError("physics loss: empty collocation batch");
    if (system.equations.empty()) throw UsageError("physics loss: no equations");
    const std::size_t shards = (coords.size() + kPhysicsShard - 1) / kPhysicsShard;
    const double weight = 1.0 / static_cast<double>(coords.size() * system.equations.size());
    std::vector<ShardGrad> parts(shards);
    parallel_for(shards, [&](std::size_t s) {
        const std::size_t b = s * kPhysicsShard, e = std::min(coords.size(), b + kPhysicsShard);
        parts[s] = physics_shard(net, q, system, coords.subspan(b, e - b), weight, want_grad);
    });
    return reduce(parts, want_grad ? net.param_count() : 0, want_grad && q ? q->param_count() : 0);
}

}  // namespace

double data_loss(const FieldNet& net, const DataBatch& batch) {
    const std::size_t h = net.outputs();
    if (batch.coords.empty()) throw UsageError("data loss: empty batch");
    if (batch.values.size() != batch.coords.size() * h) throw ShapeError("data loss: values do not match coords x outputs");
    std::vector<std::size_t> rows(batch.coords.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return data_objective(net, batch, rows, false).loss;
}

double physics_loss(const FieldNet& net, const FieldNet* latent_force, const EquationSystem& system,
                    std::span<const Coord> collocation) {
    return physics_objective(net, latent_force, system, collocation, false).loss;
}

void refit_coefficients(const FieldNet& net, const FieldNet* q, EquationSystem& system, std::span<const Coord> points,
                        double ridge, double threshold) {
    check_latent(q, system);
    const DerivativeBundle bundle = derivative_bundle(net, points, system.required_partials());
    std::optional<Tensor> qv;
    if (q) qv = predict(*q, points);
    std::size_t latent = 0;
    for (Equation& eq : system.equations) {
        std::vector<double> qcol;
        if (eq.latent_force) {
            qcol.resize(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) qcol[i] = (*qv)(i, latent);
            ++latent;
        }
        const TermMatrix m = build_term_matrix(bundle, eq, eq.latent_force ? &qcol : nullptr);
        const FitResult fit = fit_coefficients(m, ridge, threshold);
        eq.coefficients = fit.coefficients;
        eq.ridge = ridge;
        eq.residual_rms = fit.residual_rms;
    }
}

std::string TrainResult::history_csv() const {
    std::ostringstream s;
    s.precision(17);
    s << "epoch,data_loss,phys_loss,val_loss,xi_snapshot,regularization,total\n";
    for (const auto& r : history) {
        s << r.epoch << ',' << r.data_loss << ',' << r.physics_loss << ',' << r.validation_loss << ',' << r.xi_snapshot
          << ',' << r.regularization << ',' << r.total << '\n';
    }
    return s.str();
}

namespace {

std::vector<Affine> output_scaling(const GridField& train) {
    const std::size_t h = train.nvars();
    std::vector<double> mean(h, 0.0), sq(h, 0.0);
    const std::size_t n = train.points();
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t k = 0; k < h; ++k) mean[k] += train.data()[p * h + k];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t k = 0; k < h; ++k) {
            const double d = train.data()[p * h + k] - mean[k];
            sq[k] += d * d;
        }
    }
    std::vector<Affine> out;
    for (std::size_t k = 0; k < h; ++k) {
        const double sd = std::sqrt(sq[k] / static_cast<double>(n));
        out.push_back(Affine{mean[k], sd > 0 ? sd : 1.0});
    }
    return out;
}

// Regular grid over [lo, hi] with each point jittered inside its cell.
std::vector<Coord> jittered_grid(const Coord& lo, const Coord& hi, std::size_t nx, std::size_t ny, std::size_t nt,
                                 Rng& rng) {
    auto axis = [](double a, double b, std::size_t n) {
        const double step = n > 1 ? (b - a) / static_cast<double>(n - 1) : 0.0;
        return std::make_pair(a, step);
    };
    const auto [x0, sx] = axis(lo.x, hi.x, nx);
    const auto [y0, sy] = axis(lo.y, hi.y, ny);
    const auto [t0, st] = axis(lo.t, hi.t, nt);
    std::vector<Coord> out;
    out.reserve(nx * ny * nt);
    for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                Coord c{x0 + sx * (static_cast<double>(i) + rng.uniform(-0.5, 0.5)),
                        y0 + sy * (static_cast<double>(j) + rng.uniform(-0.5, 0.5)),
                        t0 + st * (static_cast<double>(k) + rng.uniform(-0.5, 0.5))};
                c.x = std::clamp(c.x, lo.x, hi.x);
                c.y = std::clamp(c.y, lo.y, hi.y);
                c.t = std::clamp(c.t, lo.t, hi.t);
                out.push_back(c);
            }
        }
    }
    return out;
}

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

TrainResult train(const GridField& dataset, const TrainConfig& config) {
    config.validate();
    dataset.validate();
    const auto start = std::chrono::steady_clock::now();
    const ChronologicalSplit split = chronological_split(dataset);
    const GridField& train_field = split.train;

    std::vector<EquationConfig> eq_configs = config.equations;
    if (eq_configs.empty()) {
        for (const auto& n : dataset.names()) eq_configs.push_back(EquationConfig{n, 1, std::nullopt, false});
    }
    EquationSystem system = default_system(dataset.names(), eq_configs);
    const std::size_t nlatent = latent_count(system);

    // The box covers every frame so validation and test times are not
    // extrapolation for the normalization.
    const NormalizationSpec norm = NormalizationSpec::from_box(dataset.lo(), dataset.hi(), output_scaling(train_field));
    const std::size_t h = dataset.nvars();
    FieldNet net = FieldNet::init(FieldNet::architecture(config.hidden_layers, config.hidden_width, h), config.seed,
                                  NetRole::Surrogate, norm);
    std::optional<FieldNet> q;
    if (nlatent > 0) {
        std::vector<Affine> q_out;
        for (const Equation& eq : system.equations) {
            if (!eq.latent_force) continue;
            // Unit output ~ one output scale per normalized time unit (squared
            // for second-order targets).
            const double ts = norm.axes[2].scale;
            q_out.push_back(Affine{0.0, norm.outputs[eq.variable].scale / std::pow(ts, eq.target_order)});
        }
        NormalizationSpec qn = norm;
        qn.outputs = q_out;
        q = FieldNet::init(FieldNet::architecture(config.force_hidden_layers, config.force_hidden_width, nlatent),
                           config.seed + 1, NetRole::LatentForce, qn);
    }

    Rng rng(config.seed ^ 0x5deece66dULL);
    const DataBatch train_batch = grid_batch(train_field);
    const DataBatch val_batch = grid_batch(split.validation);

    std::vector<std::size_t> pool(train_batch.coords.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    if (config.data_fraction < 1.0) {
        shuffle(pool, rng);
        pool.resize(std::max<std::size_t>(1, static_cast<std::size_t>(config.data_fraction * pool.size())));
        std::sort(pool.begin(), pool.end());
    }

    const Coord lo = train_field.lo(), hi = train_field.hi();
    const std::size_t cnx = config.collocation_nx ? config.collocation_nx : 2 * dataset.nx();
    const std::size_t cny = config.collocation_ny ? config.collocation_ny : 2 * dataset.ny();
    const std::size_t cnt = config.collocation_nt ? config.collocation_nt : train_field.nt();

    Adam opt_theta(net.param_count(), AdamConfig{config.learning_rate});
    Adam opt_pi(q ? q->param_count() : 0, AdamConfig{config.learning_rate});

    TrainResult result;
    Buffer best_theta = net.mlp().params();
    Buffer best_pi = q ? q->mlp().params() : Buffer{};
    std::optional<EquationSystem> best_system;
    double best_val = std::numeric_limits<double>::infinity();
    long snapshot = -1;
    const bool use_physics = config.alpha > 0;

    auto refit = [&](Rng& r) {
        std::vector<Coord> pts = jittered_grid(lo, hi, cnx, cny, cnt, r);
        shuffle(pts, r);
        pts.resize(std::min(pts.size(), config.refit_points));
        refit_coefficients(net, q ? &*q : nullptr, system, pts, config.ridge, config.threshold);
        result.snapshots.push_back(system);
        snapshot = static_cast<long>(result.snapshots.size() - 1);
    };

    try {
        if (use_physics && config.warmup_epochs == 0) refit(rng);
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            const auto epoch_start = std::chrono::steady_clock::now();
            std::vector<std::size_t> order = pool;
            shuffle(order, rng);
            std::vector<Coord> colloc;
            const bool physics_on = use_physics && snapshot >= 0;
            if (physics_on) {
                colloc = jittered_grid(lo, hi, cnx, cny, cnt, rng);
                shuffle(colloc, rng);
            }
            EpochRecord rec;
            rec.epoch = epoch;
            rec.xi_snapshot = snapshot;
            std::size_t steps = 0, cursor = 0;
            for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
                const std::size_t e = std::min(order.size(), b + config.batch_size);
                std::span<const std::size_t> rows(order.data() + b, e - b);
                ShardGrad d = data_objective(net, train_batch, rows, true);
                std::vector<double> gtheta = std::move(d.theta);
                std::vector<double> gpi(q ? q->param_count() : 0, 0.0);
                double phys = 0.0;
                if (physics_on) {
                    const std::size_t want = config.collocation_batch ? config.collocation_batch : config.batch_size;
                    if (cursor + want > colloc.size()) cursor = 0;
                    const std::size_t n = std::min(want, colloc.size());
                    const ShardGrad p =
                        physics_objective(net, q ? &*q : nullptr, system,
                                          std::span<const Coord>(colloc.data() + cursor, n), true);
                    cursor += n;
                    phys = p.loss;
                    for (std::size_t i = 0; i < gtheta.size(); ++i) gtheta[i] += config.alpha * p.theta[i];
                    for (std::size_t i = 0; i < gpi.size(); ++i) gpi[i] += config.alpha * p.pi[i];
                }
                double reg = 0.0;
                if (config.sigma_theta > 0) {
                    reg += config.sigma_theta * squared_norm(net.mlp().params());
                    const auto& p = net.mlp().params();
                    for (std::size_t i = 0; i < gtheta.size(); ++i) gtheta[i] += 2.0 * config.sigma_theta * p[i];
                }
                if (q && config.sigma_pi > 0) {
                    reg += config.sigma_pi * squared_norm(q->mlp().params());
                    const auto& p = q->mlp().params();
                    for (std::size_t i = 0; i < gpi.size(); ++i) gpi[i] += 2.0 * config.sigma_pi * p[i];
                }
                const double total = d.loss + config.alpha * phys + reg;
                if (!std::isfinite(total)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
                rec.data_loss += d.loss;
                rec.physics_loss += phys;
                rec.regularization += reg;
                rec.total += total;
                ++steps;
                opt_theta.step(net.mlp().params(), gtheta);
                if (q && physics_on) opt_pi.step(q->mlp().params(), gpi);
            }
            const double inv = 1.0 / static_cast<double>(steps);
            rec.data_loss *= inv;
            rec.physics_loss *= inv;
            rec.regularization *= inv;
            rec.total *= inv;
            rec.validation_loss = data_loss(net, val_batch);
            if (!std::isfinite(rec.validation_loss)) throw NumericalError("non-finite validation loss");
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
            result.history.push_back(rec);
            if (rec.validation_loss < best_val) {
                best_val = rec.validation_loss;
                best_theta = net.mlp().params();
                if (q) best_pi = q->mlp().params();
                result.best_epoch = epoch;
                if (snapshot >= 0) best_system = system;
            }
            const std::size_t done = epoch + 1;
            if (done >= config.warmup_epochs && (done - config.warmup_epochs) % config.refit_period == 0 &&
                done < config.epochs) {
                refit(rng);
            }
        }
    } catch (const NumericalError& e) {
        result.aborted = std::string("training diverged: ") + e.what();
    }

    net.mlp().params() = best_theta;
    if (q) q->mlp().params() = best_pi;
    // Final Xi from the selected networks.
    try {
        refit(rng);
    } catch (const NumericalError& e) {
        if (!result.aborted) result.aborted = std::string("final coefficient fit failed: ") + e.what();
        if (best_system) system = *best_system;
    }
    result.surrogate = std::move(net);
    result.latent_force = std::move(q);
    result.system = system;
    result.best_validation_loss = best_val;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

GridField evaluate_grid(const FieldNet& net, const std::vector<std::string>& names, std::size_t nt, std::size_t ny,
                        std::size_t nx, const GridAxes& axes) {
    if (names.size() != net.outputs()) throw ShapeError("evaluate: names do not match network outputs");
    GridField out(nt, ny, nx, names, axes);
    const std::vector<Coord> coords = grid_coords(nt, ny, nx, axes);
    constexpr std::size_t chunk = 8192;
    const std::size_t chunks = (coords.size() + chunk - 1) / chunk;
    const std::size_t h = net.outputs();
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t b = c * chunk, e = std::min(coords.size(), b + chunk);
        const Tensor v = predict(net, std::span(coords).subspan(b, e - b));
        for (std::size_t r = b; r < e; ++r) {
            for (std::size_t k = 0; k < h; ++k) out.data()[r * h + k] = v(r - b, k);
        }
    });
    return out;
}

GridField downscale(const FieldNet& net, const GridField& base, std::size_t factor) {
    if (factor == 0) throw UsageError("downscale: factor must be positive");
    return evaluate_grid(net, base.names(), base.nt(), refined_extent(base.ny(), factor),
                         refined_extent(base.nx(), factor), refine_axes(base.axes(), factor));
}

GridField downscale(const FieldNet& net, const GridField& base, std::size_t nt, std::size_t ny, std::size_t nx) {
    if (nt == 0 || ny == 0 || nx == 0) throw UsageError("downscale: dims must be positive");
    GridAxes a = base.axes();
    auto spacing = [](std::size_t n_old, double d, std::size_t n_new) {
        return n_new > 1 ? d * static_cast<double>(n_old - 1) / static_cast<double>(n_new - 1) : d;
    };
    a.dx = spacing(base.nx(), base.axes().dx, nx);
    a.dy = spacing(base.ny(), base.axes().dy, ny);
    a.dt = spacing(base.nt(), base.axes().dt, nt);
    return evaluate_grid(net, base.names(), nt, ny, nx, a);
}

}  // namespace physgrid
