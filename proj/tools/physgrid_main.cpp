#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include "config_file.hpp"
#include "manifest.hpp"
#include "physgrid/checkpoint.hpp"
#include "physgrid/errors.hpp"
#include "physgrid/forecasting.hpp"
#include "physgrid/grid_io.hpp"
#include "physgrid/metrics.hpp"
#include "physgrid/synthetic.hpp"
#include "physgrid/training.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace physgrid;
using namespace physgrid::cli;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

std::vector<std::string> g_argv;

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

fs::path checkpoint_path(const fs::path& p, const char* name) {
    return fs::is_directory(p) ? p / name : p;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void print_config(const char* what, const nlohmann::json& defaults, const nlohmann::json& effective) {
    std::cout << what << " defaults:\n" << describe(defaults);
    if (effective != defaults) std::cout << what << " in effect:\n" << describe(effective);
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string case_name;
    std::size_t nx = 0, ny = 0, nt = 0;
    double dt = 0, a = 0, b = 0, nu = 0, cx2 = 0, cy2 = 0, noise = 0;
    int max_wavenumber = 0;
    std::size_t forcing = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_generate(const GenerateArgs& g, const CLI::App& cmd) {
    SyntheticCase c = SyntheticCase::defaults(parse_case(g.case_name));
    auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
    if (given("--nx")) c.nx = g.nx;
    if (given("--ny")) c.ny = g.ny;
    if (given("--nt")) c.nt = g.nt;
    if (given("--dt")) c.dt = g.dt;
    if (given("--a")) c.a = g.a;
    if (given("--b")) c.b = g.b;
    if (given("--nu")) c.nu_x = c.nu_y = g.nu;
    if (given("--cx2")) c.cx2 = g.cx2;
    if (given("--cy2")) c.cy2 = g.cy2;
    if (given("--noise")) c.noise = g.noise;
    if (given("--max-wavenumber")) c.max_wavenumber = g.max_wavenumber;
    c.seed = g.seed;
    if (g.forcing > 3) throw UsageError("--forcing takes 0 to 3 bumps");
    const double pi = std::numbers::pi;
    const ForcingBump bumps[] = {{1.0, 4.0, pi, pi, 0.3, 0.2}, {0.6, 6.0, 1.0, 4.5, -0.2, 0.1}, {0.8, 5.0, 4.8, 1.2, 0.1, -0.3}};
    for (std::size_t i = 0; i < g.forcing; ++i) c.forcing.push_back(bumps[i]);

    const fs::path out(g.out);
    ensure_dir(out);
    RunManifest manifest("generate", g_argv);
    manifest.set_config(c.to_json());
    manifest.add_seed("generator", c.seed);
    const GeneratedCase gen = generate(c);
    save_grid(gen.coarse, out / "coarse.pgwf");
    save_grid(gen.fine2x, out / "fine2x.pgwf");
    save_grid(gen.fine4x, out / "fine4x.pgwf");
    write_text(out / "truth_system.json", gen.truth.to_json().dump(2) + "\n");
    for (const char* f : {"coarse.pgwf", "fine2x.pgwf", "fine4x.pgwf", "truth_system.json"}) manifest.add_output(out / f);
    if (!c.forcing.empty()) {
        save_grid(gen.forcing, out / "forcing.pgwf");
        manifest.add_output(out / "forcing.pgwf");
    }
    manifest.extra() = gen.manifest;
    manifest.write(out);
    std::printf("%s %zux%zux%zu: self-check residual rms %.3e max %.3e (bound %.3e) %s\n", case_name(c.id), c.nt, c.ny,
                c.nx, gen.check.residual_rms, gen.check.residual_max, gen.check.bound,
                gen.check.passed ? "passed" : "FAILED");
    std::printf("wrote %s\n", out.string().c_str());
    return kOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string data, config, out;
    std::size_t epochs = 0;
    double alpha = 0, lr = 0;
    std::uint64_t seed = 0;
    bool latent_force = false;
};

int run_train(const TrainArgs& t, const CLI::App& cmd) {
    TrainConfig config;
    if (!t.config.empty()) {
        const ConfigFile file = ConfigFile::load(t.config);
        apply(file, config);
        ForecastConfig unused;
        apply(file, unused);
        file.reject_unused();
    }
    if (cmd.count("--epochs")) config.epochs = t.epochs;
    if (cmd.count("--alpha")) config.alpha = t.alpha;
    if (cmd.count("--lr")) config.learning_rate = t.lr;
    if (cmd.count("--seed")) config.seed = t.seed;
    config.validate();

    const GridField data = load_grid(t.data);
    if (t.latent_force) {
        if (config.equations.empty()) {
            for (const auto& n : data.names()) config.equations.push_back(EquationConfig{n, 1, std::nullopt, true});
        } else {
            for (auto& e : config.equations) e.latent_force = true;
        }
    }
    print_config("train", TrainConfig{}.to_json(), config.to_json());

    std::size_t latent = 0;
    for (const auto& e : config.equations) latent += e.latent_force ? 1 : 0;
    const std::size_t np_theta =
        FieldNet::param_count(FieldNet::architecture(config.hidden_layers, config.hidden_width, data.nvars()));
    const std::size_t np_pi =
        latent ? FieldNet::param_count(FieldNet::architecture(config.force_hidden_layers, config.force_hidden_width, latent))
               : 0;
    std::printf("parameters: surrogate %zu, latent force %zu, total %zu\n", np_theta, np_pi, np_theta + np_pi);
    std::fflush(stdout);

    const fs::path out(t.out);
    ensure_dir(out);
    RunManifest manifest("train", g_argv);
    manifest.set_config(config.to_json());
    manifest.add_seed("train", config.seed);
    manifest.add_input(t.data);

    const TrainResult r = train(data, config);
    save_checkpoint(to_checkpoint(r.surrogate, data.names()), out / "f_theta.pgnet");
    manifest.add_output(out / "f_theta.pgnet");
    if (r.latent_force) {
        std::vector<std::string> names;
        for (const auto& e : r.system.equations) {
            if (e.latent_force) names.push_back("Q_" + r.system.variables[e.variable]);
        }
        save_checkpoint(to_checkpoint(*r.latent_force, names), out / "q_pi.pgnet");
        manifest.add_output(out / "q_pi.pgnet");
    }
    write_text(out / "eqns.json", r.system.to_json().dump(2) + "\n");
    write_text(out / "history.csv", r.history_csv());
    Series data_s{"data", {}, {}}, phys_s{"physics", {}, {}}, val_s{"validation", {}, {}};
    nlohmann::json epoch_seconds = nlohmann::json::array();
    for (const auto& e : r.history) {
        const double x = static_cast<double>(e.epoch);
        data_s.x.push_back(x);
        data_s.y.push_back(e.data_loss);
        phys_s.x.push_back(x);
        phys_s.y.push_back(e.physics_loss);
        val_s.x.push_back(x);
        val_s.y.push_back(e.validation_loss);
        epoch_seconds.push_back(e.seconds);
    }
    write_text(out / "loss.svg", line_chart({data_s, phys_s, val_s}, {"training losses", "epoch", "loss", true}));
    for (const char* f : {"eqns.json", "history.csv", "loss.svg"}) manifest.add_output(out / f);
    manifest.add_timing("train", r.seconds);
    manifest.extra()["epoch_seconds"] = epoch_seconds;
    manifest.extra()["parameters"] = {{"surrogate", np_theta}, {"latent_force", np_pi}, {"total", np_theta + np_pi}};
    manifest.extra()["best_epoch"] = r.best_epoch;
    manifest.extra()["best_validation_loss"] = r.best_validation_loss;
    if (r.aborted) manifest.extra()["aborted"] = *r.aborted;
    manifest.write(out);

    std::printf("epochs %zu in %.1fs, best epoch %zu (validation %.4e)\n", r.history.size(), r.seconds, r.best_epoch,
                r.best_validation_loss);
    for (const auto& eq : r.system.equations) {
        std::printf("d%s%s/dt%s =", eq.target_order == 2 ? "2" : "", r.system.variables[eq.variable].c_str(),
                    eq.target_order == 2 ? "2" : "");
        for (std::size_t i = 0; i < eq.terms.size(); ++i) {
            std::printf(" %+.4f*%s", eq.coefficients[i], eq.terms[i].text(r.system.variables).c_str());
        }
        std::printf("%s\n", eq.latent_force ? " + Q" : "");
    }
    if (r.aborted) {
        std::fprintf(stderr, "error: %s (best state written)\n", r.aborted->c_str());
        return kNumerical;
    }
    return kOk;
}

// --------------------------------------------------------------- downscale

struct DownscaleArgs {
    std::string model, data, out, truth, report;
    std::size_t factor = 2;
};

int run_downscale(const DownscaleArgs& d) {
    const Checkpoint c = load_checkpoint(checkpoint_path(d.model, "f_theta.pgnet"));
    const FieldNet net = to_field_net(c);
    const GridField base = load_grid(d.data);
    if (base.names() != c.names) throw DataError("downscale: model variables do not match the data");
    if (d.factor != 2 && d.factor != 4) throw UsageError("--factor must be 2 or 4");
    const GridField fine = downscale(net, base, d.factor);
    save_grid(fine, d.out);
    std::printf("wrote %s (%zux%zux%zu)\n", d.out.c_str(), fine.nt(), fine.ny(), fine.nx());
    RunManifest manifest("downscale", g_argv);
    manifest.set_config({{"factor", d.factor}});
    manifest.add_input(checkpoint_path(d.model, "f_theta.pgnet"));
    manifest.add_input(d.data);
    manifest.add_output(d.out);
    if (!d.truth.empty()) {
        const GridField truth = load_grid(d.truth);
        if (!truth.same_layout(fine)) throw ShapeError("downscale: truth grid differs from the downscaled grid");
        manifest.add_input(d.truth);
        MetricReport report;
        report.title = std::to_string(d.factor) + "x downscaling";
        report.variables = base.names();
        report.has_acc = false;
        report.rows.push_back(score("bicubic", bicubic_upsample(base, d.factor), truth, std::nullopt));
        report.rows.push_back(score("surrogate", fine, truth, std::nullopt));
        report.improvements.push_back(improvement(report.rows[0], report.rows[1]));
        std::cout << report.table();
        const fs::path rp = d.report.empty() ? fs::path(d.out).replace_extension(".report.json") : fs::path(d.report);
        write_text(rp, report.to_json().dump(2) + "\n");
        manifest.add_output(rp);
    }
    manifest.write(fs::path(d.out).parent_path().empty() ? fs::path(".") : fs::path(d.out).parent_path());
    return kOk;
}

// ------------------------------------------------------- forecast-train

struct ForecastArgs {
    std::string data, eqns, qnet, config, out, pretrained, truth, sweep;
    std::size_t s = 9, r = 1, epochs = 0, pretrain_epochs = 0;
    double beta = 1e-2;
    std::uint64_t seed = 0;
    bool paired = false;
};

// Predictions of every window in `w`, stacked as window-major frames, with
// the matching truth frames.
std::pair<GridField, GridField> stack(const GridField& record, const GridField& truth, WindowRange w, std::size_t s,
                                      std::size_t r, const ForecastModel* model) {
    const std::size_t cells = record.cells(), h = record.nvars();
    GridField pred(w.count * r, record.ny(), record.nx(), record.names(), record.axes());
    GridField tru(w.count * r, record.ny(), record.nx(), record.names(), record.axes());
    for (std::size_t k = 0; k < w.count; ++k) {
        const std::size_t first = w.begin + k;
        Tensor p;
        if (model) p = model->predict_window(record, first);
        for (std::size_t j = 0; j < r; ++j) {
            const std::size_t frame = k * r + j, src = first + s + 1 + j;
            for (std::size_t c = 0; c < cells; ++c) {
                for (std::size_t v = 0; v < h; ++v) {
                    const double last = record.data()[((first + s) * cells + c) * h + v];
                    pred.data()[(frame * cells + c) * h + v] = model ? p(c, j * h + v) : last;
                    tru.data()[(frame * cells + c) * h + v] = truth.data()[(src * cells + c) * h + v];
                }
            }
        }
    }
    return {pred, tru};
}

struct ArmScores {
    MetricReport report;
    double persistence = 0, pretrained = 0, control = 0, tuned = 0;
};

ArmScores forecast_once(const ForecastArgs& a, ForecastConfig fc, const GridField& data, const GridField& truth,
                        const PhysicsTarget& target, const fs::path& out, RunManifest& manifest) {
    ensure_dir(out);
    ForecastModel pre_model;
    if (!a.pretrained.empty()) {
        pre_model = ForecastModel::from_checkpoint(load_checkpoint(a.pretrained));
        if (pre_model.s() != fc.s || pre_model.r() != fc.r) throw UsageError("pretrained model has a different s or r");
    } else {
        ForecastConfig pc = fc;
        if (a.pretrain_epochs) pc.epochs = a.pretrain_epochs;
        const ForecastTrainResult pre = pretrain(data, pc);
        pre_model = pre.model;
        save_checkpoint(pre_model.to_checkpoint(), out / "g_omega_pretrained.pgnet");
        write_text(out / "pretrain_history.csv", pre.history_csv());
        manifest.add_output(out / "g_omega_pretrained.pgnet");
        manifest.add_output(out / "pretrain_history.csv");
    }
    const ForecastTrainResult tuned = finetune(pre_model, data, target, fc);
    save_checkpoint(tuned.model.to_checkpoint(), out / "g_omega.pgnet");
    write_text(out / "finetune_history.csv", tuned.history_csv());
    manifest.add_output(out / "g_omega.pgnet");
    manifest.add_output(out / "finetune_history.csv");
    if (tuned.aborted) throw NumericalError(*tuned.aborted);

    std::optional<ForecastTrainResult> control;
    if (a.paired && fc.beta > 0) {
        ForecastConfig cc = fc;
        cc.beta = 0.0;
        control = finetune(pre_model, data, target, cc);
        save_checkpoint(control->model.to_checkpoint(), out / "g_omega_control.pgnet");
        manifest.add_output(out / "g_omega_control.pgnet");
    }

    const ChronologicalSplit split = chronological_split(data);
    const WindowRange test = target_windows(split.validation_end, data.nt(), fc.s, fc.r);
    const GridField clim = climatology(split.train);
    char beta_label[64];
    std::snprintf(beta_label, sizeof beta_label, "fine-tuned (beta=%g)", fc.beta);

    ArmScores out_scores;
    MetricReport& rep = out_scores.report;
    rep.title = "forecast, s=" + std::to_string(fc.s) + ", r=" + std::to_string(fc.r) + ", test windows";
    rep.variables = data.names();
    auto add = [&](const std::string& label, const ForecastModel* m) {
        const auto [p, t] = stack(data, truth, test, fc.s, fc.r, m);
        rep.rows.push_back(score(label, p, t, clim));
        return rep.rows.back().average_rmse();
    };
    out_scores.persistence = add("persistence", nullptr);
    out_scores.pretrained = add("pretrained", &pre_model);
    if (control) out_scores.control = add("control (beta=0)", &control->model);
    out_scores.tuned = add(beta_label, &tuned.model);
    rep.improvements.push_back(improvement(rep.rows[control ? 2 : 1], rep.rows.back(),
                                           control ? "Improv vs control (%)" : "Improv vs pretrained (%)"));
    write_text(out / "report.json", rep.to_json().dump(2) + "\n");
    manifest.add_output(out / "report.json");
    return out_scores;
}

int run_forecast(const ForecastArgs& a, const CLI::App& cmd) {
    ForecastConfig fc;
    if (!a.config.empty()) {
        const ConfigFile file = ConfigFile::load(a.config);
        apply(file, fc);
        TrainConfig unused;
        apply(file, unused);
        file.reject_unused();
    }
    if (cmd.count("--s")) fc.s = a.s;
    if (cmd.count("--r")) fc.r = a.r;
    if (cmd.count("--beta")) fc.beta = a.beta;
    if (cmd.count("--epochs")) fc.epochs = a.epochs;
    if (cmd.count("--seed")) fc.seed = a.seed;
    fc.validate();
    print_config("forecast", ForecastConfig{}.to_json(), fc.to_json());

    const GridField data = load_grid(a.data);
    const GridField truth = a.truth.empty() ? data : load_grid(a.truth);
    if (!truth.same_layout(data)) throw ShapeError("forecast: truth grid differs from the data grid");
    const EquationSystem system = EquationSystem::from_json(read_json(a.eqns));
    std::optional<FieldNet> q;
    if (!a.qnet.empty()) q = to_field_net(load_checkpoint(checkpoint_path(a.qnet, "q_pi.pgnet")));
    const PhysicsTarget target = PhysicsTarget::from_nets(system, q ? &*q : nullptr, data);

    const fs::path out(a.out);
    ensure_dir(out);
    RunManifest manifest("forecast-train", g_argv);
    manifest.set_config(fc.to_json());
    manifest.add_seed("forecast", fc.seed);
    manifest.add_input(a.data);
    manifest.add_input(a.eqns);
    if (!a.qnet.empty()) manifest.add_input(checkpoint_path(a.qnet, "q_pi.pgnet"));
    if (!a.truth.empty()) manifest.add_input(a.truth);

    std::vector<std::size_t> horizons;
    if (!a.sweep.empty()) {
        std::stringstream ss(a.sweep);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                horizons.push_back(std::stoul(item));
            } catch (const std::exception&) {
                throw UsageError("--sweep-horizon expects comma-separated integers, got '" + a.sweep + "'");
            }
        }
        if (horizons.empty()) throw UsageError("--sweep-horizon is empty");
    }

    if (horizons.empty()) {
        const ArmScores s = forecast_once(a, fc, data, truth, target, out, manifest);
        std::cout << s.report.table();
    } else {
        std::ostringstream csv;
        csv.precision(10);
        csv << "r,rmse_persistence,rmse_pretrained,rmse_control,rmse_finetuned,improvement_pct\n";
        Series pers{"persistence", {}, {}}, ctl{"control", {}, {}}, tun{"fine-tuned", {}, {}}, pre{"pretrained", {}, {}};
        for (std::size_t r : horizons) {
            ForecastConfig f = fc;
            f.r = r;
            f.validate();
            const ArmScores s = forecast_once(a, f, data, truth, target, out / ("r" + std::to_string(r)), manifest);
            std::cout << s.report.table() << '\n';
            const double base = s.control > 0 ? s.control : s.pretrained;
            csv << r << ',' << s.persistence << ',' << s.pretrained << ',';
            if (s.control > 0) csv << s.control;
            csv << ',' << s.tuned << ',' << (base - s.tuned) / base * 100.0 << '\n';
            const double x = static_cast<double>(r);
            pers.x.push_back(x), pers.y.push_back(s.persistence);
            pre.x.push_back(x), pre.y.push_back(s.pretrained);
            tun.x.push_back(x), tun.y.push_back(s.tuned);
            if (s.control > 0) ctl.x.push_back(x), ctl.y.push_back(s.control);
        }
        write_text(out / "horizon.csv", csv.str());
        std::vector<Series> series{pers, pre, tun};
        if (!ctl.x.empty()) series.push_back(ctl);
        write_text(out / "horizon.svg", line_chart(series, {"RMSE by forecast horizon", "r", "average RMSE", false}));
        manifest.add_output(out / "horizon.csv");
        manifest.add_output(out / "horizon.svg");
        std::cout << csv.str();
    }
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string pred, truth, base, climatology, report, label = "prediction";
};

int run_evaluate(const EvaluateArgs& e) {
    const GridField pred = load_grid(e.pred), truth = load_grid(e.truth);
    std::optional<GridField> clim;
    if (!e.climatology.empty()) {
        clim = climatology(load_grid(e.climatology));
    } else if (truth.nt() >= 10) {
        clim = climatology(chronological_split(truth).train);
    }
    MetricReport rep;
    rep.title = "evaluation of " + e.pred;
    rep.variables = truth.names();
    rep.has_acc = clim.has_value();
    if (!e.base.empty()) rep.rows.push_back(score("base", load_grid(e.base), truth, clim));
    rep.rows.push_back(score(e.label, pred, truth, clim));
    if (!e.base.empty()) rep.improvements.push_back(improvement(rep.rows[0], rep.rows[1]));
    std::cout << rep.table();
    if (!e.report.empty()) write_text(e.report, rep.to_json().dump(2) + "\n");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"physgrid: physics-guided downscaling and forecast fine-tuning on gridded fields"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a synthetic PDE dataset with coarse and fine grids");
    g->add_option("--case", gen.case_name, "advection2d | advection-diffusion2d | wave2d")->required();
    g->add_option("--nx", gen.nx, "coarse points along x");
    g->add_option("--ny", gen.ny, "coarse points along y");
    g->add_option("--nt", gen.nt, "frames");
    g->add_option("--dt", gen.dt, "frame spacing");
    g->add_option("--a", gen.a, "x velocity");
    g->add_option("--b", gen.b, "y velocity");
    g->add_option("--nu", gen.nu, "diffusivity (both axes)");
    g->add_option("--cx2", gen.cx2, "squared wave speed along x");
    g->add_option("--cy2", gen.cy2, "squared wave speed along y");
    g->add_option("--noise", gen.noise, "noise on the coarse field, fraction of its RMS");
    g->add_option("--max-wavenumber", gen.max_wavenumber, "largest initial wavenumber");
    g->add_option("--forcing", gen.forcing, "number of drifting forcing bumps (0-3)");
    g->add_option("--seed", gen.seed, "random seed");
    g->add_option("--out", gen.out, "output directory")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "fit the surrogate, latent force and equation coefficients");
    t->add_option("--data", tr.data, "coarse PGWF field")->required();
    t->add_option("--config", tr.config, "TOML-style config file");
    t->add_option("--out", tr.out, "output directory")->required();
    t->add_option("--epochs", tr.epochs, "override epochs");
    t->add_option("--alpha", tr.alpha, "override physics weight");
    t->add_option("--lr", tr.lr, "override learning rate");
    t->add_option("--seed", tr.seed, "override seed");
    t->add_flag("--latent-force", tr.latent_force, "add a latent force to every equation");

    DownscaleArgs ds;
    auto* d = app.add_subcommand("downscale", "evaluate the surrogate on a refined grid");
    d->add_option("--model", ds.model, "f_theta.pgnet or the train output directory")->required();
    d->add_option("--data", ds.data, "coarse PGWF field defining the grid")->required();
    d->add_option("--factor", ds.factor, "2 or 4");
    d->add_option("--out", ds.out, "output PGWF file")->required();
    d->add_option("--truth", ds.truth, "fine truth for an RMSE report against bicubic");
    d->add_option("--report", ds.report, "report JSON path");

    ForecastArgs fa;
    auto* f = app.add_subcommand("forecast-train", "pre-train and physics fine-tune the forecaster");
    f->add_option("--data", fa.data, "downscaled PGWF record")->required();
    f->add_option("--eqns", fa.eqns, "eqns.json from train")->required();
    f->add_option("--qnet", fa.qnet, "q_pi.pgnet or the train output directory");
    f->add_option("--config", fa.config, "TOML-style config file");
    f->add_option("--s", fa.s, "history length minus one");
    f->add_option("--r", fa.r, "horizon frames");
    f->add_option("--beta", fa.beta, "physics weight");
    f->add_option("--epochs", fa.epochs, "fine-tuning epochs");
    f->add_option("--pretrain-epochs", fa.pretrain_epochs, "pre-training epochs (default: --epochs)");
    f->add_option("--seed", fa.seed, "seed");
    f->add_option("--pretrained", fa.pretrained, "start from this forecaster instead of pre-training");
    f->add_option("--truth", fa.truth, "reference field for scoring (default: the data)");
    f->add_flag("--paired", fa.paired, "also fine-tune a beta=0 control from the same start");
    f->add_option("--sweep-horizon", fa.sweep, "comma-separated horizons, e.g. 1,4,8");
    f->add_option("--out", fa.out, "output directory")->required();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "RMSE/ACC report of a field against a truth");
    e->add_option("--pred", ev.pred, "predicted PGWF")->required();
    e->add_option("--truth", ev.truth, "truth PGWF")->required();
    e->add_option("--base", ev.base, "baseline PGWF for an improvement row");
    e->add_option("--climatology", ev.climatology, "PGWF whose per-cell mean is the climatology");
    e->add_option("--label", ev.label, "row label");
    e->add_option("--report", ev.report, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (*g) return run_generate(gen, *g);
        if (*t) return run_train(tr, *t);
        if (*d) return run_downscale(ds);
        if (*f) return run_forecast(fa, *f);
        if (*e) return run_evaluate(ev);
    } catch (const UsageError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kUsage;
    } catch (const DataError& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return kData;
    } catch (const NumericalError& err) {
        std::fprintf(stderr, "numerical error: %s\n", err.what());
        return kNumerical;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kNumerical;
    }
    return kUsage;
}
