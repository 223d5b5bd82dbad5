#include "physgrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "physgrid/errors.hpp"

namespace physgrid {

namespace {

void require_same(const GridField& a, const GridField& b, const char* what) {
    if (a.nt() != b.nt() || a.ny() != b.ny() || a.nx() != b.nx() || a.nvars() != b.nvars()) {
        throw ShapeError(std::string(what) + ": prediction and truth shapes differ");
    }
}

}  // namespace

GridField climatology(const GridField& train) {
    train.validate();
    if (train.nt() == 0) throw DataError("climatology: empty training split");
    GridField out(1, train.ny(), train.nx(), train.names(), train.axes());
    const std::size_t frame = train.cells() * train.nvars();
    for (std::size_t t = 0; t < train.nt(); ++t) {
        for (std::size_t i = 0; i < frame; ++i) out.data()[i] += train.data()[t * frame + i];
    }
    for (double& v : out.data()) v /= static_cast<double>(train.nt());
    return out;
}

std::vector<double> rmse(const GridField& pred, const GridField& truth, const std::vector<std::uint8_t>* mask) {
    require_same(pred, truth, "rmse");
    if (mask && mask->size() != pred.points()) throw ShapeError("rmse: mask size differs from grid points");
    const std::size_t h = pred.nvars();
    std::vector<double> sum(h, 0.0);
    std::size_t count = 0;
    for (std::size_t p = 0; p < pred.points(); ++p) {
        if (mask && !(*mask)[p]) continue;
        ++count;
        for (std::size_t v = 0; v < h; ++v) {
            const double e = pred.data()[p * h + v] - truth.data()[p * h + v];
            sum[v] += e * e;
        }
    }
    if (count == 0) throw DataError("rmse: no points selected");
    for (double& s : sum) s = std::sqrt(s / static_cast<double>(count));
    return sum;
}

AccResult acc(const GridField& pred, const GridField& truth, const GridField& clim) {
    require_same(pred, truth, "acc");
    if (clim.ny() != pred.ny() || clim.nx() != pred.nx() || clim.nvars() != pred.nvars() || clim.nt() != 1) {
        throw ShapeError("acc: climatology must be one frame on the prediction grid");
    }
    const std::size_t h = pred.nvars();
    const std::size_t frame = pred.cells() * h;
    std::vector<double> fo(h, 0.0), ff(h, 0.0), oo(h, 0.0);
    for (std::size_t t = 0; t < pred.nt(); ++t) {
        for (std::size_t i = 0; i < frame; ++i) {
            const std::size_t v = i % h;
            const double f = pred.data()[t * frame + i] - clim.data()[i];
            const double o = truth.data()[t * frame + i] - clim.data()[i];
            fo[v] += f * o;
            ff[v] += f * f;
            oo[v] += o * o;
        }
    }
    AccResult out{std::vector<double>(h, 0.0), std::vector<bool>(h, false)};
    for (std::size_t v = 0; v < h; ++v) {
        if (ff[v] == 0.0 || oo[v] == 0.0) {
            out.degenerate[v] = true;
            continue;
        }
        out.value[v] = std::clamp(fo[v] / std::sqrt(ff[v] * oo[v]), -1.0, 1.0);
    }
    return out;
}

double MetricRow::average_rmse() const {
    if (scores.empty()) return 0.0;
    double s = 0.0;
    for (const auto& v : scores) s += v.rmse;
    return s / static_cast<double>(scores.size());
}

double MetricRow::average_acc() const {
    if (scores.empty()) return 0.0;
    double s = 0.0;
    for (const auto& v : scores) s += v.acc;
    return s / static_cast<double>(scores.size());
}

MetricRow score(const std::string& label, const GridField& pred, const GridField& truth,
                const std::optional<GridField>& clim, const std::vector<std::uint8_t>* mask) {
    MetricRow row{label, {}};
    const auto r = rmse(pred, truth, mask);
    std::optional<AccResult> a;
    if (clim) a = acc(pred, truth, *clim);
    for (std::size_t v = 0; v < r.size(); ++v) {
        VariableScore s;
        s.rmse = r[v];
        if (a) {
            s.acc = a->value[v];
            s.acc_degenerate = a->degenerate[v];
        }
        row.scores.push_back(s);
    }
    return row;
}

std::optional<double> rmse_improvement(double base, double plus) {
    if (base == 0.0) return std::nullopt;
    return (base - plus) / base * 100.0;
}

std::optional<double> acc_improvement(double base, double plus) {
    if (base == 0.0) return std::nullopt;
    return (plus - base) / base * 100.0;
}

ImprovementRow improvement(const MetricRow& base, const MetricRow& plus, const std::string& label) {
    if (base.scores.size() != plus.scores.size()) throw ShapeError("improvement: rows list different variables");
    ImprovementRow out;
    out.label = label;
    for (std::size_t v = 0; v < base.scores.size(); ++v) {
        out.rmse.push_back(rmse_improvement(base.scores[v].rmse, plus.scores[v].rmse));
        out.acc.push_back(acc_improvement(base.scores[v].acc, plus.scores[v].acc));
    }
    out.average_rmse = rmse_improvement(base.average_rmse(), plus.average_rmse());
    out.average_acc = acc_improvement(base.average_acc(), plus.average_acc());
    return out;
}

std::vector<ImprovementRow> improvement(const MetricReport& base, const MetricReport& plus) {
    if (base.variables != plus.variables) throw ShapeError("improvement: reports list different variables");
    if (base.rows.size() != plus.rows.size()) throw ShapeError("improvement: reports have different rows");
    std::vector<ImprovementRow> out;
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        if (base.rows[i].label != plus.rows[i].label) {
            throw ShapeError("improvement: row '" + base.rows[i].label + "' vs '" + plus.rows[i].label + "'");
        }
        out.push_back(improvement(base.rows[i], plus.rows[i], "Improv " + base.rows[i].label + " (%)"));
    }
    return out;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["title"] = title;
    j["variables"] = variables;
    j["has_acc"] = has_acc;
    j["acc_definition"] =
        "centered anomaly correlation against the training-split climatology, pooled over space and time per "
        "variable, not latitude weighted";
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json jr;
        jr["label"] = r.label;
        jr["scores"] = nlohmann::json::array();
        for (std::size_t v = 0; v < r.scores.size(); ++v) {
            nlohmann::json s{{"variable", v < variables.size() ? variables[v] : std::to_string(v)},
                             {"rmse", r.scores[v].rmse}};
            if (has_acc) {
                s["acc"] = r.scores[v].acc;
                s["acc_degenerate"] = r.scores[v].acc_degenerate;
            }
            jr["scores"].push_back(s);
        }
        jr["average_rmse"] = r.average_rmse();
        if (has_acc) jr["average_acc"] = r.average_acc();
        j["rows"].push_back(jr);
    }
    j["improvements"] = nlohmann::json::array();
    for (const auto& im : improvements) {
        nlohmann::json ji{{"label", im.label}};
        ji["rmse"] = nlohmann::json::array();
        ji["acc"] = nlohmann::json::array();
        for (const auto& v : im.rmse) ji["rmse"].push_back(optional_json(v));
        for (const auto& v : im.acc) ji["acc"].push_back(optional_json(v));
        ji["average_rmse"] = optional_json(im.average_rmse);
        ji["average_acc"] = optional_json(im.average_acc);
        j["improvements"].push_back(ji);
    }
    return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
    try {
        MetricReport r;
        r.title = j.at("title").get<std::string>();
        r.variables = j.at("variables").get<std::vector<std::string>>();
        r.has_acc = j.value("has_acc", true);
        for (const auto& jr : j.at("rows")) {
            MetricRow row{jr.at("label").get<std::string>(), {}};
            for (const auto& s : jr.at("scores")) {
                VariableScore vs;
                vs.rmse = s.at("rmse").get<double>();
                vs.acc = s.value("acc", 0.0);
                vs.acc_degenerate = s.value("acc_degenerate", false);
                row.scores.push_back(vs);
            }
            r.rows.push_back(std::move(row));
        }
        for (const auto& ji : j.value("improvements", nlohmann::json::array())) {
            ImprovementRow im;
            im.label = ji.at("label").get<std::string>();
            for (const auto& v : ji.at("rmse")) im.rmse.push_back(optional_from(v));
            for (const auto& v : ji.at("acc")) im.acc.push_back(optional_from(v));
            im.average_rmse = optional_from(ji.at("average_rmse"));
            im.average_acc = optional_from(ji.at("average_acc"));
            r.improvements.push_back(std::move(im));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("metric report: ") + e.what());
    }
}

namespace {

std::string fixed(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

std::string percent(const std::optional<double>& v) { return v ? fixed(*v, 2) + "%" : "n/a"; }

}  // namespace

std::string MetricReport::table() const {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"model"};
    for (const auto& v : variables) {
        header.push_back(v + " RMSE↓");
        if (has_acc) header.push_back(v + " ACC↑");
    }
    header.push_back("avg RMSE↓");
    if (has_acc) header.push_back("avg ACC↑");
    cells.push_back(header);

    bool flagged = false;
    for (const auto& r : rows) {
        std::vector<std::string> line{r.label};
        for (const auto& s : r.scores) {
            line.push_back(fixed(s.rmse));
            if (has_acc) {
                line.push_back(fixed(s.acc) + (s.acc_degenerate ? "*" : ""));
                flagged = flagged || s.acc_degenerate;
            }
        }
        line.push_back(fixed(r.average_rmse()));
        if (has_acc) line.push_back(fixed(r.average_acc()));
        cells.push_back(line);
    }
    for (const auto& im : improvements) {
        std::vector<std::string> line{im.label};
        for (std::size_t v = 0; v < im.rmse.size(); ++v) {
            line.push_back(percent(im.rmse[v]));
            if (has_acc) line.push_back(percent(im.acc[v]));
        }
        line.push_back(percent(im.average_rmse));
        if (has_acc) line.push_back(percent(im.average_acc));
        cells.push_back(line);
    }

    // Column widths in code points so the arrows do not skew alignment.
    auto width = [](const std::string& s) {
        std::size_t n = 0;
        for (unsigned char c : s) n += (c & 0xC0) != 0x80;
        return n;
    };
    std::vector<std::size_t> w(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size() && c < w.size(); ++c) w[c] = std::max(w[c], width(line[c]));
    }
    std::ostringstream out;
    if (!title.empty()) out << title << "\n";
    if (has_acc) out << "ACC: centered anomaly correlation vs training climatology, pooled per variable, not latitude weighted\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t c = 0; c < cells[i].size(); ++c) {
            const std::string& s = cells[i][c];
            if (c == 0) {
                out << s << std::string(w[c] - width(s), ' ');
            } else {
                out << "  " << std::string(w[c] - width(s), ' ') << s;
            }
        }
        out << "\n";
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < w.size(); ++c) total += w[c] + (c ? 2 : 0);
            out << std::string(total, '-') << "\n";
        }
    }
    if (flagged) out << "* ACC undefined (zero anomaly norm), reported as 0\n";
    return out.str();
}

}  // namespace physgrid
