#include "config_file.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "physgrid/errors.hpp"

namespace physgrid::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) {
        throw UsageError(origin + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail("empty section name");
            f.sections_.insert(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) fail("expected key = value");
        const std::string full = section.empty() ? key : section + "." + key;
        if (f.values_.contains(full)) fail("duplicate key '" + full + "'");
        ConfigValue v;
        if (val == "true" || val == "false") {
            v = val == "true";
        } else if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"') fail("unterminated string");
            v = val.substr(1, val.size() - 2);
        } else {
            std::size_t used = 0;
            double d = 0.0;
            try {
                d = std::stod(val, &used);
            } catch (const std::exception&) {
                fail("cannot parse value '" + val + "'");
            }
            if (used != val.size() || !std::isfinite(d)) fail("cannot parse value '" + val + "'");
            v = d;
        }
        f.values_.emplace(full, v);
    }
    return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return parse(s.str(), path.string());
}

const ConfigValue& ConfigFile::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError(origin_ + ": missing key '" + key + "'");
    used_.insert(key);
    return it->second;
}

double ConfigFile::number(const std::string& key) const {
    const auto* d = std::get_if<double>(&get(key));
    if (!d) throw UsageError(origin_ + ": '" + key + "' must be a number");
    return *d;
}

std::size_t ConfigFile::count(const std::string& key) const {
    const double d = number(key);
    if (d < 0 || d != std::floor(d)) throw UsageError(origin_ + ": '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(d);
}

bool ConfigFile::flag(const std::string& key) const {
    const auto* b = std::get_if<bool>(&get(key));
    if (!b) throw UsageError(origin_ + ": '" + key + "' must be true or false");
    return *b;
}

std::string ConfigFile::text(const std::string& key) const {
    const auto* s = std::get_if<std::string>(&get(key));
    if (!s) throw UsageError(origin_ + ": '" + key + "' must be a quoted string");
    return *s;
}

std::vector<std::string> ConfigFile::subsections(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& s : sections_) {
        if (s.size() > prefix.size() + 1 && s.compare(0, prefix.size(), prefix) == 0 && s[prefix.size()] == '.') {
            out.push_back(s.substr(prefix.size() + 1));
        }
    }
    return out;
}

void ConfigFile::reject_unused() const {
    for (const auto& [k, v] : values_) {
        if (!used_.contains(k)) throw UsageError(origin_ + ": unknown key '" + k + "'");
    }
}

namespace {

template <class F>
void read(const ConfigFile& f, const std::string& name, F&& set) {
    for (const std::string& key : {name, "train." + name}) {
        if (f.has(key)) set(key);
    }
}

}  // namespace

void apply(const ConfigFile& f, TrainConfig& c) {
    auto num = [&](const char* name, double& dst) { read(f, name, [&](const std::string& k) { dst = f.number(k); }); };
    auto cnt = [&](const char* name, std::size_t& dst) { read(f, name, [&](const std::string& k) { dst = f.count(k); }); };
    num("alpha", c.alpha);
    num("sigma_theta", c.sigma_theta);
    num("sigma_pi", c.sigma_pi);
    num("learning_rate", c.learning_rate);
    cnt("batch_size", c.batch_size);
    cnt("collocation_batch", c.collocation_batch);
    cnt("epochs", c.epochs);
    cnt("collocation_nx", c.collocation_nx);
    cnt("collocation_ny", c.collocation_ny);
    cnt("collocation_nt", c.collocation_nt);
    cnt("refit_period", c.refit_period);
    cnt("warmup_epochs", c.warmup_epochs);
    cnt("refit_points", c.refit_points);
    num("ridge", c.ridge);
    num("threshold", c.threshold);
    read(f, "seed", [&](const std::string& k) { c.seed = f.count(k); });
    cnt("hidden_layers", c.hidden_layers);
    cnt("hidden_width", c.hidden_width);
    cnt("force_hidden_layers", c.force_hidden_layers);
    cnt("force_hidden_width", c.force_hidden_width);
    num("data_fraction", c.data_fraction);

    const auto vars = f.subsections("equation");
    if (!vars.empty()) c.equations.clear();
    for (const auto& v : vars) {
        const std::string p = "equation." + v + ".";
        EquationConfig e{v, 1, std::nullopt, false};
        if (f.has(p + "order")) e.target_order = static_cast<int>(f.count(p + "order"));
        if (f.has(p + "latent_force")) e.latent_force = f.flag(p + "latent_force");
        if (f.has(p + "advected_by")) {
            const std::string s = f.text(p + "advected_by");
            const auto comma = s.find(',');
            if (comma == std::string::npos) throw UsageError("equation." + v + ".advected_by must be \"U,V\"");
            e.advected_by = std::pair{trim(s.substr(0, comma)), trim(s.substr(comma + 1))};
        }
        c.equations.push_back(e);
    }
}

void apply(const ConfigFile& f, ForecastConfig& c) {
    auto key = [](const char* n) { return std::string("forecast.") + n; };
    auto cnt = [&](const char* n, std::size_t& dst) {
        if (f.has(key(n))) dst = f.count(key(n));
    };
    auto num = [&](const char* n, double& dst) {
        if (f.has(key(n))) dst = f.number(key(n));
    };
    cnt("s", c.s);
    cnt("r", c.r);
    num("beta", c.beta);
    cnt("hidden_layers", c.hidden_layers);
    cnt("hidden_width", c.hidden_width);
    if (f.has(key("skip"))) c.skip = f.flag(key("skip"));
    num("learning_rate", c.learning_rate);
    cnt("batch_windows", c.batch_windows);
    cnt("epochs", c.epochs);
    if (f.has(key("seed"))) c.seed = f.count(key("seed"));
    if (f.has(key("stencil"))) c.stencil = parse_stencil(f.text(key("stencil")));
}

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix, std::ostringstream& out) {
    for (const auto& [k, v] : j.items()) {
        const std::string name = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) {
            flatten(v, name, out);
        } else {
            out << "  " << name << " = " << v.dump() << '\n';
        }
    }
}

}  // namespace

std::string describe(const nlohmann::json& config) {
    std::ostringstream out;
    flatten(config, "", out);
    return out.str();
}

}  // namespace physgrid::cli
