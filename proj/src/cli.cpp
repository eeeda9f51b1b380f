#include "poynting/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "poynting/energy.hpp"
#include "poynting/error.hpp"
#include "poynting/verify.hpp"

namespace poynting {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::cavity_te101:
            return "cavity_te101";
        case Scenario::damped_cavity:
            return "damped_cavity";
        case Scenario::driven_pulse:
            return "driven_pulse";
        case Scenario::zero_data:
            return "zero_data";
        case Scenario::custom:
            return "custom";
    }
    return "custom";
}

Scenario parse_scenario(const std::string& name) {
    for (Scenario s : {Scenario::cavity_te101, Scenario::damped_cavity, Scenario::driven_pulse, Scenario::zero_data,
                       Scenario::custom}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ParseError("unknown scenario '" + name + "'", "scenario");
}

StepperConfig SimConfig::stepper() const {
    StepperConfig s;
    s.scheme = scheme;
    s.dt = dt;
    s.cg_tol = cg_tol;
    s.cg_maxit = cg_maxit;
    return s;
}

double SimConfig::balance_tol() const {
    if (verify.balance_tol) {
        return *verify.balance_tol;
    }
    return scheme == Scheme::midpoint ? 1e-10 : 1e-3;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "grid.n",           "grid.extent",        "time.T",              "time.dt",
        "time.steps",       "stepper.scheme",     "stepper.cg_tol",      "stepper.cg_maxit",
        "scenario",         "materials.eps",      "materials.mu",        "materials.sigma",
        "materials.file",   "source.preset",      "source.amplitude",    "source.center",
        "source.width",     "source.direction",   "source.t0",           "source.tau",
        "source.omega",     "output.dir",         "output.energy_csv",   "output.report_json",
        "output.config",    "output.trace",       "output.stride",       "seed",
        "deterministic",    "threads",            "verify.weakform",     "verify.bank_size",
        "verify.weakform_tol", "verify.steklov",  "verify.lambda",       "verify.steklov_tol",
        "verify.uniqueness", "verify.delta",      "verify.gauss",        "verify.gauss_tol",
        "verify.balance_tol"};
    return keys;
}

class KeyValues {
public:
    explicit KeyValues(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'", line);
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!known_keys().contains(key)) {
                throw ParseError("unknown key '" + key + "'", key);
            }
            if (!values_.emplace(key, value).second) {
                throw ParseError("duplicate key '" + key + "'", key);
            }
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }

    [[nodiscard]] const std::string& raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            throw ParseError("missing required key '" + key + "'", key);
        }
        return it->second;
    }

    [[nodiscard]] std::vector<double> reals(const std::string& key) const {
        std::string s = raw(key);
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) {
            out.push_back(parse_real(key, tok));
        }
        if (out.empty()) {
            throw ParseError("key '" + key + "' has no value", key);
        }
        return out;
    }

    [[nodiscard]] double real(const std::string& key) const {
        const std::vector<double> v = reals(key);
        if (v.size() != 1) {
            throw ParseError("key '" + key + "' expects one number", key);
        }
        return v[0];
    }

    [[nodiscard]] long integer(const std::string& key) const {
        const std::string& s = raw(key);
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol(s.c_str(), &end, 10);
        if (errno != 0 || end == s.c_str() || *end != '\0') {
            throw ParseError("key '" + key + "' expects an integer, got '" + s + "'", key);
        }
        return v;
    }

    [[nodiscard]] bool boolean(const std::string& key) const {
        const std::string& s = raw(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on") {
            return true;
        }
        if (s == "false" || s == "0" || s == "no" || s == "off") {
            return false;
        }
        throw ParseError("key '" + key + "' expects true or false, got '" + s + "'", key);
    }

    [[nodiscard]] Real3 triple(const std::string& key, bool allow_scalar) const {
        const std::vector<double> v = reals(key);
        if (v.size() == 3) {
            return {v[0], v[1], v[2]};
        }
        if (allow_scalar && v.size() == 1) {
            return {v[0], v[0], v[0]};
        }
        throw ParseError("key '" + key + "' expects " + (allow_scalar ? "1 or 3" : "3") + " numbers", key);
    }

    [[nodiscard]] SymTensor tensor(const std::string& key) const {
        const std::vector<double> v = reals(key);
        switch (v.size()) {
            case 1:
                return SymTensor::isotropic(v[0]);
            case 3:
                return SymTensor::diagonal(v[0], v[1], v[2]);
            case 6:
                return SymTensor{v[0], v[1], v[2], v[3], v[4], v[5]};
            default:
                throw ParseError("key '" + key + "' expects 1, 3 or 6 numbers (xx yy zz xy yz xz)", key);
        }
    }

private:
    static double parse_real(const std::string& key, const std::string& tok) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (errno == ERANGE || end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
            throw ParseError("key '" + key + "' has a malformed number '" + tok + "'", key);
        }
        return v;
    }

    std::map<std::string, std::string> values_;
};

void apply_preset(SimConfig& c) {
    c.eps = SymTensor::isotropic(1.0);
    c.mu = SymTensor::isotropic(1.0);
    c.sigma = SymTensor{};
    c.source = SourceSpec{};
    switch (c.scenario) {
        case Scenario::damped_cavity:
            c.sigma = SymTensor::isotropic(0.5);
            break;
        case Scenario::driven_pulse:
            c.source.kind = SourceKind::gaussian_pulse;
            c.source.direction = {0.0, 0.0, 1.0};
            c.source.t0 = 0.25 * c.T;
            c.source.tau = 0.1 * c.T;
            break;
        default:
            break;
    }
}

}  // namespace

SimConfig parse_config(const std::string& text) {
    const KeyValues kv(text);
    SimConfig c;

    const std::vector<double> n = kv.reals("grid.n");
    if (n.size() != 1 && n.size() != 3) {
        throw ParseError("grid.n expects 1 or 3 integers", "grid.n");
    }
    for (int a = 0; a < 3; ++a) {
        const double v = n.size() == 1 ? n[0] : n[a];
        if (v != std::floor(v) || v < 1.0 || v > 1e6) {
            throw ParseError("grid.n entries must be positive integers", "grid.n");
        }
        c.n[a] = static_cast<int>(v);
    }
    if (kv.has("grid.extent")) {
        c.extent = kv.triple("grid.extent", true);
        for (double L : c.extent) {
            if (!(L > 0.0)) {
                throw ParseError("grid.extent entries must be positive", "grid.extent");
            }
        }
    }

    c.T = kv.real("time.T");
    if (!(c.T > 0.0)) {
        throw ParseError("time.T must be positive", "time.T");
    }
    const bool has_dt = kv.has("time.dt");
    const bool has_steps = kv.has("time.steps");
    if (!has_dt && !has_steps) {
        throw ParseError("missing required key 'time.steps' (or 'time.dt')", "time.steps");
    }
    if (has_steps) {
        c.steps = kv.integer("time.steps");
        if (c.steps < 1) {
            throw ParseError("time.steps must be at least 1", "time.steps");
        }
    }
    if (has_dt) {
        const double dt = kv.real("time.dt");
        if (!(dt > 0.0)) {
            throw ParseError("time.dt must be positive", "time.dt");
        }
        const long from_dt = std::lround(c.T / dt);
        if (from_dt < 1 || std::abs(static_cast<double>(from_dt) * dt - c.T) > 1e-9 * c.T) {
            throw ParseError("time.T is not an integer multiple of time.dt", "time.dt");
        }
        if (has_steps && from_dt != c.steps) {
            throw ParseError("time.dt and time.steps are inconsistent with time.T", "time.dt");
        }
        c.steps = from_dt;
    }
    c.dt = c.T / static_cast<double>(c.steps);

    if (kv.has("stepper.scheme")) {
        try {
            c.scheme = parse_scheme(kv.raw("stepper.scheme"));
        } catch (const Error& e) {
            throw ParseError(e.what(), "stepper.scheme");
        }
    }
    if (kv.has("stepper.cg_tol")) {
        c.cg_tol = kv.real("stepper.cg_tol");
        if (!(c.cg_tol > 0.0)) {
            throw ParseError("stepper.cg_tol must be positive", "stepper.cg_tol");
        }
    }
    if (kv.has("stepper.cg_maxit")) {
        const long it = kv.integer("stepper.cg_maxit");
        if (it < 1 || it > 1000000000L) {
            throw ParseError("stepper.cg_maxit must be positive", "stepper.cg_maxit");
        }
        c.cg_maxit = static_cast<int>(it);
    }

    c.scenario = parse_scenario(kv.raw("scenario"));
    apply_preset(c);

    if (kv.has("materials.eps")) {
        c.eps = kv.tensor("materials.eps");
    }
    if (kv.has("materials.mu")) {
        c.mu = kv.tensor("materials.mu");
    }
    if (kv.has("materials.sigma")) {
        c.sigma = kv.tensor("materials.sigma");
    }
    if (kv.has("materials.file")) {
        c.material_file = kv.raw("materials.file");
    }

    if (kv.has("source.preset")) {
        try {
            c.source.kind = parse_source_kind(kv.raw("source.preset"));
        } catch (const Error& e) {
            throw ParseError(e.what(), "source.preset");
        }
    }
    if (kv.has("source.amplitude")) {
        c.source.amplitude = kv.real("source.amplitude");
    }
    if (kv.has("source.center")) {
        c.source.center = kv.triple("source.center", false);
    }
    if (kv.has("source.width")) {
        c.source.width = kv.real("source.width");
        if (!(c.source.width > 0.0)) {
            throw ParseError("source.width must be positive", "source.width");
        }
    }
    if (kv.has("source.direction")) {
        c.source.direction = kv.triple("source.direction", false);
    }
    if (kv.has("source.t0")) {
        c.source.t0 = kv.real("source.t0");
    }
    if (kv.has("source.tau")) {
        c.source.tau = kv.real("source.tau");
        if (!(c.source.tau > 0.0)) {
            throw ParseError("source.tau must be positive", "source.tau");
        }
    }
    if (kv.has("source.omega")) {
        c.source.omega = kv.real("source.omega");
    }

    if (kv.has("output.dir")) {
        c.output.dir = kv.raw("output.dir");
    }
    if (kv.has("output.energy_csv")) {
        c.output.energy_csv = kv.raw("output.energy_csv");
    }
    if (kv.has("output.report_json")) {
        c.output.report_json = kv.raw("output.report_json");
    }
    if (kv.has("output.config")) {
        c.output.config = kv.raw("output.config");
    }
    if (kv.has("output.trace")) {
        c.output.trace = kv.raw("output.trace");
    }
    if (kv.has("output.stride")) {
        const long s = kv.integer("output.stride");
        if (s < 1 || s > c.steps || c.steps % s != 0) {
            throw ParseError("output.stride must be positive and divide time.steps", "output.stride");
        }
        c.output.stride = static_cast<int>(s);
    }

    if (kv.has("seed")) {
        const long s = kv.integer("seed");
        if (s < 0) {
            throw ParseError("seed must be non-negative", "seed");
        }
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (kv.has("deterministic")) {
        c.deterministic = kv.boolean("deterministic");
    }
    if (kv.has("threads")) {
        const long t = kv.integer("threads");
        if (t < 0 || t > 4096) {
            throw ParseError("threads must be in [0, 4096]", "threads");
        }
        c.threads = static_cast<int>(t);
    }

    VerifyOptions& v = c.verify;
    if (kv.has("verify.weakform")) {
        v.weakform = kv.boolean("verify.weakform");
    }
    if (kv.has("verify.bank_size")) {
        const long b = kv.integer("verify.bank_size");
        if (b < 1) {
            throw ParseError("verify.bank_size must be positive", "verify.bank_size");
        }
        v.bank_size = static_cast<std::size_t>(b);
    }
    if (kv.has("verify.weakform_tol")) {
        v.weakform_tol = kv.real("verify.weakform_tol");
    }
    if (kv.has("verify.steklov")) {
        v.steklov = kv.boolean("verify.steklov");
    }
    if (kv.has("verify.lambda")) {
        v.lambda = kv.reals("verify.lambda");
        for (double l : v.lambda) {
            if (!(l > 0.0)) {
                throw ParseError("verify.lambda entries must be positive", "verify.lambda");
            }
        }
    }
    if (kv.has("verify.steklov_tol")) {
        v.steklov_tol = kv.real("verify.steklov_tol");
    }
    if (kv.has("verify.uniqueness")) {
        v.uniqueness = kv.boolean("verify.uniqueness");
    }
    if (kv.has("verify.delta")) {
        v.delta = kv.real("verify.delta");
        if (!(v.delta > 0.0)) {
            throw ParseError("verify.delta must be positive", "verify.delta");
        }
    }
    if (kv.has("verify.gauss")) {
        v.gauss = kv.boolean("verify.gauss");
    }
    if (kv.has("verify.gauss_tol")) {
        v.gauss_tol = kv.real("verify.gauss_tol");
    }
    if (kv.has("verify.balance_tol")) {
        v.balance_tol = kv.real("verify.balance_tol");
    }
    return c;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

namespace {

std::string join(std::initializer_list<double> v) {
    std::string out;
    for (double x : v) {
        if (!out.empty()) {
            out += ' ';
        }
        out += fmt(x);
    }
    return out;
}

std::string tensor_text(const SymTensor& t) { return join({t.xx, t.yy, t.zz, t.xy, t.yz, t.xz}); }

std::string triple_text(const Real3& v) { return join({v[0], v[1], v[2]}); }

}  // namespace

std::string emit_config(const SimConfig& c) {
    std::ostringstream o;
    const auto line = [&o](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
    const auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    o << "# effective configuration\n";
    line("grid.n", std::to_string(c.n[0]) + " " + std::to_string(c.n[1]) + " " + std::to_string(c.n[2]));
    line("grid.extent", triple_text(c.extent));
    line("time.T", fmt(c.T));
    line("time.steps", std::to_string(c.steps));
    line("stepper.scheme", to_string(c.scheme));
    line("stepper.cg_tol", fmt(c.cg_tol));
    line("stepper.cg_maxit", std::to_string(c.cg_maxit));
    line("scenario", to_string(c.scenario));
    line("materials.eps", tensor_text(c.eps));
    line("materials.mu", tensor_text(c.mu));
    line("materials.sigma", tensor_text(c.sigma));
    if (!c.material_file.empty()) {
        line("materials.file", c.material_file);
    }
    line("source.preset", to_string(c.source.kind));
    line("source.amplitude", fmt(c.source.amplitude));
    if (c.source.center) {
        line("source.center", triple_text(*c.source.center));
    }
    line("source.width", fmt(c.source.width));
    line("source.direction", triple_text(c.source.direction));
    line("source.t0", fmt(c.source.t0));
    line("source.tau", fmt(c.source.tau));
    line("source.omega", fmt(c.source.omega));
    line("output.dir", c.output.dir);
    line("output.energy_csv", c.output.energy_csv);
    line("output.report_json", c.output.report_json);
    line("output.config", c.output.config);
    if (!c.output.trace.empty()) {
        line("output.trace", c.output.trace);
    }
    line("output.stride", std::to_string(c.output.stride));
    line("seed", std::to_string(c.seed));
    line("deterministic", flag(c.deterministic));
    line("threads", std::to_string(c.threads));
    line("verify.weakform", flag(c.verify.weakform));
    line("verify.bank_size", std::to_string(c.verify.bank_size));
    line("verify.weakform_tol", fmt(c.verify.weakform_tol));
    line("verify.steklov", flag(c.verify.steklov));
    if (!c.verify.lambda.empty()) {
        std::string l;
        for (double x : c.verify.lambda) {
            l += (l.empty() ? "" : " ") + fmt(x);
        }
        line("verify.lambda", l);
    }
    line("verify.steklov_tol", fmt(c.verify.steklov_tol));
    line("verify.uniqueness", flag(c.verify.uniqueness));
    line("verify.delta", fmt(c.verify.delta));
    line("verify.gauss", flag(c.verify.gauss));
    line("verify.gauss_tol", fmt(c.verify.gauss_tol));
    if (c.verify.balance_tol) {
        line("verify.balance_tol", fmt(*c.verify.balance_tol));
    }
    return o.str();
}

void Report::metric(std::string name, double value) { metrics_.emplace_back(std::move(name), value); }

void Report::check(std::string name, bool ok) { checks_.emplace_back(std::move(name), ok); }

void Report::note(std::string name, std::string text) { notes_.emplace_back(std::move(name), std::move(text)); }

bool Report::passed() const noexcept {
    return std::all_of(checks_.begin(), checks_.end(), [](const auto& c) { return c.second; });
}

std::optional<double> Report::find_metric(const std::string& name) const {
    for (const auto& [k, v] : metrics_) {
        if (k == name) {
            return v;
        }
    }
    return std::nullopt;
}

std::optional<bool> Report::find_check(const std::string& name) const {
    for (const auto& [k, v] : checks_) {
        if (k == name) {
            return v;
        }
    }
    return std::nullopt;
}

std::string Report::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : notes_) {
        j[k] = v;
    }
    for (const auto& [k, v] : metrics_) {
        if (std::isfinite(v)) {
            j[k] = v;
        } else {
            j[k] = nullptr;
        }
    }
    for (const auto& [k, v] : checks_) {
        j[k] = v;
    }
    j["passed"] = passed();
    return j.dump(2) + "\n";
}

double CavityMode::omega() const noexcept {
    const double k2 = 1.0 / (extent[0] * extent[0]) + 1.0 / (extent[1] * extent[1]);
    return std::numbers::pi * std::sqrt(k2) / std::sqrt(eps * mu);
}

EdgeField CavityMode::e(const Grid& g, double t) const {
    const double pi = std::numbers::pi;
    const double c = std::cos(omega() * t);
    EdgeField out(g);
    const Index3& ext = out.extents(2);
    for (int k = 0; k < ext[2]; ++k) {
        for (int j = 0; j < ext[1]; ++j) {
            for (int i = 0; i < ext[0]; ++i) {
                const Real3 x = edge_position(g, 2, i, j, k);
                out.at(2, i, j, k) = std::sin(pi * x[0] / extent[0]) * std::sin(pi * x[1] / extent[1]) * c;
            }
        }
    }
    apply_pec_mask(out);
    return out;
}

FaceField CavityMode::h(const Grid& g, double t) const {
    const double pi = std::numbers::pi;
    const double w = omega();
    const double s = std::sin(w * t) / (mu * w);
    FaceField out(g);
    for (int c = 0; c < 2; ++c) {
        const Index3& ext = out.extents(c);
        for (int k = 0; k < ext[2]; ++k) {
            for (int j = 0; j < ext[1]; ++j) {
                for (int i = 0; i < ext[0]; ++i) {
                    const Real3 x = face_position(g, c, i, j, k);
                    const double ax = pi * x[0] / extent[0];
                    const double ay = pi * x[1] / extent[1];
                    // mu dh/dt = -curl e with curl e = (d_y e_z, -d_x e_z, 0)
                    out.at(c, i, j, k) = c == 0 ? -s * (pi / extent[1]) * std::sin(ax) * std::cos(ay)
                                                : s * (pi / extent[0]) * std::cos(ax) * std::sin(ay);
                }
            }
        }
    }
    return out;
}

MaterialSet scenario_materials(const SimConfig& c, const Grid& g) {
    MaterialSet m = c.material_file.empty() ? MaterialSet::homogeneous(g, c.eps, c.mu, c.sigma)
                                            : load_material_file(c.material_file, g);
    m.source = c.source;
    return m;
}

std::pair<EdgeField, FaceField> scenario_initial_data(const SimConfig& c, const Grid& g) {
    if (c.scenario == Scenario::cavity_te101 || c.scenario == Scenario::damped_cavity) {
        const CavityMode mode{c.extent, 1.0, 1.0};
        return {mode.e(g, 0.0), FaceField(g)};
    }
    return {EdgeField(g), FaceField(g)};
}

namespace {

double max_abs_difference(const EdgeField& a, const EdgeField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double max_abs_difference(const FaceField& a, const FaceField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

// Follows the analytic mode and the projection of e onto e0 during the run.
class CavityObserver {
public:
    CavityObserver(const Grid& g, CavityMode mode, EdgeField e0) : g_(g), mode_(mode), e0_(std::move(e0)) {}

    void operator()(const Stepper& st, const FieldState& s) {
        const FaceField h = st.synchronized_h(s);
        err_ = std::max({err_, max_abs_difference(s.e, mode_.e(g_, s.t)), max_abs_difference(h, mode_.h(g_, s.t))});
        const double p = inner(s.e, e0_, g_);
        if (have_prev_ && ((prev_p_ > 0.0 && p <= 0.0) || (prev_p_ < 0.0 && p >= 0.0))) {
            crossings_.push_back(prev_t_ + (s.t - prev_t_) * prev_p_ / (prev_p_ - p));
        }
        prev_p_ = p;
        prev_t_ = s.t;
        have_prev_ = true;
    }

    [[nodiscard]] CavityReport report() const {
        CavityReport r;
        r.omega_analytic = mode_.omega();
        r.max_field_error = err_;
        r.zero_crossings = static_cast<int>(crossings_.size());
        if (crossings_.size() >= 2) {
            // consecutive zeros of cos(w t) are pi / w apart
            const double span = crossings_.back() - crossings_.front();
            r.omega_discrete = std::numbers::pi * static_cast<double>(crossings_.size() - 1) / span;
        } else if (crossings_.size() == 1) {
            r.omega_discrete = 0.5 * std::numbers::pi / crossings_.front();
        } else {
            r.omega_discrete = std::numeric_limits<double>::quiet_NaN();
        }
        r.omega_relative_error = std::abs(r.omega_discrete - r.omega_analytic) / r.omega_analytic;
        return r;
    }

private:
    const Grid& g_;
    CavityMode mode_;
    EdgeField e0_;
    double err_{0.0};
    std::vector<double> crossings_;
    double prev_p_{0.0};
    double prev_t_{0.0};
    bool have_prev_{false};
};

std::string suffix(std::size_t i, std::size_t n) { return n == 1 ? "" : "_" + std::to_string(i); }

}  // namespace

void verify_trace(const SolutionTrace& tr, const VerifyOptions& opts, std::uint64_t seed, Report& report) {
    const double T = tr.t_end();
    if (opts.weakform) {
        const TestFunctionBank bank = TestFunctionBank::smooth(tr.grid(), T, opts.bank_size, seed);
        double worst = 0.0;
        for (const WeakFormResidual& w : weakform_residual(tr, bank)) {
            worst = std::max(worst, w.scaled);
        }
        report.metric("weakform_max_scaled_residual", worst);
        report.check("weakform_ok", worst <= opts.weakform_tol);
    }
    if (opts.steklov) {
        const TestFunctionBank bank = TestFunctionBank::smooth(tr.grid(), T, 1, seed);
        std::vector<double> lambdas = opts.lambda;
        if (lambdas.empty()) {
            lambdas.push_back(8.0 * tr.snapshot_dt());
        }
        bool ok = true;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const SemidiscreteResidual r =
                semidiscrete_residual(tr, lambdas[i], bank.pairs[0].phi, bank.pairs[0].psi);
            const std::string sfx = suffix(i, lambdas.size());
            report.metric("steklov_lambda" + sfx, lambdas[i]);
            report.metric("steklov_r_e" + sfx, r.r_e);
            report.metric("steklov_r_h" + sfx, r.r_h);
            report.metric("steklov_r_energy" + sfx, r.r_energy);
            ok = ok && r.r_e <= opts.steklov_tol && r.r_h <= opts.steklov_tol && r.r_energy <= opts.steklov_tol;
        }
        report.check("steklov_ok", ok);
    }
    if (opts.gauss) {
        const GaussReport g = gauss_check(tr);
        report.metric("gauss_magnetic_relative", g.max_magnetic_relative);
        report.metric("gauss_charge_defect", g.max_charge_defect);
        report.metric("gauss_charge_relative", g.max_charge_relative);
        report.check("gauss_magnetic_ok", g.max_magnetic_relative <= opts.gauss_tol);
    }
}

ScenarioResult run_scenario(const SimConfig& c) {
    const Grid g = build_grid(c.n, c.extent);
    MaterialSet m = scenario_materials(c, g);
    auto [e0, h0] = scenario_initial_data(c, g);
    const StepperConfig sc = c.stepper();

    const bool need_trace = c.verify.weakform || c.verify.steklov || c.verify.gauss || !c.output.trace.empty();
    const int stride = need_trace ? c.output.stride : 0;

    std::optional<CavityObserver> cavity;
    if (c.scenario == Scenario::cavity_te101) {
        const bool homogeneous_lossless = c.material_file.empty() && c.eps == SymTensor::isotropic(c.eps.xx) &&
                                          c.mu == SymTensor::isotropic(c.mu.xx) && c.sigma == SymTensor{} &&
                                          c.source.kind == SourceKind::zero;
        if (!homogeneous_lossless) {
            throw ConfigError("cavity_te101 needs homogeneous isotropic lossless materials and no source");
        }
        const CavityMode mode{c.extent, c.eps.xx, c.mu.xx};
        e0 = mode.e(g, 0.0);
        cavity.emplace(g, mode, e0);
    }
    StepObserver observe;
    if (cavity) {
        observe = [&cavity](const Stepper& st, const FieldState& s) { (*cavity)(st, s); };
    }

    RunResult run = simulate(g, m, sc, e0, h0, c.steps, stride, observe);

    ScenarioResult out{g, m, std::move(run), std::nullopt, Report{}};
    Report& rep = out.report;
    rep.note("scenario", to_string(c.scenario));
    rep.note("scheme", to_string(c.scheme));
    rep.metric("steps", static_cast<double>(c.steps));
    rep.metric("dt", c.dt);
    const EnergyLedger& ledger = out.run.ledger;
    rep.metric("energy_initial", ledger.front().energy);
    rep.metric("energy_final", ledger.back().energy);
    rep.metric("max_cg_iterations", out.run.max_cg_iterations);

    const double balance = balance_residual_scaled(ledger);
    rep.metric("balance_residual", balance_residual(ledger));
    rep.metric("balance_residual_scaled", balance);
    rep.metric("balance_tol", c.balance_tol());
    rep.check("balance_ok", balance <= c.balance_tol());

    const double increase = max_energy_increase(ledger);
    rep.metric("max_energy_increase", increase);
    const EnergyBound bound = energy_bound_check(ledger, out.run.j_norm, out.run.e_norm);
    rep.metric("energy_bound", bound.bound);
    rep.metric("energy_bound_margin", bound.margin);
    if (c.scheme == Scheme::midpoint) {
        // the leapfrog energy oscillates at O(dt^2), so only the midpoint scheme is held to these
        if (m.source.kind == SourceKind::zero) {
            rep.check("energy_nonincreasing_ok", increase <= 1e-12);
        }
        rep.check("energy_bound_ok", bound.holds);
    }

    if (cavity) {
        out.cavity = cavity->report();
        rep.metric("cavity_omega_analytic", out.cavity->omega_analytic);
        rep.metric("cavity_omega_discrete", out.cavity->omega_discrete);
        rep.metric("cavity_omega_relative_error", out.cavity->omega_relative_error);
        rep.metric("cavity_max_field_error", out.cavity->max_field_error);
        rep.check("cavity_omega_ok", out.cavity->omega_relative_error <= 0.02);
    }

    if (out.run.trace) {
        verify_trace(*out.run.trace, c.verify, c.seed, rep);
    }

    if (c.verify.uniqueness) {
        UniquenessConfig uc;
        uc.materials = m;
        uc.stepper = sc;
        uc.steps = c.steps;
        uc.delta = c.verify.delta;
        uc.seed = c.seed;
        uc.e0 = e0;
        uc.h0 = h0;
        const UniquenessReport u = uniqueness_experiment(g, uc);
        rep.metric("uniqueness_zero_run_max", u.zero_run_max);
        rep.metric("uniqueness_identity_residual", u.identity_residual);
        rep.metric("uniqueness_identity_bound", u.identity_bound);
        rep.metric("uniqueness_monotone_violation", u.monotone_violation);
        rep.metric("uniqueness_gronwall_rate", u.gronwall_rate);
        rep.metric("uniqueness_gronwall_constant", u.gronwall_constant);
        rep.metric("uniqueness_envelope_margin", u.envelope_margin);
        rep.check("uniqueness_zero_exact", u.zero_run_exact);
        rep.check("uniqueness_identity_ok", u.identity_ok);
        rep.check("uniqueness_monotone_ok", u.monotone_ok);
        rep.check("uniqueness_envelope_ok", u.envelope_ok);
        rep.check("uniqueness_deterministic", u.deterministic);
    }
    return out;
}

std::string energy_csv(const EnergyLedger& ledger) {
    std::string out = "t,E,flux,joule_cum,source_cum,residual\n";
    char buf[256];
    for (const LedgerRow& r : ledger.rows()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.flux, r.joule_cum,
                      r.source_cum, r.residual);
        out += buf;
    }
    return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.flush();
    if (!f) {
        throw ConfigError("cannot write " + path.string());
    }
}

}  // namespace

void emit_outputs(const ScenarioResult& r, const SimConfig& c) {
    const std::filesystem::path dir(c.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    write_text(dir / c.output.energy_csv, energy_csv(r.run.ledger));
    write_text(dir / c.output.report_json, r.report.to_json());
    write_text(dir / c.output.config, emit_config(c));
    if (!c.output.trace.empty() && r.run.trace) {
        write_trace(dir / c.output.trace, *r.run.trace);
    }
}

}  // namespace poynting
