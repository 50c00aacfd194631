#include "mmc/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("unterminated section header at line " +
                                  std::to_string(line_no));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value at line " +
                              std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("empty key at line " + std::to_string(line_no));
        }
        cfg.entries_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key)
    const {
    return entries_.count(section + "." + key) > 0;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
    const auto it = entries_.find(section + "." + key);
    if (it == entries_.end()) {
        throw ConfigError("missing config key [" + section + "] " + key);
    }
    return it->second;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key) const {
    const std::string s = get_string(section, key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for [" + section + "] " + key +
                          ": '" + s + "'");
    }
}

long ConfigFile::get_int(const std::string& section,
                         const std::string& key) const {
    const double v = get_double(section, key);
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) {
        throw ConfigError("expected integer for [" + section + "] " + key);
    }
    return i;
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key) const {
    std::istringstream in(get_string(section, key));
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) {
        throw ConfigError("bad numeric list for [" + section + "] " + key);
    }
    return out;
}

double ConfigFile::get_double_or(const std::string& section,
                                 const std::string& key, double fallback,
                                 std::vector<std::string>* defaulted) const {
    if (has(section, key)) return get_double(section, key);
    if (defaulted) defaulted->push_back(section + "." + key);
    return fallback;
}

namespace {

CoefficientSpec parse_coefficient(const ConfigFile& cfg,
                                  const std::string& section) {
    const std::string kind = cfg.has(section, "kind")
                                 ? cfg.get_string(section, "kind")
                                 : std::string("affine");
    if (kind == "affine") {
        AffineCoefficient c;
        c.state = cfg.get_double_or(section, "state", 0.0, nullptr);
        c.mean = cfg.get_double_or(section, "mean", 0.0, nullptr);
        c.constant = cfg.get_double_or(section, "const", 0.0, nullptr);
        return c;
    }
    if (kind == "table") {
        const std::vector<double> flat = cfg.get_doubles(section, "knots");
        if (flat.size() < 2 || flat.size() % 2 != 0) {
            throw ConfigError("table knots must be (t, value) pairs in [" +
                              section + "]");
        }
        TableCoefficient t;
        for (std::size_t i = 0; i < flat.size(); i += 2) {
            t.knots.emplace_back(flat[i], flat[i + 1]);
        }
        return t;
    }
    throw ConfigError("unknown coefficient kind '" + kind + "' in [" +
                      section + "]");
}

JumpCoefficientSpec parse_jump(const ConfigFile& cfg,
                               const std::string& section) {
    const std::string kind = cfg.get_string(section, "kind");
    if (kind == "linear_mean_field") {
        return LinearMeanFieldJump{cfg.get_double(section, "c")};
    }
    if (kind == "pure_amplitude") {
        return PureAmplitudeJump{};
    }
    if (kind == "affine_in_z") {
        AffineInZJump j;
        j.state_coef = cfg.get_double_or(section, "lam", 0.0, nullptr);
        AffineCoefficient base;
        base.mean = cfg.get_double_or(section, "base_mean", 0.0, nullptr);
        base.constant = cfg.get_double_or(section, "base_const", 1.0, nullptr);
        j.base = base;
        return j;
    }
    throw ConfigError("unknown jump kind '" + kind + "' in [" + section + "]");
}

LevyMeasureSpec parse_levy(const ConfigFile& cfg, const std::string& section,
                           std::vector<std::string>* defaulted) {
    const std::string kind = cfg.get_string(section, "kind");
    if (kind == "uniform") {
        UniformLevy u;
        u.half_width = cfg.get_double_or(section, "half_width", 0.5, defaulted);
        u.rate = cfg.get_double(section, "rate");
        return u;
    }
    if (kind == "kou") {
        KouLevy k;
        k.rate = cfg.get_double(section, "rate");
        k.p = cfg.get_double_or(section, "p", 0.6, defaulted);
        k.eta1 = cfg.get_double_or(section, "eta1", 10.0, defaulted);
        k.eta2 = cfg.get_double_or(section, "eta2", 5.0, defaulted);
        return k;
    }
    throw ConfigError("unknown jump-size law '" + kind + "' in [" + section +
                      "]");
}

std::string describe_coefficient(const CoefficientSpec& c) {
    if (const auto* a = std::get_if<AffineCoefficient>(&c)) {
        return "affine(state=" + fmt_num(a->state) + ", mean=" +
               fmt_num(a->mean) + ", const=" + fmt_num(a->constant) + ")";
    }
    const auto& t = std::get<TableCoefficient>(c);
    std::string s = "table(";
    for (std::size_t i = 0; i < t.knots.size(); ++i) {
        if (i) s += ", ";
        s += fmt_num(t.knots[i].first) + ":" + fmt_num(t.knots[i].second);
    }
    return s + ")";
}

std::string describe_jump(const JumpCoefficientSpec& j) {
    if (const auto* l = std::get_if<LinearMeanFieldJump>(&j)) {
        return "linear_mean_field(c=" + fmt_num(l->c) + ")";
    }
    if (std::holds_alternative<PureAmplitudeJump>(j)) {
        return "pure_amplitude";
    }
    const auto& a = std::get<AffineInZJump>(j);
    return "affine_in_z(base=" + describe_coefficient(a.base) +
           ", lam=" + fmt_num(a.state_coef) + ")";
}

std::string describe_levy(const LevyMeasureSpec& m) {
    if (const auto* u = std::get_if<UniformLevy>(&m)) {
        return "uniform(half_width=" + fmt_num(u->half_width) +
               ", rate=" + fmt_num(u->rate) + ")";
    }
    const auto& k = std::get<KouLevy>(m);
    return "kou(rate=" + fmt_num(k.rate) + ", p=" + fmt_num(k.p) +
           ", eta1=" + fmt_num(k.eta1) + ", eta2=" + fmt_num(k.eta2) + ")";
}

std::string describe_payoff(const PayoffSpec& p) {
    if (const auto* put = std::get_if<PutPayoff>(&p)) {
        return "put(strike=" + fmt_num(put->strike) + ")";
    }
    if (const auto* mp = std::get_if<MaxPutPayoff>(&p)) {
        return "max_put(strike=" + fmt_num(mp->strike) + ")";
    }
    const auto& b = std::get<BasketPayoff>(p);
    std::string s = "basket(weights=";
    for (std::size_t i = 0; i < b.weights.size(); ++i) {
        if (i) s += " ";
        s += fmt_num(b.weights[i]);
    }
    return s + ", inner=" + describe_payoff(*b.inner) + ")";
}

}  // namespace

LoadedConfig config_from_string(const std::string& text) {
    const ConfigFile cfg = ConfigFile::parse_string(text);
    LoadedConfig out;
    auto& defaulted = out.defaulted_keys;
    PricingConfig& pc = out.pricing;

    pc.market.rate = cfg.get_double_or("market", "rate", 0.0, &defaulted);
    pc.market.horizon =
        cfg.get_double_or("market", "horizon", 1.0, &defaulted);

    const int dim = cfg.has("asset2", "x0") ? 2 : 1;
    pc.model.dimension = dim;
    for (int a = 1; a <= dim; ++a) {
        const std::string base = "asset" + std::to_string(a);
        pc.model.initial_state.push_back(cfg.get_double(base, "x0"));
        AssetDynamics dyn;
        dyn.drift = parse_coefficient(cfg, base + ".drift");
        dyn.diffusion = parse_coefficient(cfg, base + ".diffusion");
        dyn.jump = parse_jump(cfg, base + ".jump");
        pc.model.assets.push_back(std::move(dyn));
        pc.measures.push_back(parse_levy(cfg, base + ".levy", &defaulted));
    }
    pc.model.validate();

    const std::string payoff_kind = cfg.get_string("payoff", "kind");
    const double strike = cfg.get_double("payoff", "strike");
    if (payoff_kind == "put") {
        pc.payoff = PutPayoff{strike};
    } else if (payoff_kind == "max_put") {
        pc.payoff = MaxPutPayoff{strike};
    } else if (payoff_kind == "basket_put") {
        BasketPayoff b;
        b.weights = cfg.get_doubles("payoff", "weights");
        b.inner = std::make_shared<PayoffSpec>(PutPayoff{strike});
        if (static_cast<int>(b.weights.size()) != dim) {
            throw ConfigError("basket weights must match the dimension");
        }
        pc.payoff = std::move(b);
    } else {
        throw ConfigError("unknown payoff kind '" + payoff_kind + "'");
    }

    pc.n_steps = static_cast<int>(
        cfg.get_double_or("pricing", "n_steps", 64, &defaulted));
    pc.path_count = static_cast<int>(
        cfg.get_double_or("pricing", "n_paths", 1000, &defaulted));
    pc.seed = static_cast<std::uint64_t>(
        cfg.get_double_or("pricing", "seed", 1, &defaulted));
    pc.threads = static_cast<int>(
        cfg.get_double_or("pricing", "threads", 1, nullptr));
    pc.quad_nodes = static_cast<int>(
        cfg.get_double_or("pricing", "quad_nodes", 64, &defaulted));
    pc.fixed_rate = cfg.get_double_or("pricing", "lambda", 0.0, nullptr);
    pc.rate_bounds.min =
        cfg.get_double_or("pricing", "lambda_min", 1e-6, nullptr);
    pc.rate_bounds.max =
        cfg.get_double_or("pricing", "lambda_max", 1e6, nullptr);
    pc.heaviside_offset =
        cfg.get_double_or("pricing", "heaviside_offset", 0.0, nullptr);
    pc.floor_scale =
        cfg.get_double_or("pricing", "den_floor", 1e-10, nullptr);
    pc.max_fallback_fraction =
        cfg.get_double_or("pricing", "max_fallback", 0.5, nullptr);

    const std::string loc = cfg.has("pricing", "localizer")
                                ? cfg.get_string("pricing", "localizer")
                                : std::string("onesided");
    if (!cfg.has("pricing", "localizer")) {
        defaulted.push_back("pricing.localizer");
    }
    if (loc == "none") {
        pc.localizer = LocalizerKind::None;
    } else if (loc == "laplace") {
        pc.localizer = LocalizerKind::Laplace;
    } else if (loc == "onesided") {
        pc.localizer = LocalizerKind::OneSidedExp;
    } else {
        throw ConfigError("unknown localizer '" + loc + "'");
    }

    out.fd.nodes =
        static_cast<int>(cfg.get_double_or("fd", "nodes", 1000, nullptr));
    out.fd.time_steps = static_cast<int>(
        cfg.get_double_or("fd", "time_steps", 2000, nullptr));
    out.fd.x_min = cfg.get_double_or("fd", "x_min", 0.0, nullptr);
    out.fd.x_max = cfg.get_double_or("fd", "x_max", 0.0, nullptr);
    return out;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    LoadedConfig out = config_from_string(ss.str());
    out.source_path = path;
    return out;
}

std::string LoadedConfig::echo(const std::string& line_prefix) const {
    std::ostringstream s;
    const PricingConfig& pc = pricing;
    auto line = [&](const std::string& k, const std::string& v) {
        s << line_prefix << k << " = " << v << "\n";
    };
    line("market.rate", fmt_num(pc.market.rate));
    line("market.horizon", fmt_num(pc.market.horizon));
    line("payoff", describe_payoff(pc.payoff));
    for (int a = 0; a < pc.model.dimension; ++a) {
        const std::string base = "asset" + std::to_string(a + 1);
        line(base + ".x0", fmt_num(pc.model.initial_state[a]));
        line(base + ".drift", describe_coefficient(pc.model.assets[a].drift));
        line(base + ".diffusion",
             describe_coefficient(pc.model.assets[a].diffusion));
        line(base + ".jump", describe_jump(pc.model.assets[a].jump));
        line(base + ".levy", describe_levy(pc.measures[a]));
    }
    line("pricing.n_steps", std::to_string(pc.n_steps));
    line("pricing.n_paths", std::to_string(pc.path_count));
    line("pricing.seed", std::to_string(pc.seed));
    line("pricing.quad_nodes", std::to_string(pc.quad_nodes));
    const char* loc = pc.localizer == LocalizerKind::None
                          ? "none"
                          : pc.localizer == LocalizerKind::Laplace
                                ? "laplace"
                                : "onesided";
    line("pricing.localizer", loc);
    line("pricing.lambda", fmt_num(pc.fixed_rate));
    line("pricing.heaviside_offset", fmt_num(pc.heaviside_offset));
    line("fd.nodes", std::to_string(fd.nodes));
    line("fd.time_steps", std::to_string(fd.time_steps));
    line("fd.x_min", fmt_num(fd.x_min));
    line("fd.x_max", fmt_num(fd.x_max));
    if (!defaulted_keys.empty()) {
        std::string keys;
        for (std::size_t i = 0; i < defaulted_keys.size(); ++i) {
            if (i) keys += " ";
            keys += defaulted_keys[i];
        }
        line("defaulted_keys", keys);
    }
    return s.str();
}

}  // namespace mmc
