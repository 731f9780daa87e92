#include "ksub/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ksub/errors.hpp"
#include "ksub/geodesic.hpp"

namespace ksub {

StrictObject::StrictObject(const Json& j, std::string location)
    : j_(j), location_(std::move(location)) {
    if (!j_.is_object())
        throw ConfigError(location_ + ": expected an object");
}

void StrictObject::mark(const std::string& key) const {
    if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end())
        consumed_.push_back(key);
}

bool StrictObject::has(const std::string& key) const { return j_.contains(key); }

const Json& StrictObject::fetch(const std::string& key, const char* type_name) {
    auto it = j_.find(key);
    if (it == j_.end())
        throw ConfigError(location_ + ": missing required key \"" + key + "\" (" + type_name + ")");
    mark(key);
    return *it;
}

double StrictObject::number(const std::string& key) {
    const Json& v = fetch(key, "number");
    if (!v.is_number()) throw ConfigError(location_ + "." + key + ": expected a number");
    return v.get<double>();
}

double StrictObject::number_or(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
}

long StrictObject::integer(const std::string& key) {
    const Json& v = fetch(key, "integer");
    if (!v.is_number_integer()) throw ConfigError(location_ + "." + key + ": expected an integer");
    return v.get<long>();
}

long StrictObject::integer_or(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    return integer(key);
}

bool StrictObject::boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = fetch(key, "boolean");
    if (!v.is_boolean()) throw ConfigError(location_ + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string StrictObject::text(const std::string& key) {
    const Json& v = fetch(key, "string");
    if (!v.is_string()) throw ConfigError(location_ + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::string StrictObject::text_or(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return text(key);
}

std::vector<double> StrictObject::number_list(const std::string& key) {
    const Json& v = fetch(key, "array of numbers");
    if (!v.is_array()) throw ConfigError(location_ + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(location_ + "." + key + ": expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::string> StrictObject::text_list_or(const std::string& key) {
    if (!has(key)) return {};
    const Json& v = fetch(key, "array of strings");
    if (!v.is_array()) throw ConfigError(location_ + "." + key + ": expected an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(location_ + "." + key + ": expected strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

Json StrictObject::raw(const std::string& key) { return fetch(key, "value"); }

void StrictObject::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
        if (std::find(consumed_.begin(), consumed_.end(), it.key()) == consumed_.end())
            throw ConfigError(location_ + ": unknown key \"" + it.key() + "\"");
    }
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void fnv_accumulate(unsigned long long& h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
}

std::string dirname_of(const std::string& path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

Tolerances parse_tolerances(const Json& spec, const std::string& loc, Tolerances t) {
    StrictObject o(spec, loc);
    t.integration = o.number_or("integration", t.integration);
    t.geometric = o.number_or("geometric", t.geometric);
    t.angular = o.number_or("angular", t.angular);
    t.ideal_drift = o.number_or("ideal_drift", t.ideal_drift);
    t.ideal_cutoff = o.number_or("ideal_cutoff", t.ideal_cutoff);
    t.sample_ds = o.number_or("sample_ds", t.sample_ds);
    t.shooting_budget = static_cast<int>(o.integer_or("shooting_budget", t.shooting_budget));
    o.finish();
    return t;
}

std::shared_ptr<HadamardModel> parse_base(const Json& spec, const std::string& loc) {
    StrictObject o(spec, loc);
    std::string kind = o.text("kind");
    std::shared_ptr<HadamardModel> base;
    if (kind == "poincare") {
        double a = o.number_or("a", 1.0);
        base = std::make_shared<HadamardModel>(HadamardModel::poincare_disk(a));
    } else if (kind == "expression") {
        std::string lambda = o.text("lambda");
        double bound = o.number("curvature_bound");
        bool complete = o.boolean_or("complete", false);
        ChartDomain dom = o.text_or("domain", "disk") == "plane" ? ChartDomain::Plane
                                                                 : ChartDomain::UnitDisk;
        base = std::make_shared<HadamardModel>(
            HadamardModel::from_expression(lambda, dom, bound, complete));
        // the strictness bound is verified, not trusted
        double worst = base->max_curvature_on_grid();
        if (worst > bound + 1e-9)
            throw ConfigError(loc + ": curvature reaches " + std::to_string(worst) +
                              ", above the declared bound " + std::to_string(bound));
    } else {
        throw ConfigError(loc + ".kind: unknown base model kind \"" + kind + "\"");
    }
    if (o.has("ideal_cutoff")) base->tol.ideal_cutoff = o.number("ideal_cutoff");
    o.finish();
    return base;
}

} // namespace

void Config::add_model(const std::string& name, const Json& spec) {
    std::string loc = "models." + name;
    StrictObject o(spec, loc);
    std::string kind = o.text("kind");
    std::shared_ptr<SubmersionModel> m;
    if (kind == "product") {
        auto base = parse_base(o.raw("base"), loc + ".base");
        m = std::make_shared<SubmersionModel>(SubmersionModel::product(base));
    } else if (kind == "bundle") {
        double a = o.number_or("a", 1.0);
        double tau = o.number("tau");
        m = std::make_shared<SubmersionModel>(SubmersionModel::bundle(a, tau));
    } else if (kind == "custom") {
        auto base = parse_base(o.raw("base"), loc + ".base");
        std::string ax = o.text("omega_x");
        std::string by = o.text("omega_y");
        m = std::make_shared<SubmersionModel>(SubmersionModel::from_expressions(base, ax, by));
        if (o.has("analytic_tau")) {
            m->has_analytic_tau = true;
            m->analytic_tau = o.number("analytic_tau");
        }
    } else {
        throw ConfigError(loc + ".kind: unknown model kind \"" + kind + "\"");
    }
    m->name = name;
    o.finish();
    // configured tolerance defaults apply to the base engine; a per-model
    // ideal_cutoff from the base spec wins when it was set explicitly
    Tolerances t = base_tolerances_;
    double cutoff_from_spec = m->base->tol.ideal_cutoff;
    if (cutoff_from_spec != Tolerances{}.ideal_cutoff) t.ideal_cutoff = cutoff_from_spec;
    // the base was constructed here and is uniquely owned at this point
    const_cast<HadamardModel&>(*m->base).tol = t;
    models_.emplace(name, std::move(m));
}

Config Config::parse(const Json& root, const std::string& source_name,
                     const std::string& base_dir) {
    Config cfg;
    unsigned long long hash = 1469598103934665603ULL;
    fnv_accumulate(hash, root.dump());

    StrictObject o(root, source_name);
    cfg.seed = static_cast<unsigned long long>(o.integer_or("seed", 12345));
    cfg.workers = static_cast<int>(o.integer_or("workers", 1));
    cfg.tol_scale = o.number_or("tolerance_scale", 1.0);
    Tolerances base_tol;
    if (o.has("tolerances"))
        base_tol = parse_tolerances(o.raw("tolerances"), source_name + ".tolerances", base_tol);
    cfg.base_tolerances_ = base_tol;

    // includes: model/surface/scenario catalogs merged in order
    std::vector<Json> parts{root};
    for (const std::string& inc : o.text_list_or("include")) {
        std::string text = read_file(base_dir + "/" + inc);
        fnv_accumulate(hash, text);
        Json sub = Json::parse(text, nullptr, true, true);
        StrictObject so(sub, inc);
        (void)so; // structure checked below with the same walker
        parts.push_back(std::move(sub));
    }

    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const Json& part = parts[pi];
        std::string ploc = pi == 0 ? source_name : "include[" + std::to_string(pi - 1) + "]";
        StrictObject po(part, ploc);
        if (pi == 0) {
            po.integer_or("seed", 0);
            po.integer_or("workers", 0);
            po.number_or("tolerance_scale", 0);
            po.text_list_or("include");
            if (po.has("tolerances")) po.raw("tolerances");
        }
        if (po.has("models")) {
            Json models = po.raw("models");
            if (!models.is_object()) throw ConfigError(ploc + ".models: expected an object");
            for (auto it = models.begin(); it != models.end(); ++it)
                cfg.add_model(it.key(), it.value());
        }
        if (po.has("surfaces")) {
            Json surfaces = po.raw("surfaces");
            if (!surfaces.is_object()) throw ConfigError(ploc + ".surfaces: expected an object");
            for (auto it = surfaces.begin(); it != surfaces.end(); ++it)
                cfg.surface_specs_[it.key()] = it.value();
        }
        if (po.has("scenarios")) {
            Json scen = po.raw("scenarios");
            if (!scen.is_array()) throw ConfigError(ploc + ".scenarios: expected an array");
            for (const auto& s : scen) {
                StrictObject so(s, ploc + ".scenarios[]");
                ScenarioSpec spec;
                spec.name = so.text("name");
                spec.command = so.text("command");
                spec.tags = so.text_list_or("tags");
                spec.body = s;
                cfg.scenarios.push_back(std::move(spec));
                // remaining keys are consumed by the command runner
            }
        }
        po.finish();
    }

    // validate scenario name uniqueness and resolvable references up front
    for (size_t i = 0; i < cfg.scenarios.size(); ++i)
        for (size_t j = i + 1; j < cfg.scenarios.size(); ++j)
            if (cfg.scenarios[i].name == cfg.scenarios[j].name)
                throw ConfigError("duplicate scenario name \"" + cfg.scenarios[i].name + "\"");

    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", hash);
    cfg.config_hash = buf;
    return cfg;
}

Config Config::load(const std::string& path) {
    std::string text = read_file(path);
    Json root;
    try {
        root = Json::parse(text, nullptr, true, true);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse(root, path, dirname_of(path));
}

const SubmersionModel& Config::model(const std::string& name) const {
    auto it = models_.find(name);
    if (it == models_.end()) throw ConfigError("unknown model \"" + name + "\"");
    return *it->second;
}

bool Config::has_surface(const std::string& name) const {
    return surface_specs_.count(name) > 0;
}

std::string Config::surface_model(const std::string& name) const {
    auto it = surface_specs_.find(name);
    if (it == surface_specs_.end()) throw ConfigError("unknown surface \"" + name + "\"");
    if (!it->second.contains("model") || !it->second["model"].is_string())
        throw ConfigError("surfaces." + name + ": missing model reference");
    return it->second["model"].get<std::string>();
}

std::vector<std::string> Config::model_names() const {
    std::vector<std::string> names;
    for (const auto& [k, v] : models_) names.push_back(k);
    return names;
}

ImmersedSurface Config::surface(const std::string& name) const {
    auto it = surface_specs_.find(name);
    if (it == surface_specs_.end()) throw ConfigError("unknown surface \"" + name + "\"");
    std::string loc = "surfaces." + name;
    StrictObject o(it->second, loc);
    std::string kind = o.text("kind");
    const SubmersionModel& m = model(o.text("model"));
    ImmersedSurface surf;
    if (kind == "geodesic-sphere") {
        double radius = o.number("radius");
        int nt = static_cast<int>(o.integer_or("n_theta", 96));
        int np = static_cast<int>(o.integer_or("n_phi", 48));
        surf = geodesic_sphere_product(m, radius, nt, np);
    } else if (kind == "graph") {
        std::string height = o.text("height");
        double radius = o.number_or("chart_radius", 0.6);
        int n = static_cast<int>(o.integer_or("n", 72));
        surf = make_killing_graph(m, height, radius, n, name);
    } else if (kind == "flare") {
        double axis = o.number_or("axis_angle", 0.0);
        double rho = o.number_or("tube_radius", 0.35);
        double umax = o.number_or("u_max", 9.0);
        int nu = static_cast<int>(o.integer_or("n_u", 96));
        int nchi = static_cast<int>(o.integer_or("n_chi", 64));
        surf = flaring_end_surface(m, axis, rho, umax, nu, nchi);
    } else if (kind == "cylinder") {
        Json cj = o.raw("curve");
        StrictObject co(cj, loc + ".curve");
        std::string ck = co.text("kind");
        BaseCurve curve;
        if (ck == "circle") {
            curve = circle_curve(*m.base, co.number("radius"));
        } else if (ck == "geodesic") {
            std::vector<double> at = co.number_list("point");
            Point2 p{at[0], at[1]};
            curve = geodesic_curve(*m.base,
                                   trace_complete(*m.base, p,
                                                  m.base->unit_from_angle(p, co.number_or("angle", 0.0)),
                                                  co.number_or("extent", 2.0)));
        } else {
            throw ConfigError(co.location() + ".kind: unknown curve kind \"" + ck + "\"");
        }
        co.finish();
        double t0 = o.number_or("t_min", -1.0), t1 = o.number_or("t_max", 1.0);
        surf = make_vertical_cylinder(m, std::move(curve), t0, t1, name).surface;
    } else if (kind == "parametric") {
        // component expressions in the chart parameters u, v (bound to the
        // expression variables x, y)
        Expression fx = Expression::parse(o.text("x"));
        Expression fy = Expression::parse(o.text("y"));
        Expression ft = Expression::parse(o.text("fiber"));
        std::vector<double> du = o.number_list("u_range");
        std::vector<double> dv = o.number_list("v_range");
        if (du.size() != 2 || dv.size() != 2)
            throw ConfigError(loc + ": u_range and v_range must be [min, max]");
        SurfaceChart chart;
        chart.u0 = du[0];
        chart.u1 = du[1];
        chart.v0 = dv[0];
        chart.v1 = dv[1];
        chart.periodic_u = o.boolean_or("periodic_u", false);
        chart.nu = static_cast<int>(o.integer_or("n_u", 64));
        chart.nv = static_cast<int>(o.integer_or("n_v", 64));
        chart.f = [fx, fy, ft](double u, double v) {
            return Point3{fx.eval(u, v), fy.eval(u, v), ft.eval(u, v)};
        };
        chart.jac = [fx, fy, ft](double u, double v, Vec3& fu, Vec3& fv) {
            Jet2 jx = fx.eval_jet(u, v), jy = fy.eval_jet(u, v), jt = ft.eval_jet(u, v);
            fu = {jx.dx, jy.dx, jt.dx};
            fv = {jx.dy, jy.dy, jt.dy};
        };
        surf.charts.push_back(chart);
        surf.declared_compact = o.boolean_or("compact", false);
    } else {
        throw ConfigError(loc + ".kind: unknown surface kind \"" + kind + "\"");
    }
    surf.name = name;
    o.finish();
    return surf;
}

} // namespace ksub
