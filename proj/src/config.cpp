#include "supou/config.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

namespace supou {

namespace {

const Json kEmpty = Json::object();

// Typed access to one JSON object with error messages carrying the field path.
class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const Json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError(at(key) + ": required field is missing");
        return j_.at(key);
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) throw ConfigError(at(k) + ": unknown field");
    }

    Node child(const std::string& key) const { return Node(raw(key), at(key)); }

    double num(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(at(key) + ": expected a finite number");
        return x;
    }
    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

    long long integer(const std::string& key, long long fallback) const {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
        return v.get<long long>();
    }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
        throw ConfigError(at(key) + ": expected a nonnegative integer");
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string str(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const Vector v = vector_from_json(raw(key), at(key));
        return {v.data(), v.data() + v.size()};
    }

    const Json& json() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const Json& j_;
    std::string path_;
};

CompoundPoissonSpec parse_law(const Node& n) {
    n.allow({"inter_arrival_mean", "jump_shape", "jump_rate"});
    CompoundPoissonSpec s;
    s.inter_arrival_mean = n.num("inter_arrival_mean", s.inter_arrival_mean);
    s.jump_shape = n.num("jump_shape", s.jump_shape);
    s.jump_rate = n.num("jump_rate", s.jump_rate);
    try {
        s.validate();
    } catch (const ConfigError& e) {
        n.fail(e.what());
    }
    return s;
}

LevyBasisSpec parse_levy(const Node& n, int d) {
    n.allow({"common", "idiosyncratic", "drift", "gaussian"});
    LevyBasisSpec spec;
    spec.d = d;
    if (n.has("common")) spec.common = parse_law(n.child("common"));
    if (!n.has("idiosyncratic")) {
        spec.idiosyncratic.assign(d, CompoundPoissonSpec{});
    } else if (n.raw("idiosyncratic").is_array()) {
        const Json& arr = n.raw("idiosyncratic");
        if (static_cast<int>(arr.size()) != d)
            throw ConfigError(n.at("idiosyncratic") + ": expected " + std::to_string(d) + " streams");
        for (std::size_t i = 0; i < arr.size(); ++i)
            spec.idiosyncratic.push_back(parse_law(Node(arr[i], n.at("idiosyncratic") + "[" + std::to_string(i) + "]")));
    } else {
        spec.idiosyncratic.assign(d, parse_law(n.child("idiosyncratic")));
    }
    if (n.has("drift")) spec.drift = vector_from_json(n.raw("drift"), n.at("drift"));
    if (n.has("gaussian")) spec.gaussian = matrix_from_json(n.raw("gaussian"), n.at("gaussian"));
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        n.fail(e.what());
    }
    return spec;
}

GraphSpec parse_graph(const Node& model, const std::string& base_dir) {
    if (model.has("graph") && model.has("graph_file")) model.fail("give either graph or graph_file, not both");
    if (model.has("graph_file")) {
        std::filesystem::path p = model.str("graph_file", "");
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        if (!std::filesystem::exists(p)) throw ConfigError(model.at("graph_file") + ": file not found: " + p.string());
        try {
            return GraphSpec::from_json_file(p.string());
        } catch (const ConfigError& e) {
            throw ConfigError(model.at("graph_file") + ": " + e.what());
        }
    }
    const Node g = model.child("graph");
    g.allow({"d", "edges", "undirected"});
    try {
        return GraphSpec::from_json_text(g.json().dump());
    } catch (const ConfigError& e) {
        throw ConfigError(g.path() + ": " + e.what());
    }
}

DiscreteAtom parse_atom(const Node& n, const std::optional<NormalizedGraph>& ng) {
    n.allow({"q", "theta1", "theta2", "p"});
    DiscreteAtom atom;
    atom.probability = n.num("p", 1.0);
    if (n.has("q")) {
        atom.q = matrix_from_json(n.raw("q"), n.at("q"));
    } else {
        if (!ng) n.fail("theta1/theta2 atoms need a graph; give q instead");
        atom.q = build_q(ThetaParams{n.num("theta1"), n.num("theta2")}, *ng);
    }
    return atom;
}

// Builds the model and reports the truth vector when the estimation map can express it.
void parse_model(const Node& model, const std::string& base_dir, RunConfig& rc) {
    model.allow({"graph", "graph_file", "c", "mixing", "levy"});
    const Node mixing = model.child("mixing");
    const std::string kind = mixing.str("kind", "gamma");
    const bool has_graph = model.has("graph") || model.has("graph_file");

    std::optional<NormalizedGraph> ng;
    int d = 1;
    if (has_graph) {
        rc.graph = parse_graph(model, base_dir);
        ng = row_normalize(*rc.graph, false);
        d = rc.graph->dimension();
    }
    rc.c = model.num("c", 0.0);
    if (!has_graph && model.has("c")) model.fail("c needs a graph");

    LevyBasisSpec levy = parse_levy(model.has("levy") ? model.child("levy") : Node(kEmpty, model.at("levy")), d);

    if (kind == "gamma") {
        if (has_graph) {
            mixing.allow({"kind", "alpha", "beta"});
            if (!(std::abs(rc.c) < 1.0)) throw ConfigError(model.at("c") + ": must satisfy |c| < 1");
            const double beta = mixing.num("beta", 1.0);
            if (!(beta > 0.0)) throw ConfigError(mixing.at("beta") + ": must be positive");
            rc.params = SupOUParams::graph_gamma(*ng, rc.c, mixing.num("alpha"), beta, std::move(levy));
        } else {
            mixing.allow({"kind", "alpha", "B"});
            const double b = mixing.num("B");
            if (!(b < 0.0)) throw ConfigError(mixing.at("B") + ": must be negative");
            rc.params = SupOUParams::univariate(b, mixing.num("alpha"), std::move(levy));
        }
        if (!(rc.params.mixing.alpha > 0.0)) throw ConfigError(mixing.at("alpha") + ": must be positive");
        return;
    }
    if (kind == "fixed") {
        mixing.allow({"kind", "q", "theta1", "theta2"});
        DiscreteAtom atom = parse_atom(Node(Json{{"q", mixing.has("q") ? mixing.raw("q") : Json()},
                                                 {"theta1", mixing.has("theta1") ? mixing.raw("theta1") : Json()},
                                                 {"theta2", mixing.has("theta2") ? mixing.raw("theta2") : Json()}},
                                            mixing.path()),
                                       ng);
        if (atom.q.rows() != d || atom.q.cols() != d)
            throw ConfigError(mixing.at("q") + ": expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
        rc.params.mixing = MixingSpec::fixed(atom.q);
    } else if (kind == "discrete") {
        mixing.allow({"kind", "atoms"});
        const Json& arr = mixing.raw("atoms");
        if (!arr.is_array() || arr.empty()) throw ConfigError(mixing.at("atoms") + ": expected a non-empty array");
        std::vector<DiscreteAtom> atoms;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            atoms.push_back(parse_atom(Node(arr[i], mixing.at("atoms") + "[" + std::to_string(i) + "]"), ng));
            if (atoms.back().q.rows() != d || atoms.back().q.cols() != d)
                throw ConfigError(mixing.at("atoms") + "[" + std::to_string(i) + "]: wrong matrix size");
        }
        rc.params.mixing = MixingSpec::discrete(std::move(atoms));
    } else {
        throw ConfigError(mixing.at("kind") + ": expected gamma, fixed or discrete");
    }
    try {
        rc.params.mixing.validate();
    } catch (const ConfigError& e) {
        mixing.fail(e.what());
    }
    rc.params.levy = std::move(levy);
    if (ng) rc.params.graph = ng;
    rc.params.c = rc.c;
}

Vector optional_bounds(const Node& b, const std::string& key, int size, double open) {
    Vector v = Vector::Constant(size, open);
    if (!b.has(key)) return v;
    const Json& arr = b.raw(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != size)
        throw ConfigError(b.at(key) + ": expected " + std::to_string(size) + " entries (null for unbounded)");
    for (int i = 0; i < size; ++i) {
        if (arr[i].is_null()) continue;
        if (!arr[i].is_number()) throw ConfigError(b.at(key) + "[" + std::to_string(i) + "]: expected a number or null");
        v(i) = arr[i].get<double>();
    }
    return v;
}

std::optional<Vector> truth_for(const ParamMap& map, const SupOUParams& p) {
    const LevyMoments lm = levy_moments(p.levy);
    const int d = map.dimension();
    switch (map.kind()) {
        case ParamMap::Kind::univariate: {
            Vector xi(4);
            xi << lm.mean(0), lm.covariance(0, 0), p.mixing.alpha, p.mixing.direction(0, 0);
            return xi;
        }
        case ParamMap::Kind::pooled: {
            const double mu = lm.mean(0), s2 = lm.covariance(0, 0), cv = lm.covariance(1, 0);
            const Matrix pooled = (s2 - cv) * Matrix::Identity(d, d) + cv * Matrix::Ones(d, d);
            if ((lm.mean.array() - mu).abs().maxCoeff() > 1e-12 * std::max(1.0, std::abs(mu)) ||
                (lm.covariance - pooled).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, std::abs(s2)))
                return std::nullopt;
            Vector xi(4);
            xi << mu, s2, cv, p.mixing.alpha;
            return xi;
        }
        case ParamMap::Kind::full: {
            Vector xi(map.size());
            xi.head(d) = lm.mean;
            int idx = d;
            for (int j = 0; j < d; ++j)
                for (int i = j; i < d; ++i) xi(idx++) = lm.covariance(i, j);
            if (!map.fixed_reversion()) xi(idx++) = p.mixing.alpha;
            if (map.free_beta()) xi(idx) = p.mixing.beta;
            return xi;
        }
    }
    return std::nullopt;
}

void parse_estimate(const Node& e, RunConfig& rc) {
    e.allow({"m", "map", "free_beta", "xi0", "bounds", "percentiles", "sandwich", "bartlett", "max_evals",
             "tolerance", "ridge", "restarts"});
    const int d = rc.params.dimension();
    const MixingSpec& mix = rc.params.mixing;
    const std::string map_name = e.str("map", d == 1 ? "univariate" : "pooled");
    const bool free_beta = e.boolean("free_beta", false);
    if (free_beta && map_name != "full") throw ConfigError(e.at("free_beta") + ": only the full map can free beta");

    ParamMap map;
    if (map_name == "univariate") {
        if (d != 1 || mix.kind != MixingSpec::Kind::gamma)
            throw ConfigError(e.at("map") + ": univariate map needs a one-dimensional gamma-mixed model");
        map = ParamMap::univariate();
    } else if (map_name == "pooled") {
        if (d < 2 || mix.kind != MixingSpec::Kind::gamma)
            throw ConfigError(e.at("map") + ": pooled map needs a gamma-mixed graph model with d >= 2");
        map = ParamMap::pooled(mix.direction, mix.beta);
    } else if (map_name == "full") {
        if (mix.kind == MixingSpec::Kind::gamma) {
            map = ParamMap::full(mix.direction, mix.beta, free_beta);
        } else if (mix.kind == MixingSpec::Kind::fixed) {
            map = ParamMap::full_fixed(mix.atoms.front().q);
        } else {
            throw ConfigError(e.at("map") + ": discrete mixing cannot be estimated");
        }
    } else {
        throw ConfigError(e.at("map") + ": expected univariate, pooled or full");
    }
    rc.truth = truth_for(map, rc.params);

    EstimationConfig& ec = rc.estimate;
    ec.map = map;
    ec.m = static_cast<int>(e.integer("m", 5));
    if (ec.m < 0) throw ConfigError(e.at("m") + ": must be nonnegative");
    if (e.has("xi0")) {
        ec.xi0 = vector_from_json(e.raw("xi0"), e.at("xi0"));
    } else if (rc.truth && rc.truth->allFinite()) {
        ec.xi0 = *rc.truth;
    } else {
        throw ConfigError(e.at("xi0") + ": required when the model cannot supply a starting point");
    }
    if (e.has("bounds")) {
        const Node b = e.child("bounds");
        b.allow({"lower", "upper"});
        ec.lower = optional_bounds(b, "lower", map.size(), -std::numeric_limits<double>::infinity());
        ec.upper = optional_bounds(b, "upper", map.size(), std::numeric_limits<double>::infinity());
    }
    ec.optimizer.max_evals = static_cast<int>(e.integer("max_evals", ec.optimizer.max_evals));
    ec.optimizer.diameter_tol = e.num("tolerance", ec.optimizer.diameter_tol);
    ec.optimizer.restarts = static_cast<int>(e.integer("restarts", ec.optimizer.restarts));
    if (ec.optimizer.restarts < 0) throw ConfigError(e.at("restarts") + ": must be nonnegative");
    if (!(ec.optimizer.diameter_tol > 0.0)) throw ConfigError(e.at("tolerance") + ": must be positive");
    ec.ridge = e.num("ridge", ec.ridge);
    ec.sandwich = e.boolean("sandwich", false);
    ec.bartlett = e.boolean("bartlett", false);
    try {
        ec.validate();
    } catch (const ConfigError& err) {
        e.fail(err.what());
    }

    rc.percentiles = map.default_percentiles();
    if (e.has("percentiles")) {
        const Json& p = e.raw("percentiles");
        const auto names = map.names();
        if (p.is_array()) {
            rc.percentiles = e.numbers("percentiles");
            if (rc.percentiles.size() != names.size())
                throw ConfigError(e.at("percentiles") + ": expected " + std::to_string(names.size()) + " entries");
        } else if (p.is_object()) {
            for (const auto& [k, v] : p.items()) {
                const auto it = std::find(names.begin(), names.end(), k);
                if (it == names.end()) throw ConfigError(e.at("percentiles") + "." + k + ": unknown parameter");
                if (!v.is_number()) throw ConfigError(e.at("percentiles") + "." + k + ": expected a number");
                rc.percentiles[it - names.begin()] = v.get<double>();
            }
        } else {
            throw ConfigError(e.at("percentiles") + ": expected an array or an object keyed by parameter");
        }
        for (double q : rc.percentiles)
            if (!(q > 0.0 && q <= 100.0)) throw ConfigError(e.at("percentiles") + ": entries must lie in (0, 100]");
    }
}

}  // namespace

RunConfig RunConfig::from_json(const Json& input, const std::string& base_dir,
                               std::optional<std::uint64_t> seed_override) {
    Json doc = input;
    if (doc.is_object() && doc.contains("config") && doc.contains("params_digest")) doc = doc["config"];
    const Node root(doc, "");
    root.allow({"model", "sim", "estimate", "moments", "check", "output"});

    RunConfig rc;
    rc.base_dir = base_dir;
    parse_model(root.child("model"), base_dir, rc);

    if (root.has("sim")) {
        const Node s = root.child("sim");
        s.allow({"N", "delta", "pre_history_jumps", "paths", "master_seed"});
        rc.sim.n = static_cast<int>(s.integer("N", rc.sim.n));
        rc.sim.delta = s.num("delta", rc.sim.delta);
        const long long pre = s.integer("pre_history_jumps", static_cast<long long>(rc.sim.pre_history_jumps));
        if (pre < 0) throw ConfigError(s.at("pre_history_jumps") + ": must be nonnegative");
        rc.sim.pre_history_jumps = static_cast<std::size_t>(pre);
        rc.paths = static_cast<int>(s.integer("paths", 1));
        if (rc.paths < 1) throw ConfigError(s.at("paths") + ": must be at least 1");
        rc.sim.master_seed = s.u64("master_seed", 0);
        try {
            rc.sim.validate();
        } catch (const ConfigError& e) {
            s.fail(e.what());
        }
    }
    if (seed_override) {
        rc.sim.master_seed = *seed_override;
        doc["sim"]["master_seed"] = *seed_override;
    }

    if (root.has("estimate")) {
        parse_estimate(root.child("estimate"), rc);
    } else {
        // Without an explicit block the defaults may not fit the model (alpha <= 1,
        // discrete mixing); report that only when an estimation is requested.
        try {
            parse_estimate(Node(kEmpty, "estimate"), rc);
        } catch (const ConfigError& e) {
            rc.estimate_error = e.what();
        }
    }

    if (root.has("moments")) {
        const Node m = root.child("moments");
        m.allow({"lags"});
        if (m.has("lags")) rc.lags = m.numbers("lags");
        for (double h : rc.lags)
            if (!(h >= 0.0)) throw ConfigError(m.at("lags") + ": lags must be nonnegative");
    }
    if (root.has("check")) {
        const Node c = root.child("check");
        c.allow({"delta", "r"});
        rc.check_delta = c.num("delta", rc.check_delta);
        if (!(rc.check_delta > 0.0)) throw ConfigError(c.at("delta") + ": must be positive");
        if (c.has("r")) rc.check_r = c.numbers("r");
        for (double r : rc.check_r)
            if (!(r >= 0.0)) throw ConfigError(c.at("r") + ": entries must be nonnegative");
    }
    if (root.has("output")) {
        const Node o = root.child("output");
        o.allow({"directory", "acf_max_lag", "histogram_bins"});
        rc.output_dir = o.str("directory", rc.output_dir);
        rc.acf_max_lag = static_cast<int>(o.integer("acf_max_lag", rc.acf_max_lag));
        rc.histogram_bins = static_cast<int>(o.integer("histogram_bins", rc.histogram_bins));
        if (rc.acf_max_lag < 0) throw ConfigError(o.at("acf_max_lag") + ": must be nonnegative");
        if (rc.histogram_bins < 1) throw ConfigError(o.at("histogram_bins") + ": must be positive");
    }
    rc.raw = std::move(doc);
    return rc;
}

RunConfig RunConfig::from_file(const std::string& path, std::optional<std::uint64_t> seed_override) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    Json doc;
    try {
        doc = Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    return from_json(doc, dir.empty() ? "." : dir.string(), seed_override);
}

std::string RunConfig::params_digest() const { return fnv1a_hex(raw.at("model").dump()); }

}  // namespace supou
