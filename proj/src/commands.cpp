#include "supou/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "supou/parallel.hpp"

namespace supou {

namespace {

std::string out_dir(const RunConfig& cfg, const CommandOptions& opt) {
    return opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::vector<std::string> value_header(int d) {
    std::vector<std::string> h{"t"};
    for (int j = 0; j < d; ++j) h.push_back("x" + std::to_string(j + 1));
    return h;
}

Json named(const std::vector<std::string>& names, const Vector& v) {
    Json j = Json::object();
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = number(v(static_cast<Eigen::Index>(i)));
    return j;
}

Json provenance(const RunConfig& cfg, std::size_t paths) {
    Json seeds = Json::array();
    for (std::size_t i = 0; i < paths; ++i)
        seeds.push_back({{"index", i}, {"seed", path_seed(cfg.sim.master_seed, i)}});
    return {{"config", cfg.raw}, {"paths", seeds}, {"params_digest", cfg.params_digest()}};
}

void require_estimation(const RunConfig& cfg) {
    if (!cfg.estimate_error.empty()) throw ConfigError(cfg.estimate_error);
}

Json zeta_curve(const RunConfig& cfg) {
    const MixingSpec& mix = cfg.params.mixing;
    if (mix.kind != MixingSpec::Kind::gamma) return nullptr;
    const ZetaParams z = make_zeta_params(mix.direction, levy_moments(cfg.params.levy), cfg.check_delta);
    Json out = Json::array();
    for (double r : cfg.check_r) {
        const auto [first, second] = zeta_bound_terms(z, mix.alpha, mix.beta, r);
        out.push_back({{"r", r}, {"bound", number(first + second)}, {"first_term", number(first)},
                       {"second_term", number(second)}});
    }
    return out;
}

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    return s;
}

}  // namespace

std::string path_file_name(std::size_t index) { return "path_" + std::to_string(index) + ".csv"; }

Json to_json(const ExistenceReport& r) {
    return {{"stable", r.stable},
            {"spectral_abscissa", number(r.spectral_abscissa)},
            {"moments_defined", r.moments_defined},
            {"reversion_integral", number(r.reversion_integral)},
            {"reversion_integral_exact", number(r.reversion_integral_exact)},
            {"log_moment", r.log_moment},
            {"pass", r.pass},
            {"messages", r.messages}};
}

Json to_json(const GmmResult& r) {
    Json j = {{"xi_hat", named(r.names, r.xi_hat)},
              {"xi_step1", named(r.names, r.xi_step1)},
              {"objective", number(r.objective)},
              {"objective_step1", number(r.objective_step1)},
              {"converged", r.converged},
              {"vhat", to_json(r.vhat)},
              {"weight", to_json(r.weight)},
              {"vhat_near_singular", r.vhat_near_singular},
              {"iterations", r.iterations},
              {"evaluations", r.evaluations},
              {"n_obs", r.n_obs},
              {"m", r.m}};
    j["sandwich_cov"] = r.sandwich_cov ? to_json(*r.sandwich_cov) : Json(nullptr);
    j["standard_errors"] = r.standard_errors ? named(r.names, *r.standard_errors) : Json(nullptr);
    return j;
}

Json moments_report(const RunConfig& cfg) {
    const LevyMoments lm = levy_moments(cfg.params.levy);
    Json acov = Json::array();
    for (double h : cfg.lags) acov.push_back({{"lag", h}, {"value", to_json(acov_supou(cfg.params, h))}});
    Json j = {{"mixing", to_string(cfg.params.mixing.kind)},
              {"levy", {{"mean", to_json(lm.mean)}, {"covariance", to_json(lm.covariance)}}},
              {"mean", to_json(mean_supou(cfg.params))},
              {"variance", to_json(var_supou(cfg.params))},
              {"acov", acov},
              {"existence", to_json(existence_check(cfg.params))}};
    try {
        j["zeta_bound"] = zeta_curve(cfg);
    } catch (const DomainError& e) {
        j["zeta_bound"] = nullptr;
        j["zeta_error"] = e.what();
    }
    return j;
}

Json check_report(const RunConfig& cfg) {
    const ExistenceReport rep = existence_check(cfg.params);
    const MixingSpec& mix = cfg.params.mixing;
    Json clt = {{"delta", cfg.check_delta}, {"threshold", clt_threshold(cfg.check_delta)}};
    if (mix.kind == MixingSpec::Kind::gamma) {
        clt["alpha"] = mix.alpha;
        clt["condition"] = clt_condition(mix.alpha, cfg.check_delta);
    } else {
        clt["alpha"] = nullptr;
        clt["condition"] = nullptr;
    }
    Json j = {{"stable", rep.stable},
              {"spectral_abscissa", number(rep.spectral_abscissa)},
              {"existence", rep.pass ? "pass" : "fail"},
              {"existence_report", to_json(rep)},
              {"log_moment", rep.log_moment},
              {"clt", clt}};
    try {
        j["zeta_bound"] = rep.stable ? zeta_curve(cfg) : Json(nullptr);
    } catch (const DomainError& e) {
        j["zeta_bound"] = nullptr;
        j["zeta_error"] = e.what();
    }
    return j;
}

Json cmd_simulate(const RunConfig& cfg, const CommandOptions& opt) {
    const std::string dir = out_dir(cfg, opt);
    const auto paths = simulate_many(cfg.params, cfg.sim, static_cast<std::size_t>(cfg.paths), opt.jobs);
    const int d = cfg.params.dimension();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        Matrix rows(paths[i].size(), d + 1);
        rows.col(0) = Eigen::Map<const Vector>(paths[i].times.data(), paths[i].size());
        rows.rightCols(d) = paths[i].values;
        write_csv(join(dir, path_file_name(i)), value_header(d), rows);
    }
    write_text(join(dir, "provenance.json"), dump(provenance(cfg, paths.size())));
    return {{"command", "simulate"}, {"paths", paths.size()}, {"N", cfg.sim.n}, {"directory", dir}};
}

Json cmd_moments(const RunConfig& cfg, const CommandOptions& opt) {
    const Json report = moments_report(cfg);
    const std::string dir = out_dir(cfg, opt);
    write_text(join(dir, "moments.json"), dump(report));
    return report;
}

Matrix read_path_csv(const std::string& path, int expected_dim) {
    const CsvTable t = read_csv(path);
    const bool has_time = !t.header.empty() && t.header.front() == "t";
    const int cols = static_cast<int>(t.header.size()) - (has_time ? 1 : 0);
    if (cols != expected_dim)
        throw DomainError(path + ": found " + std::to_string(cols) + " value columns, model dimension is " +
                          std::to_string(expected_dim));
    return t.data.rightCols(cols);
}

Json cmd_estimate(const RunConfig& cfg, const std::string& path_csv, const CommandOptions& opt) {
    require_estimation(cfg);
    const Matrix x = read_path_csv(path_csv, cfg.params.dimension());
    const GmmResult r = two_step_gmm(x, cfg.sim.delta, cfg.estimate);
    Json j = to_json(r);
    j["map"] = to_string(cfg.estimate.map.kind());
    j["source"] = path_csv;
    write_text(join(out_dir(cfg, opt), "estimate.json"), dump(j));
    return j;
}

Json cmd_mc_study(const RunConfig& cfg, const CommandOptions& opt) {
    require_estimation(cfg);
    const std::string dir = out_dir(cfg, opt);
    const auto count = static_cast<std::size_t>(cfg.paths);
    const auto names = cfg.estimate.map.names();

    struct Outcome {
        std::optional<GmmResult> result;
        std::string error;
    };
    std::vector<Outcome> outcomes(count);
    parallel_for(count, opt.jobs, [&](std::size_t i) {
        try {
            SimConfig sc = cfg.sim;
            sc.path_index = i;
            outcomes[i].result = two_step_gmm(simulate(cfg.params, sc), cfg.estimate);
        } catch (const std::exception& e) {
            outcomes[i].error = sanitize(e.what());
        }
    });

    std::string csv = "path_index,seed,failed,converged,objective";
    for (const auto& n : names) csv += "," + n;
    csv += "\n";
    std::vector<Vector> estimates;
    Json failures = Json::array();
    int converged = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& o = outcomes[i];
        csv += std::to_string(i) + "," + std::to_string(path_seed(cfg.sim.master_seed, i)) + ",";
        if (o.result) {
            converged += o.result->converged;
            csv += std::string("0,") + (o.result->converged ? "1," : "0,") + format_double(o.result->objective);
            for (Eigen::Index k = 0; k < o.result->xi_hat.size(); ++k) csv += "," + format_double(o.result->xi_hat(k));
            estimates.push_back(o.result->xi_hat);
        } else {
            csv += "1,0,nan";
            for (std::size_t k = 0; k < names.size(); ++k) csv += ",nan";
            failures.push_back({{"path_index", i}, {"message", o.error}});
        }
        csv += "\n";
    }
    write_text(join(dir, "estimates.csv"), csv);

    Json params = Json::object();
    if (!estimates.empty()) {
        for (const auto& s : trim_report(estimates, names, cfg.percentiles)) {
            const QqData qq = qq_normal(s.values);
            params[s.name] = {{"percentile", s.percentile}, {"total", s.total},   {"retained", s.retained},
                              {"mean", number(s.mean)},     {"median", number(s.median)},
                              {"sd", number(s.sd)},         {"q25", number(s.q25)},
                              {"q75", number(s.q75)},       {"iqr", number(s.iqr)},
                              {"min", number(s.min)},       {"max", number(s.max)},
                              {"qq_r_squared", number(qq.r_squared)}};
            Matrix hist_rows(0, 3);
            const auto bins = histogram(s.values, cfg.histogram_bins);
            hist_rows.resize(static_cast<Eigen::Index>(bins.size()), 3);
            for (std::size_t b = 0; b < bins.size(); ++b) hist_rows.row(b) << bins[b].lower, bins[b].upper, bins[b].count;
            write_csv(join(dir, "hist_" + s.name + ".csv"), {"lower", "upper", "count"}, hist_rows);
            Matrix qq_rows(static_cast<Eigen::Index>(qq.theoretical.size()), 2);
            for (std::size_t r = 0; r < qq.theoretical.size(); ++r) qq_rows.row(r) << qq.theoretical[r], qq.standardized[r];
            write_csv(join(dir, "qq_" + s.name + ".csv"), {"theoretical", "sample"}, qq_rows);
        }
    }

    // Sample ACF of path 0 with the theoretical curve at the configured model.
    SimConfig sc = cfg.sim;
    sc.path_index = 0;
    try {
        const SupOUPath p0 = simulate(cfg.params, sc);
        const int d = p0.dimension();
        const int max_lag = std::min(cfg.acf_max_lag, p0.size() - 1);
        const AcfTable acf = sample_acf(p0, max_lag);
        Matrix rows(max_lag + 1, 1 + 2 * d);
        Matrix var;
        try {
            var = var_supou(cfg.params);
        } catch (const DomainError&) {
        }
        for (int h = 0; h <= max_lag; ++h) {
            rows(h, 0) = h;
            rows.row(h).segment(1, d) = acf.acf.row(h);
            Matrix cov;
            if (var.size()) cov = acov_supou(cfg.params, h * cfg.sim.delta);
            for (int j = 0; j < d; ++j)
                rows(h, 1 + d + j) = var.size() ? cov(j, j) / var(j, j) : std::numeric_limits<double>::quiet_NaN();
        }
        std::vector<std::string> header{"lag"};
        for (int j = 0; j < d; ++j) header.push_back("acf_x" + std::to_string(j + 1));
        for (int j = 0; j < d; ++j) header.push_back("theory_x" + std::to_string(j + 1));
        write_csv(join(dir, "acf_path0.csv"), header, rows);
    } catch (const DomainError& e) {
        failures.push_back({{"path_index", 0}, {"message", std::string("acf: ") + sanitize(e.what())}});
    }

    Json summary = {{"paths", count},
                    {"failed", count - estimates.size()},
                    {"converged", converged},
                    {"N", cfg.sim.n},
                    {"m", cfg.estimate.m},
                    {"map", to_string(cfg.estimate.map.kind())},
                    {"truth", cfg.truth ? named(names, *cfg.truth) : Json(nullptr)},
                    {"parameters", params},
                    {"failures", failures},
                    {"params_digest", cfg.params_digest()}};
    write_text(join(dir, "summary.json"), dump(summary));
    write_text(join(dir, "provenance.json"), dump(provenance(cfg, count)));
    return summary;
}

Json cmd_check(const RunConfig& cfg, const CommandOptions& opt) {
    const Json report = check_report(cfg);
    write_text(join(out_dir(cfg, opt), "check.json"), dump(report));
    return report;
}

}  // namespace supou
