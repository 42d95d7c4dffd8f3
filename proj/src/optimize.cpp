#include "supou/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace supou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Simplex {
    std::vector<Vector> x;
    std::vector<double> fx;

    void order() {
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        std::vector<Vector> xs;
        std::vector<double> fs;
        for (auto i : idx) {
            xs.push_back(x[i]);
            fs.push_back(fx[i]);
        }
        x = std::move(xs);
        fx = std::move(fs);
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) d = std::max(d, (x[i] - x[0]).cwiseAbs().maxCoeff());
        return d;
    }
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& opt) {
    const Eigen::Index n = x0.size();
    NelderMeadResult res;
    if (n == 0) {
        res.x = x0;
        res.value = f(x0);
        res.evaluations = 1;
        res.converged = true;
        return res;
    }
    auto eval = [&](const Vector& v) {
        ++res.evaluations;
        const double y = f(v);
        return std::isfinite(y) ? y : kInf;
    };

    Vector best = x0;
    double best_f = eval(x0);
    for (int round = 0; round <= opt.restarts; ++round) {
        Simplex s;
        s.x.push_back(best);
        s.fx.push_back(best_f);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector v = best;
            v(i) += opt.initial_step * std::max(1.0, std::abs(v(i)));
            s.x.push_back(v);
            s.fx.push_back(eval(v));
        }
        bool converged = false;
        while (res.evaluations < opt.max_evals) {
            s.order();
            if (s.diameter() < opt.diameter_tol) {
                converged = true;
                break;
            }
            ++res.iterations;
            Vector centroid = Vector::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) centroid += s.x[i];
            centroid /= static_cast<double>(n);
            const Vector& worst = s.x[n];

            const Vector xr = centroid + (centroid - worst);
            const double fr = eval(xr);
            if (fr < s.fx[0]) {
                const Vector xe = centroid + 2.0 * (centroid - worst);
                const double fe = eval(xe);
                if (fe < fr) {
                    s.x[n] = xe;
                    s.fx[n] = fe;
                } else {
                    s.x[n] = xr;
                    s.fx[n] = fr;
                }
                continue;
            }
            if (fr < s.fx[n - 1]) {
                s.x[n] = xr;
                s.fx[n] = fr;
                continue;
            }
            const bool outside = fr < s.fx[n];
            const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid))
                                      : Vector(centroid + 0.5 * (worst - centroid));
            const double fc = eval(xc);
            if (fc < (outside ? fr : s.fx[n])) {
                s.x[n] = xc;
                s.fx[n] = fc;
                continue;
            }
            for (Eigen::Index i = 1; i <= n; ++i) {
                s.x[i] = s.x[0] + 0.5 * (s.x[i] - s.x[0]);
                s.fx[i] = eval(s.x[i]);
            }
        }
        s.order();
        const bool improved = s.fx[0] < best_f;
        if (s.fx[0] <= best_f) {
            best = s.x[0];
            best_f = s.fx[0];
        }
        res.converged = converged;
        // A restart that finds nothing better confirms the minimum.
        if (!converged || (round > 0 && !improved)) break;
    }
    res.x = best;
    res.value = best_f;
    return res;
}

}  // namespace supou
