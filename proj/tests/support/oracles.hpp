#pragma once

// Test-only oracles. These stay independent of the library code paths they
// check: quadrature instead of closed forms, finite differences instead of
// the tape, and a KS test for distributional claims.

#include "ppflow/nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

// Composite Simpson with interval doubling until successive estimates agree.
inline double integrate(const std::function<double(double)>& f,
                        double a,
                        double b,
                        double tol = 1e-10) {
    int n = 64;
    double prev = simpson(f, a, b, n);
    for (int iter = 0; iter < 16; ++iter) {
        n *= 2;
        const double cur = simpson(f, a, b, n);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    return prev;
}

inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::abs(c - double(i) / n));
        d = std::max(d, std::abs(double(i + 1) / n - c));
    }
    return d;
}

inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(double(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * double(k) * double(k) * lambda * lambda);
        p += (k % 2 == 1 ? term : -term);
    }
    return std::clamp(p, 0.0, 1.0);
}

inline double exp1_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); }

inline double normal_cdf(double x, double mean = 0.0, double std = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / (std * std::sqrt(2.0)));
}

// Central finite differences over every parameter entry.
inline ppflow::GradMap finite_diff_grads(ppflow::ParameterStore& store,
                                         const std::function<double()>& f,
                                         double h = 1e-5) {
    ppflow::GradMap out;
    for (const auto& name : store.names()) {
        ppflow::Mat& v = store.at(name);
        ppflow::Mat g = ppflow::Mat::Zero(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            for (Eigen::Index j = 0; j < v.cols(); ++j) {
                const double orig = v(i, j);
                v(i, j) = orig + h;
                const double fp = f();
                v(i, j) = orig - h;
                const double fm = f();
                v(i, j) = orig;
                g(i, j) = (fp - fm) / (2.0 * h);
            }
        }
        out.emplace(name, std::move(g));
    }
    return out;
}

// Largest relative error over entries where the analytic gradient is material.
inline double max_rel_grad_error(const ppflow::GradMap& analytic,
                                 const ppflow::GradMap& fd,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (const auto& [name, a] : analytic) {
        const ppflow::Mat& b = fd.at(name);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                if (std::abs(a(i, j)) <= floor && std::abs(b(i, j)) <= floor) continue;
                const double denom = std::max(std::abs(a(i, j)), std::abs(b(i, j)));
                worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
            }
        }
    }
    return worst;
}

}  // namespace oracles
