#pragma once

// Statistics oracles written independently of the library code.

#include <cmath>
#include <numeric>
#include <vector>

namespace typoblind::testing {

inline double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = x.size(), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += (long double)x[i] * x[i];
        syy += (long double)y[i] * y[i];
        sxy += (long double)x[i] * y[i];
    }
    return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

// P(T > t) for Student's t with nu degrees of freedom, by Simpson quadrature of the density.
inline double t_upper_tail_oracle(double t, double nu) {
    const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI);
    auto f = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
    const double a = std::abs(t);
    const int n = 20000;
    const double h = a / n;
    double s = f(0) + f(a);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(i * h);
    const double half_mass = s * h / 3;
    return t >= 0 ? 0.5 - half_mass : 0.5 + half_mass;
}

inline double welch_p_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    auto var = [&](const std::vector<double>& v) {
        double m = mean(v), s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / (v.size() - 1);
    };
    const double sa = var(a) / a.size(), sb = var(b) / b.size();
    const double t = (mean(a) - mean(b)) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
    return t_upper_tail_oracle(t, df);
}

} // namespace typoblind::testing
