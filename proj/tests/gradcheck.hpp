#pragma once

// Central finite-difference oracle shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "typoblind/autodiff.hpp"

namespace typoblind::testing {

/// Relative error with a small absolute floor so entries that are zero on
/// both routes compare as equal.
inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

/// Builds the loss on a fresh tape from the given parameters.
using LossBuilder = std::function<ad::Var(ad::Tape&, std::vector<ad::Var>&)>;

inline double evaluate(std::vector<ad::Parameter>& params, const LossBuilder& build) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (auto& p : params) vars.push_back(tape.param(p));
    return build(tape, vars).value().item();
}

/// Max relative error between backward() and central differences with step h.
inline double max_gradient_error(std::vector<ad::Parameter>& params, const LossBuilder& build, double h = 1e-5) {
    for (auto& p : params) p.zero_grad();
    {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (auto& p : params) vars.push_back(tape.param(p));
        tape.backward(build(tape, vars));
    }
    double worst = 0.0;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const double up = evaluate(params, build);
            p.value[i] = saved - h;
            const double down = evaluate(params, build);
            p.value[i] = saved;
            worst = std::max(worst, relative_error(p.grad[i], (up - down) / (2.0 * h)));
        }
    }
    return worst;
}

/// Same check for parameters owned by a model; `floor` bounds the relative
/// error denominator from below.
inline double max_gradient_error(std::span<ad::Parameter* const> params, const std::function<ad::Var(ad::Tape&)>& build,
                                 double h = 1e-5, double floor = 1e-4) {
    for (auto* p : params) p->zero_grad();
    {
        ad::Tape tape;
        tape.backward(build(tape));
    }
    auto eval = [&] {
        ad::Tape tape;
        return build(tape).value().item();
    };
    double worst = 0.0;
    for (auto* p : params) {
        const auto grad = p->grad;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + h;
            const double up = eval();
            p->value[i] = saved - h;
            const double down = eval();
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
            worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
        }
        p->zero_grad();
    }
    return worst;
}

inline ad::Tensor random_tensor(std::mt19937_64& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(ad::shape_size(shape));
    for (auto& x : v) x = dist(rng);
    return ad::Tensor(std::move(shape), std::move(v));
}

/// Plain triple-loop product, kept independent of the engine's kernel.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                        std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    return c;
}

/// A randomly composed differentiable graph: its parameters plus a builder
/// that replays the same op sequence on any tape.
struct RandomGraph {
    std::vector<ad::Parameter> params;
    LossBuilder build;
    std::vector<std::string> ops;
};

/// Draws 3 to 8 ops over matrices of at most 8 rows and columns, ending in
/// cross-entropy or a mean of squares. Every op is smooth, so central
/// differences are a valid oracle everywhere.
inline RandomGraph random_graph(std::mt19937_64& rng) {
    using Step = std::function<ad::Var(ad::Var, std::vector<ad::Var>&)>;
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    auto split = [&](std::size_t n) {
        std::vector<std::size_t> lens;
        while (n > 0) {
            lens.push_back(pick(1, n));
            n -= lens.back();
        }
        return lens;
    };

    RandomGraph g;
    std::vector<Step> steps;
    auto param = [&](ad::Shape shape) {
        g.params.emplace_back("p" + std::to_string(g.params.size()), random_tensor(rng, std::move(shape)));
        return g.params.size() - 1;
    };
    std::size_t n = pick(1, 8), c = pick(1, 8);
    param({n, c});

    const std::size_t depth = pick(3, 8);
    for (std::size_t s = 0; s < depth; ++s) {
        switch (pick(0, 11)) {
        case 0: {
            const std::size_t out = pick(1, 8), w = param({c, out});
            steps.push_back([w](ad::Var h, std::vector<ad::Var>& v) { return ad::matmul(h, v[w]); });
            g.ops.push_back("matmul");
            c = out;
            break;
        }
        case 1: {
            const std::size_t b = param({c});
            steps.push_back([b](ad::Var h, std::vector<ad::Var>& v) { return ad::add_bias(h, v[b]); });
            g.ops.push_back("add_bias");
            break;
        }
        case 2:
            steps.push_back([](ad::Var h, std::vector<ad::Var>&) { return ad::tanh(h); });
            g.ops.push_back("tanh");
            break;
        case 3: {
            const std::size_t m = param({n, c});
            steps.push_back([m](ad::Var h, std::vector<ad::Var>& v) { return ad::mul(h, v[m]); });
            g.ops.push_back("mul");
            break;
        }
        case 4: {
            const std::size_t m = param({n, c});
            const bool minus = pick(0, 1) == 1;
            steps.push_back([m, minus](ad::Var h, std::vector<ad::Var>& v) {
                return minus ? ad::sub(h, v[m]) : ad::add(v[m], h);
            });
            g.ops.push_back(minus ? "sub" : "add");
            break;
        }
        case 5: {
            const double f = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
            steps.push_back([f](ad::Var h, std::vector<ad::Var>&) { return ad::scale(h, f); });
            g.ops.push_back("scale");
            break;
        }
        case 6:
            steps.push_back([](ad::Var h, std::vector<ad::Var>&) { return ad::softmax(h); });
            g.ops.push_back("softmax");
            break;
        case 7: {
            if (c >= 8) break;
            const std::size_t extra = pick(1, 8 - c), m = param({n, extra});
            steps.push_back([m](ad::Var h, std::vector<ad::Var>& v) { return ad::concat({h, v[m]}); });
            g.ops.push_back("concat");
            c += extra;
            break;
        }
        case 8: {
            if (3 * c > 8) break;
            auto lens = split(n);
            steps.push_back([lens](ad::Var h, std::vector<ad::Var>&) { return ad::context_window(h, lens); });
            g.ops.push_back("context_window");
            c *= 3;
            break;
        }
        case 9: {
            auto lens = split(n);
            steps.push_back([lens](ad::Var h, std::vector<ad::Var>&) { return ad::mean_pool(h, lens); });
            g.ops.push_back("mean_pool");
            n = lens.size();
            break;
        }
        case 10: {
            std::vector<std::size_t> rows(pick(1, 8));
            for (auto& r : rows) r = pick(0, n - 1);
            steps.push_back([rows](ad::Var h, std::vector<ad::Var>&) { return ad::embedding_lookup(h, rows); });
            g.ops.push_back("embedding_lookup");
            n = rows.size();
            break;
        }
        default: {
            const std::size_t l = pick(2, 3), row = pick(0, l - 1), w = param({l, l});
            std::vector<std::size_t> others;
            for (std::size_t k = 1; k < l; ++k) others.push_back(param({n, c}));
            steps.push_back([w, row, others](ad::Var h, std::vector<ad::Var>& v) {
                std::vector<ad::Var> inputs{h};
                for (auto o : others) inputs.push_back(v[o]);
                return ad::mix_row(v[w], row, inputs);
            });
            g.ops.push_back("mix_row");
            break;
        }
        }
    }

    const bool classify = c >= 2 && pick(0, 1) == 1;
    std::vector<std::size_t> targets(n);
    for (auto& t : targets) t = pick(0, c - 1);
    g.ops.push_back(classify ? "cross_entropy" : "mean_square");
    g.build = [steps = std::move(steps), classify, targets](ad::Tape&, std::vector<ad::Var>& v) {
        ad::Var h = v[0];
        for (const auto& step : steps) h = step(h, v);
        return classify ? ad::cross_entropy(h, targets) : ad::mean(ad::mul(h, h));
    };
    return g;
}

} // namespace typoblind::testing
