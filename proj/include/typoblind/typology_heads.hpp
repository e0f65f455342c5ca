#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "typoblind/autodiff.hpp"
#include "typoblind/errors.hpp"
#include "typoblind/typology_types.hpp"

namespace typoblind::heads {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class HeadModeKind { off, expose, blind };

struct HeadMode {
    HeadModeKind kind = HeadModeKind::off;
    double lambda = 0.0;

    static HeadMode off() { return {}; }
    static HeadMode expose() { return {HeadModeKind::expose, 0.0}; }
    static HeadMode blind(double lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw ValidationError("blind mode needs a finite lambda > 0, got " + std::to_string(lambda));
        }
        return {HeadModeKind::blind, lambda};
    }

    bool active() const noexcept { return kind != HeadModeKind::off; }
    friend bool operator==(const HeadMode&, const HeadMode&) = default;
};

inline std::string to_string(const HeadMode& m) {
    switch (m.kind) {
    case HeadModeKind::off: return "off";
    case HeadModeKind::expose: return "expose";
    case HeadModeKind::blind: return "blind";
    }
    return "?";
}

struct TypologyLossWeight {
    double value = 0.1;

    explicit TypologyLossWeight(double w = 0.1) : value(w) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("typology loss weight must be >= 0");
    }
};

/// One affine head per feature over the pooled representation.
class TypologyHeads {
public:
    TypologyHeads() = default;

    /// `zero_init` gives uniform predictions; otherwise heads draw from their
    /// own seeded stream so the model's stream is untouched.
    TypologyHeads(std::size_t width, std::vector<TypologyFeature> features, std::uint64_t seed, bool zero_init = false)
        : width_(width), features_(std::move(features)) {
        if (width_ == 0) throw ValidationError("typology heads: width must be positive");
        std::mt19937_64 rng(seed ^ 0x7970686561647321ULL);
        for (const auto& f : features_) {
            f.validate();
            const std::size_t k = f.values.size();
            Tensor w = Tensor::zeros({width_, k});
            if (!zero_init) {
                const double limit = std::sqrt(6.0 / static_cast<double>(width_ + k));
                std::uniform_real_distribution<double> dist(-limit, limit);
                for (auto& x : w.values()) x = dist(rng);
            }
            weights_.emplace_back("head_weight_" + f.id, std::move(w));
            biases_.emplace_back("head_bias_" + f.id, Tensor::zeros({k}));
        }
    }

    const std::vector<TypologyFeature>& features() const noexcept { return features_; }
    std::size_t width() const noexcept { return width_; }

    std::size_t index_of(const std::string& feature_id) const {
        for (std::size_t i = 0; i < features_.size(); ++i)
            if (features_[i].id == feature_id) return i;
        throw ValidationError("no typology head for feature '" + feature_id + "'");
    }

    Parameter& weight(const std::string& feature_id) { return weights_[index_of(feature_id)]; }
    Parameter& bias(const std::string& feature_id) { return biases_[index_of(feature_id)]; }

    Var head_forward(Var pooled, const TypologyFeature& feature) {
        const auto i = index_of(feature.id);
        if (pooled.value().rank() != 2 || pooled.value().cols() != width_) {
            throw ShapeError("head_forward: pooled " + ad::shape_string(pooled.shape()) + " for head width " +
                             std::to_string(width_));
        }
        return ad::add_bias(ad::matmul(pooled, pooled.tape->param(weights_[i])), pooled.tape->param(biases_[i]));
    }

    /// Σ over `features` of the cross-entropy of each head against the
    /// language's true value. Under blind the heads read a gradient-reversed
    /// copy of the pooled state, so only the encoder side sees −λ.
    Var typology_loss(Var pooled, const std::string& language, const FeatureSet& profiles,
                      const std::vector<TypologyFeature>& features, const HeadMode& mode) {
        if (!mode.active()) throw ValidationError("typology_loss called with mode off");
        if (features.empty()) throw ValidationError("typology_loss: no features");
        Var input = mode.kind == HeadModeKind::blind ? ad::gradient_reversal(pooled, mode.lambda) : pooled;
        const std::size_t b = pooled.value().rows();
        Var total;
        bool first = true;
        for (const auto& f : features) {
            const std::vector<std::size_t> targets(b, profiles.target(language, f));
            Var l = ad::cross_entropy(head_forward(input, f), targets);
            total = first ? l : ad::add(total, l);
            first = false;
        }
        return total;
    }

    Var typology_loss(Var pooled, const std::string& language, const FeatureSet& profiles, const HeadMode& mode) {
        return typology_loss(pooled, language, profiles, features_, mode);
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            out.push_back(&weights_[i]);
            out.push_back(&biases_[i]);
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json params = nlohmann::json::object();
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            params[weights_[i].name] = weights_[i].value.data();
            params[biases_[i].name] = biases_[i].value.data();
        }
        return params;
    }

    void load_json(const nlohmann::json& params) {
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            for (auto* p : {&weights_[i], &biases_[i]}) {
                if (!params.contains(p->name)) throw ValidationError("checkpoint lacks head parameter " + p->name);
                auto v = params.at(p->name).get<std::vector<double>>();
                p->value = Tensor(p->value.shape(), std::move(v), true);
            }
        }
    }

private:
    std::size_t width_ = 0;
    std::vector<TypologyFeature> features_;
    std::vector<Parameter> weights_, biases_;
};

inline Var combined_loss(Var task_loss, Var typ_loss, const TypologyLossWeight& w) {
    if (!task_loss.value().is_scalar() || !typ_loss.value().is_scalar()) {
        throw ShapeError("combined_loss expects scalar losses");
    }
    return ad::add(task_loss, ad::scale(typ_loss, w.value));
}

} // namespace typoblind::heads
