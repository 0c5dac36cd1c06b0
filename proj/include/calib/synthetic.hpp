#pragma once

// Score sets with planted calibration properties.
//
// Each record draws a latent probability q from the base distribution, a
// label ~ Bernoulli(q) and reports q (identity) or sigmoid(t* logit(q))
// (temperature distortion, undone exactly by temperature t*).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "calib/calibrators.hpp"
#include "calib/error.hpp"
#include "calib/rng.hpp"
#include "calib/score_model.hpp"

namespace calib {

struct UniformBase {};

/// Beta(alpha, alpha) with 0 < alpha < 1: mass piles up near 0 and 1.
struct BimodalBase {
    double alpha = 0.3;
};

struct IdentityDistortion {};

struct TemperatureDistortion {
    double t_star = 1.0;
};

struct SyntheticSpec {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::variant<UniformBase, BimodalBase> base = UniformBase{};
    std::variant<IdentityDistortion, TemperatureDistortion> distortion = IdentityDistortion{};
    Split split = Split::test;
};

inline void check(const SyntheticSpec& spec) {
    if (spec.n == 0) throw DomainError("synthetic set needs n >= 1");
    if (auto* b = std::get_if<BimodalBase>(&spec.base); b && !(b->alpha > 0.0 && b->alpha < 1.0))
        throw DomainError(fmt::format("bimodal alpha {} outside (0,1)", b->alpha));
    if (auto* t = std::get_if<TemperatureDistortion>(&spec.distortion);
        t && !(t->t_star > 0.0 && std::isfinite(t->t_star)))
        throw DomainError(fmt::format("planted temperature {} must be positive", t->t_star));
}

namespace detail {

// Johnk's rejection sampler for Beta(a, a), a < 1, uniforms only.
inline double sample_symmetric_beta(SplitMix64& rng, double a) {
    for (;;) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        if (u == 0.0 || v == 0.0) continue;
        const double log_x = std::log(u) / a;
        const double log_y = std::log(v) / a;
        const double m = std::max(log_x, log_y);
        const double x = std::exp(log_x - m), y = std::exp(log_y - m);
        // accept when U^(1/a) + V^(1/a) <= 1, evaluated in log space
        if (m + std::log(x + y) <= 0.0) return x / (x + y);
    }
}

inline double clamp_open(double q) { return std::clamp(q, kLogitEpsilon, 1.0 - kLogitEpsilon); }

}  // namespace detail

inline ScoreSet generate(const SyntheticSpec& spec) {
    check(spec);
    SplitMix64 rng(spec.seed);
    std::vector<PredictionRecord> records;
    records.reserve(spec.n);
    const auto* distortion = std::get_if<TemperatureDistortion>(&spec.distortion);
    for (std::size_t i = 0; i < spec.n; ++i) {
        double q = std::holds_alternative<UniformBase>(spec.base)
                       ? rng.uniform()
                       : detail::sample_symmetric_beta(rng, std::get<BimodalBase>(spec.base).alpha);
        q = detail::clamp_open(q);
        PredictionRecord r;
        r.id = "s" + std::to_string(i);
        r.label = rng.uniform() < q ? 1 : 0;
        r.score = distortion ? sigmoid(logit(q) * distortion->t_star) : q;
        r.split = spec.split;
        records.push_back(std::move(r));
    }
    return ScoreSet(std::move(records), fmt::format("synthetic(seed={})", spec.seed));
}

/// k aligned copies of generate(spec) whose scores get independent
/// N(0, jitter^2) noise in logit space; copy j is tagged subrun j and uses
/// stream derive_seed(spec.seed, j + 1).
inline std::vector<ScoreSet> generate_subruns(const SyntheticSpec& spec, std::size_t k, double jitter) {
    if (k == 0) throw DomainError("need at least one sub-run");
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw DomainError("jitter must be >= 0");
    const ScoreSet base = generate(spec);
    std::vector<ScoreSet> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        SplitMix64 rng(derive_seed(spec.seed, j + 1));
        std::vector<PredictionRecord> recs = base.records();
        for (auto& r : recs) {
            r.subrun = j;
            if (jitter > 0.0) r.score = sigmoid(logit(r.score) + jitter * rng.normal());
        }
        out.emplace_back(std::move(recs), fmt::format("{}/subrun{}", base.provenance(), j));
    }
    return out;
}

}  // namespace calib
