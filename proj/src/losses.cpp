#include "promise/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace promise::losses {

using json = nlohmann::ordered_json;

void LossSpec::validate() const {
    switch (kind) {
        case Kind::mse:
            break;
        case Kind::asymmetric:
            if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
                throw InputError("asymmetric alpha must be finite and >= 1");
            }
            break;
        case Kind::quantile:
            if (!(tau > 0.0 && tau < 1.0)) {
                throw InputError("quantile tau must lie strictly inside (0,1)");
            }
            break;
    }
}

std::string LossSpec::to_json_string() const {
    json j;
    switch (kind) {
        case Kind::mse: j["variant"] = "mse"; break;
        case Kind::asymmetric:
            j["variant"] = "asymmetric";
            j["alpha"] = alpha;
            break;
        case Kind::quantile:
            j["variant"] = "quantile";
            j["tau"] = tau;
            break;
    }
    return j.dump();
}

LossSpec LossSpec::from_json_string(const std::string& text) {
    json j = json::parse(text);
    const auto variant = j.at("variant").get<std::string>();
    LossSpec spec;
    if (variant == "mse") {
        spec = mse();
    } else if (variant == "asymmetric") {
        spec = asymmetric(j.at("alpha").get<double>());
    } else if (variant == "quantile") {
        spec = quantile(j.at("tau").get<double>());
    } else {
        throw InputError("unknown loss variant: " + variant);
    }
    spec.validate();
    return spec;
}

LossSpec LossSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    LossSpec spec;
    if (name == "mse") {
        spec = mse();
    } else if (name == "asymmetric") {
        spec = asymmetric(colon == std::string::npos ? 2.0 : std::stod(text.substr(colon + 1)));
    } else if (name == "quantile") {
        spec = quantile(colon == std::string::npos ? 0.9 : std::stod(text.substr(colon + 1)));
    } else {
        throw InputError("unknown loss: " + text);
    }
    spec.validate();
    return spec;
}

std::string LossSpec::describe() const {
    switch (kind) {
        case Kind::mse: return "mse";
        case Kind::asymmetric: return "asymmetric:" + format_double(alpha);
        case Kind::quantile: return "quantile:" + format_double(tau);
    }
    return "mse";
}

namespace {

void require_finite(double y, double f) {
    if (!std::isfinite(y) || !std::isfinite(f)) {
        throw InputError("loss inputs must be finite");
    }
}

} // namespace

double loss_value(const LossSpec& spec, double y, double f) {
    require_finite(y, f);
    const double u = y - f;
    switch (spec.kind) {
        case LossSpec::Kind::mse: return u * u;
        case LossSpec::Kind::asymmetric: {
            const double e = y > f ? spec.alpha * u : u;
            return e * e;
        }
        case LossSpec::Kind::quantile: return u * (spec.tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return 0.0;
}

GradHess gradient_hessian(const LossSpec& spec, double y, double f) {
    require_finite(y, f);
    switch (spec.kind) {
        case LossSpec::Kind::mse: return {2.0 * (f - y), 2.0};
        case LossSpec::Kind::asymmetric: {
            if (y > f) {
                const double a2 = spec.alpha * spec.alpha;
                return {2.0 * a2 * (f - y), 2.0 * a2};
            }
            return {2.0 * (f - y), 2.0};
        }
        case LossSpec::Kind::quantile: {
            if (y > f) return {-spec.tau, 0.0};
            if (y < f) return {1.0 - spec.tau, 0.0};
            return {0.0, 0.0};
        }
    }
    return {};
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau) {
    if (values.empty()) throw InputError("weighted_quantile on empty data");
    if (!weights.empty() && weights.size() != values.size()) {
        throw InputError("weighted_quantile size mismatch");
    }
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += weights.empty() ? 1.0 : weights[i];
    if (!(total > 0.0)) throw InputError("weighted_quantile needs positive total weight");
    const double threshold = tau * total;
    double cum = 0.0;
    for (auto i : idx) {
        cum += weights.empty() ? 1.0 : weights[i];
        if (cum >= threshold) return values[i];
    }
    return values[idx.back()];
}

namespace {

double weighted_mean(std::span<const double> targets, std::span<const double> weights) {
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        swy += w * targets[i];
    }
    if (!(sw > 0.0)) throw InputError("constant_minimizer needs positive total weight");
    return swy / sw;
}

// The asymmetric total loss is convex and piecewise quadratic with knots at
// the targets; scan the sorted knots for the interval whose unconstrained
// quadratic minimizer falls inside it.
double asymmetric_minimizer(double alpha, std::span<const double> targets,
                            std::span<const double> weights) {
    const double a2 = alpha * alpha;
    std::vector<std::size_t> idx(targets.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });

    // Side sums: "above" rows (y > f) carry coefficient w * alpha^2,
    // "below or equal" rows carry w.
    double above_w = 0.0, above_wy = 0.0;
    for (auto i : idx) {
        const double w = weights.empty() ? 1.0 : weights[i];
        above_w += w * a2;
        above_wy += w * a2 * targets[i];
    }
    if (!(above_w > 0.0)) throw InputError("constant_minimizer needs positive total weight");

    double below_w = 0.0, below_wy = 0.0;
    for (std::size_t j = 0; j <= idx.size(); ++j) {
        const double hi =
            j == idx.size() ? std::numeric_limits<double>::infinity() : targets[idx[j]];
        const double denom = above_w + below_w;
        if (denom > 0.0) {
            const double f = (above_wy + below_wy) / denom;
            if (f <= hi) return f;
        }
        if (j < idx.size()) {
            const double w = weights.empty() ? 1.0 : weights[idx[j]];
            const double y = targets[idx[j]];
            above_w -= w * a2;
            above_wy -= w * a2 * y;
            below_w += w;
            below_wy += w * y;
        }
    }
    return targets[idx.back()];
}

} // namespace

double constant_minimizer(const LossSpec& spec, std::span<const double> targets,
                          std::span<const double> weights) {
    spec.validate();
    if (targets.empty()) throw InputError("constant_minimizer on empty data");
    if (!weights.empty() && weights.size() != targets.size()) {
        throw InputError("constant_minimizer size mismatch");
    }
    switch (spec.kind) {
        case LossSpec::Kind::mse: return weighted_mean(targets, weights);
        case LossSpec::Kind::asymmetric:
            // alpha == 1 degenerates to mse; share its code path so the
            // two specs stay bit-identical downstream.
            if (spec.alpha == 1.0) return weighted_mean(targets, weights);
            return asymmetric_minimizer(spec.alpha, targets, weights);
        case LossSpec::Kind::quantile: {
            double total = 0.0;
            for (std::size_t i = 0; i < targets.size(); ++i) {
                total += weights.empty() ? 1.0 : weights[i];
            }
            if (!(total > 0.0)) throw InputError("constant_minimizer needs positive total weight");
            return weighted_quantile(targets, weights, spec.tau);
        }
    }
    return 0.0;
}

} // namespace promise::losses
