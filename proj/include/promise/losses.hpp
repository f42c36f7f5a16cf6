#pragma once

#include <span>
#include <string>

#include "promise/domain.hpp"

namespace promise::losses {

/**
 * Differentiable training objective for the booster.
 *
 * mse        : (y - f)^2
 * asymmetric : e^2 with e = alpha * (y - f) when y > f, else (y - f);
 *              alpha > 1 penalizes under-prediction more.
 * quantile   : pinball rho_tau(u) = u * (tau - 1{u < 0}) with u = y - f;
 *              minimized by the tau-quantile.
 */
struct LossSpec {
    enum class Kind { mse, asymmetric, quantile };

    Kind kind = Kind::mse;
    double alpha = 2.0; // asymmetric only, > 1
    double tau = 0.9;   // quantile only, in (0, 1)

    static LossSpec mse() { return {Kind::mse, 0.0, 0.0}; }
    static LossSpec asymmetric(double alpha) { return {Kind::asymmetric, alpha, 0.0}; }
    static LossSpec quantile(double tau) { return {Kind::quantile, 0.0, tau}; }

    void validate() const;
    std::string to_json_string() const;
    static LossSpec from_json_string(const std::string& text);
    /// "mse", "asymmetric:2", "quantile:0.95"
    static LossSpec parse(const std::string& text);
    std::string describe() const;
};

struct GradHess {
    double grad = 0.0;
    double hess = 0.0;
};

double loss_value(const LossSpec& spec, double y, double f);

/// First and second derivative of the loss w.r.t. the prediction f.
/// The pinball hessian is its true value, zero; the booster substitutes
/// a constant surrogate (see surrogate_hessian).
GradHess gradient_hessian(const LossSpec& spec, double y, double f);

/// Hessian value the booster accumulates for zero-curvature objectives.
inline double surrogate_hessian(const LossSpec& spec, double true_hess) {
    return spec.kind == LossSpec::Kind::quantile ? 1.0 : true_hess;
}

/// Whether leaf values must be renewed to the leaf-local weighted
/// tau-quantile of residuals after the tree structure is grown.
inline bool needs_leaf_renewal(const LossSpec& spec) {
    return spec.kind == LossSpec::Kind::quantile;
}

/**
 * argmin over constant predictions of the weighted total loss:
 * weighted mean for mse, weighted tau-quantile for quantile, and the
 * exact piecewise-quadratic minimizer for the asymmetric loss.
 */
double constant_minimizer(const LossSpec& spec, std::span<const double> targets,
                          std::span<const double> weights);

/**
 * Weighted quantile, left-continuous step rule: the smallest value whose
 * cumulative weight reaches tau * total_weight.
 */
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau);

} // namespace promise::losses
