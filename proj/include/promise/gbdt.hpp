#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promise/domain.hpp"
#include "promise/losses.hpp"
#include "promise/rng.hpp"

namespace promise::gbdt {

/// Regularizer added to hessian sums in the split gain; keeps gains finite
/// under the zero-curvature pinball surrogate.
constexpr double kSplitLambda = 1e-3;

/// Cardinality up to which categorical splits enumerate every subset;
/// above it the sorted one-directional scan is used.
constexpr int kExactCategoricalLimit = 8;

struct GossConfig {
    double top_rate = 0.2;   // a: fraction kept by |gradient|
    double other_rate = 0.1; // b: fraction sampled from the remainder
};

struct BoosterParams {
    int boosting_iterations = 1000;
    double learning_rate = 0.05;
    int max_depth = -1; // -1 = unlimited
    int num_leaves = 15;
    double data_fraction = 0.6;
    double feature_fraction = 0.6;
    int min_data_in_leaf = 20;
    int max_bins = 255;
    std::optional<GossConfig> goss;
    losses::LossSpec loss = losses::LossSpec::mse();
    std::uint64_t seed = 0;

    void validate() const;
};

enum class FeatureKind { numeric, categorical };

struct FeatureSchema {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> levels; // categorical only
};

struct TreeNode {
    bool is_leaf = true;
    double value = 0.0; // leaf output (unscaled; learning rate applies at prediction)
    std::int64_t count = 0;
    int feature = -1;
    bool is_categorical = false;
    double threshold = 0.0;                     // numeric: value <= threshold goes left
    std::vector<std::int32_t> left_categories;  // categorical: sorted level ids going left
    bool default_left = false;                  // missing / unseen direction
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes; // root at index 0
};

/**
 * Immutable boosted ensemble. Prediction is
 * base_score + learning_rate * sum of tree outputs.
 */
struct BoostedModel {
    std::vector<FeatureSchema> schema;
    double base_score = 0.0;
    BoosterParams params;
    std::vector<Tree> trees;
    std::vector<double> training_loss; // weighted mean training loss per iteration

    void save(const std::string& path) const;
    static BoostedModel load(const std::string& path);
    std::string to_json_string() const;
    static BoostedModel from_json_string(const std::string& text);
};

// --- training internals, exposed for verification ---

/**
 * Pre-binned training view. Bin 0 is the missing bin; numeric bins
 * 1..n_bins are quantile-spaced with edges fixed at training start;
 * categorical bin = level id + 1.
 */
struct BinnedFeature {
    FeatureKind kind = FeatureKind::numeric;
    std::string name;
    std::vector<double> edges; // numeric: edges[k] = max value inside bin k+1
    int n_bins = 0;            // value bins, excluding the missing bin
    std::vector<std::uint16_t> bins;
};

struct BinnedDataset {
    std::size_t rows = 0;
    std::vector<BinnedFeature> features; // numeric columns first, then categorical
};

BinnedDataset bin_dataset(const Dataset& data, int max_bins);

struct BinStats {
    double grad = 0.0;
    double hess = 0.0;
    std::int64_t count = 0;
};

using FeatureHistogram = std::vector<BinStats>; // index 0 = missing bin

/// Per-feature bin statistics over the given rows; gradients/hessians are
/// expected to be pre-multiplied by effective row weights.
std::vector<FeatureHistogram> build_histograms(const BinnedDataset& data,
                                               std::span<const std::uint32_t> rows,
                                               std::span<const double> grad_w,
                                               std::span<const double> hess_w);

struct NodeTotals {
    double grad = 0.0;
    double hess = 0.0;
    std::int64_t count = 0;
};

struct SplitCandidate {
    int feature = -1;
    bool is_categorical = false;
    int threshold_bin = 0; // numeric: last left bin (1-based)
    double threshold = 0.0;
    std::vector<std::int32_t> left_categories;
    bool default_left = false;
    double gain = 0.0;
};

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double grad_total, double hess_total);

/// Highest-gain split over the candidate features, or nullopt when no
/// candidate improves on the unsplit node. Ties break toward the lowest
/// feature index, then the lowest threshold.
std::optional<SplitCandidate> best_split(const std::vector<FeatureHistogram>& histograms,
                                         const NodeTotals& totals, const BinnedDataset& data,
                                         const BoosterParams& params,
                                         std::span<const int> features);

struct GossSample {
    std::vector<std::uint32_t> rows;      // ascending
    std::vector<double> multipliers;      // aligned with rows
};

/// Gradient-based one-side sampling: keep the ceil(a*n) rows with the
/// largest |gradient|, sample ceil(b*n) of the rest uniformly and amplify
/// their weight by (1-a)/b.
GossSample goss_sample(std::span<const double> gradients, double top_rate, double other_rate,
                       Rng& rng);

BoostedModel train(const Dataset& data, const BoosterParams& params);

std::vector<double> predict(const BoostedModel& model, const Dataset& data);

/// Single-row prediction from named feature values (serving path).
double predict_row(const BoostedModel& model,
                   const std::unordered_map<std::string, double>& numerics,
                   const std::unordered_map<std::string, std::string>& categoricals);

} // namespace promise::gbdt
