#include "promise/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace promise::gbdt {

using json = nlohmann::ordered_json;

void BoosterParams::validate() const {
    if (boosting_iterations < 0) throw InputError("boosting_iterations must be >= 0");
    if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
    if (num_leaves < 2) throw InputError("num_leaves must be >= 2");
    if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
        throw InputError("data_fraction must lie in (0, 1]");
    }
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
        throw InputError("feature_fraction must lie in (0, 1]");
    }
    if (min_data_in_leaf < 1) throw InputError("min_data_in_leaf must be >= 1");
    if (max_bins < 1 || max_bins > 65534) throw InputError("max_bins out of range");
    if (goss) {
        if (!(goss->top_rate > 0.0) || !(goss->other_rate > 0.0) ||
            goss->top_rate + goss->other_rate > 1.0 + 1e-12) {
            throw InputError("goss rates must be positive with a + b <= 1");
        }
    }
    loss.validate();
}

BinnedDataset bin_dataset(const Dataset& data, int max_bins) {
    data.validate();
    BinnedDataset out;
    out.rows = data.rows;
    for (std::size_t c = 0; c < data.numeric.size(); ++c) {
        BinnedFeature f;
        f.kind = FeatureKind::numeric;
        f.name = data.numeric_names[c];
        const auto& col = data.numeric[c];

        std::vector<double> sorted;
        sorted.reserve(col.size());
        for (double v : col) {
            if (!std::isnan(v)) sorted.push_back(v);
        }
        std::sort(sorted.begin(), sorted.end());

        std::vector<double> distinct = sorted;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

        if (static_cast<int>(distinct.size()) <= max_bins) {
            f.edges = distinct;
        } else {
            // Quantile-spaced edges snapped to observed values.
            const double n = static_cast<double>(sorted.size());
            double prev_edge = -std::numeric_limits<double>::infinity();
            for (int b = 1; b <= max_bins; ++b) {
                auto pos = static_cast<std::size_t>(
                               std::ceil(n * static_cast<double>(b) / max_bins)) -
                           1;
                pos = std::min(pos, sorted.size() - 1);
                const double edge = sorted[pos];
                if (edge > prev_edge) {
                    f.edges.push_back(edge);
                    prev_edge = edge;
                }
            }
        }
        if (f.edges.empty()) f.edges.push_back(0.0); // all-missing column
        f.n_bins = static_cast<int>(f.edges.size());

        f.bins.resize(data.rows, 0);
        for (std::size_t i = 0; i < data.rows; ++i) {
            const double v = col[i];
            if (std::isnan(v)) continue;
            const auto it = std::lower_bound(f.edges.begin(), f.edges.end(), v);
            const auto idx = it == f.edges.end() ? f.edges.size() - 1
                                                 : static_cast<std::size_t>(it - f.edges.begin());
            f.bins[i] = static_cast<std::uint16_t>(idx + 1);
        }
        out.features.push_back(std::move(f));
    }
    for (std::size_t c = 0; c < data.categorical.size(); ++c) {
        BinnedFeature f;
        f.kind = FeatureKind::categorical;
        f.name = data.categorical_names[c];
        f.n_bins = std::max<int>(1, static_cast<int>(data.dicts[c].size()));
        if (f.n_bins > 65533) throw InputError("categorical cardinality too large");
        f.bins.resize(data.rows, 0);
        for (std::size_t i = 0; i < data.rows; ++i) {
            const auto id = data.categorical[c][i];
            f.bins[i] =
                id == CategoricalDict::kMissing ? 0 : static_cast<std::uint16_t>(id + 1);
        }
        out.features.push_back(std::move(f));
    }
    return out;
}

std::vector<FeatureHistogram> build_histograms(const BinnedDataset& data,
                                               std::span<const std::uint32_t> rows,
                                               std::span<const double> grad_w,
                                               std::span<const double> hess_w) {
    std::vector<FeatureHistogram> hists(data.features.size());
    for (std::size_t fi = 0; fi < data.features.size(); ++fi) {
        const auto& f = data.features[fi];
        auto& h = hists[fi];
        h.assign(static_cast<std::size_t>(f.n_bins) + 1, BinStats{});
        for (const auto r : rows) {
            auto& s = h[f.bins[r]];
            s.grad += grad_w[r];
            s.hess += hess_w[r];
            s.count += 1;
        }
    }
    return hists;
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double grad_total, double hess_total) {
    return grad_left * grad_left / (hess_left + kSplitLambda) +
           grad_right * grad_right / (hess_right + kSplitLambda) -
           grad_total * grad_total / (hess_total + kSplitLambda);
}

namespace {

struct SideStats {
    double grad = 0.0;
    double hess = 0.0;
    std::int64_t count = 0;
    void add(const BinStats& b) {
        grad += b.grad;
        hess += b.hess;
        count += b.count;
    }
};

void consider(std::optional<SplitCandidate>& best, SplitCandidate cand) {
    if (!best || cand.gain > best->gain) best = std::move(cand);
}

void scan_numeric(std::optional<SplitCandidate>& best, const FeatureHistogram& hist,
                  const BinnedFeature& feature, int feature_index, const NodeTotals& totals,
                  int min_data) {
    const BinStats& missing = hist[0];
    SideStats left;
    for (int t = 1; t < feature.n_bins; ++t) {
        left.add(hist[static_cast<std::size_t>(t)]);
        for (const bool missing_left : {false, true}) {
            double gl = left.grad, hl = left.hess;
            std::int64_t cl = left.count;
            if (missing_left) {
                gl += missing.grad;
                hl += missing.hess;
                cl += missing.count;
            }
            const std::int64_t cr = totals.count - cl;
            if (cl < min_data || cr < min_data) continue;
            const double gain =
                split_gain(gl, hl, totals.grad - gl, totals.hess - hl, totals.grad, totals.hess);
            SplitCandidate cand;
            cand.feature = feature_index;
            cand.is_categorical = false;
            cand.threshold_bin = t;
            cand.threshold = feature.edges[static_cast<std::size_t>(t - 1)];
            cand.default_left = missing_left;
            cand.gain = gain;
            consider(best, std::move(cand));
        }
    }
}

void scan_categorical(std::optional<SplitCandidate>& best, const FeatureHistogram& hist,
                      int feature_index, const NodeTotals& totals, int min_data) {
    const BinStats& missing = hist[0];
    std::vector<std::int32_t> present;
    for (std::size_t b = 1; b < hist.size(); ++b) {
        if (hist[b].count > 0) present.push_back(static_cast<std::int32_t>(b - 1));
    }
    if (present.size() < 2) return;

    auto evaluate = [&](const std::vector<std::int32_t>& left_levels) {
        SideStats left;
        for (const auto lvl : left_levels) {
            left.add(hist[static_cast<std::size_t>(lvl) + 1]);
        }
        for (const bool missing_left : {false, true}) {
            double gl = left.grad, hl = left.hess;
            std::int64_t cl = left.count;
            if (missing_left) {
                gl += missing.grad;
                hl += missing.hess;
                cl += missing.count;
            }
            const std::int64_t cr = totals.count - cl;
            if (cl < min_data || cr < min_data) continue;
            const double gain =
                split_gain(gl, hl, totals.grad - gl, totals.hess - hl, totals.grad, totals.hess);
            SplitCandidate cand;
            cand.feature = feature_index;
            cand.is_categorical = true;
            cand.left_categories = left_levels;
            std::sort(cand.left_categories.begin(), cand.left_categories.end());
            cand.default_left = missing_left;
            cand.gain = gain;
            consider(best, std::move(cand));
        }
    };

    const int m = static_cast<int>(present.size());
    if (m <= kExactCategoricalLimit) {
        // Exhaustive subsets; exact for every objective at this size.
        for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
            std::vector<std::int32_t> left_levels;
            for (int k = 0; k < m; ++k) {
                if (mask & (1u << k)) left_levels.push_back(present[static_cast<std::size_t>(k)]);
            }
            evaluate(left_levels);
        }
        return;
    }

    // One-directional scan over levels sorted by gradient/hessian ratio.
    std::vector<std::int32_t> order = present;
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        const auto& sa = hist[static_cast<std::size_t>(a) + 1];
        const auto& sb = hist[static_cast<std::size_t>(b) + 1];
        const double ra = sa.grad / (sa.hess + kSplitLambda);
        const double rb = sb.grad / (sb.hess + kSplitLambda);
        if (ra != rb) return ra < rb;
        return a < b;
    });
    std::vector<std::int32_t> left_levels;
    for (int k = 0; k + 1 < m; ++k) {
        left_levels.push_back(order[static_cast<std::size_t>(k)]);
        evaluate(left_levels);
    }
}

} // namespace

std::optional<SplitCandidate> best_split(const std::vector<FeatureHistogram>& histograms,
                                         const NodeTotals& totals, const BinnedDataset& data,
                                         const BoosterParams& params,
                                         std::span<const int> features) {
    std::optional<SplitCandidate> best;
    for (const int fi : features) {
        const auto& feature = data.features[static_cast<std::size_t>(fi)];
        const auto& hist = histograms[static_cast<std::size_t>(fi)];
        if (feature.kind == FeatureKind::numeric) {
            scan_numeric(best, hist, feature, fi, totals, params.min_data_in_leaf);
        } else {
            scan_categorical(best, hist, fi, totals, params.min_data_in_leaf);
        }
    }
    if (best && !(best->gain > 0.0)) return std::nullopt;
    return best;
}

GossSample goss_sample(std::span<const double> gradients, double top_rate, double other_rate,
                       Rng& rng) {
    if (!(top_rate > 0.0) || !(other_rate > 0.0)) {
        throw InputError("goss rates must be positive");
    }
    const std::size_t n = gradients.size();
    const auto top_n = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(top_rate * static_cast<double>(n))));

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return std::fabs(gradients[a]) > std::fabs(gradients[b]);
    });

    GossSample out;
    out.rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_n));
    out.multipliers.assign(top_n, 1.0);

    std::vector<std::uint32_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top_n),
                                    order.end());
    const auto sample_n = std::min<std::size_t>(
        rest.size(), static_cast<std::size_t>(std::ceil(other_rate * static_cast<double>(n))));
    const double amplify = (1.0 - top_rate) / other_rate;
    for (std::size_t k = 0; k < sample_n; ++k) {
        const std::size_t j = k + rng.next_below(rest.size() - k);
        std::swap(rest[k], rest[j]);
        out.rows.push_back(rest[k]);
        out.multipliers.push_back(amplify);
    }

    std::vector<std::size_t> idx(out.rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return out.rows[a] < out.rows[b]; });
    GossSample sorted;
    sorted.rows.reserve(idx.size());
    sorted.multipliers.reserve(idx.size());
    for (const auto i : idx) {
        sorted.rows.push_back(out.rows[i]);
        sorted.multipliers.push_back(out.multipliers[i]);
    }
    return sorted;
}

namespace {

struct LeafBuild {
    int node_index = 0;
    int depth = 0;
    std::vector<std::uint32_t> rows;
    NodeTotals totals;
    std::optional<SplitCandidate> split;
};

struct TrainView {
    const BinnedDataset* binned = nullptr;
    const BoosterParams* params = nullptr;
    std::span<const double> grad_w;
    std::span<const double> hess_w;
};

void evaluate_leaf(LeafBuild& leaf, const TrainView& view, std::span<const int> features) {
    leaf.split.reset();
    if (leaf.totals.count < 2 * view.params->min_data_in_leaf) return;
    if (view.params->max_depth >= 0 && leaf.depth >= view.params->max_depth) return;
    const auto hists = build_histograms(*view.binned, leaf.rows, view.grad_w, view.hess_w);
    leaf.split = best_split(hists, leaf.totals, *view.binned, *view.params, features);
}

NodeTotals totals_of(std::span<const std::uint32_t> rows, std::span<const double> grad_w,
                     std::span<const double> hess_w) {
    NodeTotals t;
    for (const auto r : rows) {
        t.grad += grad_w[r];
        t.hess += hess_w[r];
        t.count += 1;
    }
    return t;
}

bool split_routes_left(const SplitCandidate& split, std::uint16_t bin) {
    if (bin == 0) return split.default_left;
    if (split.is_categorical) {
        return std::binary_search(split.left_categories.begin(), split.left_categories.end(),
                                  static_cast<std::int32_t>(bin - 1));
    }
    return bin <= static_cast<std::uint16_t>(split.threshold_bin);
}

bool node_routes_left_binned(const TreeNode& nd, const BinnedFeature& feature,
                             std::uint16_t bin) {
    if (bin == 0) return nd.default_left;
    if (nd.is_categorical) {
        return std::binary_search(nd.left_categories.begin(), nd.left_categories.end(),
                                  static_cast<std::int32_t>(bin - 1));
    }
    return feature.edges[static_cast<std::size_t>(bin - 1)] <= nd.threshold;
}

} // namespace

BoostedModel train(const Dataset& data, const BoosterParams& params) {
    params.validate();
    data.validate();
    if (data.rows == 0) throw InputError("train: empty dataset");
    if (data.target.size() != data.rows) throw InputError("train: dataset has no target");
    for (const double y : data.target) {
        if (!std::isfinite(y)) throw InputError("train: non-finite target");
    }

    const std::size_t n = data.rows;
    std::vector<double> weights(n, 1.0);
    if (!data.weight.empty()) weights = data.weight;

    BoostedModel model;
    model.params = params;
    for (std::size_t c = 0; c < data.numeric_names.size(); ++c) {
        model.schema.push_back({data.numeric_names[c], FeatureKind::numeric, {}});
    }
    for (std::size_t c = 0; c < data.categorical_names.size(); ++c) {
        model.schema.push_back(
            {data.categorical_names[c], FeatureKind::categorical, data.dicts[c].levels()});
    }
    model.base_score = losses::constant_minimizer(params.loss, data.target, weights);

    const BinnedDataset binned = bin_dataset(data, params.max_bins);
    const int n_features = static_cast<int>(binned.features.size());

    std::vector<double> predictions(n, model.base_score);
    std::vector<double> grad(n), hess(n), grad_w(n), hess_w(n), eff_weight(n);
    const Rng root_rng(params.seed);

    const double total_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total_weight > 0.0)) throw InputError("train: total weight must be positive");
    auto record_loss = [&]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weights[i] * losses::loss_value(params.loss, data.target[i], predictions[i]);
        }
        model.training_loss.push_back(acc / total_weight);
    };

    for (int iter = 0; iter < params.boosting_iterations; ++iter) {
        Rng iter_rng = root_rng.derive(static_cast<std::uint64_t>(iter) + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = losses::gradient_hessian(params.loss, data.target[i], predictions[i]);
            grad[i] = gh.grad;
            hess[i] = losses::surrogate_hessian(params.loss, gh.hess);
        }

        // Row sampling; GOSS replaces plain bagging when enabled.
        std::vector<std::uint32_t> rows;
        std::fill(eff_weight.begin(), eff_weight.end(), 0.0);
        if (params.goss) {
            Rng goss_rng = iter_rng.derive(1);
            const auto sample =
                goss_sample(grad, params.goss->top_rate, params.goss->other_rate, goss_rng);
            rows = sample.rows;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                eff_weight[rows[k]] = weights[rows[k]] * sample.multipliers[k];
            }
        } else if (params.data_fraction < 1.0) {
            Rng bag_rng = iter_rng.derive(1);
            const auto keep = static_cast<std::size_t>(
                std::ceil(params.data_fraction * static_cast<double>(n)));
            std::vector<std::uint32_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0u);
            for (std::size_t k = 0; k < keep; ++k) {
                const std::size_t j = k + bag_rng.next_below(pool.size() - k);
                std::swap(pool[k], pool[j]);
            }
            rows.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
            std::sort(rows.begin(), rows.end());
            for (const auto r : rows) eff_weight[r] = weights[r];
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0u);
            for (const auto r : rows) eff_weight[r] = weights[r];
        }

        for (const auto r : rows) {
            grad_w[r] = grad[r] * eff_weight[r];
            hess_w[r] = hess[r] * eff_weight[r];
        }

        // Feature sampling, restored to ascending order for determinism.
        std::vector<int> features(static_cast<std::size_t>(n_features));
        std::iota(features.begin(), features.end(), 0);
        if (params.feature_fraction < 1.0) {
            Rng feat_rng = iter_rng.derive(2);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::ceil(params.feature_fraction * static_cast<double>(n_features))));
            for (std::size_t k = 0; k < keep; ++k) {
                const std::size_t j = k + feat_rng.next_below(features.size() - k);
                std::swap(features[k], features[j]);
            }
            features.resize(keep);
            std::sort(features.begin(), features.end());
        }

        const TrainView view{&binned, &params, grad_w, hess_w};

        Tree tree;
        tree.nodes.emplace_back();
        std::vector<LeafBuild> leaves;
        {
            LeafBuild root;
            root.node_index = 0;
            root.depth = 0;
            root.rows = rows;
            root.totals = totals_of(root.rows, grad_w, hess_w);
            evaluate_leaf(root, view, features);
            leaves.push_back(std::move(root));
        }

        int leaf_count = 1;
        while (leaf_count < params.num_leaves) {
            int best_leaf = -1;
            for (std::size_t li = 0; li < leaves.size(); ++li) {
                if (!leaves[li].split) continue;
                if (best_leaf < 0 ||
                    leaves[li].split->gain >
                        leaves[static_cast<std::size_t>(best_leaf)].split->gain) {
                    best_leaf = static_cast<int>(li);
                }
            }
            if (best_leaf < 0) break;

            const SplitCandidate split = *leaves[static_cast<std::size_t>(best_leaf)].split;
            LeafBuild leaf = std::move(leaves[static_cast<std::size_t>(best_leaf)]);
            leaves.erase(leaves.begin() + best_leaf);

            {
                TreeNode& node = tree.nodes[static_cast<std::size_t>(leaf.node_index)];
                node.is_leaf = false;
                node.feature = split.feature;
                node.is_categorical = split.is_categorical;
                node.threshold = split.threshold;
                node.left_categories = split.left_categories;
                node.default_left = split.default_left;
                node.count = leaf.totals.count;
            }

            const auto& fbins = binned.features[static_cast<std::size_t>(split.feature)].bins;
            LeafBuild lchild, rchild;
            lchild.depth = rchild.depth = leaf.depth + 1;
            for (const auto r : leaf.rows) {
                (split_routes_left(split, fbins[r]) ? lchild.rows : rchild.rows).push_back(r);
            }

            lchild.node_index = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            rchild.node_index = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes[static_cast<std::size_t>(leaf.node_index)].left = lchild.node_index;
            tree.nodes[static_cast<std::size_t>(leaf.node_index)].right = rchild.node_index;

            lchild.totals = totals_of(lchild.rows, grad_w, hess_w);
            rchild.totals = totals_of(rchild.rows, grad_w, hess_w);
            evaluate_leaf(lchild, view, features);
            evaluate_leaf(rchild, view, features);
            leaves.push_back(std::move(lchild));
            leaves.push_back(std::move(rchild));
            ++leaf_count;
        }

        // Leaf values: Newton step, or the leaf-local weighted tau-quantile of
        // residuals for the pinball objective.
        for (const auto& leaf : leaves) {
            auto& node = tree.nodes[static_cast<std::size_t>(leaf.node_index)];
            node.is_leaf = true;
            node.count = leaf.totals.count;
            if (losses::needs_leaf_renewal(params.loss) && !leaf.rows.empty()) {
                std::vector<double> residuals, w;
                residuals.reserve(leaf.rows.size());
                w.reserve(leaf.rows.size());
                for (const auto r : leaf.rows) {
                    residuals.push_back(data.target[r] - predictions[r]);
                    w.push_back(eff_weight[r]);
                }
                const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
                node.value = wsum > 0.0
                                 ? losses::weighted_quantile(residuals, w, params.loss.tau)
                                 : 0.0;
            } else {
                node.value = leaf.totals.hess > 0.0 ? -leaf.totals.grad / leaf.totals.hess : 0.0;
            }
        }

        // Refresh cached predictions for every row, sampled or not.
        for (std::size_t i = 0; i < n; ++i) {
            int idx = 0;
            while (!tree.nodes[static_cast<std::size_t>(idx)].is_leaf) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(idx)];
                const auto& feature = binned.features[static_cast<std::size_t>(nd.feature)];
                idx = node_routes_left_binned(nd, feature, feature.bins[i]) ? nd.left : nd.right;
            }
            predictions[i] +=
                params.learning_rate * tree.nodes[static_cast<std::size_t>(idx)].value;
        }

        model.trees.push_back(std::move(tree));
        record_loss();
    }
    return model;
}

namespace {

double tree_output(const Tree& tree, const std::vector<double>& values,
                   const std::vector<bool>& missing) {
    int idx = 0;
    while (!tree.nodes[static_cast<std::size_t>(idx)].is_leaf) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(idx)];
        const auto f = static_cast<std::size_t>(nd.feature);
        bool go_left;
        if (missing[f]) {
            go_left = nd.default_left;
        } else if (nd.is_categorical) {
            go_left = std::binary_search(nd.left_categories.begin(), nd.left_categories.end(),
                                         static_cast<std::int32_t>(values[f]));
        } else {
            go_left = values[f] <= nd.threshold;
        }
        idx = go_left ? nd.left : nd.right;
    }
    return tree.nodes[static_cast<std::size_t>(idx)].value;
}

} // namespace

std::vector<double> predict(const BoostedModel& model, const Dataset& data) {
    data.validate();
    const std::size_t n_features = model.schema.size();

    struct Accessor {
        const std::vector<double>* numeric = nullptr;
        const std::vector<std::int32_t>* categorical = nullptr;
        std::vector<std::int32_t> translate; // dataset level id -> model level id
    };
    std::vector<Accessor> accessors(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        const auto& schema = model.schema[f];
        if (schema.kind == FeatureKind::numeric) {
            const int c = data.numeric_index(schema.name);
            if (c < 0) throw InputError("predict: missing numeric column " + schema.name);
            accessors[f].numeric = &data.numeric[static_cast<std::size_t>(c)];
        } else {
            const int c = data.categorical_index(schema.name);
            if (c < 0) throw InputError("predict: missing categorical column " + schema.name);
            accessors[f].categorical = &data.categorical[static_cast<std::size_t>(c)];
            const auto model_dict = CategoricalDict::from_levels(schema.levels);
            const auto& ds_dict = data.dicts[static_cast<std::size_t>(c)];
            accessors[f].translate.resize(ds_dict.size());
            for (std::size_t id = 0; id < ds_dict.size(); ++id) {
                accessors[f].translate[id] =
                    model_dict.encode(ds_dict.decode(static_cast<std::int32_t>(id)));
            }
        }
    }

    std::vector<double> out(data.rows, model.base_score);
    std::vector<double> values(n_features, 0.0);
    std::vector<bool> missing(n_features, false);
    for (std::size_t i = 0; i < data.rows; ++i) {
        for (std::size_t f = 0; f < n_features; ++f) {
            if (accessors[f].numeric) {
                const double v = (*accessors[f].numeric)[i];
                missing[f] = std::isnan(v);
                values[f] = missing[f] ? 0.0 : v;
            } else {
                auto id = (*accessors[f].categorical)[i];
                if (id != CategoricalDict::kMissing) {
                    id = accessors[f].translate[static_cast<std::size_t>(id)];
                }
                missing[f] = id == CategoricalDict::kMissing;
                values[f] = missing[f] ? 0.0 : static_cast<double>(id);
            }
        }
        double acc = 0.0;
        for (const auto& tree : model.trees) acc += tree_output(tree, values, missing);
        out[i] += model.params.learning_rate * acc;
    }
    return out;
}

double predict_row(const BoostedModel& model,
                   const std::unordered_map<std::string, double>& numerics,
                   const std::unordered_map<std::string, std::string>& categoricals) {
    const std::size_t n_features = model.schema.size();
    std::vector<double> values(n_features, 0.0);
    std::vector<bool> missing(n_features, true);
    for (std::size_t f = 0; f < n_features; ++f) {
        const auto& schema = model.schema[f];
        if (schema.kind == FeatureKind::numeric) {
            auto it = numerics.find(schema.name);
            if (it != numerics.end() && !std::isnan(it->second)) {
                values[f] = it->second;
                missing[f] = false;
            }
        } else {
            auto it = categoricals.find(schema.name);
            if (it != categoricals.end()) {
                const auto dict = CategoricalDict::from_levels(schema.levels);
                const auto id = dict.encode(it->second);
                if (id != CategoricalDict::kMissing) {
                    values[f] = static_cast<double>(id);
                    missing[f] = false;
                }
            }
        }
    }
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += tree_output(tree, values, missing);
    return model.base_score + model.params.learning_rate * acc;
}

// --- serialization ---

namespace {

constexpr int kFormatMajor = 1;
constexpr int kFormatMinor = 0;

json params_to_json(const BoosterParams& p) {
    json j;
    j["boosting_iterations"] = p.boosting_iterations;
    j["learning_rate"] = p.learning_rate;
    j["max_depth"] = p.max_depth;
    j["num_leaves"] = p.num_leaves;
    j["data_fraction"] = p.data_fraction;
    j["feature_fraction"] = p.feature_fraction;
    j["min_data_in_leaf"] = p.min_data_in_leaf;
    j["max_bins"] = p.max_bins;
    if (p.goss) j["goss"] = {{"top_rate", p.goss->top_rate}, {"other_rate", p.goss->other_rate}};
    j["loss"] = json::parse(p.loss.to_json_string());
    j["seed"] = p.seed;
    return j;
}

BoosterParams params_from_json(const json& j) {
    BoosterParams p;
    p.boosting_iterations = j.at("boosting_iterations").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.max_depth = j.at("max_depth").get<int>();
    p.num_leaves = j.at("num_leaves").get<int>();
    p.data_fraction = j.at("data_fraction").get<double>();
    p.feature_fraction = j.at("feature_fraction").get<double>();
    p.min_data_in_leaf = j.at("min_data_in_leaf").get<int>();
    p.max_bins = j.at("max_bins").get<int>();
    if (j.contains("goss")) {
        p.goss = GossConfig{j["goss"].at("top_rate").get<double>(),
                            j["goss"].at("other_rate").get<double>()};
    }
    p.loss = losses::LossSpec::from_json_string(j.at("loss").dump());
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json node_to_json(const Tree& tree, int idx) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(idx)];
    json j;
    if (nd.is_leaf) {
        j["leaf"] = nd.value;
        j["n"] = nd.count;
        return j;
    }
    j["feature"] = nd.feature;
    if (nd.is_categorical) {
        j["in_left"] = nd.left_categories;
    } else {
        j["threshold"] = nd.threshold;
    }
    j["default_left"] = nd.default_left;
    j["n"] = nd.count;
    j["left"] = node_to_json(tree, nd.left);
    j["right"] = node_to_json(tree, nd.right);
    return j;
}

int node_from_json(const json& j, Tree& tree) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes.back().is_leaf = true;
        tree.nodes.back().value = j["leaf"].get<double>();
        tree.nodes.back().count = j.value("n", std::int64_t{0});
        return idx;
    }
    TreeNode node;
    node.is_leaf = false;
    node.feature = j.at("feature").get<int>();
    if (j.contains("in_left")) {
        node.is_categorical = true;
        node.left_categories = j["in_left"].get<std::vector<std::int32_t>>();
    } else {
        node.threshold = j.at("threshold").get<double>();
    }
    node.default_left = j.at("default_left").get<bool>();
    node.count = j.value("n", std::int64_t{0});
    tree.nodes[static_cast<std::size_t>(idx)] = std::move(node);
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    tree.nodes[static_cast<std::size_t>(idx)].left = left;
    tree.nodes[static_cast<std::size_t>(idx)].right = right;
    return idx;
}

} // namespace

std::string BoostedModel::to_json_string() const {
    json j;
    j["format"] = "promise-gbdt";
    j["version"] = {{"major", kFormatMajor}, {"minor", kFormatMinor}};
    j["params"] = params_to_json(params);
    j["base_score"] = base_score;
    j["schema"] = json::array();
    for (const auto& f : schema) {
        json fs;
        fs["name"] = f.name;
        fs["kind"] = f.kind == FeatureKind::numeric ? "numeric" : "categorical";
        if (f.kind == FeatureKind::categorical) fs["levels"] = f.levels;
        j["schema"].push_back(fs);
    }
    j["trees"] = json::array();
    for (const auto& tree : trees) j["trees"].push_back(node_to_json(tree, 0));
    j["training_loss"] = training_loss;
    return j.dump(2) + "\n";
}

BoostedModel BoostedModel::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "promise-gbdt") {
        throw InputError("not a gbdt model file");
    }
    const int major = j.at("version").at("major").get<int>();
    if (major > kFormatMajor) {
        throw InputError("gbdt model format version " + std::to_string(major) +
                         " is newer than supported " + std::to_string(kFormatMajor));
    }
    BoostedModel m;
    m.params = params_from_json(j.at("params"));
    m.base_score = j.at("base_score").get<double>();
    for (const auto& fs : j.at("schema")) {
        FeatureSchema f;
        f.name = fs.at("name").get<std::string>();
        f.kind = fs.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric
                                                               : FeatureKind::categorical;
        if (f.kind == FeatureKind::categorical) {
            f.levels = fs.at("levels").get<std::vector<std::string>>();
        }
        m.schema.push_back(std::move(f));
    }
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        node_from_json(tj, tree);
        m.trees.push_back(std::move(tree));
    }
    if (j.contains("training_loss")) {
        m.training_loss = j["training_loss"].get<std::vector<double>>();
    }
    return m;
}

void BoostedModel::save(const std::string& path) const {
    atomic_write_file(path, to_json_string());
}

BoostedModel BoostedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

} // namespace promise::gbdt
