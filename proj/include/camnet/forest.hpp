#pragma once

// Random-forest multi-class person classifiers and the multi-shot matching
// operations built on them: posterior averaging over a probe's appearances,
// best-match selection and appearance-set similarity. A ForestSeries holds
// one forest per time slot so galleries can be restricted to a window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/stats.hpp"

namespace camnet {

using LabelId = std::int64_t;

// One gallery person: a track plus the label the classifier should learn.
// In blind pipeline runs the label is the track's stream index, never the
// ground-truth identity.
struct GalleryEntry {
    const PersonTrack* track = nullptr;
    LabelId label = 0;
};

struct TreeNode {
    // internal node when feature >= 0, leaf otherwise
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    // leaf payload: sparse per-label probabilities, sorted by label
    std::vector<std::pair<LabelId, double>> dist;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(const FeatureVector& v) const {
        int idx = 0;
        while (nodes[idx].feature >= 0) {
            idx = v[static_cast<std::size_t>(nodes[idx].feature)] <= nodes[idx].threshold
                      ? nodes[idx].left
                      : nodes[idx].right;
        }
        return nodes[idx];
    }
};

struct Forest {
    std::vector<DecisionTree> trees;
    std::vector<LabelId> label_set;  // sorted, distinct
    std::size_t dim = 0;
    double window_start = 0.0;
    double window_end = 0.0;
};

using Posterior = std::map<LabelId, double>;

namespace detail {

struct TreeBuilder {
    const std::vector<const FeatureVector*>& features;
    const std::vector<int>& sample_class;  // per sample, compact class index
    int n_classes;
    const ForestHyper& hyper;
    int features_per_split;
    std::mt19937_64& rng;
    const std::vector<LabelId>& class_labels;
    DecisionTree tree;

    // scratch buffers reused across nodes
    std::vector<std::pair<double, int>> sorted;  // (value, class)
    std::vector<int> left_counts;
    std::vector<int> total_counts;
    std::vector<int> feature_pool;

    int build(std::vector<int>& indices, int begin, int end, int depth) {
        const int n = end - begin;
        total_counts.assign(n_classes, 0);
        for (int i = begin; i < end; ++i) ++total_counts[sample_class[indices[i]]];
        int distinct = 0;
        for (int c : total_counts)
            if (c > 0) ++distinct;

        const bool pure = distinct <= 1;
        if (pure || depth >= hyper.max_depth || n < 2 * hyper.min_samples_leaf)
            return make_leaf(n);

        // candidate features, without replacement
        int best_feature = -1;
        double best_threshold = 0.0, best_score = std::numeric_limits<double>::infinity();
        const int d = static_cast<int>(features[0]->dim());
        if (static_cast<int>(feature_pool.size()) != d) {
            feature_pool.resize(d);
            for (int i = 0; i < d; ++i) feature_pool[i] = i;
        }
        // inspect features_per_split random features, continuing past that
        // count until at least one feature admits a valid split
        const int tries = std::min(features_per_split, d);
        for (int k = 0; k < d; ++k) {
            if (k >= tries && best_feature >= 0) break;
            std::uniform_int_distribution<int> pick(k, d - 1);
            std::swap(feature_pool[k], feature_pool[pick(rng)]);
            const int f = feature_pool[k];

            sorted.clear();
            for (int i = begin; i < end; ++i)
                sorted.emplace_back((*features[indices[i]])[f], sample_class[indices[i]]);
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;

            // scan split positions, maintaining left class counts
            left_counts.assign(n_classes, 0);
            int left_n = 0;
            double left_sq = 0.0;  // sum of squared left counts
            double right_sq = 0.0;
            for (int c : total_counts) right_sq += static_cast<double>(c) * c;

            for (int i = 0; i + 1 < n; ++i) {
                const int cls = sorted[i].second;
                // incremental update of sum of squares
                left_sq += 2.0 * left_counts[cls] + 1.0;
                right_sq -= 2.0 * (total_counts[cls] - left_counts[cls]) - 1.0;
                ++left_counts[cls];
                ++left_n;
                if (sorted[i].first == sorted[i + 1].first) continue;
                const int right_n = n - left_n;
                if (left_n < hyper.min_samples_leaf || right_n < hyper.min_samples_leaf) continue;
                // weighted Gini impurity = n - sum(cnt^2)/n_side
                const double score =
                    static_cast<double>(n) - left_sq / left_n - right_sq / right_n;
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                }
            }
        }

        if (best_feature < 0) return make_leaf(n);

        const int mid = static_cast<int>(
            std::partition(indices.begin() + begin, indices.begin() + end,
                           [&](int s) {
                               return (*features[s])[best_feature] <= best_threshold;
                           }) -
            indices.begin());
        if (mid == begin || mid == end) return make_leaf(n);

        const int node_idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_idx].feature = best_feature;
        tree.nodes[node_idx].threshold = best_threshold;
        const int left = build(indices, begin, mid, depth + 1);
        const int right = build(indices, mid, end, depth + 1);
        tree.nodes[node_idx].left = left;
        tree.nodes[node_idx].right = right;
        return node_idx;
    }

    int make_leaf(int n) {
        TreeNode leaf;
        for (int c = 0; c < n_classes; ++c)
            if (total_counts[c] > 0)
                leaf.dist.emplace_back(class_labels[c], static_cast<double>(total_counts[c]) / n);
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(std::move(leaf));
        return idx;
    }
};

}  // namespace detail

// Train one forest on a labeled gallery. Deterministic for a fixed seed.
inline Forest train_forest(const std::vector<GalleryEntry>& gallery, const ForestHyper& hyper,
                           std::uint64_t seed) {
    if (gallery.empty()) throw std::invalid_argument("empty gallery");

    Forest forest;
    std::vector<const FeatureVector*> features;
    std::vector<LabelId> labels;
    for (const auto& g : gallery) {
        if (g.track == nullptr) throw std::invalid_argument("null track in gallery");
        for (const auto& obs : g.track->observations) {
            features.push_back(&obs.feature);
            labels.push_back(g.label);
        }
    }
    if (features.size() < 2) throw std::invalid_argument("gallery too small: need at least 2 observations");

    forest.dim = features[0]->dim();
    for (const auto* f : features)
        if (f->dim() != forest.dim) throw std::invalid_argument("feature dimension mismatch in gallery");

    forest.label_set = labels;
    std::sort(forest.label_set.begin(), forest.label_set.end());
    forest.label_set.erase(std::unique(forest.label_set.begin(), forest.label_set.end()),
                           forest.label_set.end());

    // compact class indices
    std::vector<int> sample_class(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        sample_class[i] = static_cast<int>(
            std::lower_bound(forest.label_set.begin(), forest.label_set.end(), labels[i]) -
            forest.label_set.begin());

    const int n = static_cast<int>(features.size());
    int fps = hyper.features_per_split;
    if (fps <= 0) fps = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(forest.dim))));

    forest.trees.reserve(hyper.n_trees);
    for (int t = 0; t < hyper.n_trees; ++t) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> indices(n);
        if (hyper.bootstrap) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            for (int i = 0; i < n; ++i) indices[i] = pick(rng);
        } else {
            for (int i = 0; i < n; ++i) indices[i] = i;
        }
        detail::TreeBuilder builder{features,
                                    sample_class,
                                    static_cast<int>(forest.label_set.size()),
                                    hyper,
                                    fps,
                                    rng,
                                    forest.label_set,
                                    {},
                                    {},
                                    {},
                                    {},
                                    {}};
        builder.tree.nodes.reserve(64);
        builder.build(indices, 0, n, 0);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

// Convenience overload for galleries carrying ground-truth labels.
inline Forest train_forest(const std::vector<PersonTrack>& gallery, const ForestHyper& hyper,
                           std::uint64_t seed) {
    if (gallery.empty()) throw std::invalid_argument("empty gallery");
    std::vector<GalleryEntry> entries;
    entries.reserve(gallery.size());
    for (const auto& t : gallery) {
        if (!t.label) throw std::invalid_argument("unlabeled track in gallery");
        entries.push_back({&t, *t.label});
    }
    return train_forest(entries, hyper, seed);
}

// Average of the per-tree leaf distributions for one appearance.
inline Posterior predict_posterior(const Forest& forest, const FeatureVector& v) {
    if (v.dim() != forest.dim) throw std::invalid_argument("feature dimension mismatch");
    Posterior post;
    for (const auto& tree : forest.trees) {
        for (const auto& [label, p] : tree.leaf_for(v).dist) post[label] += p;
    }
    const double inv = 1.0 / static_cast<double>(forest.trees.size());
    for (auto& [label, p] : post) p *= inv;
    return post;
}

// Multi-shot posterior: arithmetic mean of the single-shot posteriors over
// every observation of the probe.
inline Posterior predict_multishot(const Forest& forest, const PersonTrack& probe) {
    if (probe.observations.empty()) throw std::invalid_argument("empty probe");
    Posterior acc;
    for (const auto& obs : probe.observations) {
        for (const auto& [label, p] : predict_posterior(forest, obs.feature)) acc[label] += p;
    }
    const double inv = 1.0 / static_cast<double>(probe.observations.size());
    for (auto& [label, p] : acc) p *= inv;
    return acc;
}

struct BestMatch {
    LabelId label = 0;
    double posterior = 0.0;
};

// Argmax of the multi-shot posterior; ties break toward the smallest label.
inline BestMatch best_match(const Forest& forest, const PersonTrack& probe) {
    const Posterior post = predict_multishot(forest, probe);
    BestMatch best;
    bool first = true;
    for (const auto& [label, p] : post) {
        if (first || p > best.posterior) {  // map iterates in label order
            best.label = label;
            best.posterior = p;
            first = false;
        }
    }
    if (first) throw std::invalid_argument("empty posterior");
    return best;
}

// Appearance-set similarity: max cosine over all observation pairs. Unit,
// non-negative features keep the score in [0,1].
inline double similarity(const PersonTrack& a, const PersonTrack& b) {
    if (a.observations.empty() || b.observations.empty())
        throw std::invalid_argument("similarity of empty track");
    double best = 0.0;
    for (const auto& oa : a.observations)
        for (const auto& ob : b.observations) best = std::max(best, oa.feature.dot(ob.feature));
    return std::clamp(best, 0.0, 1.0);
}

struct ForestSlot {
    double center = 0.0;
    Forest forest;
    std::vector<TrackRef> members;  // gallery tracks in this slot
};

struct ForestSeries {
    std::vector<ForestSlot> slots;  // centers strictly increasing
    double slot_width = 0.0;

    bool empty() const { return slots.empty(); }
};

// Train one forest per time slot of width `window_T`, slot centers spaced by
// `stride` across the gallery's entry-time range. A track joins every slot
// whose [center - T/2, center + T/2) interval contains its entry time; empty
// slots are omitted.
inline ForestSeries train_forest_series(const std::vector<GalleryEntry>& gallery,
                                        const std::vector<TrackRef>& refs, double window_T,
                                        double stride, const ForestHyper& hyper,
                                        std::uint64_t seed) {
    if (!(window_T > 0.0)) throw std::invalid_argument("window_T must be positive");
    if (!(stride > 0.0)) throw std::invalid_argument("stride must be positive");
    if (refs.size() != gallery.size()) throw std::invalid_argument("refs/gallery size mismatch");

    ForestSeries series;
    series.slot_width = window_T;
    if (gallery.empty()) return series;

    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    for (const auto& g : gallery) {
        t_min = std::min(t_min, g.track->entry_time);
        t_max = std::max(t_max, g.track->entry_time);
    }

    // slot k covers [t_min + stride*k, t_min + stride*k + window_T); computing
    // the start additively keeps the earliest track inside slot 0 exactly
    for (int k = 0;; ++k) {
        const double start = t_min + stride * k;
        if (start > t_max) break;
        const double end = start + window_T;
        std::vector<GalleryEntry> slot_gallery;
        std::vector<TrackRef> members;
        for (std::size_t i = 0; i < gallery.size(); ++i) {
            const double e = gallery[i].track->entry_time;
            if (e >= start && e < end) {
                slot_gallery.push_back(gallery[i]);
                members.push_back(refs[i]);
            }
        }
        if (slot_gallery.empty()) continue;
        ForestSlot slot;
        slot.center = start + window_T * 0.5;
        slot.forest = train_forest(slot_gallery, hyper,
                                   mix_seed(seed, static_cast<std::uint64_t>(k) + 0x5107));
        slot.forest.window_start = start;
        slot.forest.window_end = end;
        slot.members = std::move(members);
        series.slots.push_back(std::move(slot));
    }
    return series;
}

inline ForestSeries train_forest_series(const std::vector<GalleryEntry>& gallery, double window_T,
                                        double stride, const ForestHyper& hyper,
                                        std::uint64_t seed) {
    std::vector<TrackRef> refs(gallery.size(), -1);
    return train_forest_series(gallery, refs, window_T, stride, hyper, seed);
}

// Slot whose center minimizes |center - t|; earlier slot wins ties.
inline const ForestSlot& forest_for_time(const ForestSeries& series, double t) {
    if (series.empty()) throw std::runtime_error("no forest available");
    const ForestSlot* best = &series.slots.front();
    double best_d = std::fabs(best->center - t);
    for (const auto& slot : series.slots) {
        const double d = std::fabs(slot.center - t);
        if (d < best_d) {
            best = &slot;
            best_d = d;
        }
    }
    return *best;
}

}  // namespace camnet
