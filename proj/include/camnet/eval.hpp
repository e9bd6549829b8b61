#pragma once

// Evaluation metrics: re-id accuracy against ground-truth pairs,
// Bhattacharyya distance between fitted and true transit laws, topology
// distance averaged over links, and link precision/recall.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/simgen.hpp"

namespace camnet {

// TP / T_gt with set semantics: a predicted pair counts once, and only if
// the ground truth contains a correspondence between those two tracks.
inline double reid_accuracy(const std::vector<Correspondence>& pred, const GroundTruth& gt) {
    if (gt.correspondences.empty()) throw std::invalid_argument("no ground truth");
    std::set<std::pair<TrackRef, TrackRef>> gt_pairs(gt.correspondences.begin(),
                                                     gt.correspondences.end());
    std::set<std::pair<TrackRef, TrackRef>> seen;
    int tp = 0;
    for (const auto& c : pred) {
        const std::pair<TrackRef, TrackRef> p{c.exit_track, c.matched_track};
        if (!seen.insert(p).second) continue;
        if (gt_pairs.count(p)) ++tp;
    }
    return static_cast<double>(tp) / static_cast<double>(gt_pairs.size());
}

// Closed-form Bhattacharyya distance between two Gaussians.
inline double bhattacharyya_gaussian(double mu1, double sigma1, double mu2, double sigma2) {
    if (!(sigma1 > 0.0 && sigma2 > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double v = sigma1 * sigma1 + sigma2 * sigma2;
    const double dmu = mu1 - mu2;
    return 0.25 * dmu * dmu / v + 0.5 * std::log(v / (2.0 * sigma1 * sigma2));
}

// Translate a learned zone-level node to the ground-truth zone it sits on
// (same camera, nearest centroid of the right kind). Camera-level nodes map
// to themselves.
inline NodeId map_zone_node(const NodeId& node, ZoneKind kind, const std::vector<Zone>& learned,
                            const std::vector<Zone>& gt) {
    if (node.is_camera_level()) return node;
    const Zone* lz = nullptr;
    for (const auto& z : learned)
        if (z.camera == node.camera && z.zone_id == node.zone_id && z.kind == kind) lz = &z;
    if (!lz) return node;
    const Zone* best = nullptr;
    double best_d2 = 0.0;
    for (const auto& z : gt) {
        if (z.camera != node.camera || z.kind != kind) continue;
        const double dx = z.centroid.x - lz->centroid.x;
        const double dy = z.centroid.y - lz->centroid.y;
        const double d2 = dx * dx + dy * dy;
        if (!best || d2 < best_d2) {
            best = &z;
            best_d2 = d2;
        }
    }
    return best ? NodeId{node.camera, best->zone_id} : node;
}

struct TopologyDistance {
    double matched_mean = 0.0;    // over gt links recovered by the inference
    double penalized_mean = 0.0;  // missing links contribute the flat-fit penalty
    int matched = 0;
    int missing = 0;
};

// Mean Bhattacharyya distance between inferred and true transit laws over
// the ground-truth links. A missing link is scored against a flat fit: the
// moment-matched Gaussian of a uniform delay over the initial window.
inline TopologyDistance topology_distance(const TopologyGraph& inferred,
                                          const std::vector<Zone>& learned_zones,
                                          const GroundTruth& gt,
                                          const std::vector<Zone>& gt_zone_list,
                                          double flat_window = 600.0) {
    if (gt.links.empty()) throw std::invalid_argument("no ground-truth links");

    std::map<std::pair<NodeId, NodeId>, const TransitDistribution*> valid;
    for (const auto& e : inferred.edges) {
        if (!e.valid) continue;
        const NodeId s = map_zone_node(e.source, ZoneKind::exit, learned_zones, gt_zone_list);
        const NodeId d = map_zone_node(e.dest, ZoneKind::entry, learned_zones, gt_zone_list);
        auto key = std::make_pair(s, d);
        auto it = valid.find(key);
        // two learned zones can land on one gt zone; keep the better-supported fit
        if (it == valid.end() || e.dist.support > it->second->support) valid[key] = &e.dist;
    }

    TopologyDistance out;
    double matched_sum = 0.0, penalized_sum = 0.0;
    const double flat_mu = 0.5 * flat_window;
    const double flat_sigma = flat_window / std::sqrt(12.0);
    for (const auto& l : gt.links) {
        const auto it = valid.find({l.source, l.dest});
        if (it != valid.end()) {
            const double d = bhattacharyya_gaussian(it->second->mu, it->second->sigma, l.mu, l.sigma);
            matched_sum += d;
            penalized_sum += d;
            ++out.matched;
        } else {
            penalized_sum += bhattacharyya_gaussian(flat_mu, flat_sigma, l.mu, l.sigma);
            ++out.missing;
        }
    }
    out.matched_mean = out.matched > 0 ? matched_sum / out.matched : 0.0;
    out.penalized_mean = penalized_sum / static_cast<double>(gt.links.size());
    return out;
}

struct LinkPR {
    double precision = 1.0;
    double recall = 0.0;
    int correct = 0;
    int predicted = 0;
    int expected = 0;
};

inline LinkPR link_precision_recall(const TopologyGraph& inferred,
                                    const std::vector<Zone>& learned_zones, const GroundTruth& gt,
                                    const std::vector<Zone>& gt_zone_list) {
    std::set<std::pair<NodeId, NodeId>> predicted;
    for (const auto& e : inferred.edges) {
        if (!e.valid) continue;
        predicted.insert({map_zone_node(e.source, ZoneKind::exit, learned_zones, gt_zone_list),
                          map_zone_node(e.dest, ZoneKind::entry, learned_zones, gt_zone_list)});
    }
    std::set<std::pair<NodeId, NodeId>> expected;
    for (const auto& l : gt.links) expected.insert({l.source, l.dest});

    LinkPR pr;
    pr.predicted = static_cast<int>(predicted.size());
    pr.expected = static_cast<int>(expected.size());
    for (const auto& p : predicted)
        if (expected.count(p)) ++pr.correct;
    pr.precision = predicted.empty() ? 1.0 : static_cast<double>(pr.correct) / pr.predicted;
    pr.recall = expected.empty() ? 0.0 : static_cast<double>(pr.correct) / pr.expected;
    return pr;
}

// Camera-level variant: compares valid camera edges against the camera
// pairs induced by the ground-truth zone links.
inline LinkPR camera_link_precision_recall(const TopologyGraph& cam_graph, const GroundTruth& gt) {
    std::set<std::pair<CameraId, CameraId>> predicted;
    for (const auto& e : cam_graph.edges)
        if (e.valid) predicted.insert({e.source.camera, e.dest.camera});
    const auto gt_pairs = gt.camera_pairs();
    std::set<std::pair<CameraId, CameraId>> expected(gt_pairs.begin(), gt_pairs.end());

    LinkPR pr;
    pr.predicted = static_cast<int>(predicted.size());
    pr.expected = static_cast<int>(expected.size());
    for (const auto& p : predicted)
        if (expected.count(p)) ++pr.correct;
    pr.precision = predicted.empty() ? 1.0 : static_cast<double>(pr.correct) / pr.predicted;
    pr.recall = expected.empty() ? 0.0 : static_cast<double>(pr.correct) / pr.expected;
    return pr;
}

}  // namespace camnet
