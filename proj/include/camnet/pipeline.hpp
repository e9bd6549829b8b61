#pragma once

// Pipeline orchestration: camera-level link initialization, zone-level
// inference, the iterative window/forest/correspondence/topology refinement
// loop, the exhaustive and event-correlation baselines, and the frozen-
// topology test stage.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/eval.hpp"
#include "camnet/forest.hpp"
#include "camnet/gaussfit.hpp"
#include "camnet/stats.hpp"
#include "camnet/topology.hpp"
#include "camnet/zones.hpp"

namespace camnet {

struct TopologyBundle {
    TopologyGraph graph;
    std::vector<Zone> zones;
};

struct StageResult {
    std::vector<Correspondence> all;       // every emitted correspondence
    std::vector<Correspondence> reliable;  // similarity > theta_sim
    long long comparisons = 0;             // appearance-pair products scored
};

struct EdgeSnapshot {
    NodeId source, dest;
    double mu = 0.0, sigma = 0.0, fit_error = 1.0, confidence = 0.0;
    double t_lower = 0.0, t_upper = 0.0, window = 0.0;
    int support = 0;
    bool valid = false;
    bool retained = false;  // refit was degenerate; previous fit kept
};

struct IterationRecord {
    int index = 0;
    double convergence_metric = 0.0;
    int became_valid = 0;
    int became_invalid = 0;
    StageResult result;
    std::vector<EdgeSnapshot> edges;
};

struct EdgeState {
    NodeId source, dest;
    TransitDistribution dist;
    SearchWindow window;
    bool valid = false;
    bool ever_valid = false;
    bool retained = false;
};

struct PipelineState {
    PipelineConfig cfg;
    TopologyGraph cam_graph;
    std::vector<Zone> zones;
    std::vector<EdgeState> edges;  // every examined zone pair
    StageResult cam_stage;
    StageResult zone_stage;
    std::vector<IterationRecord> iterations;
    int iteration = 0;
    long long comparisons = 0;  // cumulative over all stages
    double wall_seconds = 0.0;

    TopologyGraph zone_graph() const {
        TopologyGraph g;
        std::set<NodeId> nodes;
        for (const auto& e : edges) {
            nodes.insert(e.source);
            nodes.insert(e.dest);
            TopologyEdge te;
            te.source = e.source;
            te.dest = e.dest;
            te.dist = e.dist;
            te.valid = e.valid;
            te.window = e.window;
            g.edges.push_back(std::move(te));
        }
        g.nodes.assign(nodes.begin(), nodes.end());
        return g;
    }

    TopologyBundle final_topology() const { return {zone_graph(), zones}; }

    const StageResult& final_result() const {
        return iterations.empty() ? zone_stage : iterations.back().result;
    }
};

namespace detail {

inline std::uint64_t node_salt(const NodeId& n) {
    return (static_cast<std::uint64_t>(n.camera) << 10) ^
           static_cast<std::uint64_t>(n.zone_id + 1);
}

struct ZoneIndex {
    // per-track entry/exit zone ids, aligned with the stream
    std::vector<int> entry_zone;
    std::vector<int> exit_zone;
};

inline ZoneIndex index_zones(const EventStream& stream, const std::vector<Zone>& zones) {
    ZoneIndex idx;
    idx.entry_zone.resize(stream.size(), -1);
    idx.exit_zone.resize(stream.size(), -1);
    std::set<CameraId> have_entry, have_exit;
    for (const auto& z : zones)
        (z.kind == ZoneKind::entry ? have_entry : have_exit).insert(z.camera);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& t = stream[i];
        if (have_entry.count(t.camera))
            idx.entry_zone[i] = assign_zone(zones, t.camera, ZoneKind::entry, t.entry_point).zone_id;
        if (have_exit.count(t.camera))
            idx.exit_zone[i] = assign_zone(zones, t.camera, ZoneKind::exit, t.exit_point).zone_id;
    }
    return idx;
}

inline std::pair<std::vector<GalleryEntry>, std::vector<TrackRef>> camera_gallery(
    const EventStream& stream, CameraId cam) {
    std::vector<GalleryEntry> gallery;
    std::vector<TrackRef> refs;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (stream[i].camera != cam) continue;
        gallery.push_back({&stream[i], static_cast<LabelId>(i)});
        refs.push_back(static_cast<TrackRef>(i));
    }
    return {gallery, refs};
}

inline std::pair<std::vector<GalleryEntry>, std::vector<TrackRef>> zone_gallery(
    const EventStream& stream, const ZoneIndex& idx, const NodeId& entry_node) {
    std::vector<GalleryEntry> gallery;
    std::vector<TrackRef> refs;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (stream[i].camera != entry_node.camera) continue;
        if (idx.entry_zone[i] != entry_node.zone_id) continue;
        gallery.push_back({&stream[i], static_cast<LabelId>(i)});
        refs.push_back(static_cast<TrackRef>(i));
    }
    return {gallery, refs};
}

inline std::vector<TrackRef> zone_exits(const EventStream& stream, const ZoneIndex& idx,
                                        const NodeId& exit_node) {
    std::vector<TrackRef> refs;
    for (std::size_t i = 0; i < stream.size(); ++i)
        if (stream[i].camera == exit_node.camera && idx.exit_zone[i] == exit_node.zone_id)
            refs.push_back(static_cast<TrackRef>(i));
    return refs;
}

}  // namespace detail

// Camera-level initialization: every ordered camera pair is searched over
// the wide two-sided window and scored. Pairs without reliable evidence stay
// in the graph with their (low) confidence for reporting.
inline TopologyGraph infer_cam_links(const EventStream& stream, const PipelineConfig& cfg,
                                     StageResult* stage = nullptr) {
    if (stream.empty()) throw std::invalid_argument("empty stream");
    cfg.validate();

    std::set<CameraId> cams;
    for (const auto& t : stream) cams.insert(t.camera);

    const double T = cfg.initial_window_T;
    const double stride = T * cfg.series_stride_fraction;

    std::map<CameraId, ForestSeries> series;
    std::map<CameraId, std::vector<TrackRef>> exits;
    for (CameraId c : cams) {
        auto [gallery, refs] = detail::camera_gallery(stream, c);
        series[c] = train_forest_series(gallery, refs, T, stride, cfg.forest,
                                        mix_seed(cfg.seed, 0xCA0 + static_cast<std::uint64_t>(c)));
        exits[c] = refs;
    }

    TopologyGraph g;
    for (CameraId c : cams) g.nodes.push_back(NodeId{c, -1});

    GatherWindow window;
    window.mode = GatherWindow::Mode::two_sided;
    window.T = T;

    for (CameraId a : cams) {
        for (CameraId b : cams) {
            if (a == b) continue;
            GatherStats st;
            auto cands = gather_correspondences(stream, exits[a], series[b], window,
                                                NodeId{a, -1}, NodeId{b, -1}, &st);
            auto reliable = filter_reliable(cands, cfg.theta_sim);
            std::vector<double> deltas;
            deltas.reserve(reliable.size());
            for (const auto& c : reliable) deltas.push_back(c.delta_t);

            TopologyEdge e;
            e.source = NodeId{a, -1};
            e.dest = NodeId{b, -1};
            e.dist = make_transit_distribution(e.source, e.dest, deltas, cfg.hist_bin_width, -T, T,
                                               cfg.sigma_scale, cfg.min_fit_support);
            e.valid = e.dist.confidence > cfg.theta_conf;
            e.window = SearchWindow{-T, T, T};
            g.edges.push_back(std::move(e));

            if (stage) {
                stage->comparisons += st.candidate_comparisons;
                stage->all.insert(stage->all.end(), cands.begin(), cands.end());
                stage->reliable.insert(stage->reliable.end(), reliable.begin(), reliable.end());
            }
        }
    }
    return g;
}

// Zone-level initialization over the one-sided window; only exit->entry zone
// pairs of valid camera links are examined.
inline std::vector<EdgeState> infer_zone_links(const EventStream& stream,
                                               const TopologyGraph& cam_graph,
                                               const std::vector<Zone>& zones,
                                               const PipelineConfig& cfg,
                                               StageResult* stage = nullptr) {
    cfg.validate();
    const detail::ZoneIndex idx = detail::index_zones(stream, zones);

    const double T = cfg.initial_window_T;
    const double stride = T * cfg.series_stride_fraction;

    GatherWindow window;
    window.mode = GatherWindow::Mode::one_sided;
    window.T = T;

    std::map<NodeId, ForestSeries> series;  // per dest entry zone
    std::vector<EdgeState> edges;
    for (const auto& cam_edge : cam_graph.edges) {
        if (!cam_edge.valid) continue;
        const CameraId a = cam_edge.source.camera;
        const CameraId b = cam_edge.dest.camera;
        for (const auto& za : zones) {
            if (za.camera != a || za.kind != ZoneKind::exit) continue;
            const NodeId src{a, za.zone_id};
            const auto ex = detail::zone_exits(stream, idx, src);
            if (ex.empty()) continue;
            for (const auto& zb : zones) {
                if (zb.camera != b || zb.kind != ZoneKind::entry) continue;
                const NodeId dst{b, zb.zone_id};
                auto sit = series.find(dst);
                if (sit == series.end()) {
                    auto [gallery, refs] = detail::zone_gallery(stream, idx, dst);
                    sit = series
                              .emplace(dst, train_forest_series(
                                                gallery, refs, T, stride, cfg.forest,
                                                mix_seed(cfg.seed, 0x20E + detail::node_salt(dst))))
                              .first;
                }
                GatherStats st;
                auto cands =
                    gather_correspondences(stream, ex, sit->second, window, src, dst, &st);
                auto reliable = filter_reliable(cands, cfg.theta_sim);
                std::vector<double> deltas;
                deltas.reserve(reliable.size());
                for (const auto& c : reliable) deltas.push_back(c.delta_t);

                EdgeState e;
                e.source = src;
                e.dest = dst;
                e.dist = make_transit_distribution(src, dst, deltas, cfg.hist_bin_width, 0.0, T,
                                                   cfg.sigma_scale, cfg.min_fit_support);
                e.valid = e.dist.confidence > cfg.theta_conf;
                e.ever_valid = e.valid;
                e.window = SearchWindow{0.0, T, T};
                edges.push_back(std::move(e));

                if (stage) {
                    stage->comparisons += st.candidate_comparisons;
                    stage->all.insert(stage->all.end(), cands.begin(), cands.end());
                    stage->reliable.insert(stage->reliable.end(), reliable.begin(),
                                           reliable.end());
                }
            }
        }
    }
    return edges;
}

// One pass of the four refinement steps over every live zone edge. Updates
// windows from the current fits, retrains the destination forest series,
// re-gathers correspondences around the expected appearance time, and refits
// the transit distributions. Returns the per-iteration record.
inline IterationRecord iterate(PipelineState& state, const EventStream& stream,
                               const PipelineConfig& cfg) {
    IterationRecord rec;
    rec.index = ++state.iteration;

    const detail::ZoneIndex idx = detail::index_zones(stream, state.zones);

    double metric_sum = 0.0;
    int metric_count = 0;

    for (auto& e : state.edges) {
        if (!e.ever_valid) continue;  // never showed evidence; stays frozen
        const bool was_valid = e.valid;
        e.retained = false;

        // Step 1: window update from the current fit
        SearchWindow bounds;
        if (cfg.empirical_quantile_bounds && !e.dist.bin_edges.empty()) {
            Histogram h;
            h.bin_edges = e.dist.bin_edges;
            h.masses = e.dist.masses;
            h.support = e.dist.support;
            bounds = empirical_time_bounds(h, cfg.quantile_R);
        } else {
            bounds = time_bounds(e.dist.mu, e.dist.sigma, cfg.quantile_R);
        }
        double T = e.window.width;
        if (e.dist.fit_error < 1.0) {
            T = update_window(e.dist.fit_error, bounds.t_lower, bounds.t_upper);
            e.window = SearchWindow{bounds.t_lower, bounds.t_upper, T};
        }

        // Step 2: retrain the destination series with the updated window
        auto [gallery, refs] = detail::zone_gallery(stream, idx, e.dest);
        const ForestSeries series = train_forest_series(
            gallery, refs, T, T * cfg.series_stride_fraction, cfg.forest,
            mix_seed(cfg.seed, 0x17E4 + detail::node_salt(e.dest) +
                                   0x9E37 * static_cast<std::uint64_t>(state.iteration)));

        // Step 3: search around the expected appearance time t + mu
        const GatherWindow window = GatherWindow::refined_around(e.window, T, e.dist.mu);
        GatherStats st;
        const auto ex = detail::zone_exits(stream, idx, e.source);
        auto cands = gather_correspondences(stream, ex, series, window, e.source, e.dest, &st);
        auto reliable = filter_reliable(cands, cfg.theta_sim);
        rec.result.comparisons += st.candidate_comparisons;
        rec.result.all.insert(rec.result.all.end(), cands.begin(), cands.end());
        rec.result.reliable.insert(rec.result.reliable.end(), reliable.begin(), reliable.end());

        // Step 4: refit from the reliable correspondences; the bin width
        // shrinks with the window so narrow fits keep enough resolution
        const double pre_mu = e.dist.mu, pre_sigma = e.dist.sigma;
        std::vector<double> deltas;
        deltas.reserve(reliable.size());
        for (const auto& c : reliable) deltas.push_back(c.delta_t);
        const double span = window.hi_rel - window.lo_rel;
        const double refit_bin = std::min(cfg.hist_bin_width, span / 8.0);
        TransitDistribution refit =
            make_transit_distribution(e.source, e.dest, deltas, refit_bin, window.lo_rel,
                                      window.hi_rel, cfg.sigma_scale, cfg.min_fit_support);
        if (refit.support == 0 || refit.fit_error >= 1.0) {
            e.retained = true;  // degenerate refit: previous distribution kept
        } else {
            e.dist = std::move(refit);
            e.valid = e.dist.confidence > cfg.theta_conf;
            e.ever_valid = e.ever_valid || e.valid;
        }

        if (was_valid) {
            metric_sum += e.retained ? 0.0
                                     : bhattacharyya_gaussian(pre_mu, pre_sigma, e.dist.mu,
                                                              e.dist.sigma);
            ++metric_count;
        }
        if (!was_valid && e.valid) ++rec.became_valid;
        if (was_valid && !e.valid) ++rec.became_invalid;

        EdgeSnapshot snap;
        snap.source = e.source;
        snap.dest = e.dest;
        snap.mu = e.dist.mu;
        snap.sigma = e.dist.sigma;
        snap.fit_error = e.dist.fit_error;
        snap.confidence = e.dist.confidence;
        snap.t_lower = e.window.t_lower;
        snap.t_upper = e.window.t_upper;
        snap.window = e.window.width;
        snap.support = e.dist.support;
        snap.valid = e.valid;
        snap.retained = e.retained;
        rec.edges.push_back(snap);
    }

    rec.convergence_metric = metric_count > 0 ? metric_sum / metric_count : 0.0;
    return rec;
}

// Full training stage: camera links, zones, zone links, then the iterative
// refinement until the topology converges.
inline PipelineState run_training(const EventStream& stream, const PipelineConfig& cfg) {
    if (stream.empty()) throw std::invalid_argument("empty stream");
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    PipelineState state;
    state.cfg = cfg;
    state.cam_graph = infer_cam_links(stream, cfg, &state.cam_stage);
    state.comparisons += state.cam_stage.comparisons;

    bool any_valid_cam = false;
    for (const auto& e : state.cam_graph.edges) any_valid_cam |= e.valid;
    if (any_valid_cam) {
        state.zones = learn_zones(stream, cfg.zone_k_max, mix_seed(cfg.seed, 0x20E5));
        state.edges = infer_zone_links(stream, state.cam_graph, state.zones, cfg, &state.zone_stage);
        state.comparisons += state.zone_stage.comparisons;

        bool any_valid_zone = false;
        for (const auto& e : state.edges) any_valid_zone |= e.valid;
        if (any_valid_zone) {
            for (int i = 0; i < cfg.max_iterations; ++i) {
                IterationRecord rec = iterate(state, stream, cfg);
                state.comparisons += rec.result.comparisons;
                const double metric = rec.convergence_metric;
                state.iterations.push_back(std::move(rec));
                if (metric < cfg.convergence_tol) break;
            }
        }
    }

    state.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return state;
}

struct BaselineResult {
    std::vector<Correspondence> matches;
    long long comparisons = 0;
    double wall_seconds = 0.0;
};

// Exhaustive appearance search: every exit is compared against every track
// of every other camera inside the wide initial window. No forests, no
// topology gating.
inline BaselineResult exhaustive_baseline(const EventStream& stream, const PipelineConfig& cfg) {
    if (stream.empty()) throw std::invalid_argument("empty stream");
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    BaselineResult out;
    const double T = cfg.initial_window_T;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& exit_track = stream[i];
        const double t = exit_track.exit_time;
        double best_s = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < stream.size(); ++j) {
            if (j == i || stream[j].camera == exit_track.camera) continue;
            const double e = stream[j].entry_time;
            if (e < t - T || e > t + T) continue;
            const double s = similarity(exit_track, stream[j]);
            out.comparisons += static_cast<long long>(exit_track.size()) *
                               static_cast<long long>(stream[j].size());
            if (s > best_s) {
                best_s = s;
                best_j = j;
            }
        }
        if (best_s < 0.0) continue;
        Correspondence c;
        c.exit_track = static_cast<TrackRef>(i);
        c.matched_track = static_cast<TrackRef>(best_j);
        c.similarity = best_s;
        c.delta_t = stream[best_j].entry_time - t;
        c.source = NodeId{exit_track.camera, -1};
        c.dest = NodeId{stream[best_j].camera, -1};
        out.matches.push_back(c);
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Event-correlation topology baseline: per ordered zone pair, the histogram
// of all exit/entry time differences inside the one-sided window, with the
// same fit and confidence gating but no appearance matching.
inline TopologyGraph event_correlation_baseline(const EventStream& stream,
                                                const std::vector<Zone>& zones,
                                                const PipelineConfig& cfg) {
    cfg.validate();
    if (stream.empty()) return TopologyGraph{};
    const detail::ZoneIndex idx = detail::index_zones(stream, zones);
    const double T = cfg.initial_window_T;

    TopologyGraph g;
    std::set<NodeId> nodes;
    for (const auto& za : zones) {
        if (za.kind != ZoneKind::exit) continue;
        const NodeId src{za.camera, za.zone_id};
        const auto exits = detail::zone_exits(stream, idx, src);
        if (exits.empty()) continue;
        for (const auto& zb : zones) {
            if (zb.kind != ZoneKind::entry || zb.camera == za.camera) continue;
            const NodeId dst{zb.camera, zb.zone_id};
            std::vector<double> deltas;
            for (TrackRef x : exits) {
                const double t = stream[x].exit_time;
                for (std::size_t j = 0; j < stream.size(); ++j) {
                    if (stream[j].camera != zb.camera || idx.entry_zone[j] != zb.zone_id) continue;
                    const double d = stream[j].entry_time - t;
                    if (d >= 0.0 && d <= T) deltas.push_back(d);
                }
            }
            TopologyEdge e;
            e.source = src;
            e.dest = dst;
            e.dist = make_transit_distribution(src, dst, deltas, cfg.hist_bin_width, 0.0, T,
                                               cfg.sigma_scale);
            e.valid = e.dist.confidence > cfg.theta_conf;
            e.window = SearchWindow{0.0, T, T};
            nodes.insert(src);
            nodes.insert(dst);
            g.edges.push_back(std::move(e));
        }
    }
    g.nodes.assign(nodes.begin(), nodes.end());
    return g;
}

// Test-stage re-id with a frozen topology: forests are trained on the test
// stream's galleries per valid edge, searches run around t + mu with the
// edge's final window, and the topology itself is never updated.
inline StageResult run_test(const EventStream& test_stream, const TopologyBundle& topology,
                            const PipelineConfig& cfg) {
    cfg.validate();
    StageResult out;
    if (test_stream.empty()) return out;
    if (topology.zones.empty()) return out;
    const detail::ZoneIndex idx = detail::index_zones(test_stream, topology.zones);

    for (const auto& edge : topology.graph.edges) {
        if (!edge.valid) continue;
        const double T = edge.window.width > 0.0 ? edge.window.width : cfg.initial_window_T;
        auto [gallery, refs] = detail::zone_gallery(test_stream, idx, edge.dest);
        if (gallery.empty()) continue;
        const ForestSeries series = train_forest_series(
            gallery, refs, T, T * cfg.series_stride_fraction, cfg.forest,
            mix_seed(cfg.seed, 0x7E57 + detail::node_salt(edge.dest)));
        const GatherWindow window = GatherWindow::refined_around(edge.window, T, edge.dist.mu);
        GatherStats st;
        const auto ex = detail::zone_exits(test_stream, idx, edge.source);
        auto cands = gather_correspondences(test_stream, ex, series, window, edge.source,
                                            edge.dest, &st);
        auto reliable = filter_reliable(cands, cfg.theta_sim);
        out.comparisons += st.candidate_comparisons;
        out.all.insert(out.all.end(), cands.begin(), cands.end());
        out.reliable.insert(out.reliable.end(), reliable.begin(), reliable.end());
    }
    return out;
}

// Topology fitted from the ground-truth correspondences of a training
// stream: the "true matching" reference configuration.
inline TopologyBundle build_oracle_topology(const EventStream& stream, const GroundTruth& gt,
                                            const std::vector<Zone>& gt_zone_list,
                                            const PipelineConfig& cfg) {
    cfg.validate();
    TopologyBundle bundle;
    bundle.zones = gt_zone_list;
    std::set<NodeId> nodes;
    for (const auto& l : gt.links) {
        std::vector<double> deltas = l.delta_ts;
        TopologyEdge e;
        e.source = l.source;
        e.dest = l.dest;
        e.dist = make_transit_distribution(l.source, l.dest, deltas, cfg.hist_bin_width, 0.0,
                                           cfg.initial_window_T, cfg.sigma_scale,
                                           cfg.min_fit_support);
        e.valid = e.dist.confidence > cfg.theta_conf;
        if (e.dist.support > 0 && e.dist.fit_error < 1.0) {
            const SearchWindow bounds = time_bounds(e.dist.mu, e.dist.sigma, cfg.quantile_R);
            e.window = SearchWindow{bounds.t_lower, bounds.t_upper,
                                    update_window(e.dist.fit_error, bounds.t_lower, bounds.t_upper)};
        } else {
            e.window = SearchWindow{0.0, cfg.initial_window_T, cfg.initial_window_T};
        }
        nodes.insert(l.source);
        nodes.insert(l.dest);
        bundle.graph.edges.push_back(std::move(e));
    }
    bundle.graph.nodes.assign(nodes.begin(), nodes.end());
    return bundle;
}

}  // namespace camnet
