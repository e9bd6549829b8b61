#pragma once

// Synthetic multi-camera pedestrian event-stream generator with known
// ground-truth topology. Identities walk the ground-truth link graph:
// appear in a camera, dwell, exit through an exit zone and reappear at the
// linked entry zone after a normally distributed transit delay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/stats.hpp"

namespace camnet {

struct ZoneSpec {
    int zone_id = 0;
    Point2 centroid;
    double sigma = 0.025;  // isotropic positional spread

    Cov2 spread() const { return Cov2{sigma * sigma, 0.0, sigma * sigma}; }
};

struct CameraSpec {
    CameraId id = 0;
    std::vector<ZoneSpec> zones;
};

// Directed exit-zone -> entry-zone link with its transit law.
struct LinkSpec {
    NodeId source;
    NodeId dest;
    double mu = 0.0;
    double sigma = 1.0;
    double p_traverse = 0.75;
};

enum class DescriptorMode {
    random_orthant,  // uniform on the non-negative part of the unit sphere
    one_hot,         // identity i gets axis i; requires identities <= dim
};

struct ScenarioSpec {
    std::vector<CameraSpec> cameras;
    std::vector<LinkSpec> gt_links;

    int identities = 300;
    int descriptor_dim = 64;
    double descriptor_noise = 0.05;  // per-coordinate Gaussian sigma before reprojection
    double distractor_fraction = 0.3;
    DescriptorMode descriptor_mode = DescriptorMode::random_orthant;
    // number of non-zero descriptor coordinates; 0 draws dense vectors.
    // Sparse identities keep unrelated people dissimilar, the way real
    // appearance descriptors behave.
    int descriptor_active_dims = 8;

    double duration = 3600.0;
    double dwell_min = 10.0;
    double dwell_max = 60.0;
    double obs_interval = 3.0;
    bool clamp_negative_transits = true;  // resample until delta_t >= 0
    // walkers keep moving forward: the exit zone is drawn from the zones
    // other than the one they entered through, except in single-zone views
    bool avoid_backtrack = false;
    std::map<CameraId, double> camera_noise_scale;  // optional per-camera degradation
    std::map<CameraId, double> spawn_weights;       // empty: uniform over cameras

    std::uint64_t seed = 1;

    const CameraSpec* camera_by_id(CameraId id) const {
        for (const auto& c : cameras)
            if (c.id == id) return &c;
        return nullptr;
    }

    const ZoneSpec* zone_spec(const NodeId& n) const {
        const CameraSpec* cam = camera_by_id(n.camera);
        if (!cam) return nullptr;
        for (const auto& z : cam->zones)
            if (z.zone_id == n.zone_id) return &z;
        return nullptr;
    }

    void validate() const {
        if (cameras.empty()) throw std::invalid_argument("scenario has no cameras");
        if (identities < 1) throw std::invalid_argument("scenario needs at least one identity");
        if (descriptor_dim < 1) throw std::invalid_argument("descriptor dimension must be positive");
        if (descriptor_noise < 0.0) throw std::invalid_argument("descriptor noise negative");
        if (distractor_fraction < 0.0 || distractor_fraction > 1.0)
            throw std::invalid_argument("distractor fraction outside [0,1]");
        if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
        if (!(dwell_min > 0.0 && dwell_max >= dwell_min))
            throw std::invalid_argument("invalid dwell range");
        if (!(obs_interval > 0.0)) throw std::invalid_argument("obs interval must be positive");
        if (descriptor_mode == DescriptorMode::one_hot && identities > descriptor_dim)
            throw std::invalid_argument("one-hot descriptors need identities <= dim");
        if (descriptor_active_dims < 0 || descriptor_active_dims > descriptor_dim)
            throw std::invalid_argument("descriptor_active_dims outside [0, dim]");
        for (const auto& cam : cameras)
            if (cam.zones.empty())
                throw std::invalid_argument("camera " + std::to_string(cam.id) + " has no zones");
        std::map<NodeId, double> out_mass;
        for (const auto& l : gt_links) {
            if (!(l.sigma > 0.0)) throw std::invalid_argument("link sigma must be positive");
            if (l.p_traverse < 0.0 || l.p_traverse > 1.0)
                throw std::invalid_argument("link traversal probability outside [0,1]");
            if (l.source.camera == l.dest.camera)
                throw std::invalid_argument("link joins zones of the same camera");
            if (!zone_spec(l.source) || !zone_spec(l.dest))
                throw std::invalid_argument("link references unknown zone " + l.source.str() +
                                            " -> " + l.dest.str());
            out_mass[l.source] += l.p_traverse;
        }
        for (const auto& [node, mass] : out_mass)
            if (mass > 1.0 + 1e-9)
                throw std::invalid_argument("traversal probabilities out of " + node.str() +
                                            " exceed 1");
        for (const auto& [cam, w] : spawn_weights) {
            if (w < 0.0) throw std::invalid_argument("negative spawn weight");
            if (!camera_by_id(cam))
                throw std::invalid_argument("spawn weight for unknown camera " + std::to_string(cam));
        }
    }
};

struct GtLink {
    NodeId source;
    NodeId dest;
    double mu = 0.0;     // specified law, not the realized sample moments
    double sigma = 1.0;
    std::vector<std::pair<TrackRef, TrackRef>> pairs;  // realized traversals
    std::vector<double> delta_ts;                      // realized delays, same order
    int traversals() const { return static_cast<int>(pairs.size()); }
};

struct GroundTruth {
    std::vector<GtLink> links;
    std::vector<std::pair<TrackRef, TrackRef>> correspondences;  // all links flattened
    std::vector<Zone> zones;  // true zone geometry, for evaluation mapping

    int t_gt() const { return static_cast<int>(correspondences.size()); }

    // Valid directed camera pairs induced by the zone links.
    std::vector<std::pair<CameraId, CameraId>> camera_pairs() const {
        std::vector<std::pair<CameraId, CameraId>> out;
        for (const auto& l : links) {
            std::pair<CameraId, CameraId> p{l.source.camera, l.dest.camera};
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Zone-level ground-truth topology graph (every link valid, specified law).
inline TopologyGraph gt_zone_graph(const GroundTruth& gt) {
    TopologyGraph g;
    for (const auto& l : gt.links) {
        if (std::find(g.nodes.begin(), g.nodes.end(), l.source) == g.nodes.end())
            g.nodes.push_back(l.source);
        if (std::find(g.nodes.begin(), g.nodes.end(), l.dest) == g.nodes.end())
            g.nodes.push_back(l.dest);
        TopologyEdge e;
        e.source = l.source;
        e.dest = l.dest;
        e.dist.source = l.source;
        e.dist.dest = l.dest;
        e.dist.mu = l.mu;
        e.dist.sigma = l.sigma;
        e.dist.fit_error = 0.0;
        e.dist.confidence = 1.0;
        e.dist.support = l.traversals();
        e.valid = true;
        g.edges.push_back(e);
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    return g;
}

// Zone structs for the scenario's specified zones (both kinds per spec zone).
inline std::vector<Zone> gt_zones(const ScenarioSpec& spec) {
    std::vector<Zone> zones;
    for (const auto& cam : spec.cameras) {
        for (const auto& z : cam.zones) {
            zones.push_back(Zone::make(cam.id, z.zone_id, ZoneKind::entry, z.centroid, z.spread()));
            zones.push_back(Zone::make(cam.id, z.zone_id, ZoneKind::exit, z.centroid, z.spread()));
        }
    }
    return zones;
}

struct SimResult {
    EventStream stream;
    GroundTruth gt;
};

namespace detail {

inline Point2 sample_zone_point(const ZoneSpec& z, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Point2 p{z.centroid.x + z.sigma * g(rng), z.centroid.y + z.sigma * g(rng)};
    p.x = std::clamp(p.x, 0.0, 1.0);
    p.y = std::clamp(p.y, 0.0, 1.0);
    return p;
}

inline FeatureVector noisy_descriptor(const std::vector<double>& base, double noise,
                                      std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(base.size());
    for (int attempt = 0; attempt < 16; ++attempt) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            v[i] = std::max(0.0, base[i] + noise * g(rng));
            norm2 += v[i] * v[i];
        }
        if (norm2 > 1e-12) return FeatureVector(v);
    }
    return FeatureVector(base);
}

}  // namespace detail

// Run the scenario. Deterministic for a fixed seed: identity i draws from
// its own substream, and the emitted stream is sorted by entry time.
inline SimResult simulate(const ScenarioSpec& spec) {
    spec.validate();

    struct PendingTrack {
        PersonTrack track;
        int identity;
        int link_index;  // arrival link, -1 for network entry
        int hop;         // per-identity hop counter, for gt pairing
    };
    std::vector<PendingTrack> pending;

    // canonical per-identity descriptors
    std::vector<std::vector<double>> descriptors(spec.identities);
    {
        std::mt19937_64 rng(mix_seed(spec.seed, 0xD35C));
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < spec.identities; ++i) {
            std::vector<double> d(spec.descriptor_dim, 0.0);
            if (spec.descriptor_mode == DescriptorMode::one_hot) {
                d[static_cast<std::size_t>(i)] = 1.0;
            } else {
                std::vector<int> dims(spec.descriptor_dim);
                for (int k = 0; k < spec.descriptor_dim; ++k) dims[k] = k;
                int active = spec.descriptor_active_dims > 0 ? spec.descriptor_active_dims
                                                             : spec.descriptor_dim;
                for (int k = 0; k < active; ++k) {
                    std::uniform_int_distribution<int> pick(k, spec.descriptor_dim - 1);
                    std::swap(dims[k], dims[pick(rng)]);
                }
                double norm2 = 0.0;
                for (int k = 0; k < active; ++k) {
                    d[dims[k]] = std::fabs(g(rng));
                    norm2 += d[dims[k]] * d[dims[k]];
                }
                const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
                for (auto& x : d) x *= inv;
            }
            descriptors[i] = std::move(d);
        }
    }

    // links grouped by source exit zone
    std::map<NodeId, std::vector<int>> links_from;
    for (std::size_t i = 0; i < spec.gt_links.size(); ++i)
        links_from[spec.gt_links[i].source].push_back(static_cast<int>(i));

    const double spawn_horizon = spec.duration * 0.9;

    // cumulative spawn distribution over cameras
    std::vector<double> spawn_cdf(spec.cameras.size());
    {
        double total = 0.0;
        for (std::size_t i = 0; i < spec.cameras.size(); ++i) {
            const auto it = spec.spawn_weights.find(spec.cameras[i].id);
            const double w = spec.spawn_weights.empty() ? 1.0
                             : it != spec.spawn_weights.end() ? it->second
                                                              : 0.0;
            total += w;
            spawn_cdf[i] = total;
        }
        if (total <= 0.0) throw std::invalid_argument("spawn weights sum to zero");
        for (auto& c : spawn_cdf) c /= total;
    }

    for (int id = 0; id < spec.identities; ++id) {
        std::mt19937_64 rng(mix_seed(spec.seed, 0xA11CE + static_cast<std::uint64_t>(id)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        const bool distractor = u01(rng) < spec.distractor_fraction;
        const double spawn_draw = u01(rng);
        std::size_t cam_idx = 0;
        while (cam_idx + 1 < spawn_cdf.size() && spawn_draw > spawn_cdf[cam_idx]) ++cam_idx;
        const auto& camera = spec.cameras[cam_idx];
        double t = u01(rng) * spawn_horizon;
        const ZoneSpec* entry_zone =
            &camera.zones[static_cast<std::size_t>(u01(rng) * camera.zones.size())];
        CameraId cam_id = camera.id;
        int arrival_link = -1;
        int hop = 0;
        int arrival_zone_id = entry_zone->zone_id;

        while (true) {
            const CameraSpec& cam = *spec.camera_by_id(cam_id);
            std::uniform_real_distribution<double> dwell_dist(spec.dwell_min, spec.dwell_max);
            double dwell = dwell_dist(rng);
            bool final_track = false;
            if (t + dwell > spec.duration) {
                dwell = spec.duration - t;
                final_track = true;
                if (dwell < 1.0) break;  // too little time left to observe
            }
            std::vector<const ZoneSpec*> exit_choices;
            for (const auto& z : cam.zones)
                if (!spec.avoid_backtrack || cam.zones.size() < 2 || z.zone_id != arrival_zone_id)
                    exit_choices.push_back(&z);
            const ZoneSpec& exit_zone =
                *exit_choices[static_cast<std::size_t>(u01(rng) * exit_choices.size())];

            const Point2 p_in = detail::sample_zone_point(*entry_zone, rng);
            const Point2 p_out = detail::sample_zone_point(exit_zone, rng);

            double noise = spec.descriptor_noise;
            if (auto it = spec.camera_noise_scale.find(cam_id); it != spec.camera_noise_scale.end())
                noise *= it->second;

            const int n_obs = std::max(2, static_cast<int>(dwell / spec.obs_interval) + 1);
            std::vector<Observation> obs;
            obs.reserve(n_obs);
            for (int k = 0; k < n_obs; ++k) {
                const double frac = static_cast<double>(k) / (n_obs - 1);
                Observation o;
                o.camera = cam_id;
                o.time = t + frac * dwell;
                o.position.x = std::clamp(p_in.x + frac * (p_out.x - p_in.x) + 0.01 * gauss(rng),
                                          0.0, 1.0);
                o.position.y = std::clamp(p_in.y + frac * (p_out.y - p_in.y) + 0.01 * gauss(rng),
                                          0.0, 1.0);
                o.feature = noise > 0.0 ? detail::noisy_descriptor(descriptors[id], noise, rng)
                                        : FeatureVector(descriptors[id]);
                obs.push_back(std::move(o));
            }
            PendingTrack pt;
            pt.track = PersonTrack::make(static_cast<std::int64_t>(id), cam_id, std::move(obs));
            // endpoints come from the zone samples, not the jittered interior walk
            pt.track.entry_point = p_in;
            pt.track.exit_point = p_out;
            pt.track.observations.front().position = p_in;
            pt.track.observations.back().position = p_out;
            pt.identity = id;
            pt.link_index = arrival_link;
            pt.hop = hop;
            pending.push_back(std::move(pt));
            ++hop;

            if (final_track || distractor) break;

            // traversal decision out of the chosen exit zone
            const auto it = links_from.find(NodeId{cam_id, exit_zone.zone_id});
            if (it == links_from.end()) break;
            double draw = u01(rng);
            int chosen = -1;
            for (int li : it->second) {
                draw -= spec.gt_links[li].p_traverse;
                if (draw < 0.0) {
                    chosen = li;
                    break;
                }
            }
            if (chosen < 0) break;  // residual mass: leaves the network

            const LinkSpec& link = spec.gt_links[chosen];
            const double t_exit = t + dwell;
            double delta = 0.0;
            bool ok = false;
            for (int attempt = 0; attempt < 200; ++attempt) {
                delta = link.mu + link.sigma * gauss(rng);
                if (spec.clamp_negative_transits && delta < 0.0) continue;
                if (t_exit + delta < 0.0) continue;
                ok = true;
                break;
            }
            if (!ok || t_exit + delta > spec.duration - 1.0) break;

            t = t_exit + delta;
            cam_id = link.dest.camera;
            entry_zone = spec.zone_spec(link.dest);
            arrival_zone_id = entry_zone->zone_id;
            arrival_link = chosen;
        }
    }

    // chronological stream order; stable tie-break keeps determinism
    std::vector<int> order(pending.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ta = pending[a].track;
        const auto& tb = pending[b].track;
        if (ta.entry_time != tb.entry_time) return ta.entry_time < tb.entry_time;
        if (ta.camera != tb.camera) return ta.camera < tb.camera;
        return a < b;
    });
    std::vector<int> ref_of(pending.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) ref_of[order[pos]] = static_cast<int>(pos);

    SimResult result;
    result.stream.reserve(pending.size());
    for (int idx : order) result.stream.push_back(std::move(pending[idx].track));

    // ground-truth links and correspondences
    result.gt.zones = gt_zones(spec);
    result.gt.links.reserve(spec.gt_links.size());
    for (const auto& l : spec.gt_links) {
        GtLink gl;
        gl.source = l.source;
        gl.dest = l.dest;
        gl.mu = l.mu;
        gl.sigma = l.sigma;
        result.gt.links.push_back(std::move(gl));
    }
    // pair each non-entry track with its identity's previous hop
    std::map<std::pair<int, int>, int> by_identity_hop;  // (identity, hop) -> pending index
    for (std::size_t i = 0; i < pending.size(); ++i)
        by_identity_hop[{pending[i].identity, pending[i].hop}] = static_cast<int>(i);
    for (std::size_t i = 0; i < pending.size(); ++i) {
        const auto& pt = pending[i];
        if (pt.link_index < 0) continue;
        const auto prev = by_identity_hop.find({pt.identity, pt.hop - 1});
        if (prev == by_identity_hop.end()) continue;
        const TrackRef exit_ref = ref_of[prev->second];
        const TrackRef entry_ref = ref_of[static_cast<int>(i)];
        auto& gl = result.gt.links[pt.link_index];
        gl.pairs.emplace_back(exit_ref, entry_ref);
        gl.delta_ts.push_back(result.stream[entry_ref].entry_time -
                              result.stream[exit_ref].exit_time);
        result.gt.correspondences.emplace_back(exit_ref, entry_ref);
    }
    std::sort(result.gt.correspondences.begin(), result.gt.correspondences.end());
    return result;
}

// The built-in nine-camera scenario. Directed links and their (mu, sigma)
// transit laws follow the bundled network layout; the negative-mu link is
// clamped to non-negative delays by the default resampling rule.
inline ScenarioSpec default_scenario() {
    ScenarioSpec spec;

    // border anchor positions reused per camera, keyed by slot order
    const Point2 anchors[] = {{0.12, 0.50}, {0.88, 0.50}, {0.50, 0.12},
                              {0.50, 0.88}, {0.12, 0.12}, {0.88, 0.88}};
    auto make_camera = [&](CameraId id, std::vector<int> zone_ids) {
        CameraSpec cam;
        cam.id = id;
        for (std::size_t i = 0; i < zone_ids.size(); ++i)
            cam.zones.push_back(ZoneSpec{zone_ids[i], anchors[i % 6], 0.025});
        return cam;
    };
    spec.cameras = {
        make_camera(1, {1}),       make_camera(2, {2, 5}), make_camera(3, {1, 2, 3}),
        make_camera(4, {4}),       make_camera(5, {2, 6}), make_camera(6, {1}),
        make_camera(7, {1, 3}),    make_camera(8, {1, 2}), make_camera(9, {2}),
    };

    auto link = [](int ca, int za, int cb, int zb, double mu, double sigma) {
        return LinkSpec{NodeId{ca, za}, NodeId{cb, zb}, mu, sigma, 0.87};
    };
    spec.gt_links = {
        link(1, 1, 2, 5, 34.7, 6.04), link(2, 5, 1, 1, 40.4, 5.93),
        link(2, 2, 3, 1, 36.3, 5.79), link(3, 1, 2, 2, 37.0, 8.90),
        link(3, 2, 5, 6, -0.57, 3.23), link(5, 6, 3, 2, 1.59, 2.32),
        link(3, 3, 7, 3, 4.3, 3.5),   link(7, 3, 3, 3, 4.68, 3.04),
        link(4, 4, 5, 2, 30.1, 12.5), link(5, 2, 4, 4, 28.6, 14.8),
        link(7, 1, 8, 2, 28.4, 6.36), link(8, 2, 7, 1, 30.0, 4.02),
        link(8, 1, 9, 2, 11.7, 4.24), link(9, 2, 8, 1, 10.5, 4.08),
    };

    spec.identities = 300;
    spec.descriptor_dim = 64;
    spec.descriptor_noise = 0.05;
    spec.duration = 3600.0;
    // heterogeneous dwells smear multi-hop and return-visit delay
    // correlations, which otherwise masquerade as direct links, and push
    // most same-camera revisit gaps beyond the initial search window
    spec.dwell_min = 30.0;
    spec.dwell_max = 570.0;
    spec.obs_interval = 10.0;
    // the dead-end camera pair carries the widest transit law; extra
    // arrivals there keep its histogram well populated
    spec.spawn_weights = {{1, 1.0}, {2, 1.0}, {3, 1.3}, {4, 2.5}, {5, 1.8},
                          {6, 0.7}, {7, 1.2}, {8, 1.2}, {9, 1.0}};
    spec.avoid_backtrack = false;  // hallway bouncing is part of this layout
    return spec;
}

}  // namespace camnet
