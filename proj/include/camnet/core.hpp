#pragma once

// Core domain types shared by every other camnet header: appearance
// descriptors, tracks, zones, transit distributions and the topology graph.
// All types are immutable value types once constructed and safe to share
// across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace camnet {

using CameraId = int;
using TrackRef = int;  // index into the owning event stream

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) {
    return a.x == b.x && a.y == b.y;
}

// Symmetric 2x2 covariance.
struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }

    // Both eigenvalues strictly positive.
    bool positive_definite() const {
        return xx > 0.0 && yy > 0.0 && det() > 0.0;
    }

    // (p-m)^T Sigma^-1 (p-m)
    double mahalanobis2(const Point2& p, const Point2& m) const {
        const double d = det();
        if (d <= 0.0) throw std::invalid_argument("covariance not positive definite");
        const double dx = p.x - m.x, dy = p.y - m.y;
        return (yy * dx * dx - 2.0 * xy * dx * dy + xx * dy * dy) / d;
    }

    double log_density(const Point2& p, const Point2& m) const {
        static constexpr double kLog2Pi = 1.8378770664093453;
        return -0.5 * (mahalanobis2(p, m) + std::log(det()) + 2.0 * kLog2Pi);
    }
};

// Unit-norm, non-negative appearance descriptor.
class FeatureVector {
  public:
    FeatureVector() = default;

    explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {
        double norm2 = 0.0;
        for (double v : values_) {
            if (!std::isfinite(v)) throw std::invalid_argument("feature entry not finite");
            if (v < 0.0) throw std::invalid_argument("feature entry negative");
            norm2 += v * v;
        }
        if (norm2 <= 0.0) throw std::invalid_argument("feature vector has zero norm");
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : values_) v *= inv;
    }

    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    double dot(const FeatureVector& other) const {
        if (other.dim() != dim()) throw std::invalid_argument("feature dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
        return s;
    }

  private:
    std::vector<double> values_;
};

struct Observation {
    CameraId camera = 0;
    double time = 0.0;        // seconds since scenario epoch
    Point2 position;          // normalized image coordinates, [0,1]^2
    FeatureVector feature;
};

inline void validate_observation(const Observation& o) {
    if (o.time < 0.0) throw std::invalid_argument("observation time negative");
    if (o.position.x < 0.0 || o.position.x > 1.0 || o.position.y < 0.0 || o.position.y > 1.0)
        throw std::invalid_argument("observation position outside [0,1]^2");
}

// One tracked person inside one camera. `label` is the ground-truth identity
// and is only ever consumed by evaluation code; all inference must work with
// it absent.
struct PersonTrack {
    std::optional<std::int64_t> label;
    CameraId camera = 0;
    std::vector<Observation> observations;
    double entry_time = 0.0;
    double exit_time = 0.0;
    Point2 entry_point;
    Point2 exit_point;

    static PersonTrack make(std::optional<std::int64_t> label, CameraId camera,
                            std::vector<Observation> observations) {
        if (observations.empty()) throw std::invalid_argument("track has no observations");
        for (std::size_t i = 0; i < observations.size(); ++i) {
            validate_observation(observations[i]);
            if (observations[i].camera != camera)
                throw std::invalid_argument("observation camera differs from track camera");
            if (i > 0 && !(observations[i - 1].time < observations[i].time))
                throw std::invalid_argument("observations not strictly increasing in time");
        }
        PersonTrack t;
        t.label = label;
        t.camera = camera;
        t.entry_time = observations.front().time;
        t.exit_time = observations.back().time;
        t.entry_point = observations.front().position;
        t.exit_point = observations.back().position;
        t.observations = std::move(observations);
        return t;
    }

    std::size_t size() const { return observations.size(); }
};

using EventStream = std::vector<PersonTrack>;

enum class ZoneKind { entry, exit };

inline const char* to_string(ZoneKind k) { return k == ZoneKind::entry ? "entry" : "exit"; }

// Learned entry or exit region within one camera view.
struct Zone {
    CameraId camera = 0;
    int zone_id = 0;
    ZoneKind kind = ZoneKind::entry;
    Point2 centroid;
    Cov2 spread;

    static Zone make(CameraId camera, int zone_id, ZoneKind kind, Point2 centroid, Cov2 spread) {
        if (!spread.positive_definite())
            throw std::invalid_argument("zone covariance not positive definite");
        return Zone{camera, zone_id, kind, centroid, spread};
    }
};

// A vertex of the topology graph: a whole camera (zone_id < 0) or one zone.
struct NodeId {
    CameraId camera = 0;
    int zone_id = -1;

    bool is_camera_level() const { return zone_id < 0; }

    friend bool operator==(const NodeId& a, const NodeId& b) {
        return a.camera == b.camera && a.zone_id == b.zone_id;
    }
    friend bool operator!=(const NodeId& a, const NodeId& b) { return !(a == b); }
    friend bool operator<(const NodeId& a, const NodeId& b) {
        if (a.camera != b.camera) return a.camera < b.camera;
        return a.zone_id < b.zone_id;
    }

    std::string str() const {
        std::string s = "C" + std::to_string(camera);
        if (zone_id >= 0) s += "Z" + std::to_string(zone_id);
        return s;
    }
};

struct NodeIdHash {
    std::size_t operator()(const NodeId& n) const {
        return std::hash<long long>()((static_cast<long long>(n.camera) << 20) ^ (n.zone_id + 1));
    }
};

// Transition-time distribution for one directed pair of nodes: the
// normalized delay histogram plus the Gaussian fitted to it.
struct TransitDistribution {
    NodeId source;
    NodeId dest;
    std::vector<double> bin_edges;  // size = bins + 1, increasing
    std::vector<double> masses;     // per-bin, sums to 1 when support > 0
    double mu = 0.0;
    double sigma = 1.0;
    double amplitude = 0.0;   // fitted peak height, for plotting
    double fit_error = 1.0;   // E in [0,1], 1 - R^2 clamped
    double confidence = 0.0;  // exp(-sigma/scale) * (1 - E)
    int support = 0;          // reliable correspondences used
};

// Per-edge temporal search window: the Eq.-style (T_L, T_U) bounds plus the
// derived width T.
struct SearchWindow {
    double t_lower = 0.0;
    double t_upper = 0.0;
    double width = 0.0;  // T
};

struct TopologyEdge {
    NodeId source;
    NodeId dest;
    TransitDistribution dist;
    bool valid = false;
    SearchWindow window;
};

struct TopologyGraph {
    std::vector<NodeId> nodes;
    std::vector<TopologyEdge> edges;

    const TopologyEdge* find_edge(const NodeId& src, const NodeId& dst) const {
        for (const auto& e : edges)
            if (e.source == src && e.dest == dst) return &e;
        return nullptr;
    }

    std::vector<const TopologyEdge*> valid_edges() const {
        std::vector<const TopologyEdge*> out;
        for (const auto& e : edges)
            if (e.valid) out.push_back(&e);
        return out;
    }
};

// One matched pair of tracks across cameras.
struct Correspondence {
    TrackRef exit_track = -1;
    TrackRef matched_track = -1;
    double similarity = 0.0;  // S in [0,1]
    double delta_t = 0.0;     // matched entry time - source exit time
    NodeId source;            // edge attribution, camera- or zone-level
    NodeId dest;
};

struct ForestHyper {
    int n_trees = 50;
    int max_depth = 16;
    int min_samples_leaf = 2;
    bool bootstrap = true;
    // features tried per split; 0 means floor(sqrt(D))
    int features_per_split = 0;
};

struct PipelineConfig {
    double theta_sim = 0.7;
    double theta_conf = 0.4;
    double initial_window_T = 600.0;  // seconds
    double quantile_R = 95.0;         // central mass percentage for time bounds
    double hist_bin_width = 2.0;      // seconds
    double sigma_scale = 60.0;        // normalization scale in the confidence formula
    ForestHyper forest;
    double convergence_tol = 0.01;
    int max_iterations = 10;
    std::uint64_t seed = 1;
    // stride between forest slots as a fraction of the slot width
    double series_stride_fraction = 0.5;
    // use empirical histogram quantiles instead of the fitted Gaussian's
    bool empirical_quantile_bounds = false;
    int zone_k_max = 5;
    // reliable correspondences required before a fit counts as evidence
    int min_fit_support = 12;

    void validate() const {
        if (!(theta_sim > 0.0 && theta_sim < 1.0)) throw std::invalid_argument("theta_sim outside (0,1)");
        if (!(theta_conf > 0.0 && theta_conf < 1.0)) throw std::invalid_argument("theta_conf outside (0,1)");
        if (!(initial_window_T > 0.0)) throw std::invalid_argument("initial_window_T must be positive");
        if (!(quantile_R > 0.0 && quantile_R < 100.0)) throw std::invalid_argument("quantile_R outside (0,100)");
        if (!(hist_bin_width > 0.0)) throw std::invalid_argument("hist_bin_width must be positive");
        if (!(sigma_scale > 0.0)) throw std::invalid_argument("sigma_scale must be positive");
        if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
        if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
        if (!(series_stride_fraction > 0.0 && series_stride_fraction <= 1.0))
            throw std::invalid_argument("series_stride_fraction outside (0,1]");
        if (zone_k_max < 1) throw std::invalid_argument("zone_k_max must be >= 1");
        if (min_fit_support < 1) throw std::invalid_argument("min_fit_support must be >= 1");
    }
};

}  // namespace camnet
