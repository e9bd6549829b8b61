#pragma once

// File formats: JSONL event streams, ground-truth files, pipeline/scenario
// configs, topology bundles, forest caches, pipeline reports and plot CSVs.
// All numbers are written in shortest round-trip form, so a fixed seed
// produces byte-identical files.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camnet/core.hpp"
#include "camnet/forest.hpp"
#include "camnet/pipeline.hpp"
#include "camnet/simgen.hpp"

namespace camnet {

using ordered_json = nlohmann::ordered_json;

namespace io_detail {

inline ordered_json point_json(const Point2& p) { return ordered_json::array({p.x, p.y}); }

inline Point2 point_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("point must be [x, y]");
    return Point2{j[0].get<double>(), j[1].get<double>()};
}

inline ordered_json node_json(const NodeId& n) {
    ordered_json j;
    j["camera"] = n.camera;
    j["zone"] = n.zone_id;
    return j;
}

inline NodeId node_from(const nlohmann::json& j) {
    return NodeId{j.at("camera").get<CameraId>(), j.value("zone", -1)};
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

}  // namespace io_detail

// ---- event streams -------------------------------------------------------

inline ordered_json track_to_json(const PersonTrack& t) {
    ordered_json j;
    j["camera"] = t.camera;
    if (t.label)
        j["label"] = *t.label;
    else
        j["label"] = nullptr;
    j["entry_time"] = t.entry_time;
    j["exit_time"] = t.exit_time;
    j["entry_point"] = io_detail::point_json(t.entry_point);
    j["exit_point"] = io_detail::point_json(t.exit_point);
    ordered_json obs = ordered_json::array();
    for (const auto& o : t.observations) {
        ordered_json oj;
        oj["time"] = o.time;
        oj["position"] = io_detail::point_json(o.position);
        oj["feature"] = o.feature.values();
        obs.push_back(std::move(oj));
    }
    j["observations"] = std::move(obs);
    return j;
}

inline PersonTrack track_from_json(const nlohmann::json& j) {
    const CameraId cam = j.at("camera").get<CameraId>();
    std::optional<std::int64_t> label;
    if (j.contains("label") && !j.at("label").is_null()) label = j.at("label").get<std::int64_t>();

    std::vector<Observation> obs;
    for (const auto& oj : j.at("observations")) {
        Observation o;
        o.camera = cam;
        o.time = oj.at("time").get<double>();
        o.position = io_detail::point_from(oj.at("position"));
        o.feature = FeatureVector(oj.at("feature").get<std::vector<double>>());
        obs.push_back(std::move(o));
    }
    PersonTrack t = PersonTrack::make(label, cam, std::move(obs));
    // the file's endpoint fields must agree with the observations
    const double et = j.at("entry_time").get<double>();
    const double xt = j.at("exit_time").get<double>();
    if (std::fabs(et - t.entry_time) > 1e-9 || std::fabs(xt - t.exit_time) > 1e-9)
        throw std::invalid_argument("entry/exit time disagrees with observations");
    t.entry_point = io_detail::point_from(j.at("entry_point"));
    t.exit_point = io_detail::point_from(j.at("exit_point"));
    return t;
}

inline void write_event_stream(const EventStream& stream, const std::string& path) {
    auto out = io_detail::open_out(path);
    for (const auto& t : stream) out << track_to_json(t).dump() << '\n';
}

inline EventStream read_event_stream(const std::string& path) {
    auto in = io_detail::open_in(path);
    EventStream stream;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            stream.push_back(track_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return stream;
}

// ---- ground truth --------------------------------------------------------

inline ordered_json zone_to_json(const Zone& z) {
    ordered_json j;
    j["camera"] = z.camera;
    j["zone_id"] = z.zone_id;
    j["kind"] = to_string(z.kind);
    j["centroid"] = io_detail::point_json(z.centroid);
    j["spread"] = ordered_json::array({z.spread.xx, z.spread.xy, z.spread.yy});
    return j;
}

inline Zone zone_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    return Zone::make(j.at("camera").get<CameraId>(), j.at("zone_id").get<int>(),
                      kind == "entry" ? ZoneKind::entry : ZoneKind::exit,
                      io_detail::point_from(j.at("centroid")),
                      Cov2{j.at("spread")[0].get<double>(), j.at("spread")[1].get<double>(),
                           j.at("spread")[2].get<double>()});
}

inline void write_ground_truth(const GroundTruth& gt, const std::string& path) {
    ordered_json j;
    ordered_json links = ordered_json::array();
    for (const auto& l : gt.links) {
        ordered_json lj;
        lj["source"] = io_detail::node_json(l.source);
        lj["dest"] = io_detail::node_json(l.dest);
        lj["mu"] = l.mu;
        lj["sigma"] = l.sigma;
        ordered_json pairs = ordered_json::array();
        for (const auto& [a, b] : l.pairs) pairs.push_back(ordered_json::array({a, b}));
        lj["pairs"] = std::move(pairs);
        lj["delta_ts"] = l.delta_ts;
        links.push_back(std::move(lj));
    }
    j["links"] = std::move(links);
    ordered_json corr = ordered_json::array();
    for (const auto& [a, b] : gt.correspondences) corr.push_back(ordered_json::array({a, b}));
    j["correspondences"] = std::move(corr);
    ordered_json zones = ordered_json::array();
    for (const auto& z : gt.zones) zones.push_back(zone_to_json(z));
    j["zones"] = std::move(zones);
    io_detail::open_out(path) << j.dump(2) << '\n';
}

inline GroundTruth read_ground_truth(const std::string& path) {
    nlohmann::json j;
    io_detail::open_in(path) >> j;
    GroundTruth gt;
    for (const auto& lj : j.at("links")) {
        GtLink l;
        l.source = io_detail::node_from(lj.at("source"));
        l.dest = io_detail::node_from(lj.at("dest"));
        l.mu = lj.at("mu").get<double>();
        l.sigma = lj.at("sigma").get<double>();
        for (const auto& p : lj.at("pairs"))
            l.pairs.emplace_back(p[0].get<TrackRef>(), p[1].get<TrackRef>());
        l.delta_ts = lj.at("delta_ts").get<std::vector<double>>();
        gt.links.push_back(std::move(l));
    }
    for (const auto& p : j.at("correspondences"))
        gt.correspondences.emplace_back(p[0].get<TrackRef>(), p[1].get<TrackRef>());
    for (const auto& zj : j.value("zones", nlohmann::json::array())) gt.zones.push_back(zone_from_json(zj));
    return gt;
}

inline std::string gt_path_for(const std::string& events_path) { return events_path + ".gt.json"; }

// Events plus their ground truth; the ground truth lands next to the event
// file with a ".gt.json" suffix.
inline void export_events(const EventStream& stream, const GroundTruth& gt,
                          const std::string& path) {
    write_event_stream(stream, path);
    write_ground_truth(gt, gt_path_for(path));
}

inline SimResult import_events(const std::string& path) {
    SimResult r;
    r.stream = read_event_stream(path);
    if (std::filesystem::exists(gt_path_for(path))) r.gt = read_ground_truth(gt_path_for(path));
    return r;
}

// ---- configs -------------------------------------------------------------

inline ordered_json config_to_json(const PipelineConfig& cfg) {
    ordered_json j;
    j["theta_sim"] = cfg.theta_sim;
    j["theta_conf"] = cfg.theta_conf;
    j["initial_window_T"] = cfg.initial_window_T;
    j["quantile_R"] = cfg.quantile_R;
    j["hist_bin_width"] = cfg.hist_bin_width;
    j["sigma_scale"] = cfg.sigma_scale;
    j["forest"] = {{"n_trees", cfg.forest.n_trees},
                   {"max_depth", cfg.forest.max_depth},
                   {"min_samples_leaf", cfg.forest.min_samples_leaf},
                   {"bootstrap", cfg.forest.bootstrap},
                   {"features_per_split", cfg.forest.features_per_split}};
    j["convergence_tol"] = cfg.convergence_tol;
    j["max_iterations"] = cfg.max_iterations;
    j["seed"] = cfg.seed;
    j["series_stride_fraction"] = cfg.series_stride_fraction;
    j["empirical_quantile_bounds"] = cfg.empirical_quantile_bounds;
    j["zone_k_max"] = cfg.zone_k_max;
    j["min_fit_support"] = cfg.min_fit_support;
    return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    cfg.theta_sim = j.value("theta_sim", cfg.theta_sim);
    cfg.theta_conf = j.value("theta_conf", cfg.theta_conf);
    cfg.initial_window_T = j.value("initial_window_T", cfg.initial_window_T);
    cfg.quantile_R = j.value("quantile_R", cfg.quantile_R);
    cfg.hist_bin_width = j.value("hist_bin_width", cfg.hist_bin_width);
    cfg.sigma_scale = j.value("sigma_scale", cfg.sigma_scale);
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        cfg.forest.n_trees = f.value("n_trees", cfg.forest.n_trees);
        cfg.forest.max_depth = f.value("max_depth", cfg.forest.max_depth);
        cfg.forest.min_samples_leaf = f.value("min_samples_leaf", cfg.forest.min_samples_leaf);
        cfg.forest.bootstrap = f.value("bootstrap", cfg.forest.bootstrap);
        cfg.forest.features_per_split = f.value("features_per_split", cfg.forest.features_per_split);
    }
    cfg.convergence_tol = j.value("convergence_tol", cfg.convergence_tol);
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.series_stride_fraction = j.value("series_stride_fraction", cfg.series_stride_fraction);
    cfg.empirical_quantile_bounds = j.value("empirical_quantile_bounds", cfg.empirical_quantile_bounds);
    cfg.zone_k_max = j.value("zone_k_max", cfg.zone_k_max);
    cfg.min_fit_support = j.value("min_fit_support", cfg.min_fit_support);
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    nlohmann::json j;
    io_detail::open_in(path) >> j;
    return config_from_json(j);
}

inline ordered_json scenario_to_json(const ScenarioSpec& spec) {
    ordered_json j;
    ordered_json cams = ordered_json::array();
    for (const auto& c : spec.cameras) {
        ordered_json cj;
        cj["id"] = c.id;
        ordered_json zones = ordered_json::array();
        for (const auto& z : c.zones) {
            ordered_json zj;
            zj["zone_id"] = z.zone_id;
            zj["centroid"] = io_detail::point_json(z.centroid);
            zj["sigma"] = z.sigma;
            zones.push_back(std::move(zj));
        }
        cj["zones"] = std::move(zones);
        cams.push_back(std::move(cj));
    }
    j["cameras"] = std::move(cams);
    ordered_json links = ordered_json::array();
    for (const auto& l : spec.gt_links) {
        ordered_json lj;
        lj["source"] = io_detail::node_json(l.source);
        lj["dest"] = io_detail::node_json(l.dest);
        lj["mu"] = l.mu;
        lj["sigma"] = l.sigma;
        lj["p_traverse"] = l.p_traverse;
        links.push_back(std::move(lj));
    }
    j["gt_links"] = std::move(links);
    j["identities"] = spec.identities;
    j["descriptor_dim"] = spec.descriptor_dim;
    j["descriptor_noise"] = spec.descriptor_noise;
    j["distractor_fraction"] = spec.distractor_fraction;
    j["descriptor_mode"] =
        spec.descriptor_mode == DescriptorMode::one_hot ? "one_hot" : "random_orthant";
    j["descriptor_active_dims"] = spec.descriptor_active_dims;
    j["duration"] = spec.duration;
    j["dwell_min"] = spec.dwell_min;
    j["dwell_max"] = spec.dwell_max;
    j["obs_interval"] = spec.obs_interval;
    j["clamp_negative_transits"] = spec.clamp_negative_transits;
    j["avoid_backtrack"] = spec.avoid_backtrack;
    ordered_json noise = ordered_json::object();
    for (const auto& [cam, scale] : spec.camera_noise_scale) noise[std::to_string(cam)] = scale;
    j["camera_noise_scale"] = std::move(noise);
    ordered_json spawn = ordered_json::object();
    for (const auto& [cam, w] : spec.spawn_weights) spawn[std::to_string(cam)] = w;
    j["spawn_weights"] = std::move(spawn);
    j["seed"] = spec.seed;
    return j;
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec spec;
    spec.cameras.clear();
    for (const auto& cj : j.at("cameras")) {
        CameraSpec cam;
        cam.id = cj.at("id").get<CameraId>();
        for (const auto& zj : cj.at("zones")) {
            ZoneSpec z;
            z.zone_id = zj.at("zone_id").get<int>();
            z.centroid = io_detail::point_from(zj.at("centroid"));
            z.sigma = zj.value("sigma", z.sigma);
            cam.zones.push_back(z);
        }
        spec.cameras.push_back(std::move(cam));
    }
    for (const auto& lj : j.value("gt_links", nlohmann::json::array())) {
        LinkSpec l;
        l.source = io_detail::node_from(lj.at("source"));
        l.dest = io_detail::node_from(lj.at("dest"));
        l.mu = lj.at("mu").get<double>();
        l.sigma = lj.at("sigma").get<double>();
        l.p_traverse = lj.value("p_traverse", l.p_traverse);
        spec.gt_links.push_back(l);
    }
    spec.identities = j.value("identities", spec.identities);
    spec.descriptor_dim = j.value("descriptor_dim", spec.descriptor_dim);
    spec.descriptor_noise = j.value("descriptor_noise", spec.descriptor_noise);
    spec.distractor_fraction = j.value("distractor_fraction", spec.distractor_fraction);
    if (j.value("descriptor_mode", "random_orthant") == std::string("one_hot"))
        spec.descriptor_mode = DescriptorMode::one_hot;
    spec.descriptor_active_dims = j.value("descriptor_active_dims", spec.descriptor_active_dims);
    spec.duration = j.value("duration", spec.duration);
    spec.dwell_min = j.value("dwell_min", spec.dwell_min);
    spec.dwell_max = j.value("dwell_max", spec.dwell_max);
    spec.obs_interval = j.value("obs_interval", spec.obs_interval);
    spec.clamp_negative_transits = j.value("clamp_negative_transits", spec.clamp_negative_transits);
    spec.avoid_backtrack = j.value("avoid_backtrack", spec.avoid_backtrack);
    for (const auto& [key, val] : j.value("camera_noise_scale", nlohmann::json::object()).items())
        spec.camera_noise_scale[std::stoi(key)] = val.get<double>();
    for (const auto& [key, val] : j.value("spawn_weights", nlohmann::json::object()).items())
        spec.spawn_weights[std::stoi(key)] = val.get<double>();
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

inline ScenarioSpec load_scenario(const std::string& path) {
    nlohmann::json j;
    io_detail::open_in(path) >> j;
    return scenario_from_json(j);
}

// ---- topology ------------------------------------------------------------

inline ordered_json transit_to_json(const TransitDistribution& d) {
    ordered_json j;
    j["source"] = io_detail::node_json(d.source);
    j["dest"] = io_detail::node_json(d.dest);
    j["mu"] = d.mu;
    j["sigma"] = d.sigma;
    j["amplitude"] = d.amplitude;
    j["fit_error"] = d.fit_error;
    j["confidence"] = d.confidence;
    j["support"] = d.support;
    j["bin_edges"] = d.bin_edges;
    j["masses"] = d.masses;
    return j;
}

inline TransitDistribution transit_from_json(const nlohmann::json& j) {
    TransitDistribution d;
    d.source = io_detail::node_from(j.at("source"));
    d.dest = io_detail::node_from(j.at("dest"));
    d.mu = j.at("mu").get<double>();
    d.sigma = j.at("sigma").get<double>();
    d.amplitude = j.value("amplitude", 0.0);
    d.fit_error = j.at("fit_error").get<double>();
    d.confidence = j.at("confidence").get<double>();
    d.support = j.at("support").get<int>();
    d.bin_edges = j.value("bin_edges", std::vector<double>{});
    d.masses = j.value("masses", std::vector<double>{});
    return d;
}

inline void write_topology(const TopologyBundle& bundle, const std::string& path) {
    ordered_json j;
    ordered_json nodes = ordered_json::array();
    for (const auto& n : bundle.graph.nodes) nodes.push_back(io_detail::node_json(n));
    j["nodes"] = std::move(nodes);
    ordered_json edges = ordered_json::array();
    for (const auto& e : bundle.graph.edges) {
        ordered_json ej;
        ej["source"] = io_detail::node_json(e.source);
        ej["dest"] = io_detail::node_json(e.dest);
        ej["valid"] = e.valid;
        ej["window"] = {{"t_lower", e.window.t_lower},
                        {"t_upper", e.window.t_upper},
                        {"width", e.window.width}};
        ej["dist"] = transit_to_json(e.dist);
        edges.push_back(std::move(ej));
    }
    j["edges"] = std::move(edges);
    ordered_json zones = ordered_json::array();
    for (const auto& z : bundle.zones) zones.push_back(zone_to_json(z));
    j["zones"] = std::move(zones);
    io_detail::open_out(path) << j.dump(2) << '\n';
}

inline TopologyBundle read_topology(const std::string& path) {
    nlohmann::json j;
    io_detail::open_in(path) >> j;
    TopologyBundle bundle;
    for (const auto& nj : j.at("nodes")) bundle.graph.nodes.push_back(io_detail::node_from(nj));
    for (const auto& ej : j.at("edges")) {
        TopologyEdge e;
        e.source = io_detail::node_from(ej.at("source"));
        e.dest = io_detail::node_from(ej.at("dest"));
        e.valid = ej.at("valid").get<bool>();
        const auto& w = ej.at("window");
        e.window = SearchWindow{w.at("t_lower").get<double>(), w.at("t_upper").get<double>(),
                                w.at("width").get<double>()};
        e.dist = transit_from_json(ej.at("dist"));
        bundle.graph.edges.push_back(std::move(e));
    }
    for (const auto& zj : j.at("zones")) bundle.zones.push_back(zone_from_json(zj));
    return bundle;
}

// ---- forests -------------------------------------------------------------

inline ordered_json forest_to_json(const Forest& f) {
    ordered_json j;
    j["dim"] = f.dim;
    j["label_set"] = f.label_set;
    j["window"] = ordered_json::array({f.window_start, f.window_end});
    ordered_json trees = ordered_json::array();
    for (const auto& t : f.trees) {
        ordered_json nodes = ordered_json::array();
        for (const auto& n : t.nodes) {
            ordered_json nj;
            nj["feature"] = n.feature;
            nj["threshold"] = n.threshold;
            nj["left"] = n.left;
            nj["right"] = n.right;
            ordered_json dist = ordered_json::array();
            for (const auto& [label, p] : n.dist) dist.push_back(ordered_json::array({label, p}));
            nj["dist"] = std::move(dist);
            nodes.push_back(std::move(nj));
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

inline Forest forest_from_json(const nlohmann::json& j) {
    Forest f;
    f.dim = j.at("dim").get<std::size_t>();
    f.label_set = j.at("label_set").get<std::vector<LabelId>>();
    f.window_start = j.at("window")[0].get<double>();
    f.window_end = j.at("window")[1].get<double>();
    for (const auto& tj : j.at("trees")) {
        DecisionTree t;
        for (const auto& nj : tj) {
            TreeNode n;
            n.feature = nj.at("feature").get<int>();
            n.threshold = nj.at("threshold").get<double>();
            n.left = nj.at("left").get<int>();
            n.right = nj.at("right").get<int>();
            for (const auto& d : nj.at("dist"))
                n.dist.emplace_back(d[0].get<LabelId>(), d[1].get<double>());
            t.nodes.push_back(std::move(n));
        }
        f.trees.push_back(std::move(t));
    }
    return f;
}

inline void save_forest(const Forest& f, const std::string& path) {
    io_detail::open_out(path) << forest_to_json(f).dump() << '\n';
}

inline Forest load_forest(const std::string& path) {
    nlohmann::json j;
    io_detail::open_in(path) >> j;
    return forest_from_json(j);
}

// ---- correspondences and reports -------------------------------------------

inline void write_correspondences(const std::vector<Correspondence>& cs, const std::string& path) {
    auto out = io_detail::open_out(path);
    for (const auto& c : cs) {
        ordered_json j;
        j["exit_track"] = c.exit_track;
        j["matched_track"] = c.matched_track;
        j["similarity"] = c.similarity;
        j["delta_t"] = c.delta_t;
        j["source"] = io_detail::node_json(c.source);
        j["dest"] = io_detail::node_json(c.dest);
        out << j.dump() << '\n';
    }
}

inline std::vector<Correspondence> read_correspondences(const std::string& path) {
    auto in = io_detail::open_in(path);
    std::vector<Correspondence> cs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Correspondence c;
            c.exit_track = j.at("exit_track").get<TrackRef>();
            c.matched_track = j.at("matched_track").get<TrackRef>();
            c.similarity = j.at("similarity").get<double>();
            c.delta_t = j.at("delta_t").get<double>();
            c.source = io_detail::node_from(j.at("source"));
            c.dest = io_detail::node_from(j.at("dest"));
            cs.push_back(c);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cs;
}

namespace io_detail {

inline ordered_json snapshot_json(const EdgeSnapshot& s) {
    ordered_json j;
    j["source"] = node_json(s.source);
    j["dest"] = node_json(s.dest);
    j["mu"] = s.mu;
    j["sigma"] = s.sigma;
    j["fit_error"] = s.fit_error;
    j["confidence"] = s.confidence;
    j["t_lower"] = s.t_lower;
    j["t_upper"] = s.t_upper;
    j["window"] = s.window;
    j["support"] = s.support;
    j["valid"] = s.valid;
    j["retained"] = s.retained;
    return j;
}

}  // namespace io_detail

// Deterministic pipeline report: per-stage edge tables, per-iteration
// metrics and the final per-edge state. Wall time goes to a separate timing
// file so reports stay byte-reproducible.
inline void write_report(const PipelineState& state, const std::string& path) {
    ordered_json j;
    j["config"] = config_to_json(state.cfg);

    ordered_json cam = ordered_json::array();
    for (const auto& e : state.cam_graph.edges) {
        ordered_json ej;
        ej["source"] = io_detail::node_json(e.source);
        ej["dest"] = io_detail::node_json(e.dest);
        ej["mu"] = e.dist.mu;
        ej["sigma"] = e.dist.sigma;
        ej["fit_error"] = e.dist.fit_error;
        ej["confidence"] = e.dist.confidence;
        ej["support"] = e.dist.support;
        ej["valid"] = e.valid;
        cam.push_back(std::move(ej));
    }
    j["cam_stage"] = {{"edges", std::move(cam)},
                      {"correspondences", state.cam_stage.all.size()},
                      {"reliable", state.cam_stage.reliable.size()},
                      {"comparisons", state.cam_stage.comparisons}};

    ordered_json zones = ordered_json::array();
    for (const auto& z : state.zones) zones.push_back(zone_to_json(z));
    j["zones"] = std::move(zones);

    ordered_json zedges = ordered_json::array();
    for (const auto& e : state.edges) {
        ordered_json ej = transit_to_json(e.dist);
        ej["valid"] = e.valid;
        ej["window"] = {{"t_lower", e.window.t_lower},
                        {"t_upper", e.window.t_upper},
                        {"width", e.window.width}};
        ej["retained"] = e.retained;
        zedges.push_back(std::move(ej));
    }
    j["final_edges"] = std::move(zedges);
    j["zone_stage"] = {{"correspondences", state.zone_stage.all.size()},
                       {"reliable", state.zone_stage.reliable.size()},
                       {"comparisons", state.zone_stage.comparisons}};

    ordered_json its = ordered_json::array();
    for (const auto& it : state.iterations) {
        ordered_json ij;
        ij["index"] = it.index;
        ij["convergence_metric"] = it.convergence_metric;
        ij["became_valid"] = it.became_valid;
        ij["became_invalid"] = it.became_invalid;
        ij["correspondences"] = it.result.all.size();
        ij["reliable"] = it.result.reliable.size();
        ij["comparisons"] = it.result.comparisons;
        ordered_json edges = ordered_json::array();
        for (const auto& s : it.edges) edges.push_back(io_detail::snapshot_json(s));
        ij["edges"] = std::move(edges);
        its.push_back(std::move(ij));
    }
    j["iterations"] = std::move(its);
    j["total_comparisons"] = state.comparisons;
    io_detail::open_out(path) << j.dump(2) << '\n';
}

// Camera-by-camera confidence map of the camera-level stage, as CSV.
inline void write_confidence_matrix(const TopologyGraph& cam_graph, const std::string& path) {
    std::vector<CameraId> cams;
    for (const auto& n : cam_graph.nodes)
        if (n.is_camera_level()) cams.push_back(n.camera);
    std::sort(cams.begin(), cams.end());

    auto out = io_detail::open_out(path);
    out << "camera";
    for (CameraId c : cams) out << ",C" << c;
    out << "\n";
    for (CameraId a : cams) {
        out << "C" << a;
        for (CameraId b : cams) {
            double conf = 0.0;
            if (a != b)
                if (const auto* e = cam_graph.find_edge(NodeId{a, -1}, NodeId{b, -1}))
                    conf = e->dist.confidence;
            out << "," << ordered_json(conf).dump();
        }
        out << "\n";
    }
}

// Plot-ready CSV per edge: bin_center, mass, fitted_value rows followed by
// one summary row.
inline void dump_plot_csv(const TransitDistribution& d, const SearchWindow& window,
                          const std::string& path) {
    auto out = io_detail::open_out(path);
    out << "bin_center,mass,fitted_value\n";
    for (std::size_t i = 0; i + 1 < d.bin_edges.size(); ++i) {
        const double c = 0.5 * (d.bin_edges[i] + d.bin_edges[i + 1]);
        const double z = d.sigma > 0.0 ? (c - d.mu) / d.sigma : 0.0;
        const double fitted = d.amplitude * std::exp(-0.5 * z * z);
        out << ordered_json(c).dump() << "," << ordered_json(d.masses[i]).dump() << ","
            << ordered_json(fitted).dump() << "\n";
    }
    out << "# mu,sigma,fit_error,confidence,support,window\n";
    out << "# " << ordered_json(d.mu).dump() << "," << ordered_json(d.sigma).dump() << ","
        << ordered_json(d.fit_error).dump() << "," << ordered_json(d.confidence).dump() << ","
        << d.support << "," << ordered_json(window.width).dump() << "\n";
}

inline void dump_plot_csvs(const TopologyBundle& bundle, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& e : bundle.graph.edges) {
        if (e.dist.bin_edges.empty()) continue;
        const std::string name = e.source.str() + "_to_" + e.dest.str() + ".csv";
        dump_plot_csv(e.dist, e.window, (std::filesystem::path(out_dir) / name).string());
    }
}

}  // namespace camnet
