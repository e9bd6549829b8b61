#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "camnet/core.hpp"
#include "camnet/io.hpp"
#include "camnet/simgen.hpp"

using namespace camnet;
using Catch::Approx;

namespace {

FeatureVector random_feature(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = u(rng) + 1e-3;
    return FeatureVector(v);
}

PersonTrack random_track(std::mt19937_64& rng, CameraId cam, double t0, int n_obs, int dim) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Observation> obs;
    double t = t0;
    for (int i = 0; i < n_obs; ++i) {
        Observation o;
        o.camera = cam;
        o.time = t;
        o.position = {u(rng), u(rng)};
        o.feature = random_feature(rng, dim);
        obs.push_back(std::move(o));
        t += 0.5 + u(rng);
    }
    std::int64_t label = static_cast<std::int64_t>(u(rng) * 50);
    return PersonTrack::make(label, cam, std::move(obs));
}

std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("feature vector normalizes at construction") {
    FeatureVector f(std::vector<double>{3.0, 4.0});
    REQUIRE(f[0] == Approx(0.6));
    REQUIRE(f[1] == Approx(0.8));
    double norm2 = f.dot(f);
    REQUIRE(norm2 == Approx(1.0).margin(1e-12));
}

TEST_CASE("feature vector construction is idempotent after one normalization") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        FeatureVector f = random_feature(rng, 16);
        FeatureVector g(f.values());
        for (std::size_t k = 0; k < f.dim(); ++k) REQUIRE(g[k] == Approx(f[k]).margin(1e-12));
    }
}

TEST_CASE("feature vector rejects invalid input") {
    REQUIRE_THROWS_AS(FeatureVector(std::vector<double>{1.0, -0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(FeatureVector(std::vector<double>{0.0, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(FeatureVector(std::vector<double>{1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("person track derives endpoints and validates ordering") {
    std::mt19937_64 rng(3);
    PersonTrack t = random_track(rng, 2, 10.0, 5, 8);
    REQUIRE(t.entry_time == t.observations.front().time);
    REQUIRE(t.exit_time == t.observations.back().time);
    REQUIRE(t.camera == 2);

    std::vector<Observation> bad = t.observations;
    std::swap(bad[1], bad[2]);
    REQUIRE_THROWS_WITH(PersonTrack::make(t.label, 2, bad),
                        Catch::Matchers::ContainsSubstring("strictly increasing"));

    bad = t.observations;
    bad[1].camera = 3;
    REQUIRE_THROWS_WITH(PersonTrack::make(t.label, 2, bad),
                        Catch::Matchers::ContainsSubstring("camera"));

    REQUIRE_THROWS_AS(PersonTrack::make(t.label, 2, std::vector<Observation>{}),
                      std::invalid_argument);
}

TEST_CASE("event stream round-trips through the jsonl format") {
    std::mt19937_64 rng(11);
    EventStream stream;
    for (int i = 0; i < 20; ++i)
        stream.push_back(random_track(rng, 1 + i % 3, i * 7.0, 2 + i % 5, 12));
    stream[4].label.reset();  // blind track

    const std::string path = temp_file("camnet_roundtrip.jsonl");
    GroundTruth gt;
    gt.correspondences = {{0, 3}, {1, 5}};
    GtLink link;
    link.source = NodeId{1, 0};
    link.dest = NodeId{2, 1};
    link.mu = 12.5;
    link.sigma = 2.0;
    link.pairs = {{0, 3}};
    link.delta_ts = {11.7};
    gt.links.push_back(link);
    export_events(stream, gt, path);

    const SimResult back = import_events(path);
    REQUIRE(back.stream.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& a = stream[i];
        const auto& b = back.stream[i];
        REQUIRE(a.camera == b.camera);
        REQUIRE(a.label == b.label);
        REQUIRE(b.entry_time == Approx(a.entry_time).margin(1e-9));
        REQUIRE(b.exit_time == Approx(a.exit_time).margin(1e-9));
        REQUIRE(a.observations.size() == b.observations.size());
        for (std::size_t k = 0; k < a.observations.size(); ++k) {
            REQUIRE(b.observations[k].time == Approx(a.observations[k].time).margin(1e-9));
            REQUIRE(b.observations[k].position.x ==
                    Approx(a.observations[k].position.x).margin(1e-9));
            for (std::size_t d = 0; d < a.observations[k].feature.dim(); ++d)
                REQUIRE(b.observations[k].feature[d] ==
                        Approx(a.observations[k].feature[d]).margin(1e-9));
        }
    }
    REQUIRE(back.gt.correspondences == gt.correspondences);
    REQUIRE(back.gt.links.size() == 1);
    REQUIRE(back.gt.links[0].mu == Approx(12.5));
    std::remove(path.c_str());
    std::remove(gt_path_for(path).c_str());
}

TEST_CASE("import rejects a track with unsorted observations, naming the line") {
    const std::string path = temp_file("camnet_unsorted.jsonl");
    {
        std::ofstream out(path);
        out << R"({"camera":1,"label":0,"entry_time":0.0,"exit_time":1.0,"entry_point":[0.1,0.1],"exit_point":[0.2,0.2],"observations":[{"time":0.0,"position":[0.1,0.1],"feature":[1.0,0.0]},{"time":1.0,"position":[0.2,0.2],"feature":[1.0,0.0]}]})"
            << "\n";
        out << R"({"camera":1,"label":1,"entry_time":0.0,"exit_time":1.0,"entry_point":[0.1,0.1],"exit_point":[0.2,0.2],"observations":[{"time":1.0,"position":[0.1,0.1],"feature":[1.0,0.0]},{"time":0.0,"position":[0.2,0.2],"feature":[1.0,0.0]}]})"
            << "\n";
    }
    REQUIRE_THROWS_WITH(read_event_stream(path), Catch::Matchers::ContainsSubstring(":2:"));
    std::remove(path.c_str());
}

TEST_CASE("empty stream exports to a valid empty file") {
    const std::string path = temp_file("camnet_empty.jsonl");
    export_events({}, GroundTruth{}, path);
    const SimResult back = import_events(path);
    REQUIRE(back.stream.empty());
    REQUIRE(back.gt.correspondences.empty());
    std::remove(path.c_str());
    std::remove(gt_path_for(path).c_str());
}

TEST_CASE("pipeline config validates its ranges") {
    PipelineConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.theta_sim = 1.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PipelineConfig{};
    cfg.quantile_R = 100.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PipelineConfig{};
    cfg.initial_window_T = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config round-trips through json") {
    PipelineConfig cfg;
    cfg.theta_sim = 0.65;
    cfg.forest.n_trees = 17;
    cfg.seed = 99;
    const auto j = config_to_json(cfg);
    const PipelineConfig back = config_from_json(j);
    REQUIRE(back.theta_sim == Approx(0.65));
    REQUIRE(back.forest.n_trees == 17);
    REQUIRE(back.seed == 99);
}
