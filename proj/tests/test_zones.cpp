#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "camnet/zones.hpp"

using namespace camnet;
using Catch::Approx;

TEST_CASE("identical points collapse to a single zone at that point") {
    const std::vector<Point2> pts(40, Point2{0.3, 0.7});
    const auto zones = learn_zones_for(1, ZoneKind::exit, pts, 5, 1);
    REQUIRE(zones.size() == 1);
    REQUIRE(zones[0].centroid.x == Approx(0.3).margin(1e-9));
    REQUIRE(zones[0].centroid.y == Approx(0.7).margin(1e-9));
    REQUIRE(zones[0].spread.positive_definite());
}

TEST_CASE("two well-separated clouds yield two zones near the cloud means") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        std::mt19937_64 rng(seed * 101);
        std::normal_distribution<double> g(0.0, 1.0);
        const double spread = 0.02;
        const Point2 m1{0.2, 0.2}, m2{0.8, 0.8};  // 10+ spreads apart
        std::vector<Point2> pts;
        for (int i = 0; i < 100; ++i)
            pts.push_back({m1.x + spread * g(rng), m1.y + spread * g(rng)});
        for (int i = 0; i < 100; ++i)
            pts.push_back({m2.x + spread * g(rng), m2.y + spread * g(rng)});

        const auto zones = learn_zones_for(2, ZoneKind::entry, pts, 5, seed);
        REQUIRE(zones.size() == 2);
        // zones are ordered by centroid x
        REQUIRE(zones[0].centroid.x == Approx(m1.x).margin(0.02));
        REQUIRE(zones[0].centroid.y == Approx(m1.y).margin(0.02));
        REQUIRE(zones[1].centroid.x == Approx(m2.x).margin(0.02));
        REQUIRE(zones[1].centroid.y == Approx(m2.y).margin(0.02));
    }
}

TEST_CASE("k_max = 1 forces a single zone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({u(rng), u(rng)});
    const auto zones = learn_zones_for(3, ZoneKind::exit, pts, 1, 2);
    REQUIRE(zones.size() == 1);
}

TEST_CASE("zone learning rejects empty input naming the camera and kind") {
    REQUIRE_THROWS_WITH(learn_zones_for(7, ZoneKind::entry, {}, 5, 1),
                        Catch::Matchers::ContainsSubstring("entry") &&
                            Catch::Matchers::ContainsSubstring("7"));
}

TEST_CASE("zone learning is deterministic for a fixed seed") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Point2> pts;
    for (int i = 0; i < 80; ++i)
        pts.push_back({0.4 + 0.05 * g(rng), 0.5 + 0.03 * g(rng)});
    for (int i = 0; i < 80; ++i)
        pts.push_back({0.9 + 0.02 * g(rng), 0.1 + 0.02 * g(rng)});
    const auto a = learn_zones_for(1, ZoneKind::exit, pts, 5, 42);
    const auto b = learn_zones_for(1, ZoneKind::exit, pts, 5, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].centroid.x == b[i].centroid.x);
        REQUIRE(a[i].centroid.y == b[i].centroid.y);
        REQUIRE(a[i].spread.xx == b[i].spread.xx);
    }
}

TEST_CASE("zone assignment maximizes the Gaussian likelihood") {
    const Cov2 iso{0.01, 0.0, 0.01};
    std::vector<Zone> zones = {
        Zone::make(1, 0, ZoneKind::entry, {0.2, 0.5}, iso),
        Zone::make(1, 1, ZoneKind::entry, {0.8, 0.5}, iso),
        Zone::make(1, 2, ZoneKind::exit, {0.5, 0.9}, iso),
        Zone::make(2, 0, ZoneKind::entry, {0.5, 0.5}, iso),
    };

    SECTION("single matching zone wins by default") {
        REQUIRE(assign_zone(zones, 1, ZoneKind::exit, {0.1, 0.1}).zone_id == 2);
    }
    SECTION("equal covariances reduce to nearest centroid") {
        REQUIRE(assign_zone(zones, 1, ZoneKind::entry, {0.3, 0.5}).zone_id == 0);
        REQUIRE(assign_zone(zones, 1, ZoneKind::entry, {0.75, 0.5}).zone_id == 1);
    }
    SECTION("likelihood ties resolve to the lowest zone id") {
        REQUIRE(assign_zone(zones, 1, ZoneKind::entry, {0.5, 0.5}).zone_id == 0);
    }
    SECTION("missing camera/kind is an error") {
        REQUIRE_THROWS_AS(assign_zone(zones, 9, ZoneKind::entry, {0.5, 0.5}),
                          std::invalid_argument);
    }
}

TEST_CASE("stream-level zone learning covers every camera and kind") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    EventStream stream;
    for (int cam = 1; cam <= 2; ++cam) {
        for (int i = 0; i < 50; ++i) {
            Observation a, b;
            a.camera = cam;
            a.time = i * 10.0;
            a.position = {std::clamp(0.1 + 0.02 * g(rng), 0.0, 1.0),
                          std::clamp(0.5 + 0.02 * g(rng), 0.0, 1.0)};
            a.feature = FeatureVector(std::vector<double>{1.0, 0.5});
            b = a;
            b.time = a.time + 5.0;
            b.position = {std::clamp(0.9 + 0.02 * g(rng), 0.0, 1.0),
                          std::clamp(0.5 + 0.02 * g(rng), 0.0, 1.0)};
            stream.push_back(PersonTrack::make(i, cam, {a, b}));
        }
    }
    const auto zones = learn_zones(stream, 5, 3);
    int entry1 = 0, exit1 = 0, entry2 = 0, exit2 = 0;
    for (const auto& z : zones) {
        if (z.camera == 1 && z.kind == ZoneKind::entry) ++entry1;
        if (z.camera == 1 && z.kind == ZoneKind::exit) ++exit1;
        if (z.camera == 2 && z.kind == ZoneKind::entry) ++entry2;
        if (z.camera == 2 && z.kind == ZoneKind::exit) ++exit2;
    }
    REQUIRE(entry1 == 1);
    REQUIRE(exit1 == 1);
    REQUIRE(entry2 == 1);
    REQUIRE(exit2 == 1);
}
