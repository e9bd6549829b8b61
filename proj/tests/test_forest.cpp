#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "camnet/forest.hpp"

using namespace camnet;
using Catch::Approx;

namespace {

FeatureVector clamped_feature(const std::vector<double>& base, double sigma,
                              std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(base.size());
    double norm2 = 0.0;
    while (norm2 <= 1e-12) {
        norm2 = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            v[i] = std::max(0.0, base[i] + sigma * g(rng));
            norm2 += v[i] * v[i];
        }
    }
    return FeatureVector(v);
}

PersonTrack track_with_features(CameraId cam, double t0, std::int64_t label,
                                std::vector<FeatureVector> feats) {
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        Observation o;
        o.camera = cam;
        o.time = t0 + static_cast<double>(i);
        o.position = {0.5, 0.5};
        o.feature = std::move(feats[i]);
        obs.push_back(std::move(o));
    }
    return PersonTrack::make(label, cam, std::move(obs));
}

FeatureVector axis(int i, int dim) {
    std::vector<double> v(dim, 1e-6);
    v[i] = 1.0;
    return FeatureVector(v);
}

// hand-built forest: one tree splitting feature 0 at 0.5
Forest two_leaf_forest() {
    Forest f;
    f.dim = 2;
    f.label_set = {1, 2};
    DecisionTree t;
    TreeNode root;
    root.feature = 0;
    root.threshold = 0.5;
    root.left = 1;
    root.right = 2;
    TreeNode left, right;
    left.dist = {{1, 0.2}, {2, 0.8}};
    right.dist = {{1, 0.8}, {2, 0.2}};
    t.nodes = {root, left, right};
    f.trees.push_back(t);
    return f;
}

}  // namespace

TEST_CASE("single-label gallery yields a one-hot posterior") {
    std::mt19937_64 rng(1);
    std::vector<double> base(8, 0.3);
    std::vector<PersonTrack> gallery;
    gallery.push_back(track_with_features(
        1, 0.0, 42,
        {clamped_feature(base, 0.1, rng), clamped_feature(base, 0.1, rng)}));
    const Forest f = train_forest(gallery, ForestHyper{}, 7);
    REQUIRE(f.label_set == std::vector<LabelId>{42});

    const Posterior p = predict_posterior(f, clamped_feature(base, 0.3, rng));
    REQUIRE(p.at(42) == Approx(1.0));
    const BestMatch bm = best_match(f, gallery[0]);
    REQUIRE(bm.label == 42);
    REQUIRE(bm.posterior == Approx(1.0));
}

TEST_CASE("indistinguishable classes fall back to the class priors") {
    std::vector<double> base(8, 0.3);
    const FeatureVector same(base);
    std::vector<PersonTrack> gallery;
    gallery.push_back(track_with_features(1, 0.0, 1, std::vector<FeatureVector>(10, same)));
    gallery.push_back(track_with_features(1, 20.0, 2, std::vector<FeatureVector>(10, same)));
    const Forest f = train_forest(gallery, ForestHyper{}, 3);
    const Posterior p = predict_posterior(f, same);
    REQUIRE(p.at(1) == Approx(0.5).margin(0.1));
    REQUIRE(p.at(2) == Approx(0.5).margin(0.1));
}

TEST_CASE("well-separated clusters classify held-out points") {
    // two centers 4 sigma apart, 50 observations each, checked over 10 seeds
    int correct = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(900 + seed);
        const int dim = 8;
        std::vector<double> c1(dim, 0.1), c2(dim, 0.1);
        c1[0] = 0.8;
        c2[1] = 0.8;
        // ||c1 - c2|| = 0.99; sigma so the centers sit 4 sigma apart
        const double sigma = 0.99 / 4.0;

        std::vector<FeatureVector> f1, f2, h1, h2;
        for (int i = 0; i < 50; ++i) {
            f1.push_back(clamped_feature(c1, sigma, rng));
            f2.push_back(clamped_feature(c2, sigma, rng));
        }
        for (int i = 0; i < 20; ++i) {
            h1.push_back(clamped_feature(c1, sigma, rng));
            h2.push_back(clamped_feature(c2, sigma, rng));
        }
        std::vector<PersonTrack> gallery;
        gallery.push_back(track_with_features(1, 0.0, 1, f1));
        gallery.push_back(track_with_features(1, 100.0, 2, f2));
        const Forest f = train_forest(gallery, ForestHyper{}, seed);

        for (const auto& v : h1) {
            const Posterior p = predict_posterior(f, v);
            correct += (p.count(1) ? p.at(1) : 0.0) > (p.count(2) ? p.at(2) : 0.0) ? 1 : 0;
            ++total;
        }
        for (const auto& v : h2) {
            const Posterior p = predict_posterior(f, v);
            correct += (p.count(2) ? p.at(2) : 0.0) > (p.count(1) ? p.at(1) : 0.0) ? 1 : 0;
            ++total;
        }
    }
    REQUIRE(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("posteriors are probability vectors") {
    std::mt19937_64 rng(5);
    std::vector<double> base(16, 0.2);
    std::vector<PersonTrack> gallery;
    for (int i = 0; i < 6; ++i) {
        std::vector<FeatureVector> fs;
        for (int k = 0; k < 5; ++k) fs.push_back(clamped_feature(base, 0.3, rng));
        gallery.push_back(track_with_features(1, i * 10.0, i, fs));
    }
    const Forest f = train_forest(gallery, ForestHyper{}, 11);
    for (int i = 0; i < 50; ++i) {
        const Posterior p = predict_posterior(f, clamped_feature(base, 0.5, rng));
        double sum = 0.0;
        for (const auto& [label, prob] : p) {
            REQUIRE(prob >= 0.0);
            sum += prob;
        }
        REQUIRE(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("deep pure forests recall their training observations") {
    std::mt19937_64 rng(6);
    ForestHyper pure;
    pure.n_trees = 10;
    pure.max_depth = 64;
    pure.min_samples_leaf = 1;
    pure.bootstrap = false;
    pure.features_per_split = 16;  // all features

    std::vector<double> base(16, 0.2);
    std::vector<PersonTrack> gallery;
    for (int i = 0; i < 20; ++i) {
        std::vector<FeatureVector> fs;
        for (int k = 0; k < 3; ++k) fs.push_back(clamped_feature(base, 0.4, rng));
        gallery.push_back(track_with_features(1, i * 10.0, i, fs));
    }
    const Forest f = train_forest(gallery, pure, 13);
    for (const auto& t : gallery) {
        for (const auto& o : t.observations) {
            const Posterior p = predict_posterior(f, o.feature);
            LabelId argmax = -1;
            double best = -1.0;
            for (const auto& [label, prob] : p)
                if (prob > best) {
                    best = prob;
                    argmax = label;
                }
            REQUIRE(argmax == *t.label);
        }
    }
}

TEST_CASE("a single deep tree matches brute-force nearest training observation") {
    std::mt19937_64 rng(8);
    ForestHyper single;
    single.n_trees = 1;
    single.max_depth = 64;
    single.min_samples_leaf = 1;
    single.bootstrap = false;
    single.features_per_split = 12;

    std::vector<double> base(12, 0.25);
    std::vector<PersonTrack> gallery;
    for (int i = 0; i < 10; ++i) {
        std::vector<FeatureVector> fs;
        for (int k = 0; k < 4; ++k) fs.push_back(clamped_feature(base, 0.35, rng));
        gallery.push_back(track_with_features(1, i * 10.0, i, fs));
    }
    const Forest f = train_forest(gallery, single, 21);

    for (const auto& t : gallery) {
        for (const auto& o : t.observations) {
            // brute force: nearest training observation by Euclidean distance
            double best_d = 1e18;
            LabelId best_label = -1;
            for (const auto& g : gallery)
                for (const auto& go : g.observations) {
                    double d = 0.0;
                    for (std::size_t k = 0; k < o.feature.dim(); ++k) {
                        const double diff = o.feature[k] - go.feature[k];
                        d += diff * diff;
                    }
                    if (d < best_d) {
                        best_d = d;
                        best_label = *g.label;
                    }
                }
            const PersonTrack probe = track_with_features(1, 0.0, 0, {o.feature});
            REQUIRE(best_match(f, probe).label == best_label);
        }
    }
}

TEST_CASE("multishot prediction averages the single-shot posteriors") {
    const Forest f = two_leaf_forest();
    const FeatureVector left = axis(1, 2);   // feature 0 tiny -> left leaf
    const FeatureVector right = axis(0, 2);  // feature 0 large -> right leaf

    SECTION("one observation equals the single-shot posterior") {
        const PersonTrack probe = track_with_features(1, 0.0, 0, {left});
        const Posterior ms = predict_multishot(f, probe);
        const Posterior ss = predict_posterior(f, left);
        REQUIRE(ms.at(1) == Approx(ss.at(1)));
        REQUIRE(ms.at(2) == Approx(ss.at(2)));
    }
    SECTION("a repeated observation changes nothing") {
        const PersonTrack probe =
            track_with_features(1, 0.0, 0, std::vector<FeatureVector>(5, left));
        const Posterior ms = predict_multishot(f, probe);
        REQUIRE(ms.at(1) == Approx(0.2));
        REQUIRE(ms.at(2) == Approx(0.8));
    }
    SECTION("balanced opposing observations average to uniform") {
        const PersonTrack probe = track_with_features(1, 0.0, 0, {left, right});
        const Posterior ms = predict_multishot(f, probe);
        REQUIRE(ms.at(1) == Approx(0.5));
        REQUIRE(ms.at(2) == Approx(0.5));
    }
    SECTION("equals the arithmetic mean on random probes") {
        std::mt19937_64 rng(33);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int i = 0; i < 20; ++i) {
            std::vector<FeatureVector> fs;
            const int k = 1 + i % 4;
            for (int j = 0; j < k; ++j)
                fs.push_back(FeatureVector(std::vector<double>{u(rng), u(rng)}));
            const PersonTrack probe = track_with_features(1, 0.0, 0, fs);
            const Posterior ms = predict_multishot(f, probe);
            double sum1 = 0.0, sum2 = 0.0;
            for (const auto& fv : probe.observations) {
                const Posterior ss = predict_posterior(f, fv.feature);
                sum1 += ss.at(1);
                sum2 += ss.at(2);
            }
            REQUIRE(ms.at(1) == Approx(sum1 / k).margin(1e-12));
            REQUIRE(ms.at(2) == Approx(sum2 / k).margin(1e-12));
        }
    }
}

TEST_CASE("best match breaks ties toward the smaller label") {
    Forest f;
    f.dim = 2;
    f.label_set = {3, 7};
    DecisionTree t;
    TreeNode leaf;
    leaf.dist = {{3, 0.5}, {7, 0.5}};
    t.nodes = {leaf};
    f.trees.push_back(t);

    const PersonTrack probe = track_with_features(1, 0.0, 0, {axis(0, 2)});
    const BestMatch bm = best_match(f, probe);
    REQUIRE(bm.label == 3);
    REQUIRE(bm.posterior == Approx(0.5));
}

TEST_CASE("best match is invariant under monotone posterior rescaling") {
    const Forest f = two_leaf_forest();
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 30; ++i) {
        const PersonTrack probe = track_with_features(
            1, 0.0, 0, {FeatureVector(std::vector<double>{u(rng), u(rng)})});
        const Posterior p = predict_multishot(f, probe);
        const LabelId reference = best_match(f, probe).label;
        auto argmax_of = [&](auto&& rescale) {
            LabelId arg = -1;
            double best = -1e18;
            for (const auto& [label, prob] : p) {
                const double v = rescale(prob);
                if (v > best) {
                    best = v;
                    arg = label;
                }
            }
            return arg;
        };
        if (p.at(1) == p.at(2)) continue;  // exact ties are resolved by label, not value
        REQUIRE(argmax_of([](double x) { return x * x; }) == reference);
        REQUIRE(argmax_of([](double x) { return std::log(x + 1.0); }) == reference);
        REQUIRE(argmax_of([](double x) { return 5.0 * x - 2.0; }) == reference);
    }
}

TEST_CASE("similarity is the max cosine over observation pairs") {
    const FeatureVector e1 = axis(0, 4), e2 = axis(1, 4);
    const PersonTrack a = track_with_features(1, 0.0, 0, {e1});
    const PersonTrack b = track_with_features(2, 10.0, 0, {e2});
    const PersonTrack c = track_with_features(2, 20.0, 0, {e2, e1});

    REQUIRE(similarity(a, a) == Approx(1.0).margin(1e-9));
    REQUIRE(similarity(a, b) == Approx(0.0).margin(1e-5));
    REQUIRE(similarity(a, c) == Approx(1.0).margin(1e-9));
    REQUIRE(similarity(a, c) == Approx(similarity(c, a)));
}

TEST_CASE("forest training errors are descriptive") {
    REQUIRE_THROWS_WITH(train_forest(std::vector<PersonTrack>{}, ForestHyper{}, 1),
                        Catch::Matchers::ContainsSubstring("empty gallery"));

    std::mt19937_64 rng(2);
    std::vector<double> base(4, 0.4);
    std::vector<PersonTrack> gallery;
    gallery.push_back(track_with_features(1, 0.0, 1,
                                          {clamped_feature(base, 0.2, rng),
                                           clamped_feature(base, 0.2, rng)}));
    gallery[0].label.reset();
    REQUIRE_THROWS_WITH(train_forest(gallery, ForestHyper{}, 1),
                        Catch::Matchers::ContainsSubstring("unlabeled track in gallery"));

    gallery[0].label = 1;
    const Forest f = train_forest(gallery, ForestHyper{}, 1);
    REQUIRE_THROWS_AS(predict_posterior(f, axis(0, 7)), std::invalid_argument);
}

TEST_CASE("forest series slices the gallery by entry time") {
    std::mt19937_64 rng(3);
    std::vector<double> base(4, 0.4);
    auto make_track = [&](double t) {
        return track_with_features(1, t, 0,
                                   {clamped_feature(base, 0.2, rng),
                                    clamped_feature(base, 0.2, rng)});
    };

    SECTION("all tracks at t=0 give exactly one slot") {
        std::vector<PersonTrack> tracks = {make_track(0.0), make_track(0.0)};
        std::vector<GalleryEntry> gallery;
        for (std::size_t i = 0; i < tracks.size(); ++i)
            gallery.push_back({&tracks[i], static_cast<LabelId>(i)});
        const ForestSeries s = train_forest_series(gallery, 600.0, 600.0, ForestHyper{}, 1);
        REQUIRE(s.slots.size() == 1);
        REQUIRE(s.slots[0].forest.label_set.size() == 2);
    }
    SECTION("tracks at 0 and 1000 give two singleton slots") {
        std::vector<PersonTrack> tracks = {make_track(0.0), make_track(1000.0)};
        std::vector<GalleryEntry> gallery;
        for (std::size_t i = 0; i < tracks.size(); ++i)
            gallery.push_back({&tracks[i], static_cast<LabelId>(i)});
        const ForestSeries s = train_forest_series(gallery, 600.0, 600.0, ForestHyper{}, 1);
        REQUIRE(s.slots.size() == 2);
        REQUIRE(s.slots[0].forest.label_set == std::vector<LabelId>{0});
        REQUIRE(s.slots[1].forest.label_set == std::vector<LabelId>{1});
    }
    SECTION("doubling the window makes each slot a superset") {
        std::vector<PersonTrack> tracks;
        std::uniform_real_distribution<double> u(0.0, 3000.0);
        for (int i = 0; i < 40; ++i) tracks.push_back(make_track(u(rng)));
        std::vector<GalleryEntry> gallery;
        for (std::size_t i = 0; i < tracks.size(); ++i)
            gallery.push_back({&tracks[i], static_cast<LabelId>(i)});
        const double T = 400.0, stride = 400.0;
        const ForestSeries narrow = train_forest_series(gallery, T, stride, ForestHyper{}, 1);
        const ForestSeries wide = train_forest_series(gallery, 2.0 * T, stride, ForestHyper{}, 1);
        for (const auto& slot : narrow.slots) {
            const double start = slot.center - T / 2.0;
            const ForestSlot* match = nullptr;
            for (const auto& ws : wide.slots)
                if (std::fabs((ws.center - T) - start) < 1e-9) match = &ws;
            REQUIRE(match != nullptr);
            for (LabelId l : slot.forest.label_set) {
                const auto& wl = match->forest.label_set;
                REQUIRE(std::find(wl.begin(), wl.end(), l) != wl.end());
            }
        }
    }
    SECTION("empty gallery gives an empty series, not an error") {
        const ForestSeries s = train_forest_series({}, 600.0, 600.0, ForestHyper{}, 1);
        REQUIRE(s.empty());
        REQUIRE_THROWS_WITH(forest_for_time(s, 0.0),
                            Catch::Matchers::ContainsSubstring("no forest available"));
    }
}

TEST_CASE("forest selection minimizes the slot-center distance") {
    std::mt19937_64 rng(4);
    std::vector<double> base(4, 0.4);
    auto make_track = [&](double t) {
        return track_with_features(1, t, 0,
                                   {clamped_feature(base, 0.2, rng),
                                    clamped_feature(base, 0.2, rng)});
    };
    std::vector<PersonTrack> tracks = {make_track(10.0), make_track(610.0)};
    std::vector<GalleryEntry> gallery;
    for (std::size_t i = 0; i < tracks.size(); ++i)
        gallery.push_back({&tracks[i], static_cast<LabelId>(i)});
    const ForestSeries s = train_forest_series(gallery, 600.0, 600.0, ForestHyper{}, 1);
    REQUIRE(s.slots.size() == 2);
    const double c0 = s.slots[0].center;  // 310
    const double c1 = s.slots[1].center;  // 910
    REQUIRE(c0 == Approx(310.0));
    REQUIRE(c1 == Approx(910.0));

    REQUIRE(forest_for_time(s, 400.0).center == Approx(c0));
    REQUIRE(forest_for_time(s, 800.0).center == Approx(c1));
    // equidistant target resolves to the earlier slot
    REQUIRE(forest_for_time(s, 610.0).center == Approx(c0));

    SECTION("single slot serves every time") {
        std::vector<GalleryEntry> one = {gallery[0]};
        const ForestSeries s1 = train_forest_series(one, 600.0, 600.0, ForestHyper{}, 1);
        REQUIRE(s1.slots.size() == 1);
        REQUIRE(forest_for_time(s1, -1e6).center == forest_for_time(s1, 1e6).center);
    }
}

TEST_CASE("forest training is deterministic for a fixed seed") {
    std::mt19937_64 rng(12);
    std::vector<double> base(8, 0.3);
    std::vector<PersonTrack> gallery;
    for (int i = 0; i < 5; ++i) {
        std::vector<FeatureVector> fs;
        for (int k = 0; k < 6; ++k) fs.push_back(clamped_feature(base, 0.3, rng));
        gallery.push_back(track_with_features(1, i * 5.0, i, fs));
    }
    const Forest a = train_forest(gallery, ForestHyper{}, 99);
    const Forest b = train_forest(gallery, ForestHyper{}, 99);
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
        for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
            REQUIRE(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
            REQUIRE(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
            REQUIRE(a.trees[t].nodes[n].dist == b.trees[t].nodes[n].dist);
        }
    }
}
