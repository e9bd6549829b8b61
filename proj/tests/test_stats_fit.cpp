#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "camnet/gaussfit.hpp"
#include "camnet/stats.hpp"
#include "camnet/topology.hpp"

using namespace camnet;
using Catch::Approx;

TEST_CASE("normal quantile matches the 95% central interval") {
    REQUIRE(normal_quantile(0.975) == Approx(1.959964).margin(1e-5));
    REQUIRE(normal_quantile(0.5) == Approx(0.0).margin(1e-12));
    REQUIRE(normal_quantile(0.975) == Approx(-normal_quantile(0.025)).margin(1e-12));
}

TEST_CASE("time bounds cover the requested central mass") {
    SECTION("standard normal, R = 95") {
        const SearchWindow w = time_bounds(0.0, 1.0, 95.0);
        REQUIRE(w.t_lower == Approx(-1.960).margin(1e-3));
        REQUIRE(w.t_upper == Approx(1.960).margin(1e-3));
    }
    SECTION("scale-shift: mu 30 sigma 5") {
        const SearchWindow w = time_bounds(30.0, 5.0, 95.0);
        REQUIRE(w.t_lower == Approx(20.2).margin(0.1));
        REQUIRE(w.t_upper == Approx(39.8).margin(0.1));
    }
    SECTION("R -> 0 collapses to mu") {
        const SearchWindow w = time_bounds(12.0, 3.0, 1e-6);
        REQUIRE(w.t_lower == Approx(12.0).margin(1e-6));
        REQUIRE(w.t_upper == Approx(12.0).margin(1e-6));
    }
    SECTION("mass check within 1e-6 on random inputs") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> mu_d(-50.0, 50.0), sigma_d(0.1, 30.0),
            r_d(1.0, 99.0);
        for (int i = 0; i < 1000; ++i) {
            const double mu = mu_d(rng), sigma = sigma_d(rng), R = r_d(rng);
            const SearchWindow w = time_bounds(mu, sigma, R);
            const double mass =
                normal_cdf((w.t_upper - mu) / sigma) - normal_cdf((w.t_lower - mu) / sigma);
            REQUIRE(mass == Approx(R / 100.0).margin(1e-6));
        }
    }
    REQUIRE_THROWS_AS(time_bounds(0.0, -1.0, 95.0), std::invalid_argument);
    REQUIRE_THROWS_AS(time_bounds(0.0, 1.0, 100.0), std::invalid_argument);
}

TEST_CASE("window update follows the error-inflated bound gap") {
    REQUIRE(update_window(0.0, 10.0, 30.0) == Approx(20.0));
    REQUIRE(update_window(0.5, 10.0, 30.0) == Approx(40.0));
    REQUIRE(update_window(0.9, 0.0, 10.0) == Approx(100.0));
    REQUIRE_THROWS_WITH(update_window(1.0, 0.0, 10.0),
                        Catch::Matchers::ContainsSubstring("degenerate fit"));
    REQUIRE_THROWS_AS(update_window(0.2, 5.0, 5.0), std::invalid_argument);

    SECTION("non-decreasing in the fit error") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> e_d(0.0, 0.99), lo_d(-10.0, 10.0);
        for (int i = 0; i < 200; ++i) {
            const double lo = lo_d(rng), hi = lo + 1.0 + e_d(rng) * 20.0;
            double e1 = e_d(rng), e2 = e_d(rng);
            if (e1 > e2) std::swap(e1, e2);
            REQUIRE(update_window(e1, lo, hi) <= update_window(e2, lo, hi) + 1e-12);
        }
    }
}

TEST_CASE("connectivity confidence behaves per the defining formula") {
    REQUIRE(connectivity_confidence(1e-9, 0.0, 60.0) == Approx(1.0).margin(1e-6));
    REQUIRE(connectivity_confidence(5.0, 1.0, 60.0) == Approx(0.0).margin(1e-12));
    // sigma 6.04 s on a 60 s scale with E = 0.1
    REQUIRE(connectivity_confidence(6.04, 0.1, 60.0) == Approx(0.8138).margin(1e-3));
    REQUIRE_THROWS_AS(connectivity_confidence(0.0, 0.1, 60.0), std::invalid_argument);
    REQUIRE_THROWS_AS(connectivity_confidence(1.0, 0.1, 0.0), std::invalid_argument);

    SECTION("strictly decreasing in sigma and in E") {
        std::mt19937_64 rng(123);
        std::uniform_real_distribution<double> s_d(0.01, 100.0), e_d(0.0, 0.999);
        for (int i = 0; i < 1000; ++i) {
            double s1 = s_d(rng), s2 = s_d(rng), e = e_d(rng);
            if (s1 == s2) continue;
            if (s1 > s2) std::swap(s1, s2);
            REQUIRE(connectivity_confidence(s1, e, 60.0) > connectivity_confidence(s2, e, 60.0));
            double e1 = e_d(rng), e2 = e_d(rng), s = s_d(rng);
            if (e1 == e2) continue;
            if (e1 > e2) std::swap(e1, e2);
            REQUIRE(connectivity_confidence(s, e1, 60.0) > connectivity_confidence(s, e2, 60.0));
        }
    }
}

TEST_CASE("histogram counts and normalizes") {
    SECTION("boundary samples join the lower bin") {
        const Histogram h = build_histogram({10.0, 10.0, 20.0}, 10.0, 0.0, 30.0);
        REQUIRE(h.bins() == 3);
        REQUIRE(h.masses[0] == Approx(2.0 / 3.0));
        REQUIRE(h.masses[1] == Approx(1.0 / 3.0));
        REQUIRE(h.masses[2] == 0.0);
        REQUIRE(h.support == 3);
    }
    SECTION("single sample") {
        const Histogram h = build_histogram({5.0}, 2.0, 0.0, 10.0);
        double total = 0.0;
        int nonzero = 0;
        for (double m : h.masses) {
            total += m;
            nonzero += m > 0.0 ? 1 : 0;
        }
        REQUIRE(total == Approx(1.0));
        REQUIRE(nonzero == 1);
    }
    SECTION("out-of-range samples are discarded and counted") {
        const Histogram h = build_histogram({-5.0, 5.0, 50.0}, 10.0, 0.0, 30.0);
        REQUIRE(h.support == 1);
        REQUIRE(h.discarded == 2);
    }
    SECTION("empty input flags a zero-support histogram") {
        const Histogram h = build_histogram({}, 10.0, 0.0, 30.0);
        REQUIRE(h.support == 0);
        REQUIRE(fit_gaussian(h).degenerate);
    }
    SECTION("monte carlo mean of N(30,25)") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g(30.0, 5.0);
        std::vector<double> xs;
        for (int i = 0; i < 10000; ++i) xs.push_back(g(rng));
        const Histogram h = build_histogram(xs, 2.0, 0.0, 60.0);
        REQUIRE(h.moment_mean() == Approx(30.0).margin(0.5));
    }
    REQUIRE_THROWS_AS(build_histogram({1.0}, 0.0, 0.0, 10.0), std::invalid_argument);
    REQUIRE_THROWS_AS(build_histogram({1.0}, 1.0, 10.0, 5.0), std::invalid_argument);
}

namespace {

// analytic discretization of N(mu, sigma^2) over [lo, hi]
Histogram discretized_gaussian(double mu, double sigma, double bin_width, double lo, double hi) {
    Histogram h;
    const int nbins = static_cast<int>(std::round((hi - lo) / bin_width));
    h.bin_edges.resize(nbins + 1);
    for (int i = 0; i <= nbins; ++i) h.bin_edges[i] = lo + bin_width * i;
    h.masses.resize(nbins);
    double total = 0.0;
    for (int i = 0; i < nbins; ++i) {
        const double a = (h.bin_edges[i] - mu) / sigma;
        const double b = (h.bin_edges[i + 1] - mu) / sigma;
        h.masses[i] = normal_cdf(b) - normal_cdf(a);
        total += h.masses[i];
    }
    for (auto& m : h.masses) m /= total;
    h.support = 100000;  // exact masses, no sampling noise
    return h;
}

}  // namespace

TEST_CASE("gaussian fit recovers analytically discretized distributions") {
    SECTION("N(30, 5^2) on a 2 s grid") {
        const GaussianFit fit = fit_gaussian(discretized_gaussian(30.0, 5.0, 2.0, 0.0, 60.0));
        REQUIRE_FALSE(fit.degenerate);
        REQUIRE(fit.mu == Approx(30.0).margin(0.1));
        REQUIRE(fit.sigma == Approx(5.0).margin(0.1));
        REQUIRE(fit.error < 0.01);
    }
    SECTION("recovery within half a bin for sigma >= 2 bins") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> mu_d(20.0, 40.0), s_d(4.0, 12.0);
        for (int i = 0; i < 20; ++i) {
            const double mu = mu_d(rng), sigma = s_d(rng), w = 2.0;
            const GaussianFit fit = fit_gaussian(discretized_gaussian(mu, sigma, w, 0.0, 80.0));
            REQUIRE(std::fabs(fit.mu - mu) < w / 2.0);
            REQUIRE(std::fabs(fit.sigma - sigma) < w / 2.0);
        }
    }
    SECTION("uniform histogram fits badly") {
        Histogram h;
        const int nbins = 50;
        h.bin_edges.resize(nbins + 1);
        for (int i = 0; i <= nbins; ++i) h.bin_edges[i] = 2.0 * i;
        h.masses.assign(nbins, 1.0 / nbins);
        h.support = 5000;
        const GaussianFit fit = fit_gaussian(h);
        REQUIRE(fit.error > 0.5);
    }
    SECTION("single non-empty bin is degenerate with E = 1") {
        const Histogram h = build_histogram({5.0, 5.1, 5.2}, 2.0, 0.0, 20.0);
        const GaussianFit fit = fit_gaussian(h);
        REQUIRE(fit.degenerate);
        REQUIRE(fit.error == 1.0);
    }
}

TEST_CASE("reliable filter keeps strict exceedances only") {
    auto corr = [](double s) {
        Correspondence c;
        c.similarity = s;
        return c;
    };
    const std::vector<Correspondence> cands = {corr(0.7), corr(0.71), corr(0.1), corr(0.9)};
    const auto out = filter_reliable(cands, 0.7);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].similarity == Approx(0.71));
    REQUIRE(out[1].similarity == Approx(0.9));
    REQUIRE(filter_reliable({}, 0.7).empty());

    SECTION("output is an order-invariant subset") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<Correspondence> cs;
        for (int i = 0; i < 100; ++i) {
            Correspondence c = corr(u(rng));
            c.exit_track = i;
            cs.push_back(c);
        }
        auto a = filter_reliable(cs, 0.5);
        std::vector<Correspondence> shuffled = cs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto b = filter_reliable(shuffled, 0.5);
        REQUIRE(a.size() == b.size());
        std::vector<int> ids_a, ids_b;
        for (const auto& c : a) ids_a.push_back(c.exit_track);
        for (const auto& c : b) ids_b.push_back(c.exit_track);
        std::sort(ids_a.begin(), ids_a.end());
        std::sort(ids_b.begin(), ids_b.end());
        REQUIRE(ids_a == ids_b);
        for (const auto& c : a) REQUIRE(c.similarity > 0.5);
    }
}

TEST_CASE("empirical time bounds bracket the histogram mass") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(30.0, 5.0);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(g(rng));
    const Histogram h = build_histogram(xs, 1.0, 0.0, 60.0);
    const SearchWindow w = empirical_time_bounds(h, 95.0);
    REQUIRE(w.t_lower == Approx(30.0 - 1.96 * 5.0).margin(1.5));
    REQUIRE(w.t_upper == Approx(30.0 + 1.96 * 5.0).margin(1.5));
}
