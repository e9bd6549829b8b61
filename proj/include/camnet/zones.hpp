#pragma once

// Entry/exit zone learning: per camera and per kind, a 2D Gaussian mixture
// is fitted to track endpoint positions by EM, with the component count
// chosen by BIC over 1..k_max. Deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/stats.hpp"

namespace camnet {

namespace detail {

struct GmmComponent {
    double weight = 1.0;
    Point2 mean;
    Cov2 cov;
};

struct GmmFit {
    std::vector<GmmComponent> comps;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Minimum covariance eigenvalue: zones narrower than 1% of the normalized
// frame are not resolvable, and the floor keeps BIC from rewarding
// collapsed components with unbounded densities.
constexpr double kMinEig = 1e-4;

inline Cov2 floor_eigenvalues(Cov2 c) {
    const double tr = c.trace();
    const double disc = std::sqrt(std::max(tr * tr - 4.0 * c.det(), 0.0));
    const double eig_min = 0.5 * (tr - disc);
    if (eig_min < kMinEig) {
        const double bump = kMinEig - eig_min;
        c.xx += bump;
        c.yy += bump;
    }
    return c;
}

inline GmmFit fit_gmm_em(const std::vector<Point2>& pts, int k, std::mt19937_64& rng) {
    GmmFit fit;
    const int n = static_cast<int>(pts.size());
    if (n < k) return fit;

    // k-means++ style seeding of the means
    std::vector<Point2> means;
    std::uniform_int_distribution<int> first(0, n - 1);
    means.push_back(pts[first(rng)]);
    std::vector<double> d2(n);
    while (static_cast<int>(means.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : means) {
                const double dx = pts[i].x - m.x, dy = pts[i].y - m.y;
                best = std::min(best, dx * dx + dy * dy);
            }
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            means.push_back(pts[first(rng)]);  // all points identical
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            r -= d2[i];
            if (r <= 0.0) {
                chosen = i;
                break;
            }
        }
        means.push_back(pts[chosen]);
    }

    // initial covariance from the global spread
    Point2 gm{0, 0};
    for (const auto& p : pts) {
        gm.x += p.x;
        gm.y += p.y;
    }
    gm.x /= n;
    gm.y /= n;
    Cov2 gc{0.0, 0.0, 0.0};
    for (const auto& p : pts) {
        gc.xx += (p.x - gm.x) * (p.x - gm.x) / n;
        gc.xy += (p.x - gm.x) * (p.y - gm.y) / n;
        gc.yy += (p.y - gm.y) * (p.y - gm.y) / n;
    }
    gc = floor_eigenvalues(gc);

    fit.comps.resize(k);
    for (int c = 0; c < k; ++c) fit.comps[c] = {1.0 / k, means[c], gc};

    std::vector<double> resp(static_cast<std::size_t>(n) * k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        // E step
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const auto& g = fit.comps[c];
                resp[i * k + c] = std::log(std::max(g.weight, 1e-300)) + g.cov.log_density(pts[i], g.mean);
                mx = std::max(mx, resp[i * k + c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) sum += std::exp(resp[i * k + c] - mx);
            const double log_norm = mx + std::log(sum);
            ll += log_norm;
            for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - log_norm);
        }

        // M step
        for (int c = 0; c < k; ++c) {
            double w = 0.0;
            Point2 mu{0, 0};
            for (int i = 0; i < n; ++i) {
                const double r = resp[i * k + c];
                w += r;
                mu.x += r * pts[i].x;
                mu.y += r * pts[i].y;
            }
            if (w < 1e-10) {
                // dead component: park it on the worst-covered point
                int worst = 0;
                double worst_r = 2.0;
                for (int i = 0; i < n; ++i) {
                    double covered = 0.0;
                    for (int cc = 0; cc < k; ++cc) covered = std::max(covered, resp[i * k + cc]);
                    if (covered < worst_r) {
                        worst_r = covered;
                        worst = i;
                    }
                }
                fit.comps[c] = {1.0 / n, pts[worst], gc};
                continue;
            }
            mu.x /= w;
            mu.y /= w;
            Cov2 cov{0.0, 0.0, 0.0};
            for (int i = 0; i < n; ++i) {
                const double r = resp[i * k + c];
                cov.xx += r * (pts[i].x - mu.x) * (pts[i].x - mu.x) / w;
                cov.xy += r * (pts[i].x - mu.x) * (pts[i].y - mu.y) / w;
                cov.yy += r * (pts[i].y - mu.y) * (pts[i].y - mu.y) / w;
            }
            fit.comps[c] = {w / n, mu, floor_eigenvalues(cov)};
        }

        if (std::fabs(ll - prev_ll) < 1e-9 * std::max(1.0, std::fabs(ll))) {
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }
    fit.log_likelihood = prev_ll;
    fit.ok = std::isfinite(prev_ll);
    return fit;
}

}  // namespace detail

// Cluster 2D endpoint positions of one camera/kind into zones. Component
// count picked by BIC over 1..k_max, smaller k winning ties.
inline std::vector<Zone> learn_zones_for(CameraId camera, ZoneKind kind,
                                         const std::vector<Point2>& points, int k_max,
                                         std::uint64_t seed) {
    if (points.empty())
        throw std::invalid_argument("no " + std::string(to_string(kind)) + " points for camera " +
                                    std::to_string(camera));
    const int n = static_cast<int>(points.size());

    detail::GmmFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= std::min(k_max, n); ++k) {
        std::mt19937_64 rng(mix_seed(seed, (static_cast<std::uint64_t>(camera) << 8) ^
                                               (static_cast<std::uint64_t>(kind) << 4) ^
                                               static_cast<std::uint64_t>(k)));
        const auto fit = detail::fit_gmm_em(points, k, rng);
        if (!fit.ok) continue;
        const double params = 6.0 * k - 1.0;  // k-1 weights + 2k means + 3k covariances
        const double bic = -2.0 * fit.log_likelihood + params * std::log(static_cast<double>(n));
        if (bic < best_bic - 1e-9) {
            best_bic = bic;
            best = fit;
        }
    }
    if (!best.ok) throw std::runtime_error("zone clustering failed for camera " + std::to_string(camera));

    // stable zone ids: order components by (x, y) of the centroid
    std::sort(best.comps.begin(), best.comps.end(), [](const auto& a, const auto& b) {
        if (a.mean.x != b.mean.x) return a.mean.x < b.mean.x;
        return a.mean.y < b.mean.y;
    });
    std::vector<Zone> zones;
    for (std::size_t i = 0; i < best.comps.size(); ++i) {
        Cov2 cov = best.comps[i].cov;
        if (!cov.positive_definite()) {
            cov.xx += 1e-8;
            cov.yy += 1e-8;
        }
        zones.push_back(Zone::make(camera, static_cast<int>(i), kind, best.comps[i].mean, cov));
    }
    return zones;
}

// Zones for every camera and both kinds, learned from track endpoints.
inline std::vector<Zone> learn_zones(const EventStream& stream, int k_max, std::uint64_t seed) {
    std::map<CameraId, std::vector<Point2>> entries, exits;
    for (const auto& t : stream) {
        entries[t.camera].push_back(t.entry_point);
        exits[t.camera].push_back(t.exit_point);
    }
    std::vector<Zone> zones;
    for (const auto& [cam, pts] : entries) {
        auto zs = learn_zones_for(cam, ZoneKind::entry, pts, k_max, seed);
        zones.insert(zones.end(), zs.begin(), zs.end());
    }
    for (const auto& [cam, pts] : exits) {
        auto zs = learn_zones_for(cam, ZoneKind::exit, pts, k_max, seed);
        zones.insert(zones.end(), zs.begin(), zs.end());
    }
    return zones;
}

// Zone of matching camera/kind maximizing the Gaussian likelihood of the
// point; lowest zone_id wins ties.
inline const Zone& assign_zone(const std::vector<Zone>& zones, CameraId camera, ZoneKind kind,
                               const Point2& point) {
    const Zone* best = nullptr;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (const auto& z : zones) {
        if (z.camera != camera || z.kind != kind) continue;
        const double ll = z.spread.log_density(point, z.centroid);
        if (best == nullptr || ll > best_ll + 1e-12 ||
            (std::fabs(ll - best_ll) <= 1e-12 && z.zone_id < best->zone_id)) {
            best = &z;
            best_ll = ll;
        }
    }
    if (best == nullptr)
        throw std::invalid_argument("no zones of requested kind for camera " + std::to_string(camera));
    return *best;
}

}  // namespace camnet
