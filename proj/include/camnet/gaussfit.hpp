#pragma once

// Transition-histogram construction and Gaussian model fitting.
// The fit is a scaled Gaussian a*exp(-(x-mu)^2 / (2 sigma^2)) matched to
// (bin center, mass) points by Levenberg-Marquardt, with the fitting error
// E = clamp(1 - R^2, 0, 1) computed over every bin in range.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "camnet/stats.hpp"

namespace camnet {

struct Histogram {
    std::vector<double> bin_edges;  // bins + 1 entries
    std::vector<double> masses;     // normalized by in-range count
    int support = 0;                // samples inside [lo, hi]
    int discarded = 0;              // samples outside the range

    std::size_t bins() const { return masses.size(); }
    double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
    double width() const { return bin_edges.size() > 1 ? bin_edges[1] - bin_edges[0] : 0.0; }

    int nonempty_bins() const {
        int n = 0;
        for (double m : masses)
            if (m > 0.0) ++n;
        return n;
    }

    // Moments of the normalized histogram, on bin centers.
    double moment_mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i) m += center(i) * masses[i];
        return m;
    }
    double moment_sigma() const {
        const double mu = moment_mean();
        double v = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i) {
            const double d = center(i) - mu;
            v += d * d * masses[i];
        }
        return std::sqrt(std::max(v, 0.0));
    }
};

inline Histogram build_histogram(const std::vector<double>& delta_ts, double bin_width,
                                 double lo, double hi) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
    if (!(hi > lo)) throw std::invalid_argument("histogram range empty");

    Histogram h;
    const int nbins = std::max(1, static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12)));
    h.bin_edges.resize(nbins + 1);
    for (int i = 0; i <= nbins; ++i) h.bin_edges[i] = lo + bin_width * i;
    h.masses.assign(nbins, 0.0);

    for (double dt : delta_ts) {
        if (dt < lo || dt > hi) {
            ++h.discarded;
            continue;
        }
        // bins are (edge_i, edge_i+1]; a value on an edge joins the lower bin
        int idx = static_cast<int>(std::ceil((dt - lo) / bin_width)) - 1;
        idx = std::clamp(idx, 0, nbins - 1);
        h.masses[idx] += 1.0;
        ++h.support;
    }
    if (h.support > 0) {
        const double inv = 1.0 / h.support;
        for (double& m : h.masses) m *= inv;
    }
    return h;
}

struct GaussianFit {
    double mu = 0.0;
    double sigma = 1.0;
    double amplitude = 0.0;
    double error = 1.0;  // E = clamp(1 - R^2, 0, 1)
    bool degenerate = true;
};

namespace detail {

// Solve the 3x3 system A x = b with partial pivoting; returns false if singular.
inline bool solve3(double A[3][3], double b[3], double x[3]) {
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(A[piv[r]][col]) > std::fabs(A[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double p = A[piv[col]][col];
        if (std::fabs(p) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = A[piv[r]][col] / p;
            for (int c = col; c < 3; ++c) A[piv[r]][c] -= f * A[piv[col]][c];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double s = b[piv[row]];
        for (int c = row + 1; c < 3; ++c) s -= A[piv[row]][c] * x[c];
        x[row] = s / A[piv[row]][row];
    }
    return true;
}

inline double fit_sse(const std::vector<double>& xs, const std::vector<double>& ys, double a,
                      double mu, double sigma) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double z = (xs[i] - mu) / sigma;
        const double r = ys[i] - a * std::exp(-0.5 * z * z);
        sse += r * r;
    }
    return sse;
}

}  // namespace detail

// Least-squares Gaussian fit to a normalized histogram. Fewer than 3
// non-empty bins, or fewer than min_support samples, yields a degenerate
// fit with E = 1: a transit law attested by a handful of events is noise.
inline GaussianFit fit_gaussian(const Histogram& hist, int min_support = 6) {
    GaussianFit fit;
    if (hist.support < std::max(min_support, 1) || hist.nonempty_bins() < 3) {
        fit.degenerate = true;
        fit.error = 1.0;
        fit.mu = hist.support > 0 ? hist.moment_mean() : 0.0;
        fit.sigma = std::max(hist.moment_sigma(), std::max(hist.width() * 0.25, 1e-6));
        fit.amplitude = 0.0;
        return fit;
    }

    const std::size_t n = hist.bins();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = hist.center(i);
        ys[i] = hist.masses[i];
    }

    const double lo = hist.bin_edges.front(), hi = hist.bin_edges.back();
    const double w = hist.width();
    const double sigma_min = std::max(w * 0.5, 1e-9);  // resolution floor
    const double sigma_max = hi - lo;
    const double peak = *std::max_element(ys.begin(), ys.end());

    // The fitted component's integrated probability a*sigma*sqrt(2*pi)/w is
    // kept within [0.35, 1.5] of the histogram mass: a transit law explains
    // the bulk of the reliable correspondences, never a one-bin sliver.
    static constexpr double kSqrt2Pi = 2.5066282746310002;
    auto clamp_amplitude = [&](double a, double sigma) {
        const double a_min = 0.35 * w / (sigma * kSqrt2Pi);
        const double a_max = 1.5 * w / (sigma * kSqrt2Pi);
        return std::clamp(a, a_min, a_max);
    };

    auto refine = [&](double a, double mu, double sigma) {
        double lambda = 1e-3;
        a = clamp_amplitude(a, sigma);
        double sse = detail::fit_sse(xs, ys, a, mu, sigma);
        for (int iter = 0; iter < 200; ++iter) {
            // accumulate J^T J and J^T r
            double JTJ[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
            double JTr[3] = {0, 0, 0};
            for (std::size_t i = 0; i < n; ++i) {
                const double z = (xs[i] - mu) / sigma;
                const double e = std::exp(-0.5 * z * z);
                const double f = a * e;
                const double r = ys[i] - f;
                const double j[3] = {e, f * z / sigma, f * z * z / sigma};
                for (int p = 0; p < 3; ++p) {
                    JTr[p] += j[p] * r;
                    for (int q = 0; q < 3; ++q) JTJ[p][q] += j[p] * j[q];
                }
            }
            double A[3][3];
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q)
                    A[p][q] = JTJ[p][q] + (p == q ? lambda * JTJ[p][p] : 0.0);
            double step[3];
            if (!detail::solve3(A, JTr, step)) break;

            const double mu2 = std::clamp(mu + step[1], lo, hi);
            const double sigma2 = std::clamp(sigma + step[2], sigma_min, sigma_max);
            const double a2 = clamp_amplitude(a + step[0], sigma2);
            const double sse2 = detail::fit_sse(xs, ys, a2, mu2, sigma2);
            if (sse2 < sse) {
                const double rel = (sse - sse2) / std::max(sse, 1e-300);
                a = a2;
                mu = mu2;
                sigma = sigma2;
                sse = sse2;
                lambda = std::max(lambda * 0.5, 1e-12);
                if (rel < 1e-12) break;
            } else {
                lambda *= 4.0;
                if (lambda > 1e12) break;
            }
        }
        return std::tuple<double, double, double, double>{sse, a, mu, sigma};
    };

    // two starts: histogram moments, and the mode with a tight width. With a
    // contaminated histogram the moment start can stall on the broad blob
    // while the true least-squares optimum is the sharp peak.
    const auto from_moments = refine(peak, hist.moment_mean(),
                                     std::clamp(hist.moment_sigma(), sigma_min, sigma_max));
    std::size_t mode_bin = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (ys[i] > ys[mode_bin]) mode_bin = i;
    const auto from_mode = refine(
        peak, xs[mode_bin], std::clamp(2.0 * hist.width(), sigma_min, sigma_max));
    const auto& best = std::get<0>(from_mode) < std::get<0>(from_moments) ? from_mode
                                                                          : from_moments;
    const double a = std::get<1>(best);
    const double mu = std::get<2>(best);
    const double sigma = std::get<3>(best);

    // R^2 over all bins in range, empty bins included; small-sample
    // adjustment keeps a three-parameter curve from scoring as perfect when
    // it threads three or four occupied bins
    double ybar = 0.0;
    for (double y : ys) ybar += y;
    ybar /= static_cast<double>(n);
    double ss_tot = 0.0;
    for (double y : ys) ss_tot += (y - ybar) * (y - ybar);
    const double ss_res = detail::fit_sse(xs, ys, a, mu, sigma);

    double r2;
    if (ss_tot < 1e-15) {
        r2 = ss_res < 1e-15 ? 1.0 : 0.0;
    } else {
        r2 = 1.0 - ss_res / ss_tot;
    }

    fit.mu = mu;
    fit.sigma = sigma;
    fit.amplitude = a;
    fit.error = std::clamp(1.0 - r2, 0.0, 1.0);
    fit.degenerate = false;
    return fit;
}

}  // namespace camnet
