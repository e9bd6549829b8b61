#pragma once

// Topology mathematics: correspondence gathering against time-sliced
// forests, reliability filtering, transit-distribution assembly,
// connectivity confidence and the search-window update rules.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "camnet/core.hpp"
#include "camnet/forest.hpp"
#include "camnet/gaussfit.hpp"
#include "camnet/stats.hpp"

namespace camnet {

// conf = exp(-sigma/scale) * (1 - E). The scale keeps the exponent
// dimensionless; with raw seconds every realistic link would score ~0.
inline double connectivity_confidence(double sigma, double fit_error, double scale) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    if (fit_error < 0.0 || fit_error > 1.0) throw std::invalid_argument("fit error outside [0,1]");
    return std::exp(-sigma / scale) * (1.0 - fit_error);
}

// Central quantile bounds of N(mu, sigma^2) covering R percent of the mass.
inline SearchWindow time_bounds(double mu, double sigma, double R) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(R > 0.0 && R < 100.0)) throw std::invalid_argument("R outside (0,100)");
    const double z = normal_quantile(0.5 * (1.0 + R / 100.0));
    SearchWindow w;
    w.t_lower = mu - z * sigma;
    w.t_upper = mu + z * sigma;
    w.width = w.t_upper - w.t_lower;
    return w;
}

// Empirical variant: central quantiles read off the histogram itself. The
// bounds snap outward to bin edges, so they always bracket the bins holding
// the central R% of the mass.
inline SearchWindow empirical_time_bounds(const Histogram& hist, double R) {
    if (hist.support <= 0) throw std::invalid_argument("empty histogram");
    if (!(R > 0.0 && R < 100.0)) throw std::invalid_argument("R outside (0,100)");
    const double tail = 0.5 * (1.0 - R / 100.0);
    double acc = 0.0;
    double lo = hist.bin_edges.front(), hi = hist.bin_edges.back();
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        acc += hist.masses[i];
        if (acc >= tail && hist.masses[i] > 0.0) {
            lo = hist.bin_edges[i];
            break;
        }
    }
    acc = 0.0;
    for (std::size_t i = hist.bins(); i-- > 0;) {
        acc += hist.masses[i];
        if (acc >= tail && hist.masses[i] > 0.0) {
            hi = hist.bin_edges[i + 1];
            break;
        }
    }
    if (hi < lo) std::swap(lo, hi);
    SearchWindow w;
    w.t_lower = lo;
    w.t_upper = hi;
    w.width = hi - lo;
    return w;
}

// T = (T_U - T_L) / (1 - E); a large fitting error widens the window.
inline double update_window(double fit_error, double t_lower, double t_upper) {
    if (!(t_upper > t_lower)) throw std::invalid_argument("time bounds inverted");
    if (fit_error < 0.0) throw std::invalid_argument("fit error negative");
    if (fit_error >= 1.0) throw std::runtime_error("degenerate fit; retain previous window");
    return (t_upper - t_lower) / (1.0 - fit_error);
}

// Strictly greater than theta_sim.
inline std::vector<Correspondence> filter_reliable(const std::vector<Correspondence>& cands,
                                                   double theta_sim) {
    std::vector<Correspondence> out;
    for (const auto& c : cands)
        if (c.similarity > theta_sim) out.push_back(c);
    return out;
}

// How the candidate window is anchored for each exiting track at time t.
struct GatherWindow {
    enum class Mode {
        two_sided,  // [t - T, t + T], camera-level initialization
        one_sided,  // [t, t + T], zone-level initialization
        refined,    // [t + lo_rel, t + hi_rel]: the fitted bounds, inflated
    };
    Mode mode = Mode::two_sided;
    double T = 600.0;
    double mu = 0.0;      // expected transit, targets the forest slot
    double lo_rel = 0.0;  // refined-mode window bounds relative to the exit time
    double hi_rel = 0.0;

    // A refined window spans the (T_L, T_U) bounds widened to total width T,
    // the extra width split evenly between the two sides.
    static GatherWindow refined_around(const SearchWindow& bounds, double T, double mu) {
        GatherWindow w;
        w.mode = Mode::refined;
        w.T = T;
        w.mu = mu;
        const double pad = 0.5 * std::max(T - (bounds.t_upper - bounds.t_lower), 0.0);
        w.lo_rel = bounds.t_lower - pad;
        w.hi_rel = bounds.t_upper + pad;
        return w;
    }

    double lo(double t) const {
        switch (mode) {
            case Mode::two_sided: return t - T;
            case Mode::one_sided: return t;
            case Mode::refined: return t + lo_rel;
        }
        return t;
    }
    double hi(double t) const {
        switch (mode) {
            case Mode::two_sided: return t + T;
            case Mode::one_sided: return t + T;
            case Mode::refined: return t + hi_rel;
        }
        return t;
    }
    // forest slot target: t while no fit exists, t + mu afterwards
    double target(double t) const { return mode == Mode::refined ? t + mu : t; }
};

struct GatherStats {
    long long candidate_comparisons = 0;  // probe-obs x candidate-obs pairs scored by similarity
    long long exits_without_candidates = 0;
};

// For each exiting track: candidates are the gallery tracks whose entry time
// falls inside the window. Each candidate is scored by the forest of the slot
// nearest the target time when it belongs to that slot, and by its home slot's
// forest otherwise, so a window straddling a slot boundary loses nobody. The
// best-scoring candidate is emitted with its similarity; exits without any
// candidate are skipped.
inline std::vector<Correspondence> gather_correspondences(
    const EventStream& stream, const std::vector<TrackRef>& exits, const ForestSeries& series,
    const GatherWindow& window, NodeId source, NodeId dest, GatherStats* stats = nullptr) {
    std::vector<Correspondence> out;
    if (series.empty()) {
        if (stats) stats->exits_without_candidates += static_cast<long long>(exits.size());
        return out;
    }

    // union of slot members, each pointing at its home slot
    std::vector<std::pair<TrackRef, const ForestSlot*>> members;
    for (const auto& slot : series.slots)
        for (TrackRef ref : slot.members) members.emplace_back(ref, &slot);
    std::sort(members.begin(), members.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    members.erase(std::unique(members.begin(), members.end(),
                              [](const auto& a, const auto& b) { return a.first == b.first; }),
                  members.end());

    std::map<const ForestSlot*, Posterior> posterior_cache;
    for (TrackRef exit_ref : exits) {
        const PersonTrack& exit_track = stream[exit_ref];
        const double t = exit_track.exit_time;
        const double lo = window.lo(t), hi = window.hi(t);

        const ForestSlot& primary = forest_for_time(series, window.target(t));
        posterior_cache.clear();

        auto posterior_for = [&](const ForestSlot* slot, TrackRef ref) {
            auto it = posterior_cache.find(slot);
            if (it == posterior_cache.end())
                it = posterior_cache.emplace(slot, predict_multishot(slot->forest, exit_track))
                         .first;
            const auto pit = it->second.find(ref);
            return pit == it->second.end() ? 0.0 : pit->second;
        };

        // posterior ties arise when candidates are scored by different slot
        // forests (a singleton slot answers 1.0 for its only member); the
        // appearance similarity resolves them, then the smaller reference
        LabelId best_label = 0;
        double best_post = -1.0;
        double best_sim = -1.0;
        for (const auto& [ref, home] : members) {
            const double e = stream[ref].entry_time;
            if (e < lo || e > hi) continue;
            const bool in_primary = e >= primary.forest.window_start &&
                                    e < primary.forest.window_end;
            const double p = posterior_for(in_primary ? &primary : home, ref);
            if (p < best_post) continue;
            if (p > best_post) {
                best_post = p;
                best_label = ref;
                best_sim = -1.0;  // lazily filled on the first tie
                continue;
            }
            if (best_sim < 0.0) best_sim = similarity(exit_track, stream[best_label]);
            const double s = similarity(exit_track, stream[ref]);
            if (s > best_sim || (s == best_sim && ref < best_label)) {
                best_sim = s;
                best_label = ref;
            }
        }
        if (best_post < 0.0) {
            if (stats) ++stats->exits_without_candidates;
            continue;
        }

        const PersonTrack& matched = stream[best_label];
        Correspondence c;
        c.exit_track = exit_ref;
        c.matched_track = static_cast<TrackRef>(best_label);
        c.similarity = similarity(exit_track, matched);
        c.delta_t = matched.entry_time - t;
        c.source = source;
        c.dest = dest;
        out.push_back(c);
        if (stats)
            stats->candidate_comparisons += static_cast<long long>(exit_track.size()) *
                                            static_cast<long long>(matched.size());
    }
    return out;
}

// Histogram + fit + confidence for one directed node pair.
inline TransitDistribution make_transit_distribution(NodeId source, NodeId dest,
                                                     const std::vector<double>& delta_ts,
                                                     double bin_width, double lo, double hi,
                                                     double sigma_scale, int min_support = 6) {
    TransitDistribution d;
    d.source = source;
    d.dest = dest;
    const Histogram h = build_histogram(delta_ts, bin_width, lo, hi);
    d.bin_edges = h.bin_edges;
    d.masses = h.masses;
    d.support = h.support;
    const GaussianFit fit = fit_gaussian(h, min_support);
    d.mu = fit.mu;
    d.sigma = fit.sigma;
    d.amplitude = fit.amplitude;
    d.fit_error = fit.error;
    d.confidence = h.support > 0 && fit.sigma > 0.0
                       ? connectivity_confidence(fit.sigma, fit.error, sigma_scale)
                       : 0.0;
    return d;
}

}  // namespace camnet
