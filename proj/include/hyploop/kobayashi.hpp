#pragma once

// Certified pointwise lower/upper estimators of the Kobayashi-Royden density
// on punctured chart domains, closed-form model densities, and certified
// bounds on the hyperbolic length of polyline loops.
//
// Normalization: curvature -1, unit-disc density 2/(1-|z|^2).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hyploop/geometry.hpp"

namespace hyploop {

// ---------------------------------------------------------------------------
// DensityBand

// Comparison data for a punctured chart domain. Each family member is a true
// one-sided bound by the distance-decreasing property:
//   puncture p with outradius R:  lambda >= 1/(d ln(R/d)),    d = |z-p| < R
//   hole (c, rho):                lambda >= 1/(d ln(d/rho)),  d = |z-c| > rho
//   outer disc (c, R):            lambda >= 2R/(R^2 - d^2)
// and the largest embedded round disc gives lambda <= 2/dist(z, complement).
struct DensityBand {
    struct Puncture {
        Complex p;
        double outradius;  // any R >= sup over the domain of |z - p|
    };
    std::optional<Disc> outer;     // chart disc, when the domain is bounded
    std::vector<Disc> holes;       // removed closed discs
    std::vector<Puncture> punctures;

    static DensityBand from_domain(const Domain& dom,
                                   const std::vector<Complex>& extra_punctures = {}) {
        if (dom.kind != SurfaceKind::Chart)
            throw KindMismatch("DensityBand::from_domain: chart domains only");
        DensityBand b;
        b.outer = dom.outer;
        b.holes = dom.holes;
        auto add = [&](Complex p) {
            // sup over the closed outer disc dominates the sup over the domain
            const double R = std::abs(dom.outer->center.z - p) + dom.outer->radius;
            b.punctures.push_back({p, R});
        };
        for (const auto& q : dom.punctures) add(q.z);
        for (const auto& q : extra_punctures) add(q);
        return b;
    }

    // Distance from z to the complement (punctures, holes, outer exterior).
    // 1-Lipschitz in z; nonpositive outside the domain.
    double clearance(Complex z) const {
        double c = std::numeric_limits<double>::infinity();
        if (outer) c = outer->radius - std::abs(z - outer->center.z);
        for (const auto& h : holes) c = std::min(c, std::abs(z - h.center.z) - h.radius);
        for (const auto& p : punctures) c = std::min(c, std::abs(z - p.p));
        return c;
    }
};

// ---------------------------------------------------------------------------
// Pointwise densities

inline double upper_density(const DensityBand& band, Complex z) {
    const double d = band.clearance(z);
    if (!(d > 0)) throw OutsideDomain("upper_density: point not interior to the domain");
    return 2.0 / d;
}

namespace detail {

inline double puncture_lower(double delta, double R) {
    // 1/(d ln(R/d)), valid for 0 < d < R; vacuous otherwise.
    if (!(delta > 0) || delta >= R) return 0.0;
    return 1.0 / (delta * std::log(R / delta));
}

inline double hole_lower(double delta, double rho) {
    // 1/(d ln(d/rho)), valid for d > rho
    if (delta <= rho) return 0.0;
    return 1.0 / (delta * std::log(delta / rho));
}

inline double outer_lower(double delta, double R) {
    // 2R/(R^2 - d^2), valid for d < R
    if (delta >= R) return 0.0;
    return 2.0 * R / (R * R - delta * delta);
}

} // namespace detail

inline double lower_density(const DensityBand& band, Complex z) {
    if (!(band.clearance(z) > 0))
        throw OutsideDomain("lower_density: point not interior to the domain");
    double best = 0.0;
    for (const auto& p : band.punctures)
        best = std::max(best, detail::puncture_lower(std::abs(z - p.p), p.outradius));
    for (const auto& h : band.holes)
        best = std::max(best, detail::hole_lower(std::abs(z - h.center.z), h.radius));
    if (band.outer)
        best = std::max(best,
                        detail::outer_lower(std::abs(z - band.outer->center.z), band.outer->radius));
    return best;
}

// ---------------------------------------------------------------------------
// Closed-form oracle densities

struct OracleModel {
    enum Kind { Disc, PuncturedDisc, DiscExterior, Annulus, Strip } kind;
    double a = 1.0;  // disc/punctured radius r, exterior/annulus inner rho, strip height h

    static OracleModel disc(double r) { return {Disc, r}; }
    static OracleModel punctured_disc(double r) { return {PuncturedDisc, r}; }
    static OracleModel disc_exterior(double rho) { return {DiscExterior, rho}; }
    static OracleModel annulus(double rho) { return {Annulus, rho}; }  // rho < |z| < 1
    static OracleModel strip(double h) { return {Strip, h}; }          // 0 < Im z < h
};

inline double oracle_density(const OracleModel& m, Complex z) {
    const double r = std::abs(z);
    switch (m.kind) {
        case OracleModel::Disc: {
            if (r >= m.a) throw OutsideDomain("oracle disc");
            return 2.0 * m.a / (m.a * m.a - r * r);
        }
        case OracleModel::PuncturedDisc: {
            if (r <= 0 || r >= m.a) throw OutsideDomain("oracle punctured disc");
            return 1.0 / (r * std::log(m.a / r));
        }
        case OracleModel::DiscExterior: {
            if (r <= m.a) throw OutsideDomain("oracle disc exterior");
            return 1.0 / (r * std::log(r / m.a));
        }
        case OracleModel::Annulus: {
            if (r <= m.a || r >= 1.0) throw OutsideDomain("oracle annulus");
            const double L = std::log(1.0 / m.a);
            return (kPi / L) / (r * std::sin(kPi * std::log(r) / std::log(m.a)));
        }
        case OracleModel::Strip: {
            const double y = z.imag();
            if (y <= 0 || y >= m.a) throw OutsideDomain("oracle strip");
            return (kPi / m.a) / std::sin(kPi * y / m.a);
        }
    }
    throw ValidationError("oracle_density: unknown model");
}

// ---------------------------------------------------------------------------
// Certified loop length bounds

struct LengthBound {
    double lower = 0;
    double upper = 0;
    std::size_t subdivisions = 0;
    double eta = 0;
};

namespace detail {

// Infimum over [dmin, dmax] of the puncture comparison 1/(d ln(R/d)).
// The denominator peaks at d = R/e, so the infimum sits at an endpoint or
// exactly at the peak.
inline double puncture_lower_inf(double dmin, double dmax, double R) {
    if (dmax >= R) return 0.0;  // family vacuous somewhere on the segment
    double inf = std::min(puncture_lower(dmin, R), puncture_lower(dmax, R));
    const double peak = R / std::exp(1.0);
    if (dmin < peak && peak < dmax) inf = std::min(inf, puncture_lower(peak, R));
    return inf;
}

// 1/(d ln(d/rho)) is decreasing in d (> rho): infimum at dmax.
inline double hole_lower_inf(double dmax, double rho) { return hole_lower(dmax, rho); }

// 2R/(R^2 - d^2) is increasing in d: infimum at dmin.
inline double outer_lower_inf(double dmin, double R) { return outer_lower(dmin, R); }

inline double segment_lower_bound_density(const DensityBand& band, Complex a, Complex b) {
    double best = 0.0;
    for (const auto& p : band.punctures) {
        const auto [dmin, dmax] = segment_center_distance_range(a, b, p.p);
        best = std::max(best, puncture_lower_inf(dmin, dmax, p.outradius));
    }
    for (const auto& h : band.holes) {
        const auto [dmin, dmax] = segment_center_distance_range(a, b, h.center.z);
        best = std::max(best, hole_lower_inf(dmax, h.radius));
    }
    if (band.outer) {
        const auto [dmin, dmax] =
            segment_center_distance_range(a, b, band.outer->center.z);
        best = std::max(best, outer_lower_inf(dmin, band.outer->radius));
    }
    return best;
}

template <typename PieceFn>
inline void subdivide_loop(const PolyLoop& loop, const DensityBand& band, double eta,
                           PieceFn&& piece) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        // iterative stack of sub-segments
        std::vector<std::pair<Complex, Complex>> stack{{loop.vertex(i).z, loop.vertex(i + 1).z}};
        while (!stack.empty()) {
            const auto [a, b] = stack.back();
            stack.pop_back();
            const double len = std::abs(b - a);
            const double ca = band.clearance(a), cb = band.clearance(b);
            if (!(ca > 0) || !(cb > 0))
                throw TouchesComplement("loop touches the domain complement");
            const double cbest = std::max(ca, cb);
            if (len > eta * cbest) {
                const Complex mid = a + 0.5 * (b - a);
                stack.push_back({a, mid});
                stack.push_back({mid, b});
            } else {
                piece(a, b, len, cbest);
            }
        }
    }
}

} // namespace detail

// Certified upper bound: every point of a sub-segment has clearance at least
// max(endpoint clearances) - len (the clearance is 1-Lipschitz), so the
// Kobayashi density is at most 2/(cbest - len) along it.
inline double hyp_length_upper(const PolyLoop& loop, const DensityBand& band, double eta = 0.05) {
    if (!(eta > 0 && eta < 0.5)) throw ValidationError("hyp_length_upper: eta in (0, 0.5)");
    double total = 0;
    detail::subdivide_loop(loop, band, eta,
                           [&](Complex, Complex, double len, double cbest) {
                               total += len * 2.0 / (cbest - len);
                           });
    return total;
}

// Certified lower bound: per-piece infimum of the lower comparison density.
inline double hyp_length_lower(const PolyLoop& loop, const DensityBand& band, double eta = 0.05) {
    if (!(eta > 0 && eta < 0.5)) throw ValidationError("hyp_length_lower: eta in (0, 0.5)");
    double total = 0;
    detail::subdivide_loop(loop, band, eta, [&](Complex a, Complex b, double len, double) {
        total += len * detail::segment_lower_bound_density(band, a, b);
    });
    return total;
}

inline LengthBound hyp_length_bounds(const PolyLoop& loop, const DensityBand& band,
                                     double eta = 0.05) {
    if (!(eta > 0 && eta < 0.5)) throw ValidationError("hyp_length_bounds: eta in (0, 0.5)");
    LengthBound lb;
    lb.eta = eta;
    detail::subdivide_loop(loop, band, eta, [&](Complex a, Complex b, double len, double cbest) {
        lb.upper += len * 2.0 / (cbest - len);
        lb.lower += len * detail::segment_lower_bound_density(band, a, b);
        ++lb.subdivisions;
    });
    return lb;
}

// ---------------------------------------------------------------------------
// Sphere-domain densities via a local stereographic chart

// Lower/upper Kobayashi density at a sphere-domain point, reported against the
// round metric. The chart projects from inside the hole farthest from the
// evaluation point, so the chart is conformally identical to the domain and
// the distortion at the point stays bounded; the conformal factor is exact.
inline std::pair<double, double> sphere_density_bounds(const Domain& dom, const SurfacePoint& x) {
    if (dom.kind != SurfaceKind::Sphere)
        throw KindMismatch("sphere_density_bounds: sphere domains only");
    if (dom.holes.empty())
        throw BadDomain("sphere_density_bounds: needs at least one hole to open a chart");
    if (!dom.interior_contains(x)) throw OutsideDomain("sphere_density_bounds");

    std::size_t pivot = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < dom.holes.size(); ++i) {
        const double d = distance(dom.holes[i].center, x);
        if (d > far) { far = d; pivot = i; }
    }
    const auto [chart_dom, chart] = stereographic_chart(dom, pivot);
    const DensityBand band = DensityBand::from_domain(chart_dom);
    const Complex z = chart.project(x);
    // chart density -> round-metric density: divide by |ds_sphere|/|dz|
    const double factor = 1.0 / SphereChart::conformal_factor(z);
    return {lower_density(band, z) * factor, upper_density(band, z) * factor};
}

} // namespace hyploop
