#pragma once

// Surfaces (round unit sphere / planar chart), discs, disc-union components
// and their outer arc boundaries, disjoint-disc coverings of finite sets,
// and the (P1)/(P2) admissibility report for loop rerouting.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "hyploop/errors.hpp"

namespace hyploop {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = std::numbers::pi_v<double>;
inline constexpr double kGeomTol = 1e-9;         // coincidence/containment predicates
inline constexpr double kTangencyTol = 1e-7;     // circle intersection half-angle floor

enum class SurfaceKind { Sphere, Chart };

// ---------------------------------------------------------------------------
// Points

struct SurfacePoint {
    SurfaceKind kind;
    Vec3 v{0, 0, 0};   // unit vector when kind == Sphere
    Complex z{0, 0};   // chart coordinate when kind == Chart

    static SurfacePoint sphere(const Vec3& p) {
        const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        if (std::abs(n - 1.0) > kGeomTol)
            throw ValidationError("sphere point must be a unit vector, |v| = " + std::to_string(n));
        return SurfacePoint{SurfaceKind::Sphere, p, {0, 0}};
    }
    static SurfacePoint chart(Complex c) { return SurfacePoint{SurfaceKind::Chart, {0, 0, 0}, c}; }
};

inline double distance(const SurfacePoint& p, const SurfacePoint& q) {
    if (p.kind != q.kind)
        throw KindMismatch("distance() across surface kinds");
    if (p.kind == SurfaceKind::Chart)
        return std::abs(p.z - q.z);
    // Geodesic angle via atan2: stable for both nearby and antipodal points.
    const Vec3 &a = p.v, &b = q.v;
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const Vec3 cr{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    const double cn = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
    return std::atan2(cn, dot);
}

// ---------------------------------------------------------------------------
// Discs and domains

struct Disc {
    SurfacePoint center;
    double radius = 0;  // radians on the sphere, dimensionless in a chart

    Disc() = default;
    Disc(SurfacePoint c, double r) : center(c), radius(r) {
        if (!(r > 0)) throw BadRadius("disc radius must be positive");
        if (c.kind == SurfaceKind::Sphere && !(r < kPi))
            throw BadRadius("sphere disc radius must be < pi");
    }
    static Disc chart(Complex c, double r) { return Disc(SurfacePoint::chart(c), r); }

    bool contains(const SurfacePoint& p, double tol = 0.0) const {
        return distance(center, p) <= radius + tol;
    }
};

// B_0 = surface minus holes; punctures are additionally removed points.
// Chart domains live inside a mandatory outer disc.
struct Domain {
    SurfaceKind kind = SurfaceKind::Chart;
    std::optional<Disc> outer;       // required for charts; unused on the sphere
    std::vector<Disc> holes;         // the removed set U
    std::vector<SurfacePoint> punctures;  // the set S baked into the domain

    static Domain chart(Disc outer_disc, std::vector<Disc> holes_ = {},
                        std::vector<SurfacePoint> punct = {}) {
        Domain d;
        d.kind = SurfaceKind::Chart;
        d.outer = outer_disc;
        d.holes = std::move(holes_);
        d.punctures = std::move(punct);
        d.validate();
        return d;
    }
    static Domain sphere(std::vector<Disc> holes_, std::vector<SurfacePoint> punct = {}) {
        Domain d;
        d.kind = SurfaceKind::Sphere;
        d.holes = std::move(holes_);
        d.punctures = std::move(punct);
        d.validate();
        return d;
    }

    void validate() const {
        if (kind == SurfaceKind::Chart && !outer)
            throw BadDomain("chart domain requires an outer disc");
        for (const auto& h : holes) {
            if (h.center.kind != kind) throw KindMismatch("hole on wrong surface kind");
            if (kind == SurfaceKind::Chart) {
                const double d = std::abs(h.center.z - outer->center.z);
                if (d + h.radius >= outer->radius - kGeomTol)
                    throw BadDomain("hole must lie strictly inside the outer disc");
            }
        }
        for (std::size_t i = 0; i < holes.size(); ++i)
            for (std::size_t j = i + 1; j < holes.size(); ++j)
                if (distance(holes[i].center, holes[j].center) <=
                    holes[i].radius + holes[j].radius + kGeomTol)
                    throw BadDomain("holes must be pairwise disjoint");
        for (const auto& p : punctures) {
            if (p.kind != kind) throw KindMismatch("puncture on wrong surface kind");
            if (!interior_contains(p))
                throw BadDomain("puncture must lie in the domain interior outside all holes");
        }
        for (std::size_t i = 0; i < punctures.size(); ++i)
            for (std::size_t j = i + 1; j < punctures.size(); ++j)
                if (distance(punctures[i], punctures[j]) <= kGeomTol)
                    throw BadDomain("punctures must be pairwise distinct");
    }

    // Signed clearance of p to the boundary circles (holes + outer).
    // Positive inside the closed surface-minus-holes region.
    double boundary_clearance(const SurfacePoint& p) const {
        double c = std::numeric_limits<double>::infinity();
        if (kind == SurfaceKind::Chart)
            c = outer->radius - std::abs(p.z - outer->center.z);
        for (const auto& h : holes)
            c = std::min(c, distance(h.center, p) - h.radius);
        return c;
    }

    bool interior_contains(const SurfacePoint& p, double margin = kGeomTol) const {
        if (p.kind != kind) return false;
        return boundary_clearance(p) > margin;
    }
};

// ---------------------------------------------------------------------------
// Disc boundary lengths, areas, and the curvature band constant

inline double disc_boundary_length(SurfaceKind kind, double r) {
    if (!(r > 0)) throw BadRadius("disc_boundary_length: r must be positive");
    if (kind == SurfaceKind::Chart) return 2.0 * kPi * r;
    if (!(r < kPi)) throw BadRadius("disc_boundary_length: sphere radius must be < pi");
    return 2.0 * kPi * std::sin(r);
}

inline double disc_area(SurfaceKind kind, double r) {
    if (!(r > 0)) throw BadRadius("disc_area: r must be positive");
    if (kind == SurfaceKind::Chart) return kPi * r * r;
    if (!(r <= kPi)) throw BadRadius("disc_area: sphere radius must be <= pi");
    return 2.0 * kPi * (1.0 - std::cos(r));
}

// Curvature bound used in the boundary/area bands: max |K| + 1.
inline double curvature_mu(SurfaceKind kind) {
    return kind == SurfaceKind::Sphere ? 2.0 : 1.0;
}

// c0 such that every disc with radius r <= r0 has boundary length <= c0*r and
// area <= c0*r^2. The comparison-theorem value pi*(2 + mu*r0^2)/3 alone fails
// for flat circles (length exactly 2*pi*r), so the flat value is the floor.
inline double bdp_constant(SurfaceKind kind, double r0) {
    if (!(r0 > 0)) throw BadRadius("bdp_constant: r0 must be positive");
    if (kind == SurfaceKind::Sphere && !(r0 < kPi))
        throw BadRadius("bdp_constant: sphere r0 must be < pi (injectivity radius)");
    const double mu = curvature_mu(kind);
    return std::max(kPi * (2.0 + mu * r0 * r0) / 3.0, 2.0 * kPi);
}

// ---------------------------------------------------------------------------
// Disc-union components

struct DiscComponent {
    std::vector<std::size_t> members;  // indices into the input disc list
    double diameter_bound = 0;         // 2 * sum of member radii
};

// Two closed discs belong to one component iff they are linked by a chain of
// pairwise-intersecting closed discs. Deterministic: components are ordered by
// their smallest member index, members ascending.
inline std::vector<DiscComponent> union_components(const std::vector<Disc>& discs) {
    const std::size_t n = discs.size();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a); b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    // Uniform grid over centers keeps this near-linear for large regular sets.
    if (n > 64 && !discs.empty() && discs[0].center.kind == SurfaceKind::Chart) {
        double rmax = 0;
        for (const auto& d : discs) rmax = std::max(rmax, d.radius);
        const double cell = std::max(2.0 * rmax, 1e-12);
        auto key = [&](Complex z) {
            return std::pair<long long, long long>{
                static_cast<long long>(std::floor(z.real() / cell)),
                static_cast<long long>(std::floor(z.imag() / cell))};
        };
        std::vector<std::pair<std::pair<long long, long long>, std::size_t>> cells;
        cells.reserve(n);
        for (std::size_t i = 0; i < n; ++i) cells.emplace_back(key(discs[i].center.z), i);
        std::sort(cells.begin(), cells.end());
        auto cell_range = [&](long long cx, long long cy) {
            const std::pair<std::pair<long long, long long>, std::size_t> lo{{cx, cy}, 0};
            const std::pair<std::pair<long long, long long>, std::size_t> hi{{cx, cy}, n};
            return std::equal_range(cells.begin(), cells.end(), lo,
                                    [](const auto& a, const auto& b) { return a.first < b.first; });
        };
        for (std::size_t i = 0; i < n; ++i) {
            const auto [cx, cy] = key(discs[i].center.z);
            for (long long dx = -1; dx <= 1; ++dx)
                for (long long dy = -1; dy <= 1; ++dy) {
                    auto [lo, hi] = cell_range(cx + dx, cy + dy);
                    for (auto it = lo; it != hi; ++it) {
                        const std::size_t j = it->second;
                        if (j <= i) continue;
                        if (distance(discs[i].center, discs[j].center) <=
                            discs[i].radius + discs[j].radius)
                            unite(i, j);
                    }
                }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (distance(discs[i].center, discs[j].center) <=
                    discs[i].radius + discs[j].radius)
                    unite(i, j);
    }

    std::vector<DiscComponent> comps;
    std::vector<long long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long long>(comps.size());
            comps.emplace_back();
        }
        auto& c = comps[static_cast<std::size_t>(slot[r])];
        c.members.push_back(i);
        c.diameter_bound += 2.0 * discs[i].radius;
    }
    return comps;
}

// ---------------------------------------------------------------------------
// Arc chains (outer boundaries of planar disc unions)

// One circular arc: points c + r*e^{i t}, t running CCW from t0 to t1
// (t1 > t0 after normalization). Chart geometry only.
struct Arc {
    Complex center;
    double radius = 0;
    double t0 = 0;
    double t1 = 0;

    double length() const { return (t1 - t0) * radius; }
    Complex point(double t) const { return center + std::polar(radius, t); }
    Complex start() const { return point(t0); }
    Complex end() const { return point(t1); }
};

struct ArcChain {
    std::vector<Arc> arcs;  // consecutive endpoints coincide; chain closes

    double length() const {
        double s = 0;
        for (const auto& a : arcs) s += a.length();
        return s;
    }
    bool closed(double tol = 1e-6) const {
        if (arcs.empty()) return false;
        for (std::size_t i = 0; i < arcs.size(); ++i) {
            const auto& a = arcs[i];
            const auto& b = arcs[(i + 1) % arcs.size()];
            if (std::abs(a.end() - b.start()) > tol) return false;
        }
        return true;
    }
};

namespace detail {

inline double wrap_angle(double t) {  // into [0, 2*pi)
    t = std::fmod(t, 2.0 * kPi);
    if (t < 0) t += 2.0 * kPi;
    return t;
}

// Angular interval of circle i strictly inside disc j, as (mid, half-width).
// Empty optional when the circles do not cross properly.
inline std::optional<std::pair<double, double>> covered_interval(const Disc& di, const Disc& dj) {
    const double d = std::abs(dj.center.z - di.center.z);
    const double ri = di.radius, rj = dj.radius;
    const double scale = std::max({1.0, ri, rj});
    if (d >= ri + rj) {
        if (d - (ri + rj) < 1e-12 * scale)
            throw DegenerateTangency("circles tangent from outside");
        return std::nullopt;                           // disjoint
    }
    if (d + ri <= rj) return std::pair{0.0, kPi};      // circle i swallowed
    if (d + rj <= ri) return std::nullopt;             // j inside i: no cover of circle i
    const double ca = (d * d + ri * ri - rj * rj) / (2.0 * d * ri);
    const double half = std::acos(std::clamp(ca, -1.0, 1.0));
    if (half < kTangencyTol || kPi - half < kTangencyTol)
        throw DegenerateTangency("circle pair intersects at angle below tolerance");
    const double mid = std::arg(dj.center.z - di.center.z);
    return std::pair{mid, half};
}

} // namespace detail

// Outer boundary of a connected union of chart discs, as a closed CCW chain.
// Every chain point lies on a member circle and outside all member open discs.
inline ArcChain union_outer_boundary(const std::vector<Disc>& component) {
    if (component.empty()) throw ValidationError("union_outer_boundary: empty component");
    for (const auto& d : component)
        if (d.center.kind != SurfaceKind::Chart)
            throw KindMismatch("union_outer_boundary works on chart discs");

    const std::size_t n = component.size();
    if (n == 1) {
        Arc full{component[0].center.z, component[0].radius, 0.0, 2.0 * kPi};
        return ArcChain{{full}};
    }

    // Free arcs per circle: complement of the union of covered angular intervals.
    struct FreeArc {
        std::size_t circle;
        double t0, t1;  // CCW, t1 > t0, absolute angles (t0 in [0,2pi))
        bool used = false;
    };
    std::vector<FreeArc> free_arcs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, double>> cov;  // [begin, end] possibly wrapping
        bool swallowed = false;
        for (std::size_t j = 0; j < n && !swallowed; ++j) {
            if (j == i) continue;
            auto iv = detail::covered_interval(component[i], component[j]);
            if (!iv) continue;
            if (iv->second >= kPi) { swallowed = true; break; }
            cov.emplace_back(iv->first - iv->second, iv->first + iv->second);
        }
        if (swallowed) continue;
        if (cov.empty()) {
            // Isolated circle inside a connected component cannot happen, but a
            // circle may be touched only by swallowed members.
            free_arcs.push_back({i, 0.0, 2.0 * kPi, false});
            continue;
        }
        // Circular union of the covered intervals: unroll three periods, merge,
        // then read the gaps over one full turn starting from a covered anchor.
        for (auto& c : cov) {
            const double b = detail::wrap_angle(c.first);
            const double len = c.second - c.first;
            c = {b, b + len};
        }
        const double anchor = cov[0].first;
        const std::size_t m = cov.size();
        std::vector<std::pair<double, double>> un;
        un.reserve(3 * m);
        for (std::size_t k = 0; k < m; ++k)
            for (double shift : {-2.0 * kPi, 0.0, 2.0 * kPi})
                un.emplace_back(cov[k].first + shift, cov[k].second + shift);
        std::sort(un.begin(), un.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& iv : un) {
            if (!merged.empty() && iv.first <= merged.back().second + 1e-14)
                merged.back().second = std::max(merged.back().second, iv.second);
            else
                merged.push_back(iv);
        }
        // Span holding the anchor.
        std::size_t a0 = merged.size();
        for (std::size_t k = 0; k < merged.size(); ++k)
            if (merged[k].first <= anchor + 1e-14 && anchor <= merged[k].second + 1e-14) a0 = k;
        if (a0 == merged.size())
            throw NumericError("union_outer_boundary: anchor span missing");
        if (merged[a0].second - merged[a0].first >= 2.0 * kPi - 1e-12)
            continue;  // circle fully covered by the union of the others
        const double window_end = merged[a0].second + 2.0 * kPi;
        double cursor = merged[a0].second;
        for (std::size_t k = a0 + 1; k < merged.size() && cursor < window_end - 1e-12; ++k) {
            const double gap_end = std::min(merged[k].first, window_end);
            if (gap_end - cursor > 1e-12)
                free_arcs.push_back({i, detail::wrap_angle(cursor),
                                     detail::wrap_angle(cursor) + (gap_end - cursor), false});
            cursor = std::max(cursor, merged[k].second);
        }
    }
    if (free_arcs.empty())
        throw NumericError("union_outer_boundary: no free arcs (degenerate component)");

    // Start from the arc containing the rightmost point of the union: that arc
    // is guaranteed to be on the outer boundary.
    std::size_t start = free_arcs.size();
    {
        std::size_t best_circle = 0;
        double best_x = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = component[i].center.z.real() + component[i].radius;
            if (x > best_x) { best_x = x; best_circle = i; }
        }
        // Rightmost point is at angle 0 of best_circle.
        for (std::size_t k = 0; k < free_arcs.size(); ++k) {
            const auto& fa = free_arcs[k];
            if (fa.circle != best_circle) continue;
            // contains angle 0 (mod 2*pi)?
            for (double probe : {0.0, 2.0 * kPi}) {
                if (fa.t0 - 1e-12 <= probe && probe <= fa.t1 + 1e-12) { start = k; break; }
            }
            if (start != free_arcs.size()) break;
        }
        if (start == free_arcs.size())
            throw NumericError("union_outer_boundary: rightmost arc not found");
    }

    ArcChain chain;
    std::size_t cur = start;
    const Complex chain_start = component[free_arcs[start].circle].center.z +
                                std::polar(component[free_arcs[start].circle].radius,
                                           free_arcs[start].t0);
    for (std::size_t guard = 0; guard <= free_arcs.size(); ++guard) {
        auto& fa = free_arcs[cur];
        if (fa.used) throw NumericError("union_outer_boundary: arc revisited");
        fa.used = true;
        const Disc& dc = component[fa.circle];
        chain.arcs.push_back({dc.center.z, dc.radius, fa.t0, fa.t1});
        double scale = 1.0;
        for (const auto& d : component) scale = std::max(scale, d.radius);
        const Complex endpoint = chain.arcs.back().end();
        if (std::abs(endpoint - chain_start) < 1e-6 * scale && !chain.arcs.empty()) break;
        // Next arc: starts at this endpoint on some other circle.
        std::size_t next = free_arcs.size();
        double best = 1e-5 * scale;
        for (std::size_t k = 0; k < free_arcs.size(); ++k) {
            if (free_arcs[k].used) continue;
            const Disc& dk = component[free_arcs[k].circle];
            const Complex s = dk.center.z + std::polar(dk.radius, free_arcs[k].t0);
            const double gap = std::abs(s - endpoint);
            if (gap < best) { best = gap; next = k; }
        }
        if (next == free_arcs.size())
            throw NumericError("union_outer_boundary: open chain (no successor arc)");
        cur = next;
    }
    if (!chain.closed(1e-6))
        throw NumericError("union_outer_boundary: chain failed to close");
    return chain;
}

// ---------------------------------------------------------------------------
// Disjoint-disc covering of a finite point set

// Cover `points` by pairwise disjoint closed discs of total area <= eps and
// individual radius <= eps, with distinct `special` points in distinct discs.
// Geometric radius decay delta/2^n.
inline std::vector<Disc> cover_by_disjoint_discs(const std::vector<SurfacePoint>& points,
                                                 const std::vector<std::size_t>& special,
                                                 double eps) {
    if (!(eps > 0)) throw BadBudget("cover_by_disjoint_discs: eps must be positive");
    if (points.empty()) return {};
    const SurfaceKind kind = points[0].kind;
    for (const auto& p : points)
        if (p.kind != kind) throw KindMismatch("cover_by_disjoint_discs: mixed surface kinds");

    std::vector<bool> is_special(points.size(), false);
    for (std::size_t idx : special) {
        if (idx >= points.size()) throw ValidationError("special index out of range");
        is_special[idx] = true;
    }

    // Process order: special points first, in input order.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < points.size(); ++i) if (is_special[i]) order.push_back(i);
    for (std::size_t i = 0; i < points.size(); ++i) if (!is_special[i]) order.push_back(i);

    // Area of a disc of radius r is <= pi*r^2 on both surfaces, so
    // sum_n pi (delta/2^n)^2 = pi delta^2 / 3 <= eps  when delta = sqrt(3 eps / pi).
    // Each radius stays < delta/2 <= eps.
    double delta = 0.999 * std::min({std::sqrt(3.0 * eps / kPi), 2.0 * eps,
                                     kind == SurfaceKind::Sphere ? 1.0 : std::numeric_limits<double>::infinity()});

    std::vector<Disc> cover;
    std::vector<std::size_t> owner;  // point index that seeded each disc
    int n_created = 0;
    for (std::size_t idx : order) {
        const SurfacePoint& x = points[idx];
        bool covered = false;
        for (const auto& d : cover)
            if (distance(d.center, x) < d.radius) { covered = true; break; }
        if (covered) continue;

        ++n_created;
        double r = delta / std::pow(2.0, n_created);
        // Stay disjoint from every existing disc.
        for (const auto& d : cover)
            r = std::min(r, 0.45 * (distance(d.center, x) - d.radius));
        // A special point's disc must not capture any other special point.
        if (is_special[idx])
            for (std::size_t j = 0; j < points.size(); ++j)
                if (j != idx && is_special[j])
                    r = std::min(r, 0.45 * distance(points[j], x));
        if (!(r > 0))
            throw NumericError("cover_by_disjoint_discs: coincident input points");
        // Nudge the radius off any exact point distance so that no input point
        // sits on a disc boundary.
        for (int guard = 0; guard < 64; ++guard) {
            bool grazing = false;
            for (std::size_t j = 0; j < points.size(); ++j)
                if (j != idx && std::abs(distance(points[j], x) - r) < 16 * kGeomTol) {
                    grazing = true;
                    break;
                }
            if (!grazing) break;
            r *= 0.9876;
        }
        cover.emplace_back(x, r);
        owner.push_back(idx);
    }
    return cover;
}

// ---------------------------------------------------------------------------
// Uniform grid over chart points for near-neighbor queries

class PointGrid {
public:
    PointGrid() = default;
    PointGrid(const std::vector<Complex>& pts, double cell) : cell_(cell), pts_(pts) {
        if (!(cell > 0)) throw ValidationError("PointGrid: cell must be positive");
        keys_.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Key k = key(pts[i]);
            keys_.emplace_back(k, i);
            if (i == 0) {
                kmin_ = kmax_ = k;
            } else {
                kmin_ = {std::min(kmin_.first, k.first), std::min(kmin_.second, k.second)};
                kmax_ = {std::max(kmax_.first, k.first), std::max(kmax_.second, k.second)};
            }
        }
        std::sort(keys_.begin(), keys_.end());
    }

    bool empty() const { return pts_.empty(); }
    const std::vector<Complex>& points() const { return pts_; }

    // Exact min distance from z to the point set. Cells at Chebyshev ring r
    // hold only points at distance >= cell*(r-1), so rings beyond the current
    // best cannot improve it.
    double min_distance(Complex z) const {
        if (pts_.empty()) return std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        const auto [cx, cy] = key(z);
        const long long max_ring =
            std::max({std::llabs(cx - kmin_.first), std::llabs(kmax_.first - cx),
                      std::llabs(cy - kmin_.second), std::llabs(kmax_.second - cy)}) +
            1;
        for (long long ring = 0; ring <= max_ring; ++ring) {
            if (best < cell_ * static_cast<double>(ring - 1)) break;
            for (long long dx = -ring; dx <= ring; ++dx)
                for (long long dy = -ring; dy <= ring; ++dy) {
                    if (std::max(std::llabs(dx), std::llabs(dy)) != ring) continue;
                    scan_cell(cx + dx, cy + dy, z, best);
                }
        }
        return best;
    }

private:
    using Key = std::pair<long long, long long>;
    Key key(Complex z) const {
        return {static_cast<long long>(std::floor(z.real() / cell_)),
                static_cast<long long>(std::floor(z.imag() / cell_))};
    }
    void scan_cell(long long cx, long long cy, Complex z, double& best) const {
        const std::pair<Key, std::size_t> lo{{cx, cy}, 0};
        auto it = std::lower_bound(keys_.begin(), keys_.end(), lo,
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        for (; it != keys_.end() && it->first == Key{cx, cy}; ++it)
            best = std::min(best, std::abs(pts_[it->second] - z));
    }

    double cell_ = 1;
    std::vector<Complex> pts_;
    std::vector<std::pair<Key, std::size_t>> keys_;
    Key kmin_{0, 0}, kmax_{0, 0};
};

// ---------------------------------------------------------------------------
// Stereographic chart for sphere domains

// Projection of the sphere minus hole `pivot` onto a chart: the pivot hole
// becomes the outer boundary. Conformal; circles map to circles. Because the
// pole sits inside a removed hole, the chart image is conformally identical to
// the domain (nothing extra is removed).
struct SphereChart {
    Vec3 pole;       // projection pole (center of the pivot hole)
    Vec3 ex, ey;     // orthonormal frame spanning the plane perpendicular to pole

    Complex project(const SurfacePoint& p) const {
        const Vec3& v = p.v;
        const double dot = v[0] * pole[0] + v[1] * pole[1] + v[2] * pole[2];
        const double den = 1.0 - dot;
        if (den < 1e-14) throw NumericError("stereographic projection at the pole");
        const double cx = (v[0] * ex[0] + v[1] * ex[1] + v[2] * ex[2]) / den;
        const double cy = (v[0] * ey[0] + v[1] * ey[1] + v[2] * ey[2]) / den;
        return {cx, cy};
    }

    // Round-metric line element per chart length at chart point z:
    // |ds_sphere| = 2 |dz| / (1 + |z|^2).
    static double conformal_factor(Complex z) { return 2.0 / (1.0 + std::norm(z)); }

    // Spherical circle -> chart circle, via the two meridian extreme points
    // (the meridian through the pole meets the circle orthogonally, so their
    // images are diameter endpoints of the image circle).
    Disc project(const Disc& d) const {
        const double pol = distance(SurfacePoint::sphere(pole), d.center);
        const double r = d.radius;
        auto point_at = [&](double angle_from_pole) {
            const Vec3& a = pole;
            const Vec3& c = d.center.v;
            const double ac = a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
            Vec3 u{c[0] - ac * a[0], c[1] - ac * a[1], c[2] - ac * a[2]};
            double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
            if (un < 1e-14) {
                // circle centered on the pole axis: any meridian works
                u = ex;
                un = 1.0;
            }
            for (auto& x : u) x /= un;
            const double cs = std::cos(angle_from_pole), sn = std::sin(angle_from_pole);
            return SurfacePoint::sphere(
                {a[0] * cs + u[0] * sn, a[1] * cs + u[1] * sn, a[2] * cs + u[2] * sn});
        };
        const Complex p1 = project(point_at(pol - r));
        const Complex p2 = project(point_at(pol + r));
        return Disc::chart(0.5 * (p1 + p2), 0.5 * std::abs(p2 - p1));
    }
};

// Build the chart of a sphere domain, projecting from inside holes[pivot].
// The pivot hole's exterior becomes the chart's outer disc; the remaining
// holes keep their relative order (hole i > pivot shifts down by one).
inline std::pair<Domain, SphereChart> stereographic_chart(const Domain& dom,
                                                          std::size_t pivot = 0) {
    if (dom.kind != SurfaceKind::Sphere)
        throw KindMismatch("stereographic_chart: sphere domains only");
    if (dom.holes.empty())
        throw NoGenerators("sphere domain needs at least one hole to open a chart");
    if (pivot >= dom.holes.size()) throw ValidationError("pivot hole out of range");

    SphereChart chart;
    chart.pole = dom.holes[pivot].center.v;
    const Vec3& p = chart.pole;
    Vec3 any{1, 0, 0};
    if (std::abs(p[0]) > 0.9) any = {0, 1, 0};
    Vec3 ex{p[1] * any[2] - p[2] * any[1], p[2] * any[0] - p[0] * any[2],
            p[0] * any[1] - p[1] * any[0]};
    const double exn = std::sqrt(ex[0] * ex[0] + ex[1] * ex[1] + ex[2] * ex[2]);
    for (auto& x : ex) x /= exn;
    Vec3 ey{p[1] * ex[2] - p[2] * ex[1], p[2] * ex[0] - p[0] * ex[2], p[0] * ex[1] - p[1] * ex[0]};
    chart.ex = ex;
    chart.ey = ey;

    // The pivot cap of angular radius rho maps to |w| > cot(rho/2); the domain
    // lands inside the disc of radius cot(rho/2).
    const double rho = dom.holes[pivot].radius;
    const double outer_r = std::cos(rho / 2) / std::sin(rho / 2);
    Domain out;
    out.kind = SurfaceKind::Chart;
    out.outer = Disc::chart({0, 0}, outer_r);
    for (std::size_t i = 0; i < dom.holes.size(); ++i) {
        if (i == pivot) continue;
        out.holes.push_back(chart.project(dom.holes[i]));
    }
    for (const auto& q : dom.punctures)
        out.punctures.push_back(SurfacePoint::chart(chart.project(q)));
    out.validate();
    return {out, chart};
}

// ---------------------------------------------------------------------------
// Polyline loops and the (P1)/(P2) admissibility report

struct PolyLoop {
    std::vector<SurfacePoint> vertices;  // cyclic
    std::size_t base = 0;
    bool positive = true;  // orientation flag (true: as listed)

    void validate() const {
        if (vertices.size() < 3) throw ValidationError("PolyLoop needs >= 3 vertices");
        if (base >= vertices.size()) throw ValidationError("PolyLoop base index out of range");
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const auto& a = vertices[i];
            const auto& b = vertices[(i + 1) % vertices.size()];
            if (distance(a, b) <= kGeomTol)
                throw ValidationError("PolyLoop has coincident consecutive vertices");
        }
    }
    std::size_t size() const { return vertices.size(); }
    const SurfacePoint& vertex(std::size_t i) const { return vertices[i % vertices.size()]; }

    double flat_length() const {
        double s = 0;
        for (std::size_t i = 0; i < vertices.size(); ++i)
            s += distance(vertices[i], vertices[(i + 1) % vertices.size()]);
        return s;
    }
};

// Chart circle loop helper used throughout the tests and templates.
inline PolyLoop make_circle_loop(Complex center, double radius, std::size_t nverts,
                                 bool ccw = true) {
    PolyLoop loop;
    loop.vertices.reserve(nverts);
    for (std::size_t i = 0; i < nverts; ++i) {
        const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(nverts);
        loop.vertices.push_back(SurfacePoint::chart(center + std::polar(radius, ccw ? t : -t)));
    }
    loop.validate();
    return loop;
}

namespace detail {

// Range of |p(t) - c| over a chart segment [a, b].
inline std::pair<double, double> segment_center_distance_range(Complex a, Complex b, Complex c) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    double tmin = 0;
    if (len2 > 0) tmin = std::clamp(((c - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    const double dmin = std::abs(a + tmin * ab - c);
    const double dmax = std::max(std::abs(a - c), std::abs(b - c));
    return {dmin, dmax};
}

} // namespace detail

// Distance from a chart segment to the circle |z - c| = r (zero if crossing).
inline double segment_circle_distance(Complex a, Complex b, Complex c, double r) {
    const auto [dmin, dmax] = detail::segment_center_distance_range(a, b, c);
    if (r < dmin) return dmin - r;
    if (r > dmax) return r - dmax;
    return 0.0;
}

// Distance from a chart loop to the domain boundary circles.
inline double loop_boundary_clearance(const Domain& dom, const PolyLoop& loop) {
    if (dom.kind != SurfaceKind::Chart)
        throw KindMismatch("loop_boundary_clearance: chart domains only");
    double c = std::numeric_limits<double>::infinity();
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Complex a = loop.vertex(i).z, b = loop.vertex(i + 1).z;
        c = std::min(c, segment_circle_distance(a, b, dom.outer->center.z, dom.outer->radius));
        for (const auto& h : dom.holes)
            c = std::min(c, segment_circle_distance(a, b, h.center.z, h.radius));
    }
    return c;
}

struct P1P2Report {
    bool p1 = false;
    bool p2 = false;
    double boundary_clearance = 0;   // min over loop of distance to domain boundary
    double injectivity_radius = 0;   // inf of injectivity radii along the loop
    std::size_t p2_witness = 0;      // vertex index violating (P2), when !p2

    bool ok() const { return p1 && p2; }
};

// Number of connected branches of the loop inside the closed disc V(x, rho).
inline std::size_t loop_branches_in_disc(const PolyLoop& loop, const SurfacePoint& x, double rho) {
    const std::size_t n = loop.size();
    std::vector<bool> seg_touches(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (x.kind == SurfaceKind::Chart) {
            const auto [dmin, dmax] =
                detail::segment_center_distance_range(loop.vertex(i).z, loop.vertex(i + 1).z, x.z);
            seg_touches[i] = dmin <= rho;
        } else {
            // Sphere segments are sampled; adequate for the report use-case.
            const int steps = 8;
            for (int k = 0; k <= steps && !seg_touches[i]; ++k) {
                // chord interpolation then renormalize
                const auto& a = loop.vertex(i).v;
                const auto& b = loop.vertex(i + 1).v;
                const double t = static_cast<double>(k) / steps;
                Vec3 m{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
                const double nm = std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
                if (nm == 0) continue;
                for (auto& c : m) c /= nm;
                seg_touches[i] = distance(SurfacePoint::sphere(m), x) <= rho;
            }
        }
    }
    // Count maximal cyclic runs of touching segments.
    bool any = false, all = true;
    for (bool t : seg_touches) { any |= t; all &= t; }
    if (!any) return 0;
    if (all) return 1;
    std::size_t runs = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (seg_touches[i] && !seg_touches[(i + n - 1) % n]) ++runs;
    return runs;
}

// (P1): 4a < min(dist(loop, boundary), injectivity radius along the loop).
// (P2): for every loop vertex x, loop ∩ V(x, 2a) has exactly one branch.
inline P1P2Report check_P1_P2(const Domain& dom, const PolyLoop& loop, double a) {
    loop.validate();
    P1P2Report rep;
    rep.boundary_clearance = loop_boundary_clearance(dom, loop);
    rep.injectivity_radius =
        dom.kind == SurfaceKind::Sphere ? kPi : std::numeric_limits<double>::infinity();
    rep.p1 = 4.0 * a < std::min(rep.boundary_clearance, rep.injectivity_radius);
    rep.p2 = true;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        if (loop_branches_in_disc(loop, loop.vertex(i), 2.0 * a) != 1) {
            rep.p2 = false;
            rep.p2_witness = i;
            break;
        }
    }
    return rep;
}

} // namespace hyploop
