#pragma once

// Procedure (*): the m-step rerouting of a simple loop around the connected
// components of the inflated puncture set, with certified clearance and a
// length ledger. Also: base-point selection by area pigeonhole, spider
// template loops, and the (a, H, A, L) constant assembly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hyploop/geometry.hpp"
#include "hyploop/homotopy.hpp"

namespace hyploop {

// ---------------------------------------------------------------------------
// Parameters and results

struct StarParams {
    double a = 0;                  // admissibility parameter, (P1)/(P2) checked
    std::size_t s = 1;             // clearance divisor (= #S in Theorem B use)
    double c0 = 2.0 * kPi;         // disc constant from bdp_constant
    std::vector<Disc> obstacles;   // moving-disc variant: extra discs Z
};

struct DetourRecord {
    std::size_t component = 0;     // processing order index
    std::size_t n_members = 0;     // discs in the component
    double arc_length = 0;         // exact length of the detour arcs used
    double removed_length = 0;     // flat length of the replaced sub-path
    double budget = 0;             // per-component ledger bound
};

struct RerouteResult {
    PolyLoop loop;                      // rerouted loop, base at vertex 0
    std::vector<ArcChain> detours;      // directed boundary sub-arcs used
    std::vector<DetourRecord> records;
    double clearance = 0;               // certified = a/s
    double length_delta = 0;            // flat length(out) - length(in)
    double budget_total = 0;            // sum of per-component budgets
};

namespace detail {

// Intersection parameter interval of segment [a,b] with the closed disc
// (c, r), clipped to [0,1]. Empty when the overlap is shorter than the
// grazing tolerance.
inline std::optional<std::pair<double, double>> segment_disc_interval(Complex a, Complex b,
                                                                      Complex c, double r) {
    const Complex d = b - a;
    const double A = std::norm(d);
    if (A == 0) return std::nullopt;
    const double B = 2.0 * ((a - c) * std::conj(d)).real();
    const double C = std::norm(a - c) - r * r;
    const double disc = B * B - 4 * A * C;
    if (disc <= 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    double t0 = (-B - sq) / (2 * A), t1 = (-B + sq) / (2 * A);
    t0 = std::max(t0, 0.0);
    t1 = std::min(t1, 1.0);
    if (t1 <= t0) return std::nullopt;
    if ((t1 - t0) * std::sqrt(A) < 1e-9) return std::nullopt;  // grazing contact
    return std::pair{t0, t1};
}

// Position of a point on a chain: (arc index, absolute angle within the arc).
struct ChainPos {
    std::size_t arc = 0;
    double angle = 0;  // in [arc.t0, arc.t1]
    double along = 0;  // chain length from the chain start to this point
};

inline std::optional<ChainPos> locate_on_chain(const ArcChain& chain, Complex p, double tol) {
    double walked = 0;
    std::optional<ChainPos> best;
    double best_err = tol;
    for (std::size_t k = 0; k < chain.arcs.size(); ++k) {
        const Arc& arc = chain.arcs[k];
        const double radial_err = std::abs(std::abs(p - arc.center) - arc.radius);
        if (radial_err < tol) {
            double ang = std::arg(p - arc.center);
            // bring into [t0, t1] modulo 2*pi
            while (ang < arc.t0 - 1e-12) ang += 2.0 * kPi;
            if (ang <= arc.t1 + 1e-12) {
                const double clamped = std::clamp(ang, arc.t0, arc.t1);
                const double err = std::abs(arc.point(clamped) - p);
                if (err < best_err) {
                    best_err = err;
                    best = ChainPos{k, clamped, walked + (clamped - arc.t0) * arc.radius};
                }
            }
        }
        walked += arc.length();
    }
    return best;
}

// Directed sub-path of the chain from s to t (forward = chain orientation),
// emitted as sampled polyline points (s and t excluded) plus the sub-arcs used
// and their exact length. max_sagitta controls the chord dip tolerance.
struct ChainPath {
    std::vector<Complex> points;
    ArcChain arcs_used;
    double exact_length = 0;
};

inline void sample_arc(const Arc& arc, double from, double to, double max_sagitta,
                       std::vector<Complex>& out) {
    // forward (CCW) sampling from angle `from` to `to` (to >= from)
    const double span = to - from;
    if (span <= 0) return;
    const double dtheta =
        std::min(kPi / 16, 2.0 * std::acos(std::clamp(1.0 - max_sagitta / arc.radius, -1.0, 1.0)));
    const int steps = std::max(1, static_cast<int>(std::ceil(span / std::max(dtheta, 1e-9))));
    for (int i = 1; i < steps; ++i) out.push_back(arc.point(from + span * i / steps));
}

inline ChainPath chain_path_forward(const ArcChain& chain, const ChainPos& s, const ChainPos& t,
                                    double max_sagitta) {
    ChainPath path;
    const std::size_t n = chain.arcs.size();
    if (s.arc == t.arc && s.angle <= t.angle) {
        Arc sub{chain.arcs[s.arc].center, chain.arcs[s.arc].radius, s.angle, t.angle};
        sample_arc(sub, s.angle, t.angle, max_sagitta, path.points);
        path.arcs_used.arcs.push_back(sub);
        path.exact_length = sub.length();
        return path;
    }
    // tail of s.arc
    {
        const Arc& a = chain.arcs[s.arc];
        Arc sub{a.center, a.radius, s.angle, a.t1};
        sample_arc(sub, sub.t0, sub.t1, max_sagitta, path.points);
        path.points.push_back(a.end());
        path.arcs_used.arcs.push_back(sub);
        path.exact_length += sub.length();
    }
    // full middle arcs
    for (std::size_t k = (s.arc + 1) % n; k != t.arc; k = (k + 1) % n) {
        const Arc& a = chain.arcs[k];
        sample_arc(a, a.t0, a.t1, max_sagitta, path.points);
        path.points.push_back(a.end());
        path.arcs_used.arcs.push_back(a);
        path.exact_length += a.length();
    }
    // head of t.arc
    {
        const Arc& a = chain.arcs[t.arc];
        Arc sub{a.center, a.radius, a.t0, t.angle};
        sample_arc(sub, sub.t0, sub.t1, max_sagitta, path.points);
        path.arcs_used.arcs.push_back(sub);
        path.exact_length += sub.length();
    }
    return path;
}

inline ChainPath chain_path_reverse(const ArcChain& chain, const ChainPos& s, const ChainPos& t,
                                    double max_sagitta) {
    ChainPath fwd = chain_path_forward(chain, t, s, max_sagitta);
    std::reverse(fwd.points.begin(), fwd.points.end());
    std::reverse(fwd.arcs_used.arcs.begin(), fwd.arcs_used.arcs.end());
    return fwd;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Procedure (*)

// Reroutes `loop` around the components of V(S u Z, a/s): for each component
// met by the current loop, the directed sub-path between first entry and last
// exit is replaced by the shorter outer-boundary arc. The output
//   (i) has the same reduced word as the input (homotopy preserved),
//  (ii) clears D(S u boundary, a/s),
// (iii) gains at most c0*a of flat length (plus the moving-disc budget).
inline RerouteResult procedure_star(const Domain& dom, const PolyLoop& loop,
                                    const std::vector<Complex>& S, const StarParams& params) {
    if (dom.kind != SurfaceKind::Chart)
        throw KindMismatch("procedure_star: chart domains only (open spheres into a chart)");
    loop.validate();
    if (!is_simple(loop)) throw NotSimple("procedure_star requires a simple loop");
    if (!(params.a > 0) || params.s < 1) throw BadParams("need a > 0 and s >= 1");
    const auto rep = check_P1_P2(dom, loop, params.a);
    if (!rep.ok()) throw BadParams("(P1)/(P2) fail for the requested a");
    const double rho = params.a / static_cast<double>(params.s);

    // obstacle discs: S points inflated to rho, Z discs inflated by rho
    std::vector<Disc> obstacles;
    obstacles.reserve(S.size() + params.obstacles.size());
    std::vector<std::size_t> obstacle_weight;  // S-point count per disc (ledger)
    for (const Complex& p : S) {
        obstacles.push_back(Disc::chart(p, rho));
        obstacle_weight.push_back(1);
    }
    for (const auto& z : params.obstacles) {
        if (z.center.kind != SurfaceKind::Chart) throw KindMismatch("obstacle on wrong surface");
        obstacles.push_back(Disc::chart(z.center.z, z.radius + rho));
        obstacle_weight.push_back(0);
    }

    // base must stay clear of every obstacle
    const Complex base_pt = loop.vertex(loop.base).z;
    for (const auto& ob : obstacles)
        if (std::abs(base_pt - ob.center.z) <= ob.radius)
            throw NearBase("base vertex inside an inflated obstacle");

    // working polyline, base first
    std::vector<Complex> pts;
    pts.reserve(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) pts.push_back(loop.vertex(loop.base + i).z);
    const double len_in = loop.flat_length();

    RerouteResult res;
    const auto comps = union_components(obstacles);
    const double max_sagitta = 0.5e-9;

    for (std::size_t cj = 0; cj < comps.size(); ++cj) {
        const auto& comp = comps[cj];
        std::vector<Disc> members;
        std::size_t nj = 0;
        for (auto m : comp.members) {
            members.push_back(obstacles[m]);
            nj += obstacle_weight[m];
        }

        // first entry s_j and last exit t_j of the current loop
        const std::size_t n = pts.size();
        auto seg_hit = [&](std::size_t i) -> std::optional<std::pair<double, double>> {
            std::optional<std::pair<double, double>> whole;
            for (const auto& d : members) {
                const auto iv =
                    detail::segment_disc_interval(pts[i], pts[(i + 1) % n], d.center.z, d.radius);
                if (!iv) continue;
                if (!whole)
                    whole = iv;
                else
                    whole = std::pair{std::min(whole->first, iv->first),
                                      std::max(whole->second, iv->second)};
            }
            return whole;
        };
        std::optional<std::pair<std::size_t, double>> entry, exit;
        for (std::size_t i = 0; i < n && !entry; ++i)
            if (const auto iv = seg_hit(i)) entry = {i, iv->first};
        if (!entry) continue;  // component untouched
        for (std::size_t i = n; i-- > 0 && !exit;)
            if (const auto iv = seg_hit(i)) exit = {i, iv->second};

        const Complex s_pt = pts[entry->first] +
                             entry->second * (pts[(entry->first + 1) % n] - pts[entry->first]);
        const Complex t_pt =
            pts[exit->first] + exit->second * (pts[(exit->first + 1) % n] - pts[exit->first]);

        const ArcChain chain = union_outer_boundary(members);
        const double loc_tol = 1e-6 * std::max(1.0, rho);
        const auto s_pos = detail::locate_on_chain(chain, s_pt, loc_tol);
        const auto t_pos = detail::locate_on_chain(chain, t_pt, loc_tol);
        if (!s_pos || !t_pos)
            throw BadParams("entry/exit not on the component outer boundary (pocket contact)");

        // removed sub-path length
        double removed = 0;
        if (entry->first == exit->first && entry->second <= exit->second) {
            removed = (exit->second - entry->second) *
                      std::abs(pts[(entry->first + 1) % n] - pts[entry->first]);
        } else {
            removed += (1.0 - entry->second) *
                       std::abs(pts[(entry->first + 1) % n] - pts[entry->first]);
            for (std::size_t i = entry->first + 1; i < exit->first; ++i)
                removed += std::abs(pts[i + 1] - pts[i]);
            removed += exit->second * std::abs(pts[(exit->first + 1) % n] - pts[exit->first]);
        }

        // shorter outer-boundary arc, directed from s to t
        const double fwd_len = s_pos->along <= t_pos->along
                                   ? t_pos->along - s_pos->along
                                   : chain.length() - (s_pos->along - t_pos->along);
        detail::ChainPath path = fwd_len <= chain.length() - fwd_len
                                     ? detail::chain_path_forward(chain, *s_pos, *t_pos, max_sagitta)
                                     : detail::chain_path_reverse(chain, *s_pos, *t_pos, max_sagitta);

        // splice: pts[0..entry.first], s_pt, path, t_pt, pts[exit.first+1..]
        std::vector<Complex> next;
        next.reserve(entry->first + path.points.size() + (n - exit->first) + 4);
        for (std::size_t i = 0; i <= entry->first; ++i) next.push_back(pts[i]);
        auto push_unique = [&](Complex p) {
            if (next.empty() || std::abs(next.back() - p) > kGeomTol) next.push_back(p);
        };
        push_unique(s_pt);
        for (const Complex& p : path.points) push_unique(p);
        push_unique(t_pt);
        for (std::size_t i = exit->first + 1; i < n; ++i) push_unique(pts[i]);
        // closing edge degeneracy
        while (next.size() > 3 && std::abs(next.back() - next.front()) <= kGeomTol)
            next.pop_back();
        pts = std::move(next);

        DetourRecord rec;
        rec.component = cj;
        rec.n_members = comp.members.size();
        rec.arc_length = path.exact_length;
        rec.removed_length = removed;
        double budget = 0;
        for (const auto& d : members) budget += params.c0 * d.radius;
        rec.budget = budget;
        res.records.push_back(rec);
        res.detours.push_back(std::move(path.arcs_used));
        res.budget_total += budget;
    }

    res.loop.vertices.clear();
    for (const Complex& p : pts) res.loop.vertices.push_back(SurfacePoint::chart(p));
    res.loop.base = 0;
    res.loop.validate();
    res.clearance = rho;
    res.length_delta = res.loop.flat_length() - len_in;
    return res;
}

// ---------------------------------------------------------------------------
// Base-point selection (area pigeonhole)

// First hexagonal-grid point of B_eps (ring order from the outer center) at
// distance >= 2A/s from S and clear of the obstacles.
inline SurfacePoint find_base_point(const Domain& dom, const std::vector<Complex>& S, double A,
                                    std::size_t s, double eps,
                                    const std::vector<Disc>& obstacles = {}) {
    if (dom.kind != SurfaceKind::Chart) throw KindMismatch("find_base_point: chart domains only");
    if (!(A > 0) || s < 1) throw ValidationError("find_base_point: need A > 0, s >= 1");
    const double need = 2.0 * A / static_cast<double>(s);

    // area precondition: vol V(S, 2A/s) < vol(B_eps)/4
    const double r_out = dom.outer->radius;
    double vol_beps = kPi * (r_out - eps) * (r_out - eps);
    for (const auto& h : dom.holes) vol_beps -= kPi * (h.radius + eps) * (h.radius + eps);
    const double vol_vs = static_cast<double>(S.size()) * kPi * need * need;
    if (!(vol_beps > 0) || vol_vs >= vol_beps / 4)
        throw NoRoomForBase("V(S, 2A/s) area exceeds a quarter of B_eps");

    const double pitch = A / (2.0 * static_cast<double>(s));
    PointGrid sgrid(S, std::max(need, pitch));

    const Complex c = dom.outer->center.z;
    const long long max_ring = static_cast<long long>(std::ceil(r_out / pitch)) + 2;
    for (long long ring = 0; ring <= max_ring; ++ring) {
        for (long long i = -ring; i <= ring; ++i)
            for (long long j = -ring; j <= ring; ++j) {
                if (std::max(std::llabs(i), std::llabs(j)) != ring) continue;
                const Complex p =
                    c + Complex{(static_cast<double>(i) + 0.5 * (j & 1LL ? 1.0 : 0.0)) * pitch,
                                static_cast<double>(j) * pitch * std::sqrt(3.0) / 2.0};
                if (dom.boundary_clearance(SurfacePoint::chart(p)) < eps) continue;
                if (sgrid.min_distance(p) < need) continue;
                bool clear = true;
                for (const auto& z : obstacles)
                    if (std::abs(p - z.center.z) <= z.radius + need) { clear = false; break; }
                if (!clear) continue;
                return SurfacePoint::chart(p);
            }
    }
    throw NoRoomForBase("grid sweep found no admissible base point");
}

// ---------------------------------------------------------------------------
// Template loops

// Simple keyhole loop per generator: a thin corridor from the base to a ring
// hugging the hole at clearance min(0.1*radius, gap/4), a near-full turn of the
// ring, and the corridor back. Self-validating: the word is checked to be xi.
inline std::vector<std::pair<int, PolyLoop>> template_loops(const Domain& dom,
                                                            const SurfacePoint& base,
                                                            const CutSystem* cuts_hint = nullptr) {
    if (dom.kind != SurfaceKind::Chart) throw KindMismatch("template_loops: chart domains only");
    if (!dom.interior_contains(base, 0.0)) throw BadBase("base outside the domain");
    for (const auto& h : dom.holes)
        if (distance(h.center, base) <= h.radius) throw BadBase("base inside a hole");

    const CutSystem cuts = cuts_hint ? *cuts_hint : make_cut_system(dom);
    const Complex b = base.z;
    std::vector<std::pair<int, PolyLoop>> out;

    for (std::size_t h = 0; h < dom.holes.size(); ++h) {
        const auto& hole = dom.holes[h];
        // gap to the nearest other boundary circle
        double gap = dom.outer->radius - std::abs(hole.center.z - dom.outer->center.z) -
                     hole.radius;
        for (std::size_t j = 0; j < dom.holes.size(); ++j) {
            if (j == h) continue;
            gap = std::min(gap, std::abs(dom.holes[j].center.z - hole.center.z) -
                                    dom.holes[j].radius - hole.radius);
        }
        const double clear_i = std::min(0.1 * hole.radius, gap / 4.0);
        if (!(clear_i > 0)) throw BadBase("hole has no clearance for a template ring");
        const double ring_r = hole.radius + clear_i;
        const double w = clear_i / 2.0;  // corridor half-width

        // candidate anchors on the ring, scored by corridor clearance
        const int samples = 256;
        struct Cand { double score; int k; };
        std::vector<Cand> cands;
        for (int k = 0; k < samples; ++k) {
            const double phi = 2.0 * kPi * (k + 0.2360679) / samples;
            const Complex anchor = hole.center.z + std::polar(ring_r, phi);
            const double d_ab = std::abs(b - anchor);
            if (d_ab < 4 * w) continue;  // base sits on the ring: corridor degenerate
            double score = std::numeric_limits<double>::infinity();
            // corridor must clear other holes, the outer boundary, punctures,
            // other holes' cuts, and its own hole
            score = std::min(score, segment_circle_distance(b, anchor, hole.center.z,
                                                            hole.radius) );
            for (std::size_t j = 0; j < dom.holes.size(); ++j) {
                if (j == h) continue;
                score = std::min(score, segment_circle_distance(b, anchor, dom.holes[j].center.z,
                                                                dom.holes[j].radius));
            }
            {
                const auto [dmin, dmax] =
                    detail::segment_center_distance_range(b, anchor, dom.outer->center.z);
                score = std::min(score, dom.outer->radius - dmax);
            }
            for (const auto& p : dom.punctures) {
                const auto [dmin, dmax] = detail::segment_center_distance_range(b, anchor, p.z);
                score = std::min(score, dmin);
            }
            for (const auto& cut : cuts.cuts) {
                if (cut.gen == static_cast<int>(h) + 1) continue;  // own cut may be crossed
                score = std::min(score,
                                 detail::segment_segment_distance(b, anchor, cut.from, cut.to));
            }
            if (score > w) cands.push_back({score, k});
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            return x.score > y.score || (x.score == y.score && x.k < y.k);
        });
        if (cands.empty()) throw BadBase("no clear corridor to hole " + std::to_string(h + 1));

        bool built = false;
        for (const auto& cand : cands) {
            const double phi = 2.0 * kPi * (cand.k + 0.2360679) / samples;
            const Complex anchor = hole.center.z + std::polar(ring_r, phi);
            const Complex u = (b - anchor) / std::abs(b - anchor);
            const Complex nrm{-u.imag(), u.real()};

            // ring mouth half-angle for the corridor of half-width w
            const double beta = std::asin(std::clamp(w / ring_r, 0.0, 0.9));
            PolyLoop tpl;
            auto push = [&](Complex p) {
                if (tpl.vertices.empty() || std::abs(tpl.vertices.back().z - p) > kGeomTol)
                    tpl.vertices.push_back(SurfacePoint::chart(p));
            };
            // base cap -> corridor side 1 -> ring CCW -> corridor side 2 -> base
            push(b);
            const Complex m1 = hole.center.z + std::polar(ring_r, phi - beta);
            const Complex m2 = hole.center.z + std::polar(ring_r, phi + beta);
            // corridor runs parallel to u at offsets +-w
            push(b - u * (2.0 * w) + nrm * w);
            push(m1 + nrm * 0.0);  // mouth point 1
            // ring samples CCW the long way from phi - beta around to phi + beta
            const double span = 2.0 * kPi - 2.0 * beta;
            const int steps = 96;
            for (int q = 1; q < steps; ++q)
                push(hole.center.z + std::polar(ring_r, phi - beta - span * q / steps));
            push(m2);
            push(b - u * (2.0 * w) - nrm * w);
            tpl.base = 0;
            tpl.validate();

            if (!is_simple(tpl)) continue;
            Word word;
            try {
                word = loop_word(tpl, cuts);
            } catch (const TangentialCrossing&) {
                continue;
            }
            const Word target = Word::reduced({{static_cast<int>(h) + 1, 1}});
            if (word == target) {
                out.emplace_back(static_cast<int>(h) + 1, std::move(tpl));
                built = true;
                break;
            }
            // try the reversed orientation
            PolyLoop rev = tpl;
            std::reverse(rev.vertices.begin(), rev.vertices.end());
            rev.base = rev.vertices.size() - 1;
            std::rotate(rev.vertices.begin(), rev.vertices.end() - 1, rev.vertices.end());
            rev.base = 0;
            if (is_simple(rev) && loop_word(rev, cuts) == target) {
                out.emplace_back(static_cast<int>(h) + 1, std::move(rev));
                built = true;
                break;
            }
        }
        if (!built) throw BadBase("no valid template for hole " + std::to_string(h + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constant assembly: a, H, A, L

struct AssembledConstants {
    double a = 0;   // largest admissibility parameter uniform over the base sweep
    double H = 0;   // max template flat length over the sweep
    double A = 0;   // collar parameter
    double L = 0;   // Theorem B constant
    double c = 2;   // chart comparison constant
    double c0 = 0;  // disc constant
    double eps = 0; // B_eps margin used
    double vol_beps = 0;
};

inline AssembledConstants assemble_constants(const Domain& dom, double eps,
                                             std::size_t sweep_target = 24) {
    if (dom.kind != SurfaceKind::Chart)
        throw KindMismatch("assemble_constants: chart domains only");
    const CutSystem cuts = make_cut_system(dom);
    const double R = dom.outer->radius;
    const Complex c = dom.outer->center.z;

    // deterministic base sweep over B_eps: hex grid, ring order, subsampled
    std::vector<SurfacePoint> sweep;
    {
        const double pitch = std::max(R / 6.0, eps / 2.0);
        const long long max_ring = static_cast<long long>(std::ceil(R / pitch)) + 1;
        for (long long ring = 0; ring <= max_ring; ++ring)
            for (long long i = -ring; i <= ring; ++i)
                for (long long j = -ring; j <= ring; ++j) {
                    if (std::max(std::llabs(i), std::llabs(j)) != ring) continue;
                    const Complex p =
                        c + Complex{(static_cast<double>(i) + (j & 1LL ? 0.5 : 0.0)) * pitch,
                                    static_cast<double>(j) * pitch * std::sqrt(3.0) / 2.0};
                    if (dom.boundary_clearance(SurfacePoint::chart(p)) >= eps)
                        sweep.push_back(SurfacePoint::chart(p));
                }
        if (sweep.empty()) throw BadDomain("B_eps is empty: shrink eps");
        if (sweep.size() > sweep_target) {
            std::vector<SurfacePoint> sub;
            const double stride = static_cast<double>(sweep.size()) / sweep_target;
            for (std::size_t k = 0; k < sweep_target; ++k)
                sub.push_back(sweep[static_cast<std::size_t>(k * stride)]);
            sweep = std::move(sub);
        }
    }

    AssembledConstants out;
    out.eps = eps;
    out.c = 2.0;  // flat chart: disc of radius r embeds with center density 2/r
    out.c0 = bdp_constant(SurfaceKind::Chart, std::min(0.5, R));

    double a_min = std::numeric_limits<double>::infinity();
    double H = 0;
    std::vector<PolyLoop> all_templates;
    for (const auto& bpt : sweep) {
        auto tpls = template_loops(dom, bpt, &cuts);
        for (auto& [gen, tpl] : tpls) all_templates.push_back(tpl);
        for (const auto& [gen, tpl] : tpls) {
            H = std::max(H, tpl.flat_length());
            // P1 analytic cap, then bisect P2 below it
            const double p1_cap = 0.2499 * loop_boundary_clearance(dom, tpl);
            double lo = 0, hi = p1_cap;
            if (!check_P1_P2(dom, tpl, hi).ok()) {
                // descend to a passing value
                double probe = hi;
                for (int it = 0; it < 60 && probe > 1e-12 * R; ++it) {
                    probe *= 0.7;
                    if (check_P1_P2(dom, tpl, probe).ok()) break;
                }
                if (!check_P1_P2(dom, tpl, probe).ok())
                    throw BadParams("no admissible a for a sweep template");
                lo = probe;
                // refine between the passing probe and the failing cap
                double bad = hi;
                for (int it = 0; it < 40; ++it) {
                    const double mid = 0.5 * (lo + bad);
                    if (check_P1_P2(dom, tpl, mid).ok())
                        lo = mid;
                    else
                        bad = mid;
                }
                a_min = std::min(a_min, lo);
            } else {
                a_min = std::min(a_min, hi);
            }
        }
    }
    // uniform re-validation: (P2) is not strictly monotone in a
    for (int guard = 0; guard < 64; ++guard) {
        bool all_ok = true;
        for (const auto& tpl : all_templates)
            if (!check_P1_P2(dom, tpl, a_min).ok()) { all_ok = false; break; }
        if (all_ok) break;
        a_min *= 0.93;
    }
    out.a = a_min;
    out.H = H;

    double vol_beps = kPi * (R - eps) * (R - eps);
    for (const auto& h : dom.holes) vol_beps -= kPi * (h.radius + eps) * (h.radius + eps);
    if (!(vol_beps > 0)) throw BadDomain("B_eps has nonpositive area estimate");
    out.vol_beps = vol_beps;

    // flat chart: the c/r disc comparison and the disc bands hold at all the
    // radii in play, so only a and the area term can bind
    const double r_lemma = 2.0 * R;
    const double r0_lemma = 2.0 * R;
    out.A = 0.5 * std::min(std::min(out.a, r_lemma),
                           std::min(r0_lemma, std::sqrt(vol_beps / (4.0 * out.c0))));
    out.L = out.c * (out.H / out.A + out.c0);
    return out;
}

} // namespace hyploop
