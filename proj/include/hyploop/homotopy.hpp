#pragma once

// Free-group words, loop simplicity, cut systems, exact homotopy invariants of
// polyline loops via signed crossing sequences, systole lower bounds.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hyploop/geometry.hpp"

namespace hyploop {

// ---------------------------------------------------------------------------
// Words in a free group

struct Letter {
    int gen = 1;   // generator index >= 1
    int sign = 1;  // +1 or -1
    bool operator==(const Letter&) const = default;
};

struct Word {
    std::vector<Letter> letters;  // freely reduced by construction

    bool empty() const { return letters.empty(); }
    std::size_t size() const { return letters.size(); }
    bool operator==(const Word&) const = default;

    static Word reduced(std::vector<Letter> raw) {
        Word w;
        for (const auto& l : raw) {
            if (!w.letters.empty() && w.letters.back().gen == l.gen &&
                w.letters.back().sign == -l.sign)
                w.letters.pop_back();
            else
                w.letters.push_back(l);
        }
        return w;
    }

    Word inverse() const {
        Word w;
        for (auto it = letters.rbegin(); it != letters.rend(); ++it)
            w.letters.push_back({it->gen, -it->sign});
        return w;
    }

    Word operator*(const Word& o) const {
        std::vector<Letter> cat = letters;
        cat.insert(cat.end(), o.letters.begin(), o.letters.end());
        return reduced(std::move(cat));
    }

    Word cyclically_reduced() const {
        Word w = *this;
        while (w.letters.size() >= 2 && w.letters.front().gen == w.letters.back().gen &&
               w.letters.front().sign == -w.letters.back().sign) {
            w.letters.erase(w.letters.begin());
            w.letters.pop_back();
        }
        return w;
    }

    // Exponent sum of generator g: the abelianized coefficient.
    long exponent_sum(int g) const {
        long s = 0;
        for (const auto& l : letters)
            if (l.gen == g) s += l.sign;
        return s;
    }

    int max_generator() const {
        int m = 0;
        for (const auto& l : letters) m = std::max(m, l.gen);
        return m;
    }

    // w is a proper power u^k (k >= 2) iff it equals the rotation by some
    // proper divisor-length prefix.
    bool is_proper_power() const {
        const std::size_t n = letters.size();
        if (n < 2) return false;
        for (std::size_t d = 1; d <= n / 2; ++d) {
            if (n % d != 0) continue;
            bool all = true;
            for (std::size_t i = d; i < n && all; ++i) all = letters[i] == letters[i - d];
            if (all) return true;
        }
        return false;
    }

    std::string str() const {
        if (letters.empty()) return "1";
        std::ostringstream os;
        for (std::size_t i = 0; i < letters.size(); ++i) {
            if (i) os << ' ';
            os << 'x' << letters[i].gen;
            if (letters[i].sign < 0) os << "^-1";
        }
        return os.str();
    }

    // Accepts "x1 x2^-1", "x1*x2^-1", "1" (identity).
    static Word parse(const std::string& text) {
        std::vector<Letter> raw;
        std::string tok;
        std::string norm = text;
        std::replace(norm.begin(), norm.end(), '*', ' ');
        std::replace(norm.begin(), norm.end(), '.', ' ');
        std::istringstream is(norm);
        while (is >> tok) {
            if (tok == "1" || tok == "e") continue;
            if (tok.size() < 2 || (tok[0] != 'x' && tok[0] != 'X'))
                throw ValidationError("cannot parse word token '" + tok + "'");
            int sign = 1;
            std::string body = tok.substr(1);
            const auto caret = body.find('^');
            if (caret != std::string::npos) {
                const std::string e = body.substr(caret + 1);
                body = body.substr(0, caret);
                if (e == "-1") sign = -1;
                else if (e == "1" || e == "+1") sign = 1;
                else throw ValidationError("word exponents other than +-1 not supported: " + tok);
            }
            const int g = std::atoi(body.c_str());
            if (g < 1) throw ValidationError("generator index must be >= 1 in '" + tok + "'");
            raw.push_back({g, sign});
        }
        return reduced(std::move(raw));
    }
};

// Free homotopy = conjugacy: cyclic reductions are rotations of each other.
inline bool freely_homotopic(const Word& a, const Word& b) {
    const Word ca = a.cyclically_reduced();
    const Word cb = b.cyclically_reduced();
    if (ca.size() != cb.size()) return false;
    if (ca.empty()) return true;
    std::vector<Letter> doubled = ca.letters;
    doubled.insert(doubled.end(), ca.letters.begin(), ca.letters.end());
    for (std::size_t off = 0; off < ca.size(); ++off) {
        bool ok = true;
        for (std::size_t i = 0; i < cb.size() && ok; ++i)
            ok = doubled[off + i] == cb.letters[i];
        if (ok) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Segment predicates (chart)

namespace detail {

inline double cross2(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

// Proper/improper intersection of chart segments [a,b] and [c,d].
// Returns parameter t on [a,b] for proper crossings; nullopt when disjoint.
// Grazing contact (endpoint or near-collinear touch within tol) reports
// tangential = true.
struct SegHit {
    double t = 0;       // position along [a,b]
    double sign = 0;    // orientation of the crossing
    bool tangential = false;
};

inline std::optional<SegHit> segment_intersect(Complex a, Complex b, Complex c, Complex d,
                                               double tol) {
    const Complex r = b - a, s = d - c;
    const double denom = cross2(r, s);
    const double lr = std::abs(r), ls = std::abs(s);
    const Complex ca_ = c - a;
    if (std::abs(denom) <= tol * lr * ls) {
        // Parallel. Overlap or touch?
        if (std::abs(cross2(ca_, r)) <= tol * lr * std::max(1.0, std::abs(ca_))) {
            const double t0 = (ca_ * std::conj(r)).real() / std::norm(r);
            const double t1 = ((d - a) * std::conj(r)).real() / std::norm(r);
            if (std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0) + tol)
                return SegHit{0, 0, true};
        }
        return std::nullopt;
    }
    const double t = cross2(ca_, s) / denom;
    const double u = cross2(ca_, r) / denom;
    const double teps = tol;  // parameters are scale-free
    if (t < -teps || t > 1 + teps || u < -teps || u > 1 + teps) return std::nullopt;
    SegHit hit;
    hit.t = t;
    hit.sign = denom > 0 ? 1.0 : -1.0;
    hit.tangential = (t < teps || t > 1 - teps || u < teps || u > 1 - teps);
    return hit;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Simplicity

// True iff no two non-adjacent segments intersect and adjacent segments meet
// only at the shared vertex.
inline bool is_simple(const PolyLoop& loop) {
    loop.validate();
    if (loop.vertices[0].kind != SurfaceKind::Chart)
        throw KindMismatch("is_simple: chart loops only");
    const std::size_t n = loop.size();
    const double tol = 1e-9;
    for (std::size_t i = 0; i < n; ++i) {
        const Complex a = loop.vertex(i).z, b = loop.vertex(i + 1).z;
        for (std::size_t j = i + 1; j < n; ++j) {
            const Complex c = loop.vertex(j).z, d = loop.vertex(j + 1).z;
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const auto hit = detail::segment_intersect(a, b, c, d, tol);
            if (!hit) continue;
            if (!adjacent) return false;
            // Adjacent segments: allowed to touch exactly at the shared vertex.
            const Complex shared = (j == i + 1) ? b : a;
            // Reject collinear overlap (spur) and any crossing away from the vertex.
            if (hit->sign == 0) {
                // parallel touch: fine only if segments only share the vertex
                const Complex u = (j == i + 1) ? (b - a) : (a - b);
                const Complex v = (j == i + 1) ? (d - c) : (c - d);
                if ((u * std::conj(v)).real() > 0) return false;  // doubles back onto itself
                continue;
            }
            const Complex p = a + hit->t * (b - a);
            if (std::abs(p - shared) > tol * std::max(1.0, std::abs(b - a))) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Cut systems

struct Cut {
    int gen = 1;        // generator index
    Complex from;       // on its hole boundary (or at a puncture)
    Complex to;         // on the outer boundary
};

struct CutSystem {
    Domain domain;            // chart domain the cuts live in
    std::vector<Cut> cuts;    // one per generator, indices 1..k
    std::size_t rank() const { return cuts.size(); }
};

namespace detail {

inline double segment_segment_distance(Complex a, Complex b, Complex c, Complex d) {
    if (segment_intersect(a, b, c, d, 1e-12)) return 0.0;
    auto pt_seg = [](Complex p, Complex u, Complex v) {
        const Complex uv = v - u;
        const double l2 = std::norm(uv);
        double t = l2 > 0 ? std::clamp(((p - u) * std::conj(uv)).real() / l2, 0.0, 1.0) : 0.0;
        return std::abs(p - (u + t * uv));
    };
    return std::min(std::min(pt_seg(a, c, d), pt_seg(b, c, d)),
                    std::min(pt_seg(c, a, b), pt_seg(d, a, b)));
}

// First outer-circle hit of the ray p + t*dir, t > 0.
inline std::optional<Complex> ray_circle_exit(Complex p, Complex dir, Complex c, double R) {
    const Complex q = p - c;
    const double a = std::norm(dir);
    const double b = 2.0 * (q * std::conj(dir)).real();
    const double cc = std::norm(q) - R * R;
    const double disc = b * b - 4 * a * cc;
    if (disc < 0) return std::nullopt;
    const double t = (-b + std::sqrt(disc)) / (2 * a);
    if (t <= 0) return std::nullopt;
    return p + t * dir;
}

} // namespace detail

// One cut per hole: a straight segment from the hole boundary to the outer
// boundary, chosen among sampled anchor angles to maximize clearance from the
// other holes, the punctures, and the cuts already placed. Sphere domains are
// opened into a chart first (pivot hole 0); generator x_i then names input
// hole i.
inline CutSystem make_cut_system(const Domain& dom_in) {
    Domain dom = dom_in;
    if (dom.kind == SurfaceKind::Sphere) dom = stereographic_chart(dom_in).first;
    if (dom.holes.empty()) throw NoGenerators("domain has no holes: pi_1 is trivial");

    CutSystem sys;
    sys.domain = dom;
    const Complex oc = dom.outer->center.z;
    const double oR = dom.outer->radius;

    for (std::size_t h = 0; h < dom.holes.size(); ++h) {
        const auto& hole = dom.holes[h];
        const int samples = 512;
        double best_score = -1.0;
        Cut best;
        for (int k = 0; k < samples; ++k) {
            const double theta = 2.0 * kPi * (k + 0.3819660112501051) / samples;
            const Complex dir = std::polar(1.0, theta);
            const Complex from = hole.center.z + hole.radius * dir;
            const auto exit = detail::ray_circle_exit(from, dir, oc, oR);
            if (!exit) continue;
            double score = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < dom.holes.size(); ++j) {
                if (j == h) continue;
                score = std::min(score, segment_circle_distance(from, *exit, dom.holes[j].center.z,
                                                                dom.holes[j].radius));
            }
            for (const auto& c : sys.cuts)
                score = std::min(score, detail::segment_segment_distance(from, *exit, c.from, c.to));
            for (const auto& p : dom.punctures) {
                const auto [dmin, dmax] =
                    detail::segment_center_distance_range(from, *exit, p.z);
                score = std::min(score, dmin);
            }
            if (score > best_score) {
                best_score = score;
                best = Cut{static_cast<int>(h + 1), from, *exit};
            }
        }
        if (best_score <= kGeomTol)
            throw NumericError("make_cut_system: no clear cut direction for hole " +
                               std::to_string(h + 1));
        sys.cuts.push_back(best);
    }
    return sys;
}

// Validation variant: additionally cuts each puncture to the outer boundary,
// so words are computed in the surface with the punctures removed as well.
inline CutSystem make_cut_system_with_punctures(const Domain& dom_in) {
    CutSystem sys = make_cut_system(dom_in);
    const Domain& dom = sys.domain;
    const Complex oc = dom.outer->center.z;
    const double oR = dom.outer->radius;
    const int samples = 512;
    for (std::size_t pi = 0; pi < dom.punctures.size(); ++pi) {
        const Complex p = dom.punctures[pi].z;
        double best_score = -1.0;
        Cut best;
        for (int k = 0; k < samples; ++k) {
            const Complex dir = std::polar(1.0, 2.0 * kPi * (k + 0.3819660112501051) / samples);
            const auto exit = detail::ray_circle_exit(p, dir, oc, oR);
            if (!exit) continue;
            double score = std::numeric_limits<double>::infinity();
            for (const auto& hole : dom.holes)
                score = std::min(score,
                                 segment_circle_distance(p, *exit, hole.center.z, hole.radius));
            for (const auto& c : sys.cuts)
                score = std::min(score, detail::segment_segment_distance(p, *exit, c.from, c.to));
            for (std::size_t j = 0; j < dom.punctures.size(); ++j) {
                if (j == pi) continue;
                const auto [dmin, dmax] =
                    detail::segment_center_distance_range(p, *exit, dom.punctures[j].z);
                score = std::min(score, dmin);
            }
            if (score > best_score) {
                best_score = score;
                best = Cut{static_cast<int>(dom.holes.size() + pi + 1), p, *exit};
            }
        }
        if (best_score <= kGeomTol)
            throw NumericError("make_cut_system_with_punctures: blocked puncture cut");
        sys.cuts.push_back(best);
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Crossing-sequence word of a loop

// Signed crossing sequence of the loop with the cuts, freely reduced. The sign
// of a crossing is the orientation of (cut direction, loop direction); a CCW
// loop around hole i yields "xi".
inline Word loop_word(const PolyLoop& loop, const CutSystem& cuts) {
    loop.validate();
    if (loop.vertices[0].kind != SurfaceKind::Chart)
        throw KindMismatch("loop_word: chart loops only (open sphere domains into a chart)");
    const std::size_t n = loop.size();
    std::vector<Letter> raw;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (loop.base + k) % n;
        const Complex a = loop.vertex(i).z, b = loop.vertex(i + 1).z;
        struct Ev { double t; Letter l; };
        std::vector<Ev> events;
        for (const auto& cut : cuts.cuts) {
            const auto hit = detail::segment_intersect(a, b, cut.from, cut.to, 1e-9);
            if (!hit) continue;
            if (hit->tangential || hit->sign == 0)
                throw TangentialCrossing("loop grazes a cut; perturb the loop");
            // crossing sign is the orientation of (cut direction, loop direction)
            events.push_back({hit->t, Letter{cut.gen, hit->sign > 0 ? -1 : 1}});
        }
        std::sort(events.begin(), events.end(), [](const Ev& x, const Ev& y) { return x.t < y.t; });
        for (const auto& e : events) raw.push_back(e.l);
    }
    return Word::reduced(std::move(raw));
}

// ---------------------------------------------------------------------------
// Systole lower bound

// Certified lower bound on the flat/spherical length of ANY loop representing
// alpha: a loop with nonzero winding w around hole i has length at least
// (hole boundary length) * |w| in a chart (angular projection), and at least
// the smaller of the two cap boundary lengths on the sphere (isoperimetry of
// separating curves). The winding number of x_i is alpha's exponent sum.
inline double systole_lower_bound(const Domain& dom, const Word& alpha) {
    if (alpha.empty()) throw NullClass("systole bound of the trivial class");
    const Word cyc = alpha.cyclically_reduced();
    if (cyc.empty()) throw NullClass("class is trivial after cyclic reduction");

    double best = 0.0;
    if (dom.kind == SurfaceKind::Chart) {
        for (std::size_t h = 0; h < dom.holes.size(); ++h) {
            const long w = cyc.exponent_sum(static_cast<int>(h + 1));
            if (w == 0) continue;
            best = std::max(best, std::labs(w) * disc_boundary_length(SurfaceKind::Chart,
                                                                      dom.holes[h].radius));
        }
    } else {
        // Generator x_i names input hole i; hole 0 is the chart pivot.
        if (dom.holes.size() < 2) return 0.0;
        const double pivot_len = disc_boundary_length(SurfaceKind::Sphere, dom.holes[0].radius);
        for (std::size_t h = 1; h < dom.holes.size(); ++h) {
            const long w = cyc.exponent_sum(static_cast<int>(h));
            if (w == 0) continue;
            best = std::max(best, std::min(pivot_len, disc_boundary_length(SurfaceKind::Sphere,
                                                                           dom.holes[h].radius)));
        }
    }
    return best;
}

} // namespace hyploop
