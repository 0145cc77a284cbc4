#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hyploop/homotopy.hpp"
#include "oracles.hpp"

using namespace hyploop;

namespace {

Domain annulus() { return Domain::chart(Disc::chart({0, 0}, 4), {Disc::chart({0, 0}, 1)}); }

Domain pants() {
    return Domain::chart(Disc::chart({0, 0}, 6),
                         {Disc::chart({-2, 0}, 0.8), Disc::chart({2, 0}, 0.8)});
}

Word random_word(std::mt19937_64& g, int rank, int len) {
    std::vector<Letter> raw;
    for (int i = 0; i < len; ++i)
        raw.push_back({static_cast<int>(g() % rank) + 1, (g() & 1) ? 1 : -1});
    return Word::reduced(std::move(raw));
}

} // namespace

TEST_CASE("word parsing, printing, reduction", "[homotopy]") {
    CHECK(Word::parse("x1 x2^-1").str() == "x1 x2^-1");
    CHECK(Word::parse("x1 x1^-1").empty());
    CHECK(Word::parse("1").empty());
    CHECK(Word::parse("x1 x1^-1 x2").str() == "x2");
    CHECK((Word::parse("x1 x2") * Word::parse("x2^-1")).str() == "x1");
    CHECK(Word::parse("x1 x2 x1 x2").is_proper_power());
    CHECK_FALSE(Word::parse("x1 x2 x1").is_proper_power());
    CHECK_THROWS_AS(Word::parse("y1"), ValidationError);
}

TEST_CASE("freely_homotopic", "[homotopy]") {
    CHECK(freely_homotopic(Word::parse("x1 x2"), Word::parse("x2 x1")));
    CHECK_FALSE(freely_homotopic(Word::parse("x1"), Word::parse("x1^-1")));

    auto g = oracle::rng(5150);
    for (int trial = 0; trial < 500; ++trial) {
        const Word w = random_word(g, 3, 1 + static_cast<int>(g() % 8));
        const Word conj = random_word(g, 3, static_cast<int>(g() % 5));
        CHECK(freely_homotopic(w, conj * w * conj.inverse()));
    }
    // equivalence relation on random triples
    for (int trial = 0; trial < 200; ++trial) {
        const Word a = random_word(g, 2, 4);
        const Word p = random_word(g, 2, 3);
        const Word q = random_word(g, 2, 3);
        const Word b = p * a * p.inverse();
        const Word c = q * b * q.inverse();
        CHECK(freely_homotopic(a, a));
        CHECK(freely_homotopic(a, b) == freely_homotopic(b, a));
        if (freely_homotopic(a, b) && freely_homotopic(b, c)) CHECK(freely_homotopic(a, c));
    }
}

TEST_CASE("is_simple", "[homotopy]") {
    CHECK(is_simple(make_circle_loop({0, 0}, 2.0, 64)));

    PolyLoop eight;  // figure-eight polyline
    eight.vertices = {SurfacePoint::chart({-1, -1}), SurfacePoint::chart({1, 1}),
                      SurfacePoint::chart({1, -1}), SurfacePoint::chart({-1, 1})};
    eight.base = 0;
    CHECK_FALSE(is_simple(eight));

    // 1000 random star-shaped polygons (sorted angles, every gap < pi) are
    // simple by construction.
    auto g = oracle::rng(31337);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 4 + static_cast<int>(g() % 12);
        PolyLoop star;
        for (int i = 0; i < n; ++i) {
            const double t = 2 * kPi * (i + 0.4 * oracle::uniform(g, -1, 1)) / n;
            star.vertices.push_back(
                SurfacePoint::chart(std::polar(oracle::uniform(g, 0.5, 2.0), t)));
        }
        star.base = 0;
        CHECK(is_simple(star));
    }
}

TEST_CASE("make_cut_system ranks", "[homotopy]") {
    CHECK(make_cut_system(annulus()).rank() == 1);
    CHECK(make_cut_system(pants()).rank() == 2);  // 2 = 2*0 - 1 + 3

    // 5 holes -> rank 5
    std::vector<Disc> holes;
    for (int i = 0; i < 5; ++i)
        holes.push_back(Disc::chart(std::polar(2.5, 2 * kPi * i / 5.0), 0.5));
    CHECK(make_cut_system(Domain::chart(Disc::chart({0, 0}, 6), holes)).rank() == 5);

    CHECK_THROWS_AS(make_cut_system(Domain::chart(Disc::chart({0, 0}, 4))), NoGenerators);

    // sphere minus (k+1) caps: rank k
    std::vector<Disc> caps{Disc(SurfacePoint::sphere({0, 0, 1}), 0.4),
                           Disc(SurfacePoint::sphere({0, 0, -1}), 0.4),
                           Disc(SurfacePoint::sphere({1, 0, 0}), 0.4)};
    CHECK(make_cut_system(Domain::sphere(caps)).rank() == 2);
}

TEST_CASE("loop_word basics", "[homotopy]") {
    const auto cuts = make_cut_system(pants());

    SECTION("small CCW circle around hole 1 -> x1") {
        const auto loop = make_circle_loop({-2, 0}, 1.0, 64);
        CHECK(loop_word(loop, cuts).str() == "x1");
        const auto cw = make_circle_loop({-2, 0}, 1.0, 64, false);
        CHECK(loop_word(cw, cuts).str() == "x1^-1");
    }
    SECTION("contractible triangle -> empty word") {
        PolyLoop tri;
        tri.vertices = {SurfacePoint::chart({0, 3}), SurfacePoint::chart({0.5, 3.5}),
                        SurfacePoint::chart({-0.5, 3.6})};
        tri.base = 0;
        CHECK(loop_word(tri, cuts).empty());
    }
    SECTION("big circle enclosing both holes: x1 x2 up to cyclic order; matches winding") {
        const auto big = make_circle_loop({0, 0}, 4.0, 256);
        const Word w = loop_word(big, cuts);
        CHECK(freely_homotopic(w, Word::parse("x1 x2")));
        std::vector<Complex> poly;
        for (const auto& v : big.vertices) poly.push_back(v.z);
        CHECK(w.exponent_sum(1) == oracle::winding_number(poly, {-2, 0}));
        CHECK(w.exponent_sum(2) == oracle::winding_number(poly, {2, 0}));
    }
}

TEST_CASE("loop_word invariances", "[homotopy]") {
    const auto dom = pants();
    const auto cuts = make_cut_system(dom);
    const auto loop = make_circle_loop({-2, 0}, 1.2, 48);
    const Word w = loop_word(loop, cuts);

    SECTION("vertex refinement") {
        PolyLoop refined;
        for (std::size_t i = 0; i < loop.size(); ++i) {
            const Complex a = loop.vertex(i).z, b = loop.vertex(i + 1).z;
            refined.vertices.push_back(SurfacePoint::chart(a));
            refined.vertices.push_back(SurfacePoint::chart(a + 0.37 * (b - a)));
            refined.vertices.push_back(SurfacePoint::chart(a + 0.81 * (b - a)));
        }
        refined.base = 0;
        CHECK(loop_word(refined, cuts) == w);
    }
    SECTION("base rotation changes the word by conjugacy only") {
        PolyLoop rot = loop;
        rot.base = 17;
        CHECK(freely_homotopic(loop_word(rot, cuts), w));
    }
    SECTION("punctures do not affect the word") {
        Domain with_punct = dom;
        with_punct.punctures.push_back(SurfacePoint::chart({0, 2.5}));
        with_punct.validate();
        const auto cuts2 = make_cut_system(with_punct);
        CHECK(freely_homotopic(loop_word(loop, cuts2), w));
    }
    SECTION("validation mode: puncture cuts add generators") {
        Domain with_punct = dom;
        with_punct.punctures.push_back(SurfacePoint::chart({0, -2.5}));
        with_punct.validate();
        const auto cuts3 = make_cut_system_with_punctures(with_punct);
        CHECK(cuts3.rank() == 3);
        // a loop around the puncture now reads as the puncture generator
        const auto ploop = make_circle_loop({0, -2.5}, 0.4, 48);
        CHECK(loop_word(ploop, cuts3).str() == "x3");
        // and the same loop is trivial in the puncture-filled group
        const auto cuts2 = make_cut_system(with_punct);
        CHECK(loop_word(ploop, cuts2).empty());
    }
}

TEST_CASE("simple non-nullhomotopic loops give primitive words", "[homotopy]") {
    const auto dom = pants();
    const auto cuts = make_cut_system(dom);
    auto g = oracle::rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        const double r = oracle::uniform(g, 1.0, 1.6);
        const Complex c{oracle::uniform(g, -2.2, -1.8), oracle::uniform(g, -0.2, 0.2)};
        const auto loop = make_circle_loop(c, r, 64);
        if (!is_simple(loop)) continue;
        const Word w = loop_word(loop, cuts);
        if (!w.empty()) CHECK_FALSE(w.cyclically_reduced().is_proper_power());
    }
}

TEST_CASE("systole_lower_bound", "[homotopy]") {
    SECTION("annulus, hole radius 1: bound 2*pi") {
        CHECK(systole_lower_bound(annulus(), Word::parse("x1")) == Catch::Approx(2 * kPi));
        // random loops representing x1 never beat the bound
        const auto cuts = make_cut_system(annulus());
        auto g = oracle::rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            PolyLoop loop;
            const int n = 24;
            for (int i = 0; i < n; ++i) {
                const double t = 2 * kPi * i / n;
                loop.vertices.push_back(
                    SurfacePoint::chart(std::polar(oracle::uniform(g, 1.05, 3.9), t)));
            }
            loop.base = 0;
            if (loop_word(loop, cuts).str() != "x1") continue;
            CHECK(loop.flat_length() >= 2 * kPi - 1e-9);
        }
    }
    SECTION("two holes: the larger winding hole dominates") {
        const auto dom = Domain::chart(Disc::chart({0, 0}, 10),
                                       {Disc::chart({-4, 0}, 0.5), Disc::chart({4, 0}, 2)});
        CHECK(systole_lower_bound(dom, Word::parse("x1 x2")) == Catch::Approx(4 * kPi));
    }
    SECTION("degenerate hole radius -> bound -> 0") {
        const auto dom = Domain::chart(Disc::chart({0, 0}, 4), {Disc::chart({0, 0}, 1e-9)});
        CHECK(systole_lower_bound(dom, Word::parse("x1")) < 1e-7);
    }
    SECTION("empty word is an error") {
        CHECK_THROWS_AS(systole_lower_bound(annulus(), Word{}), NullClass);
    }
    SECTION("commutator has zero certified bound (zero winding)") {
        const auto dom = pants();
        CHECK(systole_lower_bound(dom, Word::parse("x1 x2 x1^-1 x2^-1")) == 0.0);
    }
    SECTION("sphere: separating-curve bound") {
        std::vector<Disc> caps{Disc(SurfacePoint::sphere({0, 0, 1}), 0.5),
                               Disc(SurfacePoint::sphere({0, 0, -1}), 0.3)};
        const auto dom = Domain::sphere(caps);
        CHECK(systole_lower_bound(dom, Word::parse("x1")) ==
              Catch::Approx(2 * kPi * std::sin(0.3)));
    }
}

TEST_CASE("stereographic chart geometry", "[homotopy]") {
    std::vector<Disc> caps{Disc(SurfacePoint::sphere({0, 0, 1}), 0.5),
                           Disc(SurfacePoint::sphere({0, 0, -1}), 0.4),
                           Disc(SurfacePoint::sphere({1, 0, 0}), 0.3)};
    const auto [chart_dom, chart] = stereographic_chart(Domain::sphere(caps));
    CHECK(chart_dom.outer->radius == Catch::Approx(std::cos(0.25) / std::sin(0.25)));
    REQUIRE(chart_dom.holes.size() == 2);
    // projected circle stays a circle: sample boundary of cap 2 and check.
    const auto& img = chart_dom.holes[1];
    for (int k = 0; k < 32; ++k) {
        const double t = 2 * kPi * k / 32;
        // boundary of cap around (1,0,0) with radius 0.3
        const double cr = std::cos(0.3), sr = std::sin(0.3);
        const Vec3 p{cr, sr * std::cos(t), sr * std::sin(t)};
        const Complex w = chart.project(SurfacePoint::sphere(p));
        CHECK(std::abs(w - img.center.z) == Catch::Approx(img.radius).epsilon(1e-9));
    }
}
