#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "msqpc/comparison.hpp"
#include "msqpc/random.hpp"

using namespace msqpc;

namespace {

const Dimension d19(19);

ModDigit md(int v, Dimension d = d19) { return ModDigit(v, d); }
PrivateDigit pd(int v, Dimension d = d19) { return PrivateDigit(v, d); }

}  // namespace

TEST_CASE("digit range enforcement") {
    CHECK_THROWS_AS(ModDigit(19, d19), std::domain_error);
    CHECK_THROWS_AS(ModDigit(-1, d19), std::domain_error);
    CHECK_THROWS_AS(PrivateDigit(10, d19), std::domain_error);  // h = 9
    CHECK_NOTHROW(PrivateDigit(9, d19));
}

TEST_CASE("modular addition and subtraction, worked values") {
    // c_1 = 7 + 16 + 5 = 9 (mod 19)
    CHECK(mod_add(mod_add(md(7), md(16)), md(5)).value() == 9);
    CHECK(mod_sub(md(2), md(3)).value() == 18);
    for (int a = 0; a < 19; ++a) CHECK(mod_sub(md(a), md(a)).value() == 0);
    CHECK_THROWS_AS(mod_add(md(1), ModDigit(1, Dimension(5))), std::domain_error);
}

TEST_CASE("modular group laws, exhaustive") {
    for (int dv : {3, 5, 7, 19}) {
        const Dimension d(dv);
        for (int a = 0; a < dv; ++a) {
            for (int b = 0; b < dv; ++b) {
                const ModDigit ma(a, d), mb(b, d);
                CHECK(mod_add(ma, mb).value() == mod_add(mb, ma).value());
                CHECK(mod_sub(mod_add(ma, mb), mb).value() == a);
                for (int c = 0; c < dv; ++c) {
                    const ModDigit mc(c, d);
                    CHECK(mod_add(mod_add(ma, mb), mc).value() ==
                          mod_add(ma, mod_add(mb, mc)).value());
                }
            }
        }
    }
}

TEST_CASE("encode") {
    CHECK(encode(md(7), md(16), pd(5)).value() == 9);
    CHECK(encode(md(2), md(16), pd(3)).value() == 2);
    CHECK(encode(ModDigit(0, Dimension(5)), ModDigit(0, Dimension(5)),
                 PrivateDigit(0, Dimension(5)))
              .value() == 0);
}

TEST_CASE("decode") {
    CHECK(decode(md(9), md(7)).value() == 2);
    CHECK(decode(md(13), md(10)).value() == 3);
    for (int x = 0; x < 19; ++x) CHECK(decode(md(x), md(x)).value() == 0);
}

TEST_CASE("pairwise difference") {
    CHECK(pairwise_difference(md(2), md(0)).value() == 2);
    CHECK(pairwise_difference(md(0), md(3)).value() == 16);
    CHECK(pairwise_difference(md(4), md(4)).value() == 0);
}

TEST_CASE("classification thresholds") {
    CHECK(classify(md(2)) == Relation::Greater);
    CHECK(classify(md(0)) == Relation::Equal);
    CHECK(classify(md(18)) == Relation::Less);
    CHECK(classify(md(9)) == Relation::Greater);   // R = h
    CHECK(classify(md(10)) == Relation::Less);     // R = h + 1
}

TEST_CASE("classification antisymmetry") {
    for (int dv : {3, 5, 7, 19}) {
        const Dimension d(dv);
        for (int r = 1; r < dv; ++r) {
            CHECK(classify(ModDigit(r, d)) ==
                  negated(classify(ModDigit((dv - r) % dv, d))));
        }
        CHECK(classify(ModDigit(0, d)) == Relation::Equal);
    }
}

TEST_CASE("direct oracle") {
    CHECK(direct_oracle(pd(5), pd(3)) == Relation::Greater);
    CHECK(direct_oracle(pd(5), pd(5)) == Relation::Equal);
    CHECK(direct_oracle(pd(3), pd(6)) == Relation::Less);
}

TEST_CASE("worked four-user instance") {
    const std::vector<ModDigit> m{md(7), md(2), md(9), md(10)};
    const std::vector<PrivateDigit> p{pd(5), pd(3), pd(5), pd(6)};
    const auto rel = compare_pipeline(m, md(16), p);
    CHECK(rel.at(0, 1) == Relation::Greater);  // p1 > p2
    CHECK(rel.at(0, 2) == Relation::Equal);    // p1 = p3
    CHECK(rel.at(0, 3) == Relation::Less);     // p1 < p4
    CHECK(rel.at(1, 2) == Relation::Less);
    CHECK(rel.at(1, 3) == Relation::Less);
    CHECK(rel.at(2, 3) == Relation::Less);
    // stored antisymmetrically
    CHECK(rel.at(1, 0) == Relation::Less);
    CHECK(rel.at(3, 2) == Relation::Greater);
}

TEST_CASE("equal inputs give all-equal relations regardless of m and k") {
    const Dimension d7(7);
    const std::vector<ModDigit> m{ModDigit(1, d7), ModDigit(5, d7), ModDigit(2, d7)};
    const std::vector<PrivateDigit> p(3, PrivateDigit(2, d7));
    const auto rel = compare_pipeline(m, ModDigit(4, d7), p);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) CHECK(rel.at(a, b) == Relation::Equal);
    }
}

TEST_CASE("masking identity, exhaustive for small d") {
    // decode(encode(m,k,p),m) - decode(encode(m',k,p'),m') == (p - p') mod d
    for (int dv : {3, 5, 7}) {
        const Dimension d(dv);
        const int h = d.h();
        for (int m1 = 0; m1 < dv; ++m1) {
            for (int m2 = 0; m2 < dv; ++m2) {
                for (int k = 0; k < dv; ++k) {
                    for (int p1 = 0; p1 <= h; ++p1) {
                        for (int p2 = 0; p2 <= h; ++p2) {
                            const auto f1 = decode(
                                encode(ModDigit(m1, d), ModDigit(k, d), PrivateDigit(p1, d)),
                                ModDigit(m1, d));
                            const auto f2 = decode(
                                encode(ModDigit(m2, d), ModDigit(k, d), PrivateDigit(p2, d)),
                                ModDigit(m2, d));
                            REQUIRE(pairwise_difference(f1, f2).value() ==
                                    ((p1 - p2) % dv + dv) % dv);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("pipeline equals direct oracle, exhaustive pairs for small d") {
    for (int dv : {3, 5, 7}) {
        const Dimension d(dv);
        const int h = d.h();
        for (int m1 = 0; m1 < dv; ++m1) {
            for (int m2 = 0; m2 < dv; ++m2) {
                for (int k = 0; k < dv; ++k) {
                    for (int p1 = 0; p1 <= h; ++p1) {
                        for (int p2 = 0; p2 <= h; ++p2) {
                            const auto rel = compare_pipeline(
                                {ModDigit(m1, d), ModDigit(m2, d)}, ModDigit(k, d),
                                {PrivateDigit(p1, d), PrivateDigit(p2, d)});
                            REQUIRE(rel.at(0, 1) ==
                                    direct_oracle(PrivateDigit(p1, d), PrivateDigit(p2, d)));
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("pipeline equals direct oracle for 3 and 4 users") {
    RandomSource rng(1234);
    for (int dv : {3, 5, 7}) {
        const Dimension d(dv);
        const int h = d.h();
        for (int users : {3, 4}) {
            // exhaust p tuples; randomize m and k
            std::vector<int> p(std::size_t(users), 0);
            while (true) {
                for (int rep = 0; rep < 5; ++rep) {
                    std::vector<ModDigit> m;
                    std::vector<PrivateDigit> priv;
                    for (int u = 0; u < users; ++u) {
                        m.push_back(ModDigit(int(rng.uniform_index(std::uint64_t(dv))), d));
                        priv.push_back(PrivateDigit(p[std::size_t(u)], d));
                    }
                    const ModDigit k(int(rng.uniform_index(std::uint64_t(dv))), d);
                    const auto rel = compare_pipeline(m, k, priv);
                    for (int a = 0; a < users; ++a) {
                        for (int b = 0; b < users; ++b) {
                            if (a == b) continue;
                            REQUIRE(rel.at(a, b) ==
                                    direct_oracle(priv[std::size_t(a)], priv[std::size_t(b)]));
                        }
                    }
                }
                // next p tuple
                int i = 0;
                while (i < users && ++p[std::size_t(i)] > h) p[std::size_t(i++)] = 0;
                if (i == users) break;
            }
        }
    }
}

TEST_CASE("pipeline equals direct oracle, randomized at d = 19") {
    RandomSource rng(777);
    for (int trial = 0; trial < 10000; ++trial) {
        const int users = 2 + int(rng.uniform_index(3));
        std::vector<ModDigit> m;
        std::vector<PrivateDigit> p;
        for (int u = 0; u < users; ++u) {
            m.push_back(ModDigit(int(rng.uniform_index(19)), d19));
            p.push_back(PrivateDigit(int(rng.uniform_index(10)), d19));
        }
        const ModDigit k(int(rng.uniform_index(19)), d19);
        const auto rel = compare_pipeline(m, k, p);
        for (int a = 0; a < users; ++a) {
            for (int b = 0; b < users; ++b) {
                if (a == b) continue;
                REQUIRE(rel.at(a, b) == direct_oracle(p[std::size_t(a)], p[std::size_t(b)]));
            }
        }
    }
}

TEST_CASE("relation matrix is invariant under key and measurement changes") {
    RandomSource rng(31);
    const Dimension d7(7);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<PrivateDigit> p;
        for (int u = 0; u < 3; ++u) {
            p.push_back(PrivateDigit(int(rng.uniform_index(4)), d7));
        }
        auto draw_m = [&] {
            std::vector<ModDigit> m;
            for (int u = 0; u < 3; ++u) m.push_back(ModDigit(int(rng.uniform_index(7)), d7));
            return m;
        };
        const auto base = compare_pipeline(draw_m(), ModDigit(int(rng.uniform_index(7)), d7), p);
        const auto other = compare_pipeline(draw_m(), ModDigit(int(rng.uniform_index(7)), d7), p);
        REQUIRE(base == other);
    }
}

TEST_CASE("pipeline rejects degenerate input") {
    CHECK_THROWS_AS(compare_pipeline({md(1)}, md(0), {pd(1)}), std::domain_error);
}
