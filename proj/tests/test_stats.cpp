// Student t machinery, Welch's test, and the two congruity analyses.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "congrec/stats.hpp"

using namespace congrec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("regularized incomplete beta matches reference values", "[stats]") {
    REQUIRE_THAT(regularized_incomplete_beta(0.5, 0.5, 0.25),
                 WithinAbs(0.33333333333333337, 1e-14));
    REQUIRE_THAT(regularized_incomplete_beta(2.0, 3.0, 0.4),
                 WithinAbs(0.5247999999999999, 1e-14));
    REQUIRE_THAT(regularized_incomplete_beta(5.0, 1.0, 0.8),
                 WithinAbs(0.32768, 1e-14));
    REQUIRE_THAT(regularized_incomplete_beta(1.5, 7.2, 0.1),
                 WithinAbs(0.3333186471266521, 1e-13));
    // Exactly 0.5 by symmetry; the continued fraction lands within ~3e-14
    // here, right at its reflection boundary.
    REQUIRE_THAT(regularized_incomplete_beta(30.0, 30.0, 0.5),
                 WithinAbs(0.5, 1e-13));
    REQUIRE_THAT(regularized_incomplete_beta(0.01, 100.0, 1e-4),
                 WithinRel(0.9603007536666583, 1e-12));
}

TEST_CASE("regularized incomplete beta obeys its identities", "[stats][property]") {
    REQUIRE(regularized_incomplete_beta(2.0, 5.0, 0.0) == 0.0);
    REQUIRE(regularized_incomplete_beta(2.0, 5.0, 1.0) == 1.0);
    for (double a : {0.3, 1.0, 2.5, 12.0}) {
        for (double b : {0.4, 1.0, 3.7, 20.0}) {
            double prev = -1.0;
            for (double x : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95}) {
                double v = regularized_incomplete_beta(a, b, x);
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
                REQUIRE(v > prev);  // strictly increasing in x
                prev = v;
                // Reflection symmetry ties the two convergence branches together.
                double mirror = regularized_incomplete_beta(b, a, 1.0 - x);
                REQUIRE_THAT(v + mirror, WithinAbs(1.0, 1e-13));
            }
        }
    }
    REQUIRE_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), ConfigError);
    REQUIRE_THROWS_AS(regularized_incomplete_beta(1.0, -2.0, 0.5), ConfigError);
}

TEST_CASE("student_t_sf matches reference values", "[stats]") {
    REQUIRE(student_t_sf(0.0, 5.0) == 0.5);
    REQUIRE_THAT(student_t_sf(1.0, 8.0), WithinAbs(0.17329675354366708, 1e-12));
    REQUIRE_THAT(student_t_sf(2.5, 3.0), WithinAbs(0.04385332350403277, 1e-12));
    REQUIRE_THAT(student_t_sf(-1.7, 12.0), WithinAbs(0.9425600673023954, 1e-12));
    REQUIRE_THAT(student_t_sf(0.3, 1.0), WithinAbs(0.4072264209222577, 1e-12));
    REQUIRE_THAT(student_t_sf(4.2, 30.0), WithinRel(0.00010989421710800977, 1e-10));
    REQUIRE_THAT(student_t_sf(-3.3, 2.345), WithinAbs(0.9675051837520009, 1e-12));
    REQUIRE_THAT(student_t_sf(0.77, 200.0), WithinAbs(0.22110421055392998, 1e-12));
    REQUIRE_THAT(student_t_sf(10.0, 4.0), WithinRel(0.00028100181135799556, 1e-10));
    REQUIRE_THAT(student_t_sf(0.001, 7.5), WithinAbs(0.4996140993373278, 1e-12));
}

TEST_CASE("student_t_sf is a survival function", "[stats][property]") {
    for (double df : {1.0, 2.5, 10.0, 100.0}) {
        double prev = 1.1;
        for (double t : {-50.0, -3.0, -0.5, 0.0, 0.5, 3.0, 50.0}) {
            double s = student_t_sf(t, df);
            REQUIRE(s >= 0.0);
            REQUIRE(s <= 1.0);
            REQUIRE(s < prev);  // strictly decreasing in t
            prev = s;
            REQUIRE_THAT(s + student_t_sf(-t, df), WithinAbs(1.0, 1e-13));
        }
    }
    REQUIRE(student_t_sf(std::numeric_limits<double>::infinity(), 3.0) == 0.0);
    REQUIRE(student_t_sf(-std::numeric_limits<double>::infinity(), 3.0) == 1.0);
    REQUIRE_THROWS_AS(student_t_sf(1.0, 0.0), ConfigError);
    REQUIRE_THROWS_AS(student_t_sf(1.0, -2.0), ConfigError);
}

namespace {

struct WelchCase {
    std::vector<double> a;
    std::vector<double> b;
    double t, df, p_two, p_greater;
};

// Frozen references, one hand-checkable (the first: t is exactly -1, df
// exactly 8 by symmetry of the two samples).
const std::vector<WelchCase> kWelchCases = {
    {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6},
     -1.0, 8.0, 0.34659350708733416, 0.8267032464563329},
    {{1.1, 2.3, 3.7, 4.1}, {5.2, 6.1, 7.9},
     -3.4324653212841336, 4.447166921898927, 0.022385633260676194, 0.9888071833696619},
    {{0.5, 0.5, 0.6, 0.4, 0.55, 0.45}, {0.52, 0.58, 0.61},
     -1.7876387145933712, 6.124457308248916, 0.12305434919530646, 0.9384728254023468},
    {{10, 12, 9, 11, 14, 8, 13}, {22, 19, 25, 30},
     -5.235017230669389, 3.7438468550592523, 0.007621905487921505, 0.9961890472560392},
    {{-1.5, 0.3, 2.2, -0.7, 1.1, 0.0, -2.3, 1.9}, {-0.2, 0.8, -1.1, 1.4, 0.5},
     -0.21905685230503644, 10.99788621971476, 0.8306180618204367, 0.5846909690897817},
    {{3.14, 2.71, 1.41, 1.73}, {1.61, 2.23, 2.0, 1.9, 2.5},
     0.46054511880076615, 3.827094088200622, 0.6700716031242386, 0.3350358015621193},
};

}  // namespace

TEST_CASE("welch_t_test matches reference statistics", "[stats]") {
    for (const auto& c : kWelchCases) {
        auto two = welch_t_test(c.a, c.b, Tail::TwoSided);
        REQUIRE_THAT(two.t, WithinAbs(c.t, 1e-12));
        REQUIRE_THAT(two.df, WithinAbs(c.df, 1e-10));
        REQUIRE_THAT(two.p, WithinAbs(c.p_two, 1e-12));
        REQUIRE(two.n_a == c.a.size());
        REQUIRE(two.n_b == c.b.size());
        auto greater = welch_t_test(c.a, c.b, Tail::OneSidedGreater);
        REQUIRE_THAT(greater.p, WithinAbs(c.p_greater, 1e-12));
        REQUIRE(greater.t == two.t);
        REQUIRE(greater.df == two.df);
    }
}

TEST_CASE("welch_t_test is antisymmetric in its arguments", "[stats][property]") {
    for (const auto& c : kWelchCases) {
        auto ab = welch_t_test(c.a, c.b);
        auto ba = welch_t_test(c.b, c.a);
        REQUIRE_THAT(ab.t, WithinAbs(-ba.t, 1e-12));
        REQUIRE_THAT(ab.df, WithinAbs(ba.df, 1e-10));
        REQUIRE_THAT(ab.p, WithinAbs(ba.p, 1e-12));
    }
}

TEST_CASE("welch_t_test on identical varied samples is maximally null", "[stats]") {
    std::vector<double> a{1.0, 2.0, 5.0, 3.0};
    auto r = welch_t_test(a, a, Tail::TwoSided);
    REQUIRE(r.t == 0.0);
    REQUIRE_THAT(r.p, WithinAbs(1.0, 1e-12));
}

TEST_CASE("welch_t_test handles degenerate samples explicitly", "[stats]") {
    std::vector<double> flat3{2.0, 2.0, 2.0};
    std::vector<double> flat5{5.0, 5.0, 5.0, 5.0};
    std::vector<double> one{1.0};

    // Constant and equal: no usable evidence, loud failure.
    REQUIRE_THROWS_AS(welch_t_test(flat3, flat3), DegenerateSampleError);
    // Too small to estimate variance at all.
    REQUIRE_THROWS_AS(welch_t_test(one, flat3), DegenerateSampleError);
    REQUIRE_THROWS_AS(welch_t_test(flat3, one), DegenerateSampleError);

    // Constant but different: the separation is infinitely many standard errors.
    auto r = welch_t_test(flat3, flat5, Tail::TwoSided);
    REQUIRE(std::isinf(r.t));
    REQUIRE(r.t < 0.0);
    REQUIRE(r.p == 0.0);
    REQUIRE(r.df == 5.0);
    auto greater = welch_t_test(flat3, flat5, Tail::OneSidedGreater);
    REQUIRE(greater.p == 1.0);
    auto less = welch_t_test(flat5, flat3, Tail::OneSidedGreater);
    REQUIRE(less.p == 0.0);
}

TEST_CASE("friend_congruence_test on a hand-traced triangle", "[stats]") {
    // Triangle of friends; per-user minima are (-0.4, 0.1, -0.4) and maxima
    // (0.6, 0.6, 0.1), giving t = -2*sqrt(2) and df = 4 exactly.
    auto graph = SocialGraph::from_edges(3, {{0, 1}, {0, 2}, {1, 2}});
    UserPairMatrix::Builder b(3);
    b.set(0, 1, 0.6);
    b.set(0, 2, -0.4);
    b.set(1, 2, 0.1);
    auto c = std::move(b).build();

    auto res = friend_congruence_test(c, graph);
    REQUIRE(res.c_min == std::vector<double>{-0.4, 0.1, -0.4});
    REQUIRE(res.c_max == std::vector<double>{0.6, 0.6, 0.1});
    REQUIRE_THAT(res.test.t, WithinAbs(-2.8284271247461903, 1e-12));
    REQUIRE_THAT(res.test.df, WithinAbs(4.0, 1e-10));
    REQUIRE_THAT(res.test.p, WithinAbs(0.04742065558431957, 1e-12));
    REQUIRE(res.test.tail == Tail::TwoSided);
}

TEST_CASE("friend_congruence_test skips friendless users and reads absent as zero",
          "[stats]") {
    // User 3 has no friends and must not contribute a row; the (0,1) edge has
    // no stored congruity and reads as zero.
    auto graph = SocialGraph::from_edges(4, {{0, 1}, {1, 2}});
    UserPairMatrix::Builder b(4);
    b.set(1, 2, 0.8);
    b.set(0, 3, -0.9);  // stored, but 0 and 3 are not friends
    auto c = std::move(b).build();

    auto res = friend_congruence_test(c, graph);
    REQUIRE(res.c_min == std::vector<double>{0.0, 0.0, 0.8});
    REQUIRE(res.c_max == std::vector<double>{0.0, 0.8, 0.8});

    UserPairMatrix wrong(3);
    REQUIRE_THROWS_AS(friend_congruence_test(wrong, graph), ConfigError);
}

TEST_CASE("friend_congruence_test with single-friend users degenerates to equality",
          "[stats]") {
    // With exactly one friend each, min and max coincide user by user, so the
    // two vectors are identical and t is 0 (variance is nonzero across users).
    auto graph = SocialGraph::from_edges(4, {{0, 1}, {2, 3}});
    UserPairMatrix::Builder b(4);
    b.set(0, 1, 0.8);
    b.set(2, 3, -0.2);
    auto res = friend_congruence_test(std::move(b).build(), graph);
    REQUIRE(res.test.t == 0.0);
    REQUIRE_THAT(res.test.p, WithinAbs(1.0, 1e-12));
}

namespace {

// Ratings where users 0 and 1 rate alike and user 2 rates the same items in
// reverse; congruity 0-1 and 2-3 positive, 0-2 negative.
struct PreferenceFixture {
    SparseRatings ratings{4, 3, {{0, 0, 5.0}, {0, 1, 4.0}, {0, 2, 1.0},
                                 {1, 0, 5.0}, {1, 1, 4.0}, {1, 2, 2.0},
                                 {2, 0, 1.0}, {2, 1, 2.0}, {2, 2, 5.0},
                                 {3, 0, 3.0}, {3, 1, 3.0}, {3, 2, 3.0}}};
    UserPairMatrix congruity;
    PreferenceFixture() {
        UserPairMatrix::Builder b(4);
        b.set(0, 1, 0.7);
        b.set(0, 2, -0.5);
        b.set(2, 3, 0.4);
        congruity = std::move(b).build();
    }
};

}  // namespace

TEST_CASE("congruity_preference_test draws valid partners deterministically", "[stats]") {
    PreferenceFixture f;
    // Stored positive pairs are (0, 1) and (2, 3). Partner candidates for
    // user 0 are users 2 and 3 (user 1 is excluded as congruent, user 0 as
    // self); for user 2 they are users 0 and 1 (user 3 excluded).
    auto r1 = congruity_preference_test(f.congruity, f.ratings, 42);
    REQUIRE(r1.pair_a == std::vector<UserId>{0, 2});
    REQUIRE(r1.pair_b == std::vector<UserId>{1, 3});
    REQUIRE(r1.partner.size() == 2);
    REQUIRE((r1.partner[0] == 2 || r1.partner[0] == 3));
    REQUIRE((r1.partner[1] == 0 || r1.partner[1] == 1));
    REQUIRE(r1.sim_congruent.size() == 2);
    auto norms = user_rating_norms(f.ratings);
    REQUIRE_THAT(r1.sim_congruent[0], WithinAbs(cosine_pair(f.ratings, 0, 1, norms), 1e-15));
    REQUIRE_THAT(r1.sim_congruent[1], WithinAbs(cosine_pair(f.ratings, 2, 3, norms), 1e-15));
    REQUIRE_THAT(r1.sim_random[0],
                 WithinAbs(cosine_pair(f.ratings, 0, r1.partner[0], norms), 1e-15));
    REQUIRE_THAT(r1.sim_random[1],
                 WithinAbs(cosine_pair(f.ratings, 2, r1.partner[1], norms), 1e-15));

    auto r2 = congruity_preference_test(f.congruity, f.ratings, 42);
    REQUIRE(r1.partner == r2.partner);
    REQUIRE(r1.sim_random == r2.sim_random);

    // Across seeds every candidate eventually appears, independently per pair.
    std::set<UserId> seen_first, seen_second;
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto r = congruity_preference_test(f.congruity, f.ratings, s);
        seen_first.insert(r.partner[0]);
        seen_second.insert(r.partner[1]);
    }
    REQUIRE(seen_first == std::set<UserId>{2, 3});
    REQUIRE(seen_second == std::set<UserId>{0, 1});
}

TEST_CASE("congruity_preference_test skips pairs without candidates", "[stats]") {
    // Everyone is congruent with everyone: no pair has a non-positive partner
    // to draw, so no samples exist and the test cannot run.
    SparseRatings ratings(3, 2, {{0, 0, 4.0}, {1, 0, 4.0}, {2, 1, 3.0}});
    UserPairMatrix::Builder b(3);
    b.set(0, 1, 0.5);
    b.set(0, 2, 0.5);
    b.set(1, 2, 0.5);
    auto congruity = std::move(b).build();
    REQUIRE_THROWS_AS(congruity_preference_test(congruity, ratings, 1),
                      DegenerateSampleError);
}

TEST_CASE("congruity_preference_test partners are never positively congruent",
          "[stats][property]") {
    Rng rng(5150);
    for (int inst = 0; inst < 15; ++inst) {
        std::int32_t n = 6 + static_cast<std::int32_t>(rng.below(15));
        std::int32_t m = 4 + static_cast<std::int32_t>(rng.below(6));
        std::vector<RatingEntry> entries;
        for (UserId u = 0; u < n; ++u) {
            for (ItemId i = 0; i < m; ++i) {
                if (rng.uniform() < 0.5) {
                    entries.push_back({u, i, 1.0 + std::floor(rng.uniform() * 5.0)});
                }
            }
        }
        SparseRatings ratings(n, m, entries);
        UserPairMatrix::Builder b(n);
        for (UserId a = 0; a < n; ++a) {
            for (UserId c = a + 1; c < n; ++c) {
                double u = rng.uniform();
                if (u < 0.25) b.set(a, c, rng.uniform() * 2.0 - 1.0);
            }
        }
        auto congruity = std::move(b).build();
        CongruityPreferenceResult res;
        try {
            res = congruity_preference_test(congruity, ratings, 7 + inst);
        } catch (const DegenerateSampleError&) {
            continue;  // too few positive pairs in this draw
        }
        for (std::size_t k = 0; k < res.partner.size(); ++k) {
            UserId i = res.pair_a[k], j = res.pair_b[k], p = res.partner[k];
            REQUIRE(i < j);
            REQUIRE(congruity.value(i, j) > 0.0);
            REQUIRE(p != i);
            REQUIRE(congruity.value(i, p) <= 0.0);
        }
        REQUIRE(res.test.tail == Tail::OneSidedGreater);
    }
}

TEST_CASE("write_analysis_report lists every analysis, degenerate or not", "[stats]") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "congrec_stats_csv";
    fs::create_directories(dir);
    auto path = (dir / "analysis.csv").string();

    std::vector<AnalysisRow> rows;
    AnalysisRow ok;
    ok.name = "friend_congruence";
    ok.test = welch_t_test(kWelchCases[0].a, kWelchCases[0].b);
    rows.push_back(ok);
    AnalysisRow bad;
    bad.name = "congruity_preference";
    bad.degenerate = true;
    bad.note = "no samples";
    rows.push_back(bad);

    write_analysis_report(path, rows, 0.05);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "test_name,t,df,p,n_a,n_b,alpha,rejected");
    std::getline(in, line);
    REQUIRE(line == "friend_congruence,-1,8,0.346593507087,5,5,0.05,false");
    std::getline(in, line);
    REQUIRE(line == "congruity_preference,nan,nan,nan,0,0,0.05,false");
    REQUIRE_FALSE(std::getline(in, line));

    REQUIRE_THROWS_AS(write_analysis_report(path, rows, 0.0), ConfigError);
    REQUIRE_THROWS_AS(write_analysis_report(path, rows, 1.0), ConfigError);
    fs::remove_all(dir);
}
