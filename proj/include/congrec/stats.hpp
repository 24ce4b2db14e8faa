#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "congrec/congruity.hpp"
#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"
#include "congrec/rng.hpp"

namespace congrec {

// Regularized incomplete beta function I_x(a, b), evaluated with the Lentz
// continued fraction. Accurate to ~1e-14 over the arguments used here.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ConfigError("incomplete beta requires positive shape parameters");
    }
    if (std::isnan(x)) return x;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // The continued fraction converges fast only for x below the mean; use the
    // reflection I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if (x > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
    }
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) +
                                  std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b));
    const double tiny = 1e-300;
    const double eps = 3e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return front * h / a;
}

// Survival function of Student's t distribution: P(T > t) with df degrees of
// freedom. Exact in the tails where two-sided p-values live.
inline double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw ConfigError("degrees of freedom must be positive");
    if (std::isnan(t)) return t;
    if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

enum class Tail {
    TwoSided,
    OneSidedGreater,  // H1: mean(a) > mean(b)
};

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    Tail tail = Tail::TwoSided;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

inline double sample_mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs, double mean) {
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return s / static_cast<double>(xs.size() - 1);
}

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
// Samples need not be the same size. Two samples with zero variance and equal
// means carry no evidence either way and are reported as degenerate rather
// than as a p-value.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                                Tail tail = Tail::TwoSided) {
    if (a.size() < 2 || b.size() < 2) {
        throw DegenerateSampleError("each sample needs at least 2 observations, got " +
                                    std::to_string(a.size()) + " and " +
                                    std::to_string(b.size()));
    }
    TTestResult r;
    r.tail = tail;
    r.n_a = a.size();
    r.n_b = b.size();
    const double ma = sample_mean(a);
    const double mb = sample_mean(b);
    const double va = sample_variance(a, ma);
    const double vb = sample_variance(b, mb);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        if (ma == mb) {
            throw DegenerateSampleError(
                "both samples are constant and equal; the test statistic is undefined");
        }
        // Constant samples with different means: infinitely strong evidence.
        r.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
        r.df = na + nb - 2.0;
        r.p = (tail == Tail::TwoSided) ? 0.0 : (ma > mb ? 0.0 : 1.0);
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    const double num = se2 * se2;
    const double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
    r.df = num / den;
    if (tail == Tail::TwoSided) {
        r.p = 2.0 * student_t_sf(std::fabs(r.t), r.df);
    } else {
        r.p = student_t_sf(r.t, r.df);
    }
    return r;
}

// For each user with at least one friend, the least and the greatest congruity
// they hold toward any friend (absent pairs read as 0). If friendship ignored
// congruity these two per-user summaries would be close; the paired vectors
// feed a two-sided test.
struct FriendCongruenceResult {
    std::vector<double> c_min;
    std::vector<double> c_max;
    TTestResult test;
};

inline FriendCongruenceResult friend_congruence_test(const UserPairMatrix& congruity,
                                                     const SocialGraph& graph) {
    if (congruity.n_users() != graph.n_users()) {
        throw ConfigError("congruity matrix and social graph disagree on user count");
    }
    FriendCongruenceResult out;
    for (UserId u = 0; u < graph.n_users(); ++u) {
        auto friends = graph.neighbors(u);
        if (friends.empty()) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (UserId f : friends) {
            double c = congruity.value(u, f);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        out.c_min.push_back(lo);
        out.c_max.push_back(hi);
    }
    out.test = welch_t_test(out.c_min, out.c_max, Tail::TwoSided);
    return out;
}

// For every congruent pair (i, j), i < j, draw one comparison partner k whose
// congruity toward i is non-positive (absent counts), uniformly among such
// users, seeded per pair so the draw is reproducible and independent of
// evaluation order. Collects rating-vector cosine similarities sim(i, j) and
// sim(i, k); under the congruity hypothesis the former should be larger.
struct CongruityPreferenceResult {
    std::vector<double> sim_congruent;
    std::vector<double> sim_random;
    // The sampled triples behind the two vectors: congruent pair (a, b) and
    // the drawn incongruent partner of a.
    std::vector<UserId> pair_a;
    std::vector<UserId> pair_b;
    std::vector<UserId> partner;
    TTestResult test;
};

inline CongruityPreferenceResult congruity_preference_test(const UserPairMatrix& congruity,
                                                           const SparseRatings& ratings,
                                                           std::uint64_t seed) {
    if (congruity.n_users() != ratings.n_users()) {
        throw ConfigError("congruity matrix and ratings disagree on user count");
    }
    const std::int32_t n = ratings.n_users();
    auto norms = user_rating_norms(ratings);
    CongruityPreferenceResult out;
    for (const auto& [i, j, c] : congruity.pairs()) {
        if (c <= 0.0) continue;
        // Users excluded from the draw: i itself plus everyone i is congruent
        // with. Row scan keeps this sorted.
        std::vector<UserId> excluded;
        excluded.push_back(i);
        for (const auto& [k, v] : congruity.row(i)) {
            if (v > 0.0) excluded.push_back(k);
        }
        std::sort(excluded.begin(), excluded.end());
        const std::int64_t candidates = static_cast<std::int64_t>(n) -
                                        static_cast<std::int64_t>(excluded.size());
        if (candidates <= 0) continue;
        Rng rng(mix_seed(seed, {0x70A1Bu, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(j)}));
        std::int64_t k = static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(candidates)));
        // Map the draw from [0, candidates) onto user ids, skipping exclusions.
        for (UserId e : excluded) {
            if (e <= k) ++k;
        }
        out.sim_congruent.push_back(cosine_pair(ratings, i, j, norms));
        out.sim_random.push_back(cosine_pair(ratings, i, static_cast<UserId>(k), norms));
        out.pair_a.push_back(i);
        out.pair_b.push_back(j);
        out.partner.push_back(static_cast<UserId>(k));
    }
    out.test = welch_t_test(out.sim_congruent, out.sim_random, Tail::OneSidedGreater);
    return out;
}

struct AnalysisRow {
    std::string name;
    TTestResult test;
    bool degenerate = false;
    std::string note;
};

// Report schema: test_name,t,df,p,n_a,n_b,alpha,rejected. A degenerate test
// keeps its row, with nan statistics and rejected=false, so a report always
// lists every requested analysis.
inline void write_analysis_report(const std::string& path,
                                  const std::vector<AnalysisRow>& rows, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("significance level must lie in (0, 1)");
    }
    CsvWriter w(path, "test_name,t,df,p,n_a,n_b,alpha,rejected");
    for (const auto& r : rows) {
        if (r.degenerate) {
            w.row({r.name, "nan", "nan", "nan", std::to_string(r.test.n_a),
                   std::to_string(r.test.n_b), format_double(alpha), "false"});
        } else {
            w.row({r.name, format_double(r.test.t), format_double(r.test.df),
                   format_double(r.test.p), std::to_string(r.test.n_a),
                   std::to_string(r.test.n_b), format_double(alpha),
                   r.test.p < alpha ? "true" : "false"});
        }
    }
}

}  // namespace congrec
