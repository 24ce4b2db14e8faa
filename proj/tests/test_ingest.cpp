// CSV loading, id densification, and the joint user/item filtering pass.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "congrec/ingest.hpp"

using namespace congrec;
namespace fs = std::filesystem;

namespace {

// Per-test scratch directory, removed on destruction.
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("congrec_ingest_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    static inline int counter = 0;
};

}  // namespace

TEST_CASE("load_ratings_csv parses the exact schema", "[ingest]") {
    TempDir tmp;
    SECTION("valid rows, including real-valued ratings") {
        auto p = tmp.file("r.csv", "user_id,item_id,rating\nu1,i1,4\nu2,i1,3.5\n\nu1,i2,1\n");
        auto rows = load_ratings_csv(p);
        REQUIRE(rows.size() == 3);
        REQUIRE(rows[0].user == "u1");
        REQUIRE(rows[0].item == "i1");
        REQUIRE(rows[0].value == 4.0);
        REQUIRE(rows[1].value == 3.5);
    }
    SECTION("wrong header") {
        auto p = tmp.file("r.csv", "user,item,rating\nu1,i1,4\n");
        REQUIRE_THROWS_AS(load_ratings_csv(p), ParseError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_ratings_csv((tmp.path / "absent.csv").string()), IoError);
    }
    SECTION("wrong field count names the line") {
        auto p = tmp.file("r.csv", "user_id,item_id,rating\nu1,i1,4\nu2,i1\n");
        try {
            load_ratings_csv(p);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(e.line_number == 3);
            REQUIRE(std::string(e.what()).find(p) != std::string::npos);
        }
    }
    SECTION("non-numeric rating") {
        auto p = tmp.file("r.csv", "user_id,item_id,rating\nu1,i1,good\n");
        REQUIRE_THROWS_AS(load_ratings_csv(p), ParseError);
    }
    SECTION("rating outside [1, 5]") {
        auto p = tmp.file("r.csv", "user_id,item_id,rating\nu1,i1,6\n");
        REQUIRE_THROWS_AS(load_ratings_csv(p), ValidationError);
        auto q = tmp.file("r2.csv", "user_id,item_id,rating\nu1,i1,0.9\n");
        REQUIRE_THROWS_AS(load_ratings_csv(q), ValidationError);
    }
}

TEST_CASE("load_trust_csv rejects self-friendship", "[ingest]") {
    TempDir tmp;
    auto p = tmp.file("t.csv", "user_id,friend_id\nu1,u2\nu3,u1\n");
    auto rows = load_trust_csv(p);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[1].user == "u3");
    REQUIRE(rows[1].friend_of == "u1");

    auto bad = tmp.file("bad.csv", "user_id,friend_id\nu1,u1\n");
    REQUIRE_THROWS_AS(load_trust_csv(bad), ValidationError);
}

TEST_CASE("load_helpfulness_csv enforces score range and distinct users", "[ingest]") {
    TempDir tmp;
    auto p = tmp.file("h.csv", "rater_id,author_id,score\nu1,u2,5\nu2,u1,1\nu3,u1,3\n");
    auto rows = load_helpfulness_csv(p);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[2].score == 3);

    auto frac = tmp.file("frac.csv", "rater_id,author_id,score\nu1,u2,3.5\n");
    REQUIRE_THROWS_AS(load_helpfulness_csv(frac), ParseError);
    auto range = tmp.file("range.csv", "rater_id,author_id,score\nu1,u2,0\n");
    REQUIRE_THROWS_AS(load_helpfulness_csv(range), ValidationError);
    auto self = tmp.file("self.csv", "rater_id,author_id,score\nu1,u1,4\n");
    REQUIRE_THROWS_AS(load_helpfulness_csv(self), ValidationError);
}

TEST_CASE("remap_ids unions users across sources", "[ingest]") {
    std::vector<RawRating> ratings{{"carol", "movie", 4.0}, {"alice", "movie", 3.0}};
    std::vector<RawEdge> edges{{"alice", "bob"}};
    std::vector<RawHelpfulness> events{{"dave", "carol", 5}};
    auto d = remap_ids(ratings, edges, events);

    // Dense user ids are lexicographic over the union {alice, bob, carol, dave}.
    REQUIRE(d.users.names() == std::vector<std::string>{"alice", "bob", "carol", "dave"});
    REQUIRE(d.items.names() == std::vector<std::string>{"movie"});
    REQUIRE(d.ratings.size() == 2);
    REQUIRE(d.ratings.has(d.users.at("carol"), 0));
    REQUIRE(d.graph.are_friends(d.users.at("alice"), d.users.at("bob")));
    REQUIRE(d.events.size() == 1);
    REQUIRE(d.events[0] == HelpfulnessEvent{d.users.at("dave"), d.users.at("carol"), 5});
}

TEST_CASE("remap_ids rejects duplicate ratings by external id", "[ingest]") {
    std::vector<RawRating> ratings{{"u1", "i1", 4.0}, {"u2", "i1", 3.0}, {"u1", "i1", 2.0}};
    try {
        remap_ids(ratings, {}, {});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        REQUIRE(msg.find("u1") != std::string::npos);
        REQUIRE(msg.find("i1") != std::string::npos);
    }
}

namespace {

// Fixture with one user below the rating floor (u4) and one without friends
// (u5); both must go, and the surviving items keep exactly three raters.
DenseDataset single_round_fixture() {
    std::vector<RawRating> ratings;
    for (const char* u : {"u1", "u2", "u3", "u5"}) {
        for (const char* i : {"x1", "x2", "x3"}) {
            ratings.push_back({u, i, 4.0});
        }
    }
    ratings.push_back({"u4", "x1", 3.0});
    ratings.push_back({"u4", "x2", 3.0});
    std::vector<RawEdge> edges{{"u1", "u2"}, {"u2", "u3"}, {"u1", "u4"}};
    std::vector<RawHelpfulness> events{
        {"u1", "u2", 5}, {"u4", "u1", 2}, {"u5", "u3", 4}};
    return remap_ids(ratings, edges, events);
}

}  // namespace

TEST_CASE("preprocess removes under-threshold and friendless users", "[ingest]") {
    auto res = preprocess(single_round_fixture());
    const auto& d = res.data;

    REQUIRE(d.users.names() == std::vector<std::string>{"u1", "u2", "u3"});
    REQUIRE(d.items.names() == std::vector<std::string>{"x1", "x2", "x3"});
    REQUIRE(d.ratings.size() == 9);
    // Events touching u4 and u5 are gone; u1 -> u2 survives.
    REQUIRE(d.events.size() == 1);
    REQUIRE(d.events[0] == HelpfulnessEvent{d.users.at("u1"), d.users.at("u2"), 5});
    // Edge u1 - u4 is gone.
    REQUIRE(d.graph.edge_count() == 2);

    REQUIRE(res.report.size() == 3);
    REQUIRE(res.report[0].external_id == "u1");
    REQUIRE(res.report[0].n_ratings == 3);
    REQUIRE(res.report[0].n_friends == 1);
    REQUIRE(res.report[1].external_id == "u2");
    REQUIRE(res.report[1].n_friends == 2);
}

TEST_CASE("preprocess iterates until removals stop cascading", "[ingest]") {
    // u6 has one rating on y1 only. Removing u6 strands y1 (two raters left,
    // threshold three), and losing y1 drops u5 to two ratings, which removes
    // u5 on the next round. The stable core u1..u4 / x1..x3 must be untouched.
    std::vector<RawRating> ratings;
    for (const char* u : {"u1", "u2", "u3", "u4"}) {
        for (const char* i : {"x1", "x2", "x3"}) {
            ratings.push_back({u, i, 3.0});
        }
    }
    ratings.push_back({"u5", "x1", 4.0});
    ratings.push_back({"u5", "x2", 4.0});
    ratings.push_back({"u5", "y1", 4.0});
    ratings.push_back({"u6", "y1", 2.0});
    std::vector<RawEdge> edges{{"u1", "u2"}, {"u3", "u4"}, {"u5", "u6"}, {"u5", "u1"}};
    auto res = preprocess(remap_ids(ratings, edges, {}));

    REQUIRE(res.data.users.names() == std::vector<std::string>{"u1", "u2", "u3", "u4"});
    REQUIRE(res.data.items.names() == std::vector<std::string>{"x1", "x2", "x3"});
    REQUIRE(res.data.graph.edge_count() == 2);
}

TEST_CASE("preprocess respects configuration knobs", "[ingest]") {
    auto base = single_round_fixture();
    SECTION("require_friend off keeps the friendless rater") {
        PreprocessConfig cfg;
        cfg.require_friend = false;
        auto res = preprocess(base, cfg);
        REQUIRE(res.data.users.names() ==
                std::vector<std::string>{"u1", "u2", "u3", "u5"});
    }
    SECTION("higher floors can empty the data") {
        PreprocessConfig cfg;
        cfg.min_user_ratings = 10;
        REQUIRE_THROWS_AS(preprocess(base, cfg), DataError);
    }
    SECTION("negative thresholds rejected") {
        PreprocessConfig cfg;
        cfg.min_user_ratings = -1;
        REQUIRE_THROWS_AS(preprocess(base, cfg), ConfigError);
    }
}

TEST_CASE("preprocess output is a fixed point", "[ingest][property]") {
    auto first = preprocess(single_round_fixture());
    auto second = preprocess(first.data);
    REQUIRE(second.data.users.names() == first.data.users.names());
    REQUIRE(second.data.items.names() == first.data.items.names());
    REQUIRE(second.data.ratings.entries() == first.data.ratings.entries());
    REQUIRE(second.data.graph.edges() == first.data.graph.edges());
    REQUIRE(second.data.events == first.data.events);
}

TEST_CASE("writers round-trip through the loaders", "[ingest]") {
    TempDir tmp;
    auto res = preprocess(single_round_fixture());
    const auto& d = res.data;

    auto rp = (tmp.path / "ratings.csv").string();
    auto tp = (tmp.path / "trust.csv").string();
    auto hp = (tmp.path / "helpfulness.csv").string();
    write_ratings_csv(rp, d.ratings, d.users, d.items);
    write_trust_csv(tp, d.graph, d.users);
    write_helpfulness_csv(hp, d.events, d.users);

    auto back = remap_ids(load_ratings_csv(rp), load_trust_csv(tp),
                          load_helpfulness_csv(hp));
    REQUIRE(back.users.names() == d.users.names());
    REQUIRE(back.items.names() == d.items.names());
    REQUIRE(back.ratings.entries() == d.ratings.entries());
    REQUIRE(back.graph.edges() == d.graph.edges());
    REQUIRE(back.events == d.events);
}

TEST_CASE("write_retained_report emits one row per survivor", "[ingest]") {
    TempDir tmp;
    auto res = preprocess(single_round_fixture());
    auto p = (tmp.path / "retained.csv").string();
    write_retained_report(p, res.report);

    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "external_id,dense_id,n_ratings,n_friends");
    std::getline(in, line);
    REQUIRE(line == "u1,0,3,1");
    std::getline(in, line);
    REQUIRE(line == "u2,1,3,2");
    std::getline(in, line);
    REQUIRE(line == "u3,2,3,1");
    REQUIRE_FALSE(std::getline(in, line));
}

TEST_CASE("format_double is stable and compact", "[ingest]") {
    REQUIRE(format_double(4.0) == "4");
    REQUIRE(format_double(3.5) == "3.5");
    REQUIRE(format_double(-0.25) == "-0.25");
    REQUIRE(format_double(1.0 / 3.0) == "0.333333333333");
}
