#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "gridse/case_io.hpp"
#include "gridse/grid.hpp"
#include "test_paths.hpp"

using namespace gridse;
using grid::BusKind;

namespace {

grid::NetworkCase two_bus(double r = 0.0, double x = 0.1, double b = 0.0, double tap = 1.0) {
    grid::NetworkCase c;
    c.base_mva = 100.0;
    c.buses.push_back({1, BusKind::Slack, 0, 0, 0, 0, 138, 1.0, 0.0, 1.0, 0});
    c.buses.push_back({2, BusKind::Pq, 0, 0, 0, 0, 138, 1.0, 0.0, 1.0, 0});
    c.branches.push_back({1, 2, r, x, b, tap, 0.0, true});
    return c;
}

grid::NetworkCase path3() {
    grid::NetworkCase c;
    c.base_mva = 100.0;
    c.buses.push_back({1, BusKind::Slack, 0, 0, 0, 0, 138, 1.0, 0.0, 1.0, 0});
    c.buses.push_back({2, BusKind::Pq, 10, 2, 0, 0, 138, 1.0, 0.0, 1.0, 0});
    c.buses.push_back({3, BusKind::Pq, 10, 2, 0, 0, 138, 1.0, 0.0, 1.0, 0});
    c.branches.push_back({1, 2, 0.01, 0.1, 0.0, 1.0, 0.0, true});
    c.branches.push_back({2, 3, 0.01, 0.1, 0.0, 1.0, 0.0, true});
    return c;
}

}  // namespace

TEST_CASE("two-bus toy JSON case parses") {
    const std::string doc = R"({
      "base_mva": 100,
      "buses": [
        {"id": 1, "kind": "slack", "p_load": 0, "q_load": 0, "base_kv": 138},
        {"id": 2, "kind": "pq", "p_load": 5, "q_load": 1, "base_kv": 138}
      ],
      "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1}]
    })";
    const grid::NetworkCase c = grid::parse_case(doc);
    CHECK(c.n() == 2);
    CHECK(c.branches.size() == 1);
    CHECK(c.slack_index() == 0);
}

TEST_CASE("bundled 118-bus case: counts and slack") {
    const grid::NetworkCase c = grid::load_case(test::data_dir() / "ieee118.json");
    CHECK(c.n() == 118);
    CHECK(c.branches.size() == 186);
    int slack = 0;
    for (const auto& b : c.buses) slack += b.kind == BusKind::Slack ? 1 : 0;
    CHECK(slack == 1);
    CHECK(c.buses[c.slack_index()].id == 69);
}

TEST_CASE("MATPOWER importer agrees with the native JSON case") {
    const grid::NetworkCase a = grid::load_case(test::data_dir() / "case118.m");
    const grid::NetworkCase b = grid::load_case(test::data_dir() / "ieee118.json");
    REQUIRE(a.n() == b.n());
    REQUIRE(a.branches.size() == b.branches.size());
    for (int i = 0; i < a.n(); ++i) {
        CHECK(a.buses[i].id == b.buses[i].id);
        CHECK(a.buses[i].kind == b.buses[i].kind);
        CHECK(a.buses[i].p_load == doctest::Approx(b.buses[i].p_load).epsilon(1e-12));
        CHECK(a.buses[i].bs == doctest::Approx(b.buses[i].bs).epsilon(1e-12));
        CHECK(a.buses[i].v_setpoint == doctest::Approx(b.buses[i].v_setpoint).epsilon(1e-12));
        CHECK(a.buses[i].p_gen == doctest::Approx(b.buses[i].p_gen).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < a.branches.size(); ++k) {
        CHECK(a.branches[k].from_bus == b.branches[k].from_bus);
        CHECK(a.branches[k].to_bus == b.branches[k].to_bus);
        CHECK(a.branches[k].x == doctest::Approx(b.branches[k].x).epsilon(1e-12));
        CHECK(a.branches[k].tap == doctest::Approx(b.branches[k].tap).epsilon(1e-12));
    }
}

TEST_CASE("parser rejects malformed input") {
    SUBCASE("dangling branch endpoint") {
        const std::string doc = R"({
          "base_mva": 100,
          "buses": [{"id": 1, "kind": "slack", "p_load": 0, "q_load": 0, "base_kv": 138}],
          "branches": [{"from": 1, "to": 999, "r": 0.01, "x": 0.1}]
        })";
        CHECK_THROWS_WITH_AS(grid::parse_case(doc), doctest::Contains("999"), Error);
    }
    SUBCASE("duplicate bus id") {
        const std::string doc = R"({
          "base_mva": 100,
          "buses": [
            {"id": 7, "kind": "slack", "p_load": 0, "q_load": 0, "base_kv": 138},
            {"id": 7, "kind": "pq", "p_load": 0, "q_load": 0, "base_kv": 138}
          ],
          "branches": []
        })";
        CHECK_THROWS_WITH_AS(grid::parse_case(doc), doctest::Contains("duplicate"), Error);
    }
    SUBCASE("missing slack") {
        const std::string doc = R"({
          "base_mva": 100,
          "buses": [{"id": 1, "kind": "pq", "p_load": 0, "q_load": 0, "base_kv": 138}],
          "branches": []
        })";
        CHECK_THROWS_AS(grid::parse_case(doc), Error);
    }
    SUBCASE("malformed MATPOWER row reports its line") {
        const std::string doc =
            "mpc.baseMVA = 100;\nmpc.bus = [\n\t1\t3\t0\t0\t0\t0\t1\t1\t0\t138\t1\t1.1\t0.9;\n"
            "\t2\tZAP\t0\t0\t0\t0\t1\t1\t0\t138\t1\t1.1\t0.9;\n];\n";
        CHECK_THROWS_WITH_AS(grid::parse_case_matpower(doc), doctest::Contains("line 4"), Error);
    }
}

TEST_CASE("adjacency of a path graph") {
    const grid::AdjacencyMatrix adj = grid::build_adjacency(path3());
    Eigen::MatrixXi want(3, 3);
    want << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK(adj.entries == want);
}

TEST_CASE("adjacency: 118-bus degrees and outage behavior") {
    const grid::NetworkCase c = grid::load_case(test::data_dir() / "ieee118.json");
    const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
    CHECK(adj.entries == adj.entries.transpose().eval());
    CHECK(adj.entries.diagonal().sum() == 0);

    // brute-force degree count from the branch list
    const int i5 = c.index_of(5);
    std::set<int> nbrs;
    for (const auto& br : c.branches) {
        if (!br.in_service) continue;
        if (br.from_bus == 5) nbrs.insert(br.to_bus);
        if (br.to_bus == 5) nbrs.insert(br.from_bus);
    }
    CHECK(adj.degree(i5) == static_cast<int>(nbrs.size()));

    // outage of the 8-5 branch (no parallel circuit) clears exactly that entry
    int k85 = -1;
    for (std::size_t k = 0; k < c.branches.size(); ++k)
        if (c.branches[k].from_bus == 8 && c.branches[k].to_bus == 5) k85 = static_cast<int>(k);
    REQUIRE(k85 >= 0);
    const grid::AdjacencyMatrix out = grid::build_adjacency(c, k85);
    CHECK(out.entries(c.index_of(8), i5) == 0);
    CHECK(adj.entries(c.index_of(8), i5) == 1);
    Eigen::MatrixXi diff = (adj.entries - out.entries).cwiseAbs();
    CHECK(diff.sum() == 2);  // only the two symmetric entries changed
}

TEST_CASE("parallel branches collapse to one adjacency edge but both count in ybus") {
    grid::NetworkCase c = two_bus();
    c.branches.push_back({1, 2, 0.0, 0.2, 0.0, 1.0, 0.0, true});
    const grid::AdjacencyMatrix adj = grid::build_adjacency(c);
    CHECK(adj.entries(0, 1) == 1);
    // outage of one parallel branch keeps the edge
    const grid::AdjacencyMatrix out = grid::build_adjacency(c, 0);
    CHECK(out.entries(0, 1) == 1);
    const grid::YBus y = grid::build_ybus(c);
    CHECK(y(0, 1).imag() == doctest::Approx(10.0 + 5.0));  // -(-10j) + -(-5j)
}

TEST_CASE("ybus of a single reactive branch") {
    const grid::YBus y = grid::build_ybus(two_bus());
    CHECK(y(0, 0).imag() == doctest::Approx(-10.0));
    CHECK(y(0, 1).imag() == doctest::Approx(10.0));
    CHECK(y(1, 0).imag() == doctest::Approx(10.0));
    CHECK(y(1, 1).imag() == doctest::Approx(-10.0));
    CHECK(y(0, 0).real() == doctest::Approx(0.0));
}

TEST_CASE("ybus off-nominal tap scales the pi model") {
    const double tap = 1.05;
    const grid::YBus base = grid::build_ybus(two_bus(0.0, 0.1, 0.02));
    const grid::YBus y = grid::build_ybus(two_bus(0.0, 0.1, 0.02, tap));
    // off-diagonals scale by 1/tap, the tap-side diagonal by 1/tap^2
    CHECK(std::abs(y(0, 1) - base(0, 1) / tap) < 1e-14);
    CHECK(std::abs(y(1, 0) - base(1, 0) / tap) < 1e-14);
    CHECK(std::abs(y(0, 0) - base(0, 0) / (tap * tap)) < 1e-14);
    CHECK(std::abs(y(1, 1) - base(1, 1)) < 1e-14);
}

TEST_CASE("ybus row sums equal the bus shunts") {
    const grid::NetworkCase c = grid::load_case(test::data_dir() / "ieee118.json");
    const grid::YBus y = grid::build_ybus(c);
    for (int i = 0; i < c.n(); ++i) {
        std::complex<double> row_sum = 0.0;
        for (int j = 0; j < c.n(); ++j) row_sum += y(i, j);
        // independent tally: bus shunt plus all incident charging/tap terms
        std::complex<double> want(c.buses[i].gs / c.base_mva, c.buses[i].bs / c.base_mva);
        for (const auto& br : c.branches) {
            if (!br.in_service) continue;
            const grid::BranchAdmittance ba = grid::branch_admittance(br);
            if (br.from_bus == c.buses[i].id) want += ba.yff + ba.yft;
            if (br.to_bus == c.buses[i].id) want += ba.ytf + ba.ytt;
        }
        CHECK(std::abs(row_sum - want) < 1e-9);
    }
}

TEST_CASE("ybus with zero shunts has vanishing row sums") {
    grid::NetworkCase c = path3();
    for (auto& br : c.branches) br.b_charging = 0.0;
    const grid::YBus y = grid::build_ybus(c);
    for (int i = 0; i < c.n(); ++i) {
        std::complex<double> s = 0.0;
        for (int j = 0; j < c.n(); ++j) s += y(i, j);
        CHECK(std::abs(s) < 1e-12);
    }
}

TEST_CASE("connectivity") {
    CHECK(grid::is_connected(grid::build_adjacency(path3())));
    grid::NetworkCase c = path3();
    c.branches[1].in_service = false;
    CHECK_FALSE(grid::is_connected(grid::build_adjacency(c)));

    const grid::NetworkCase c118 = grid::load_case(test::data_dir() / "ieee118.json");
    CHECK(grid::is_connected(grid::build_adjacency(c118)));
    // the radial line into bus 117 disconnects it
    int k117 = -1;
    for (std::size_t k = 0; k < c118.branches.size(); ++k)
        if (c118.branches[k].to_bus == 117) k117 = static_cast<int>(k);
    REQUIRE(k117 >= 0);
    CHECK_FALSE(grid::is_connected(grid::build_adjacency(c118, k117)));
}

TEST_CASE("is_connected agrees with a union-find oracle on random graphs") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(0.0, 18.0));
        grid::AdjacencyMatrix adj;
        adj.n = n;
        adj.entries = Eigen::MatrixXi::Zero(n, n);
        std::vector<int> parent(n);
        for (int i = 0; i < n; ++i) parent[i] = i;
        const auto find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        const int edges = static_cast<int>(rng.uniform(0.0, 2.0 * n));
        for (int e = 0; e < edges; ++e) {
            const int a = static_cast<int>(rng.uniform(0.0, n));
            const int b = static_cast<int>(rng.uniform(0.0, n));
            if (a == b || a >= n || b >= n) continue;
            adj.entries(a, b) = adj.entries(b, a) = 1;
            parent[find(a)] = find(b);
        }
        bool uf_connected = true;
        for (int i = 1; i < n; ++i) uf_connected &= find(i) == find(0);
        CHECK(grid::is_connected(adj) == uf_connected);
    }
}

TEST_CASE("remove_branch is pure and equals the outage argument") {
    const grid::NetworkCase c = path3();
    const grid::NetworkCase removed = grid::remove_branch(c, 1);
    CHECK(c.branches[1].in_service);
    CHECK_FALSE(removed.branches[1].in_service);
    CHECK(grid::build_adjacency(removed).entries == grid::build_adjacency(c, 1).entries);
    CHECK_THROWS_AS(grid::remove_branch(c, 5), Error);
    CHECK_THROWS_AS(grid::remove_branch(removed, 1), Error);
    CHECK_THROWS_AS(grid::build_adjacency(c, 7), Error);
}

TEST_CASE("adjacency symmetric with zero diagonal for random outages") {
    const grid::NetworkCase c = grid::load_case(test::data_dir() / "ieee118.json");
    Rng rng(3);
    for (int t = 0; t < 25; ++t) {
        const int k = static_cast<int>(rng.uniform(0.0, static_cast<double>(c.branches.size())));
        if (!c.branches[k].in_service) continue;
        const grid::AdjacencyMatrix adj = grid::build_adjacency(c, k);
        CHECK(adj.entries == adj.entries.transpose().eval());
        CHECK(adj.entries.diagonal().sum() == 0);
    }
}
