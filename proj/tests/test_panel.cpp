#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>

#include "epilatent/csv.hpp"
#include "epilatent/dgp.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/panel.hpp"
#include "epilatent/rng.hpp"

using namespace epilatent;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("epilatent_panel_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { write_file_atomic(path, text); }

RareDiseaseParams tiny_params(int G, int I) {
    RareDiseaseParams p;
    p.G = G;
    p.I = I;
    p.beta0 = 2.0;
    p.beta_geo = Eigen::VectorXd::Zero(G);
    p.beta_age = Eigen::VectorXd::Zero(I);
    p.beta_sin = Eigen::VectorXd::Constant(I, 0.3);
    p.beta_cos = Eigen::VectorXd::Constant(I, 0.1);
    p.beta_xmas = 0.5;
    p.eta_geo = Eigen::VectorXd::Zero(G);
    p.eta_age = Eigen::VectorXd::Zero(I);
    p.eta0 = std::log(0.5);
    p.rho = 1.5;
    p.psi = 0.4;
    p.theta = 3.0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Constant(I, I, 0.6);
    C.diagonal().setConstant(2.0);
    p.contact = ContactMatrix{C};
    return p;
}

Eigen::MatrixXi path_orders(int G) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(G, G);
    adj.setConstant(false);
    for (int g = 0; g + 1 < G; ++g) adj(g, g + 1) = adj(g + 1, g) = true;
    return adjacency_orders(adj);
}

}  // namespace

TEST_CASE("toy 2x2x2 panel loads with uniform counts") {
    TempDir dir;
    write(dir.file("panel.csv"),
          "t,region,age,count\n"
          "1,north,young,3\n1,north,old,3\n1,south,young,3\n1,south,old,3\n"
          "2,north,young,3\n2,north,old,3\n2,south,young,3\n2,south,old,3\n");
    write(dir.file("pop.csv"),
          "region,age,pop\nnorth,young,100\nnorth,old,150\nsouth,young,120\nsouth,old,90\n");
    const PanelData p = load_panel(dir.file("panel.csv"), dir.file("pop.csv"));
    CHECK(p.T == 2);
    CHECK(p.G == 2);
    CHECK(p.I == 2);
    for (long long c : p.counts) CHECK(c == 3);
    CHECK(p.week_of_year[1] == 2);  // derived when the column is absent
    CHECK(p.populations(1, 0) == 120.0);
}

TEST_CASE("missing cell is a shape error naming the index") {
    TempDir dir;
    write(dir.file("panel.csv"),
          "t,region,age,count\n"
          "1,a,y,1\n1,a,o,1\n1,b,y,1\n1,b,o,1\n"
          "2,a,y,1\n2,b,y,1\n2,b,o,1\n");  // (t=2, a, o) missing
    write(dir.file("pop.csv"), "region,age,pop\na,y,10\na,o,10\nb,y,10\nb,o,10\n");
    CHECK_THROWS_WITH_AS(load_panel(dir.file("panel.csv"), dir.file("pop.csv")),
                         doctest::Contains("missing cell (t=2"), ShapeError);
}

TEST_CASE("negative count and duplicate cell are rejected") {
    TempDir dir;
    write(dir.file("pop.csv"), "region,age,pop\na,y,10\n");
    write(dir.file("panel.csv"), "t,region,age,count\n1,a,y,-2\n");
    CHECK_THROWS_AS(load_panel(dir.file("panel.csv"), dir.file("pop.csv")), ValidationError);
    write(dir.file("panel.csv"), "t,region,age,count\n1,a,y,2\n1,a,y,3\n");
    CHECK_THROWS_WITH_AS(load_panel(dir.file("panel.csv"), dir.file("pop.csv")),
                         doctest::Contains("duplicate cell"), ValidationError);
}

TEST_CASE("save then load is the identity on a simulated panel") {
    const auto params = tiny_params(3, 2);
    Eigen::MatrixXd pops(3, 2);
    pops << 1000, 1200, 800, 950, 1100, 700;
    const auto sim = simulate_rare(params, pops, path_orders(3), 30, Variant::full, 99);
    TempDir dir;
    save_panel(sim.panel, dir.file("panel.csv"), dir.file("pop.csv"));
    const PanelData back = load_panel(dir.file("panel.csv"), dir.file("pop.csv"));
    CHECK(back.T == sim.panel.T);
    CHECK(back.counts == sim.panel.counts);  // bit-exact
    CHECK(back.week_of_year == sim.panel.week_of_year);
    CHECK(back.region_labels == sim.panel.region_labels);
    CHECK(back.populations == sim.panel.populations);
}

TEST_CASE("adjacency orders: path, complete, and brute-force oracle") {
    const Eigen::MatrixXi path3 = path_orders(3);
    CHECK(path3(0, 2) == 2);
    CHECK(path3(0, 0) == 0);
    CHECK(path3(1, 2) == 1);

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> complete(4, 4);
    complete.setConstant(true);
    complete.diagonal().setConstant(false);
    const Eigen::MatrixXi oc = adjacency_orders(complete);
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h) CHECK(oc(g, h) == (g == h ? 0 : 1));

    // random connected 12-node graph vs Floyd-Warshall
    const int G = 12;
    Rng rng(7, 0);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(G, G);
    adj.setConstant(false);
    for (int g = 0; g + 1 < G; ++g) adj(g, g + 1) = adj(g + 1, g) = true;  // spanning path
    for (int g = 0; g < G; ++g)
        for (int h = g + 2; h < G; ++h)
            if (rng.uniform() < 0.2) adj(g, h) = adj(h, g) = true;
    const Eigen::MatrixXi bfs = adjacency_orders(adj);
    const int INF = 1000000;
    Eigen::MatrixXi fw = Eigen::MatrixXi::Constant(G, G, INF);
    for (int g = 0; g < G; ++g) fw(g, g) = 0;
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < G; ++h)
            if (adj(g, h)) fw(g, h) = 1;
    for (int k = 0; k < G; ++k)
        for (int i = 0; i < G; ++i)
            for (int j = 0; j < G; ++j)
                if (fw(i, k) + fw(k, j) < fw(i, j)) fw(i, j) = fw(i, k) + fw(k, j);
    CHECK(bfs == fw);

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> disc(3, 3);
    disc.setConstant(false);
    disc(0, 1) = disc(1, 0) = true;  // node 2 unreachable
    CHECK_THROWS_WITH_AS(adjacency_orders(disc), doctest::Contains("disconnected"), ValidationError);
}

TEST_CASE("spatial structure validation") {
    SpatialStructure s;
    s.adjacency_order = path_orders(4);
    s.validate();
    s.adjacency_order(0, 3) = 9;  // breaks symmetry and the triangle inequality
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("haversine reference value") {
    // one degree of longitude at the equator
    CHECK(haversine_km(0, 0, 0, 1) == doctest::Approx(111.1950797).epsilon(1e-6));
    CHECK(haversine_km(52.52, 13.405, 52.52, 13.405) == 0.0);
}

TEST_CASE("distance matrix: single pair, symmetry, oracle, order invariance") {
    // two single-tract pumas whose centroids are 10 km apart -> D = 1.0
    const double dlat = 10.0 / 111.1950797;
    TractTable two;
    two.rows = {{"p1", 0.0, 0.0, 500.0}, {"p2", dlat, 0.0, 800.0}};
    const Eigen::MatrixXd D2 = build_distance_matrix(two);
    CHECK(D2(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(D2(1, 0) == D2(0, 1));
    CHECK(D2(0, 0) == 0.0);  // single tract: within-puma distance collapses

    // 3 pumas x 2 tracts vs an independent double-sum oracle
    Rng rng(11, 0);
    TractTable t;
    for (int g = 0; g < 3; ++g)
        for (int u = 0; u < 2; ++u)
            t.rows.push_back({"p" + std::to_string(g), rng.uniform(40.0, 41.0), rng.uniform(-3.0, -2.0),
                              rng.uniform(100.0, 900.0)});
    const Eigen::MatrixXd D = build_distance_matrix(t);
    for (int g = 0; g < 3; ++g)
        for (int h = 0; h < 3; ++h) {
            double total_g = 0, total_h = 0, acc = 0;
            for (const auto& u : t.rows)
                if (u.puma == "p" + std::to_string(g)) total_g += u.population;
            for (const auto& v : t.rows)
                if (v.puma == "p" + std::to_string(h)) total_h += v.population;
            for (const auto& u : t.rows)
                for (const auto& v : t.rows)
                    if (u.puma == "p" + std::to_string(g) && v.puma == "p" + std::to_string(h))
                        acc += u.population * v.population / (total_g * total_h) *
                               haversine_km(u.lat, u.lon, v.lat, v.lon);
            CHECK(D(g, h) == doctest::Approx(acc / 10.0).epsilon(1e-12));
        }
    CHECK(D(0, 0) > 0.0);  // two distinct tracts: positive within-puma distance

    // permuting tract rows leaves D unchanged
    TractTable shuffled = t;
    std::swap(shuffled.rows[1], shuffled.rows[4]);
    std::swap(shuffled.rows[0], shuffled.rows[5]);
    // keep first-appearance puma order identical
    TractTable reordered;
    for (const auto& lab : t.puma_labels())
        for (const auto& r : shuffled.rows)
            if (r.puma == lab) reordered.rows.push_back(r);
    const Eigen::MatrixXd Dr = build_distance_matrix(reordered);
    CHECK((D - Dr).cwiseAbs().maxCoeff() == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

    TractTable zero;
    zero.rows = {{"p1", 0, 0, 0.0}, {"p2", 1, 1, 5.0}};
    CHECK_THROWS_WITH_AS(build_distance_matrix(zero), doctest::Contains("zero total population"),
                         ValidationError);
}

TEST_CASE("distance matrix csv round trip") {
    TempDir dir;
    Eigen::MatrixXd D(2, 2);
    D << 0.5, 1.25, 1.25, 0.75;
    save_distance_matrix(D, {"a", "b"}, dir.file("d.csv"));
    const Eigen::MatrixXd back = load_distance_matrix(dir.file("d.csv"), {"a", "b"});
    CHECK((D - back).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tract loader validates") {
    TempDir dir;
    write(dir.file("tracts.csv"), "puma,lat,lon,pop\np1,40.0,-3.0,100\np1,40.1,-3.1,50\n");
    const TractTable t = load_tracts(dir.file("tracts.csv"));
    CHECK(t.rows.size() == 2);
    CHECK(t.puma_labels() == std::vector<std::string>{"p1"});
}
