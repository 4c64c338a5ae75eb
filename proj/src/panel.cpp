#include "epilatent/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"

namespace epilatent {

Eigen::MatrixXd PanelData::counts_at(int t) const {
    Eigen::MatrixXd m(G, I);
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) m(g, i) = static_cast<double>(count(t, g, i));
    return m;
}

void PanelData::validate() const {
    if (T < 1 || G < 1 || I < 1) throw ShapeError("panel: T, G, I must all be >= 1");
    if (counts.size() != static_cast<std::size_t>(T) * G * I)
        throw ShapeError("panel: counts array has wrong length");
    if (populations.rows() != G || populations.cols() != I)
        throw ShapeError("panel: populations must be G x I");
    if (static_cast<int>(week_of_year.size()) != T) throw ShapeError("panel: week_of_year must have length T");
    if (static_cast<int>(region_labels.size()) != G || static_cast<int>(age_labels.size()) != I)
        throw ShapeError("panel: label vectors must match G and I");
    for (long long c : counts)
        if (c < 0) throw ValidationError("panel: negative count");
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) {
            const double e = populations(g, i);
            if (!(e >= 1.0) || e != std::floor(e))
                throw ValidationError("panel: population E[" + region_labels[g] + "," + age_labels[i] +
                                      "] must be an integer >= 1");
        }
    for (int w : week_of_year)
        if (w < 1 || w > 52) throw ValidationError("panel: week_of_year outside 1..52");
}

PanelData PanelData::head(int T_head) const {
    if (T_head < 1 || T_head > T) throw ShapeError("panel.head: T_head outside 1..T");
    PanelData out = *this;
    out.T = T_head;
    out.counts.assign(counts.begin(), counts.begin() + static_cast<std::size_t>(T_head) * G * I);
    out.week_of_year.assign(week_of_year.begin(), week_of_year.begin() + T_head);
    return out;
}

void SpatialStructure::validate() const {
    const int G = static_cast<int>(adjacency_order.rows());
    if (adjacency_order.cols() != G) throw ShapeError("spatial: adjacency_order must be square");
    for (int g = 0; g < G; ++g) {
        if (adjacency_order(g, g) != 0) throw ValidationError("spatial: adjacency_order diagonal must be 0");
        for (int h = 0; h < G; ++h) {
            if (adjacency_order(g, h) < 0) throw ValidationError("spatial: adjacency_order must be nonnegative");
            if (adjacency_order(g, h) != adjacency_order(h, g))
                throw ValidationError("spatial: adjacency_order must be symmetric");
        }
    }
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < G; ++h)
            for (int m = 0; m < G; ++m)
                if (adjacency_order(g, m) > adjacency_order(g, h) + adjacency_order(h, m))
                    throw ValidationError("spatial: adjacency_order violates the triangle inequality");
    if (distance) {
        if (distance->rows() != G || distance->cols() != G) throw ShapeError("spatial: distance must be G x G");
        for (int g = 0; g < G; ++g)
            for (int h = 0; h < G; ++h) {
                if ((*distance)(g, h) != (*distance)(h, g))
                    throw ValidationError("spatial: distance must be symmetric");
                if (g != h && !((*distance)(g, h) > 0.0))
                    throw ValidationError("spatial: off-diagonal distances must be positive");
                if (g == h && (*distance)(g, h) < 0.0)
                    throw ValidationError("spatial: diagonal distances must be nonnegative");
            }
    }
}

std::vector<std::string> TractTable::puma_labels() const {
    std::vector<std::string> labels;
    for (const auto& r : rows)
        if (std::find(labels.begin(), labels.end(), r.puma) == labels.end()) labels.push_back(r.puma);
    return labels;
}

namespace {

std::vector<std::string> ordered_unique(const CsvTable& t, int col) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (seen.insert(t.cell(r, col)).second) out.push_back(t.cell(r, col));
    return out;
}

int label_index(const std::vector<std::string>& labels, const std::string& s) {
    const auto it = std::find(labels.begin(), labels.end(), s);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

}  // namespace

PanelData load_panel(const std::string& panel_csv, const std::string& population_csv) {
    const CsvTable pt = CsvTable::read_file(panel_csv);
    const int c_t = pt.column("t");
    const int c_region = pt.column("region");
    const int c_age = pt.column("age");
    const int c_count = pt.column("count");
    const int c_week = pt.column_if_present("week_of_year");

    const CsvTable pop = CsvTable::read_file(population_csv);
    const int p_region = pop.column("region");
    const int p_age = pop.column("age");
    const int p_pop = pop.column("pop");

    PanelData panel;
    panel.region_labels = ordered_unique(pop, p_region);
    panel.age_labels = ordered_unique(pop, p_age);
    panel.G = static_cast<int>(panel.region_labels.size());
    panel.I = static_cast<int>(panel.age_labels.size());

    panel.populations = Eigen::MatrixXd::Constant(panel.G, panel.I, -1.0);
    for (std::size_t r = 0; r < pop.rows(); ++r) {
        const int g = label_index(panel.region_labels, pop.cell(r, p_region));
        const int i = label_index(panel.age_labels, pop.cell(r, p_age));
        if (panel.populations(g, i) >= 0.0)
            throw ValidationError(population_csv + ":" + std::to_string(pop.source_line(r)) +
                                  ": duplicate population cell");
        panel.populations(g, i) = static_cast<double>(pop.cell_int(r, p_pop));
    }
    for (int g = 0; g < panel.G; ++g)
        for (int i = 0; i < panel.I; ++i)
            if (panel.populations(g, i) < 0.0)
                throw ShapeError("population table missing cell (" + panel.region_labels[g] + ", " +
                                 panel.age_labels[i] + ")");

    long long t_max = 0;
    for (std::size_t r = 0; r < pt.rows(); ++r) t_max = std::max(t_max, pt.cell_int(r, c_t));
    if (t_max < 1) throw ShapeError(panel_csv + ": no weeks found (t must start at 1)");
    panel.T = static_cast<int>(t_max);

    panel.counts.assign(static_cast<std::size_t>(panel.T) * panel.G * panel.I, -1);
    panel.week_of_year.assign(panel.T, 0);
    for (std::size_t r = 0; r < pt.rows(); ++r) {
        const long long t = pt.cell_int(r, c_t);
        if (t < 1 || t > panel.T)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) + ": t out of range");
        const int g = label_index(panel.region_labels, pt.cell(r, c_region));
        if (g < 0)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) + ": unknown region '" +
                                  pt.cell(r, c_region) + "'");
        const int i = label_index(panel.age_labels, pt.cell(r, c_age));
        if (i < 0)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) + ": unknown age '" +
                                  pt.cell(r, c_age) + "'");
        const long long y = pt.cell_int(r, c_count);
        if (y < 0)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) + ": negative count");
        auto& slot = panel.counts[(static_cast<std::size_t>(t - 1) * panel.G + g) * panel.I + i];
        if (slot >= 0)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) +
                                  ": duplicate cell (t=" + std::to_string(t) + ", region=" + pt.cell(r, c_region) +
                                  ", age=" + pt.cell(r, c_age) + ")");
        slot = y;
        const int w = (c_week >= 0) ? static_cast<int>(pt.cell_int(r, c_week))
                                    : static_cast<int>((t - 1) % 52) + 1;
        if (w < 1 || w > 52)
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) + ": week_of_year outside 1..52");
        if (panel.week_of_year[t - 1] == 0) {
            panel.week_of_year[t - 1] = w;
        } else if (panel.week_of_year[t - 1] != w) {
            throw ValidationError(panel_csv + ":" + std::to_string(pt.source_line(r)) +
                                  ": conflicting week_of_year for t=" + std::to_string(t));
        }
    }
    for (int t = 0; t < panel.T; ++t)
        for (int g = 0; g < panel.G; ++g)
            for (int i = 0; i < panel.I; ++i)
                if (panel.count(t, g, i) < 0)
                    throw ShapeError(panel_csv + ": missing cell (t=" + std::to_string(t + 1) + ", region=" +
                                     panel.region_labels[g] + ", age=" + panel.age_labels[i] + ")");
    panel.validate();
    return panel;
}

void save_panel(const PanelData& panel, const std::string& panel_csv, const std::string& population_csv) {
    panel.validate();
    CsvTable pt({"t", "region", "age", "count", "week_of_year"});
    for (int t = 0; t < panel.T; ++t)
        for (int g = 0; g < panel.G; ++g)
            for (int i = 0; i < panel.I; ++i)
                pt.add_row({std::to_string(t + 1), panel.region_labels[g], panel.age_labels[i],
                            std::to_string(panel.count(t, g, i)), std::to_string(panel.week_of_year[t])});
    pt.write_file(panel_csv);

    CsvTable pop({"region", "age", "pop"});
    for (int g = 0; g < panel.G; ++g)
        for (int i = 0; i < panel.I; ++i)
            pop.add_row({panel.region_labels[g], panel.age_labels[i],
                         std::to_string(static_cast<long long>(panel.populations(g, i)))});
    pop.write_file(population_csv);
}

Eigen::MatrixXi load_adjacency(const std::string& adjacency_csv, const std::vector<std::string>& regions) {
    const CsvTable t = CsvTable::read_file(adjacency_csv);
    const int c_a = t.column("region_a");
    const int c_b = t.column("region_b");
    const int G = static_cast<int>(regions.size());
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(G, G);
    adj.setConstant(false);
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const int a = label_index(regions, t.cell(r, c_a));
        const int b = label_index(regions, t.cell(r, c_b));
        if (a < 0 || b < 0)
            throw ValidationError(adjacency_csv + ":" + std::to_string(t.source_line(r)) + ": unknown region");
        if (a == b)
            throw ValidationError(adjacency_csv + ":" + std::to_string(t.source_line(r)) + ": self-edge not allowed");
        adj(a, b) = adj(b, a) = true;
    }
    return adjacency_orders(adj);
}

Eigen::MatrixXi adjacency_orders(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency) {
    const int G = static_cast<int>(adjacency.rows());
    if (adjacency.cols() != G) throw ShapeError("adjacency_orders: matrix must be square");
    for (int g = 0; g < G; ++g) {
        if (adjacency(g, g)) throw ValidationError("adjacency_orders: diagonal must be false");
        for (int h = 0; h < G; ++h)
            if (adjacency(g, h) != adjacency(h, g))
                throw ValidationError("adjacency_orders: adjacency must be symmetric");
    }
    Eigen::MatrixXi order = Eigen::MatrixXi::Constant(G, G, -1);
    for (int src = 0; src < G; ++src) {
        order(src, src) = 0;
        std::queue<int> q;
        q.push(src);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v = 0; v < G; ++v)
                if (adjacency(u, v) && order(src, v) < 0) {
                    order(src, v) = order(src, u) + 1;
                    q.push(v);
                }
        }
        for (int v = 0; v < G; ++v)
            if (order(src, v) < 0)
                throw ValidationError("adjacency_orders: graph is disconnected (no path between regions " +
                                      std::to_string(src + 1) + " and " + std::to_string(v + 1) + ")");
    }
    return order;
}

TractTable load_tracts(const std::string& tracts_csv) {
    const CsvTable t = CsvTable::read_file(tracts_csv);
    const int c_puma = t.column("puma");
    const int c_lat = t.column("lat");
    const int c_lon = t.column("lon");
    const int c_pop = t.column("pop");
    TractTable out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        TractRow row;
        row.puma = t.cell(r, c_puma);
        row.lat = t.cell_double(r, c_lat);
        row.lon = t.cell_double(r, c_lon);
        row.population = t.cell_double(r, c_pop);
        if (row.population < 0.0)
            throw ValidationError(tracts_csv + ":" + std::to_string(t.source_line(r)) + ": negative tract population");
        out.rows.push_back(row);
    }
    return out;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0088;  // mean Earth radius
    constexpr double kDeg = 0.017453292519943295;
    const double phi1 = lat1 * kDeg, phi2 = lat2 * kDeg;
    const double dphi = (lat2 - lat1) * kDeg;
    const double dlam = (lon2 - lon1) * kDeg;
    const double s1 = std::sin(0.5 * dphi), s2 = std::sin(0.5 * dlam);
    const double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Eigen::MatrixXd build_distance_matrix(const TractTable& tracts) {
    const auto labels = tracts.puma_labels();
    const int G = static_cast<int>(labels.size());
    if (G < 1) throw ShapeError("build_distance_matrix: empty tract table");

    std::vector<std::vector<const TractRow*>> by_puma(G);
    for (const auto& r : tracts.rows) by_puma[label_index(labels, r.puma)].push_back(&r);

    std::vector<double> totals(G, 0.0);
    for (int g = 0; g < G; ++g) {
        for (const auto* r : by_puma[g]) totals[g] += r->population;
        if (!(totals[g] > 0.0))
            throw ValidationError("build_distance_matrix: puma '" + labels[g] + "' has zero total population");
    }

    Eigen::MatrixXd D(G, G);
    for (int g = 0; g < G; ++g)
        for (int h = g; h < G; ++h) {
            double acc = 0.0;
            for (const auto* u : by_puma[g])
                for (const auto* v : by_puma[h])
                    acc += (u->population * v->population) * haversine_km(u->lat, u->lon, v->lat, v->lon);
            const double d = acc / (10.0 * totals[g] * totals[h]);  // tens of km
            D(g, h) = d;
            D(h, g) = d;
        }
    return D;
}

Eigen::MatrixXd load_distance_matrix(const std::string& csv_path, const std::vector<std::string>& regions) {
    const CsvTable t = CsvTable::read_file(csv_path);
    const int G = static_cast<int>(regions.size());
    if (t.header().size() != static_cast<std::size_t>(G) + 1 || t.rows() != static_cast<std::size_t>(G))
        throw ShapeError(csv_path + ": distance matrix must be G x G with a leading label column");
    Eigen::MatrixXd D(G, G);
    for (int g = 0; g < G; ++g) {
        if (t.cell(g, 0) != regions[g])
            throw ValidationError(csv_path + ": row label '" + t.cell(g, 0) + "' does not match region order");
        for (int h = 0; h < G; ++h) D(g, h) = t.cell_double(g, h + 1);
    }
    return D;
}

void save_distance_matrix(const Eigen::MatrixXd& D, const std::vector<std::string>& regions,
                          const std::string& csv_path) {
    std::vector<std::string> header{"region"};
    for (const auto& r : regions) header.push_back(r);
    CsvTable t(header);
    for (int g = 0; g < D.rows(); ++g) {
        std::vector<std::string> row{regions[g]};
        for (int h = 0; h < D.cols(); ++h) row.push_back(format_double(D(g, h)));
        t.add_row(row);
    }
    t.write_file(csv_path);
}

}  // namespace epilatent
