#ifndef EPILATENT_PANEL_HPP
#define EPILATENT_PANEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace epilatent {

/// Doubly-stratified weekly incidence panel: counts indexed (t, g, i) over
/// T weeks, G regions, I age groups, with subpopulation sizes E[g,i].
/// Immutable after construction/validation; safe to share across threads.
struct PanelData {
    int T = 0, G = 0, I = 0;
    std::vector<long long> counts;  // t-major, then g, then i
    Eigen::MatrixXd populations;    // G x I, integral values >= 1
    std::vector<int> week_of_year;  // length T, values in 1..52
    std::vector<std::string> region_labels;
    std::vector<std::string> age_labels;

    long long count(int t, int g, int i) const { return counts[(static_cast<std::size_t>(t) * G + g) * I + i]; }
    long long& count_ref(int t, int g, int i) { return counts[(static_cast<std::size_t>(t) * G + g) * I + i]; }

    /// Counts at week t as a G x I real matrix.
    Eigen::MatrixXd counts_at(int t) const;

    double total_population() const { return populations.sum(); }

    /// Throws ValidationError / ShapeError when any invariant fails.
    void validate() const;

    /// First T_head weeks (for train/test splits).
    PanelData head(int T_head) const;
};

struct SpatialStructure {
    Eigen::MatrixXi adjacency_order;         // G x G hop counts, zero diagonal
    std::optional<Eigen::MatrixXd> distance; // G x G, strictly positive off-diagonal

    void validate() const;
};

/// Census-tract rows used to build inter-region distances.
struct TractRow {
    std::string puma;
    double lat = 0.0, lon = 0.0;
    double population = 0.0;
};

struct TractTable {
    std::vector<TractRow> rows;
    /// Distinct puma labels in first-appearance order.
    std::vector<std::string> puma_labels() const;
};

/// Long-format loader. panel.csv columns: t, region, age, count and an
/// optional week_of_year column (written by save_panel; when absent,
/// week_of_year falls back to ((t-1) mod 52) + 1). population.csv columns:
/// region, age, pop. Every (t, region, age) cell must be present exactly once.
PanelData load_panel(const std::string& panel_csv, const std::string& population_csv);
void save_panel(const PanelData& panel, const std::string& panel_csv, const std::string& population_csv);

/// adjacency.csv columns: region_a, region_b (one undirected edge per row).
/// `regions` fixes the label order; the graph must be connected.
Eigen::MatrixXi load_adjacency(const std::string& adjacency_csv, const std::vector<std::string>& regions);

/// All-pairs hop counts by BFS from a boolean adjacency matrix.
/// Throws ValidationError naming an unreachable pair if disconnected.
Eigen::MatrixXi adjacency_orders(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency);

/// tracts.csv columns: puma, lat, lon, pop.
TractTable load_tracts(const std::string& tracts_csv);

/// Great-circle distance in km; mean Earth radius 6371.0088 km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Population-weighted average pairwise tract distance between regions, in
/// tens of km. The diagonal is the same within-region average, not forced to
/// zero; it is strictly positive whenever a region has two or more distinct
/// tract centroids (required by gravity weights).
Eigen::MatrixXd build_distance_matrix(const TractTable& tracts);

Eigen::MatrixXd load_distance_matrix(const std::string& csv_path, const std::vector<std::string>& regions);
void save_distance_matrix(const Eigen::MatrixXd& D, const std::vector<std::string>& regions,
                          const std::string& csv_path);

}  // namespace epilatent

#endif
