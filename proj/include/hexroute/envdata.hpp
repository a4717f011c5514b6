#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hexroute/geo.hpp"
#include "hexroute/hexgrid.hpp"

namespace hexroute {

// Tabular input contract. Column order is fixed; missing values use
// na_token and are kept as "absent", never silently zeroed.
struct EnvSchema {
    std::vector<std::string> columns{"lat",    "lon",       "time", "sithick", "siage",
                                     "siconc", "sisnthick", "usi",  "vsi"};
    std::string na_token{"NA"};
};

struct EnvSample {
    GeoPoint point;
    std::string date;  // ISO-8601 YYYY-MM-DD
    std::optional<double> thickness_m;     // sithick >= 0
    std::optional<double> age_yr;          // siage >= 0
    std::optional<double> concentration;   // siconc in [0,1]
    std::optional<double> snow_m;          // sisnthick >= 0
    std::optional<double> drift_u;         // usi, m/s
    std::optional<double> drift_v;         // vsi, m/s
};

struct LoadDiagnostic {
    std::size_t row;  // 1-based data row index
    std::string message;
};

struct LoadResult {
    std::vector<EnvSample> samples;
    std::vector<LoadDiagnostic> rejected;
    std::string summary() const;
};

// Throws IoError when the file is unreadable and ValidationError when the
// header does not match the schema. Bad rows are rejected with
// row-indexed diagnostics, not exceptions.
LoadResult load_samples(const std::string& path, const EnvSchema& schema = {});

struct CellFeatures {
    CellId cell;
    std::string date;
    std::optional<double> thickness_m;
    std::optional<double> age_yr;
    std::optional<double> concentration;
    std::optional<double> snow_m;
    std::optional<double> drift_u;
    std::optional<double> drift_v;
    int sample_count{0};
};

// Nearest-centroid assignment (great-circle) followed by per-field
// arithmetic means. Cells with no samples are absent from the output.
std::vector<CellFeatures> map_to_cells(const std::vector<EnvSample>& samples,
                                       const CorridorGrid& grid, const std::string& date);

struct CalibrationPolicy {
    // Hazard-increasing fields take the upper percentile; concentration
    // takes the lower one (low concentration is the hazard direction).
    double upper_percentile{75.0};
    double lower_percentile{25.0};
};

struct Calibration {
    double warn_thickness{0.0};
    double warn_age{0.0};
    double warn_concentration{0.0};
    double warn_snow{0.0};
    double max_thickness{0.0};
    double max_age{0.0};
    double min_concentration{0.0};
    double max_snow{0.0};
    double max_drift_speed{0.0};  // for the optional drift term

    bool thickness_degenerate() const { return max_thickness <= warn_thickness; }
    bool age_degenerate() const { return max_age <= warn_age; }
    bool concentration_degenerate() const { return warn_concentration <= min_concentration; }
    bool snow_degenerate() const { return max_snow <= warn_snow; }

    std::string to_text() const;
    std::uint64_t hash() const;
};

// Exact min/max bounds plus percentile warning thresholds over the
// per-cell distribution. Throws ValidationError on empty input.
Calibration calibrate(const std::vector<CellFeatures>& features,
                      const CalibrationPolicy& policy = {});

// Linear-interpolation percentile (numpy-style). pct in [0, 100].
double percentile(std::vector<double> values, double pct);

// Feature dump row format: cell_id,time,tau,age,conc,snow,u,v,sample_count
void dump_features(const std::vector<CellFeatures>& features, std::ostream& os);

}  // namespace hexroute
