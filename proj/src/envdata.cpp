#include "hexroute/envdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

struct FieldAccum {
    double sum{0.0};
    int count{0};
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    std::optional<double> mean() const {
        if (count == 0) return std::nullopt;
        return sum / count;
    }
};

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", *v);
    return buf;
}

}  // namespace

std::string LoadResult::summary() const {
    std::ostringstream os;
    os << samples.size() << " samples loaded, " << rejected.size() << " rows rejected";
    return os.str();
}

LoadResult load_samples(const std::string& path, const EnvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open environmental csv: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw ValidationError("environmental csv is missing a header: " + path);
    }
    auto header = split_csv_line(trim(header_line));
    for (auto& h : header) h = trim(h);
    if (header != schema.columns) {
        std::string expect;
        for (std::size_t i = 0; i < schema.columns.size(); ++i) {
            if (i) expect += ',';
            expect += schema.columns[i];
        }
        throw ValidationError("csv header mismatch in " + path + " (expected: " + expect + ")");
    }

    LoadResult result;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != schema.columns.size()) {
            result.rejected.push_back({row, "expected " + std::to_string(schema.columns.size()) +
                                                " fields, got " + std::to_string(fields.size())});
            continue;
        }
        for (auto& f : fields) f = trim(f);

        EnvSample sample;
        std::string err;
        auto numeric = [&](const std::string& raw, const char* name, double lo, double hi,
                           std::optional<double>& out) {
            if (raw == schema.na_token) {
                out = std::nullopt;
                return true;
            }
            double v = 0.0;
            if (!parse_double(raw, v)) {
                err = std::string(name) + " unparseable: '" + raw + "'";
                return false;
            }
            if (v < lo || v > hi) {
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%s=%g outside [%g, %g]", name, v, lo, hi);
                err = buf;
                return false;
            }
            out = v;
            return true;
        };

        double lat = 0.0, lon = 0.0;
        const double inf = std::numeric_limits<double>::infinity();
        if (!parse_double(fields[0], lat) || lat < -90.0 || lat > 90.0) {
            result.rejected.push_back({row, "lat invalid: '" + fields[0] + "'"});
            continue;
        }
        if (!parse_double(fields[1], lon) || lon < -180.0 || lon >= 360.0) {
            result.rejected.push_back({row, "lon invalid: '" + fields[1] + "'"});
            continue;
        }
        sample.point = canonical({lat, lon});
        sample.date = fields[2];
        if (!valid_iso_date(sample.date)) {
            result.rejected.push_back({row, "time not ISO-8601 date: '" + fields[2] + "'"});
            continue;
        }
        if (!numeric(fields[3], "sithick", 0.0, inf, sample.thickness_m) ||
            !numeric(fields[4], "siage", 0.0, inf, sample.age_yr) ||
            !numeric(fields[5], "siconc", 0.0, 1.0, sample.concentration) ||
            !numeric(fields[6], "sisnthick", 0.0, inf, sample.snow_m) ||
            !numeric(fields[7], "usi", -inf, inf, sample.drift_u) ||
            !numeric(fields[8], "vsi", -inf, inf, sample.drift_v)) {
            result.rejected.push_back({row, err});
            continue;
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

std::vector<CellFeatures> map_to_cells(const std::vector<EnvSample>& samples,
                                       const CorridorGrid& grid, const std::string& date) {
    if (grid.size() == 0) throw ValidationError("map_to_cells requires a nonempty grid");

    // Max dot product with the unit centroid == min great-circle distance.
    std::vector<CellId> ids;
    std::vector<Vec3> units;
    ids.reserve(grid.size());
    units.reserve(grid.size());
    for (const auto& [id, cell] : grid.cells()) {
        ids.push_back(id);
        units.push_back(to_unit_vector(cell.centroid));
    }

    struct Accum {
        FieldAccum thickness, age, conc, snow, u, v;
        int samples{0};
    };
    std::map<CellId, Accum> accum;
    for (const auto& s : samples) {
        if (s.date != date) continue;
        Vec3 p = to_unit_vector(s.point);
        std::size_t best = 0;
        double best_dot = -2.0;
        for (std::size_t i = 0; i < units.size(); ++i) {
            double d = units[i].x * p.x + units[i].y * p.y + units[i].z * p.z;
            if (d > best_dot) {
                best_dot = d;
                best = i;
            }
        }
        Accum& a = accum[ids[best]];
        a.thickness.add(s.thickness_m);
        a.age.add(s.age_yr);
        a.conc.add(s.concentration);
        a.snow.add(s.snow_m);
        a.u.add(s.drift_u);
        a.v.add(s.drift_v);
        ++a.samples;
    }

    std::vector<CellFeatures> out;
    out.reserve(accum.size());
    for (const auto& [id, a] : accum) {
        CellFeatures f;
        f.cell = id;
        f.date = date;
        f.thickness_m = a.thickness.mean();
        f.age_yr = a.age.mean();
        f.concentration = a.conc.mean();
        f.snow_m = a.snow.mean();
        f.drift_u = a.u.mean();
        f.drift_v = a.v.mean();
        f.sample_count = a.samples;
        out.push_back(std::move(f));
    }
    return out;
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw ValidationError("percentile of empty set");
    std::sort(values.begin(), values.end());
    double pos = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Calibration calibrate(const std::vector<CellFeatures>& features, const CalibrationPolicy& policy) {
    if (features.empty()) throw ValidationError("calibrate requires at least one populated cell");

    std::vector<double> thickness, age, conc, snow, drift;
    for (const auto& f : features) {
        if (f.thickness_m) thickness.push_back(*f.thickness_m);
        if (f.age_yr) age.push_back(*f.age_yr);
        if (f.concentration) conc.push_back(*f.concentration);
        if (f.snow_m) snow.push_back(*f.snow_m);
        if (f.drift_u && f.drift_v) drift.push_back(std::hypot(*f.drift_u, *f.drift_v));
    }

    Calibration cal;
    auto upper = [&](const std::vector<double>& v, double& warn, double& maxv) {
        if (v.empty()) {
            warn = 0.0;
            maxv = 0.0;  // degenerate: penalty identically 0
            return;
        }
        warn = percentile(v, policy.upper_percentile);
        maxv = *std::max_element(v.begin(), v.end());
    };
    upper(thickness, cal.warn_thickness, cal.max_thickness);
    upper(age, cal.warn_age, cal.max_age);
    upper(snow, cal.warn_snow, cal.max_snow);
    if (conc.empty()) {
        cal.warn_concentration = 0.0;
        cal.min_concentration = 0.0;
    } else {
        cal.warn_concentration = percentile(conc, policy.lower_percentile);
        cal.min_concentration = *std::min_element(conc.begin(), conc.end());
    }
    cal.max_drift_speed = drift.empty() ? 0.0 : *std::max_element(drift.begin(), drift.end());
    return cal;
}

std::string Calibration::to_text() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "calibration/1\n"
                  "warn_thickness %.17g\n"
                  "warn_age %.17g\n"
                  "warn_concentration %.17g\n"
                  "warn_snow %.17g\n"
                  "max_thickness %.17g\n"
                  "max_age %.17g\n"
                  "min_concentration %.17g\n"
                  "max_snow %.17g\n"
                  "max_drift_speed %.17g\n",
                  warn_thickness, warn_age, warn_concentration, warn_snow, max_thickness, max_age,
                  min_concentration, max_snow, max_drift_speed);
    return buf;
}

std::uint64_t Calibration::hash() const {
    // FNV-1a over the canonical text form.
    std::string text = to_text();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void dump_features(const std::vector<CellFeatures>& features, std::ostream& os) {
    os << "cell_id,time,tau,age,conc,snow,u,v,sample_count\n";
    for (const auto& f : features) {
        os << f.cell.raw() << ',' << f.date << ',' << fmt_opt(f.thickness_m) << ','
           << fmt_opt(f.age_yr) << ',' << fmt_opt(f.concentration) << ',' << fmt_opt(f.snow_m)
           << ',' << fmt_opt(f.drift_u) << ',' << fmt_opt(f.drift_v) << ',' << f.sample_count
           << '\n';
    }
}

}  // namespace hexroute
