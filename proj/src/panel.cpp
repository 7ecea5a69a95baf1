#include "wpf/panel.hpp"

#include "wpf/calendar.hpp"
#include "wpf/text.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wpf::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

bool TurbinePanel::complete() const {
    return !speed_missing.any() && !power_missing.any() && speed.allFinite() && power.allFinite();
}

TurbinePanel TurbinePanel::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) throw IndexError("panel slice out of range");
    TurbinePanel out;
    const auto len = static_cast<Eigen::Index>(end - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    out.timestamps.assign(timestamps.begin() + b, timestamps.begin() + static_cast<long>(end));
    out.speed = speed.middleRows(b, len);
    out.power = power.middleRows(b, len);
    out.labels = labels;
    out.speed_missing = speed_missing.middleRows(b, len);
    out.power_missing = power_missing.middleRows(b, len);
    return out;
}

TurbinePanel TurbinePanel::from_matrices(Eigen::MatrixXd speed, Eigen::MatrixXd power,
                                         std::vector<std::string> labels,
                                         std::int64_t start_epoch) {
    if (speed.rows() != power.rows() || speed.cols() != power.cols() ||
        static_cast<std::size_t>(speed.cols()) != labels.size()) {
        throw ParameterError("speed/power/labels dimensions disagree");
    }
    TurbinePanel p;
    const auto n = speed.rows();
    p.timestamps.resize(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
        p.timestamps[static_cast<std::size_t>(t)] = start_epoch + t * calendar::kStepSeconds;
    }
    p.speed_missing = speed.array().isNaN();
    p.power_missing = power.array().isNaN();
    p.speed = std::move(speed);
    p.power = std::move(power);
    p.labels = std::move(labels);
    return p;
}

TurbinePanel parse_panel_csv(const std::string& text, const PanelSchema& schema,
                             Warnings* warnings) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!text::trim(line).empty()) {
            header = text::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw SchemaError("CSV has no header row");

    auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };
    const std::ptrdiff_t ts_col = find_col(schema.timestamp_column);
    if (ts_col < 0) throw SchemaError("missing timestamp column '" + schema.timestamp_column + "'");

    std::vector<std::string> labels = schema.labels;
    if (labels.empty()) {
        for (const auto& h : header) {
            if (ends_with(h, "_speed")) {
                std::string label = h.substr(0, h.size() - 6);
                if (find_col(label + "_power") >= 0) labels.push_back(label);
            }
        }
    }
    if (labels.empty()) throw SchemaError("no <label>_speed/<label>_power column pairs found");
    std::vector<std::ptrdiff_t> speed_cols, power_cols;
    for (const auto& label : labels) {
        const auto sc = find_col(label + "_speed");
        const auto pc = find_col(label + "_power");
        if (sc < 0 || pc < 0) throw SchemaError("missing columns for turbine '" + label + "'");
        speed_cols.push_back(sc);
        power_cols.push_back(pc);
    }

    struct Row {
        std::int64_t ts;
        std::vector<double> speed, power;
    };
    std::vector<Row> rows;
    const std::size_t d = labels.size();
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, found " +
                             std::to_string(cells.size()));
        }
        Row r;
        try {
            r.ts = calendar::parse_timestamp(cells[static_cast<std::size_t>(ts_col)]);
        } catch (const ParseError& e) {
            throw ParseError("row " + std::to_string(line_no) + ": " + e.what());
        }
        r.speed.resize(d);
        r.power.resize(d);
        auto cell_value = [&](std::ptrdiff_t col) {
            const std::string& c = cells[static_cast<std::size_t>(col)];
            if (c.empty() || c == "NA" || c == "nan" || c == "NaN") return kNaN;
            double v = 0.0;
            if (!text::parse_double(c, v) || !std::isfinite(v)) {
                throw ParseError("row " + std::to_string(line_no) + ": bad number '" + c +
                                 "' in column '" + header[static_cast<std::size_t>(col)] + "'");
            }
            return v;
        };
        for (std::size_t i = 0; i < d; ++i) {
            r.speed[i] = cell_value(speed_cols[i]);
            r.power[i] = cell_value(power_cols[i]);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw SchemaError("CSV has no data rows");

    if (!std::is_sorted(rows.begin(), rows.end(),
                        [](const Row& a, const Row& b) { return a.ts < b.ts; })) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.ts < b.ts; });
        if (warnings) warnings->push_back("timestamps out of order; rows re-sorted");
    }
    for (std::size_t t = 1; t < rows.size(); ++t) {
        const std::int64_t step = rows[t].ts - rows[t - 1].ts;
        if (step == 0) {
            throw SchemaError("duplicate timestamp " + calendar::format_timestamp(rows[t].ts));
        }
        if (step != calendar::kStepSeconds) {
            throw SchemaError("non-constant sampling step: " + std::to_string(step) + " s before " +
                              calendar::format_timestamp(rows[t].ts) + " (expected 600 s)");
        }
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    TurbinePanel p;
    p.labels = labels;
    p.timestamps.reserve(rows.size());
    p.speed.resize(n, static_cast<Eigen::Index>(d));
    p.power.resize(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index t = 0; t < n; ++t) {
        const Row& r = rows[static_cast<std::size_t>(t)];
        p.timestamps.push_back(r.ts);
        for (std::size_t i = 0; i < d; ++i) {
            p.speed(t, static_cast<Eigen::Index>(i)) = r.speed[i];
            p.power(t, static_cast<Eigen::Index>(i)) = r.power[i];
        }
    }
    p.speed_missing = p.speed.array().isNaN();
    p.power_missing = p.power.array().isNaN();
    if (warnings) check_physical_range(p, schema.range, *warnings);
    return p;
}

TurbinePanel load_panel(const std::filesystem::path& path, const PanelSchema& schema,
                        Warnings* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open panel file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_panel_csv(buf.str(), schema, warnings);
}

void write_panel(const std::filesystem::path& path, const TurbinePanel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write panel file '" + path.string() + "'");
    out << "timestamp";
    for (const auto& l : panel.labels) out << ',' << l << "_speed," << l << "_power";
    out << '\n';
    const auto d = static_cast<Eigen::Index>(panel.turbines());
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        const auto r = static_cast<Eigen::Index>(t);
        out << panel.timestamps[t];
        for (Eigen::Index i = 0; i < d; ++i) {
            out << ',';
            if (!panel.speed_missing(r, i)) out << text::format_double(panel.speed(r, i));
            out << ',';
            if (!panel.power_missing(r, i)) out << text::format_double(panel.power(r, i));
        }
        out << '\n';
    }
}

void check_physical_range(const TurbinePanel& panel, const PhysicalRange& range, Warnings& out) {
    for (std::size_t i = 0; i < panel.turbines(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        std::size_t low_speed = 0, bad_power = 0;
        for (Eigen::Index t = 0; t < panel.speed.rows(); ++t) {
            if (!panel.speed_missing(t, c) && panel.speed(t, c) < range.speed_min) ++low_speed;
            if (!panel.power_missing(t, c) &&
                (panel.power(t, c) < range.power_min || panel.power(t, c) > range.power_max)) {
                ++bad_power;
            }
        }
        if (low_speed > 0) {
            out.push_back(panel.labels[i] + "_speed: " + std::to_string(low_speed) +
                          " values below " + text::format_double(range.speed_min));
        }
        if (bad_power > 0) {
            out.push_back(panel.labels[i] + "_power: " + std::to_string(bad_power) +
                          " values outside [" + text::format_double(range.power_min) + ", " +
                          text::format_double(range.power_max) + "]");
        }
    }
}

namespace {

void fill_column(Eigen::Ref<Eigen::VectorXd> col, Eigen::Ref<const Eigen::Array<bool, Eigen::Dynamic, 1>> miss,
                 const std::string& name) {
    const Eigen::Index n = col.size();
    Eigen::Index first = 0;
    while (first < n && miss(first)) ++first;
    if (first == n) throw UnrecoverableSeriesError("series '" + name + "' has no observed values");
    for (Eigen::Index t = 0; t < first; ++t) col(t) = col(first);
    Eigen::Index last = first;
    for (Eigen::Index t = first + 1; t < n; ++t) {
        if (miss(t)) continue;
        if (t > last + 1) {
            const double a = col(last), b = col(t);
            const double span = static_cast<double>(t - last);
            for (Eigen::Index s = last + 1; s < t; ++s) {
                col(s) = a + (b - a) * (static_cast<double>(s - last) / span);
            }
        }
        last = t;
    }
    for (Eigen::Index t = last + 1; t < n; ++t) col(t) = col(last);
}

}  // namespace

TurbinePanel fill_gaps_linear(const TurbinePanel& panel) {
    TurbinePanel out = panel;
    for (std::size_t i = 0; i < panel.turbines(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        fill_column(out.speed.col(c), panel.speed_missing.col(c), panel.labels[i] + "_speed");
        fill_column(out.power.col(c), panel.power_missing.col(c), panel.labels[i] + "_power");
    }
    out.speed_missing.setConstant(false);
    out.power_missing.setConstant(false);
    return out;
}

std::vector<SpectrumPoint> smoothed_periodogram(std::span<const double> series, int span) {
    if (span < 1) throw ParameterError("periodogram span must be >= 1");
    if (span % 2 == 0) throw ParameterError("periodogram span must be odd");
    const std::size_t n = series.size();
    if (n < 2 * static_cast<std::size_t>(span) || n < 2) {
        throw ParameterError("periodogram needs n >= 2*span");
    }
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> in(n);
    for (std::size_t t = 0; t < n; ++t) in[t] = series[t] - mean;
    const std::size_t nf = n / 2 + 1;
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nf));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
    fftw_execute(plan);
    const std::size_t kmax = n / 2;
    std::vector<double> raw(kmax);
    for (std::size_t k = 1; k <= kmax; ++k) {
        raw[k - 1] = (out[k][0] * out[k][0] + out[k][1] * out[k][1]) / static_cast<double>(n);
    }
    fftw_destroy_plan(plan);
    fftw_free(out);

    // Mirror: I(-k) = I(k) below k = 1 (k = 0 is zero after centering),
    // I(kmax + m) = I(kmax - m) beyond the Nyquist end.
    auto at = [&](std::ptrdiff_t k) -> double {  // k is 1-based frequency index
        const auto km = static_cast<std::ptrdiff_t>(kmax);
        if (k == 0) return 0.0;
        if (k < 0) k = -k;
        if (k > km) k = 2 * km - k;
        if (k <= 0) return 0.0;
        return raw[static_cast<std::size_t>(k - 1)];
    };
    const std::ptrdiff_t half = span / 2;
    std::vector<SpectrumPoint> result;
    result.reserve(kmax);
    for (std::size_t k = 1; k <= kmax; ++k) {
        double s = 0.0;
        for (std::ptrdiff_t o = -half; o <= half; ++o) s += at(static_cast<std::ptrdiff_t>(k) + o);
        result.push_back({static_cast<double>(k) / static_cast<double>(n), s / span});
    }
    return result;
}

bool SeasonRange::contains(unsigned month, unsigned day) const {
    const unsigned key = month * 100 + day;
    const unsigned lo = start_month * 100 + start_day;
    const unsigned hi = end_month * 100 + end_day;
    return lo <= hi ? (key >= lo && key <= hi) : (key >= lo || key <= hi);
}

SeasonPartition meteorological_seasons() {
    return {SeasonRange{"winter", 12, 1, 2, 29}, SeasonRange{"spring", 3, 1, 5, 31},
            SeasonRange{"summer", 6, 1, 8, 31}, SeasonRange{"autumn", 9, 1, 11, 30}};
}

double SeasonalProfiles::at(std::size_t season, Variable var, std::size_t turbine,
                            std::size_t tod) const {
    const std::size_t v = static_cast<std::size_t>(var);
    return values[((season * 2 + v) * turbines + turbine) * 144 + tod];
}

SeasonalProfiles seasonal_mean_profile(const TurbinePanel& panel, const SeasonPartition& seasons) {
    const std::size_t d = panel.turbines();
    SeasonalProfiles prof;
    for (std::size_t s = 0; s < 4; ++s) prof.seasons[s] = seasons[s].name;
    prof.turbines = d;
    prof.values.assign(4 * 2 * d * 144, 0.0);
    std::vector<std::size_t> counts(4 * 144, 0);
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        const auto cd = calendar::civil_date(panel.timestamps[t]);
        std::size_t s = 4;
        for (std::size_t k = 0; k < 4; ++k) {
            if (seasons[k].contains(cd.month, cd.day)) {
                s = k;
                break;
            }
        }
        if (s == 4) continue;
        const auto tod = static_cast<std::size_t>(calendar::time_of_day(panel.timestamps[t]));
        ++counts[s * 144 + tod];
        const auto r = static_cast<Eigen::Index>(t);
        for (std::size_t i = 0; i < d; ++i) {
            const auto c = static_cast<Eigen::Index>(i);
            prof.values[((s * 2 + 0) * d + i) * 144 + tod] += panel.speed(r, c);
            prof.values[((s * 2 + 1) * d + i) * 144 + tod] += panel.power(r, c);
        }
    }
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t tod = 0; tod < 144; ++tod) {
            const std::size_t cnt = counts[s * 144 + tod];
            if (cnt == 0) {
                throw DegenerateError("empty season bucket: season '" + seasons[s].name +
                                      "', time of day " + std::to_string(tod));
            }
            for (std::size_t v = 0; v < 2; ++v) {
                for (std::size_t i = 0; i < d; ++i) {
                    prof.values[((s * 2 + v) * d + i) * 144 + tod] /= static_cast<double>(cnt);
                }
            }
        }
    }
    return prof;
}

void write_periodogram_csv(const std::filesystem::path& path,
                           const std::vector<SpectrumPoint>& spectrum) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    out << "frequency,density\n";
    for (const auto& p : spectrum) {
        out << text::format_double(p.frequency) << ',' << text::format_double(p.density) << '\n';
    }
}

void write_profiles_csv(const std::filesystem::path& path, const SeasonalProfiles& profiles,
                        const std::vector<std::string>& labels) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    out << "season,tod,turbine,variable,mean\n";
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t tod = 0; tod < 144; ++tod) {
            for (std::size_t i = 0; i < profiles.turbines; ++i) {
                for (auto var : {Variable::Speed, Variable::Power}) {
                    out << profiles.seasons[s] << ',' << tod << ',' << labels[i] << ','
                        << (var == Variable::Speed ? "speed" : "power") << ','
                        << text::format_double(profiles.at(s, var, i, tod)) << '\n';
                }
            }
        }
    }
}

}  // namespace wpf::data
