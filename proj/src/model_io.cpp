#include "wpf/model_io.hpp"

#include "wpf/config.hpp"
#include "wpf/text.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace wpf::model {

namespace {

std::string fmt(double v) { return text::format_double(v); }

void write_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
    out << name;
    for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << fmt(v(k));
    out << '\n';
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
    out << "[matrix " << name << ' ' << m.rows() << ' ' << m.cols() << "]\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << fmt(m(r, c));
        out << '\n';
    }
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string s;
    for (std::size_t k = 0; k < labels.size(); ++k) s += (k ? "," : "") + labels[k];
    return s;
}

const char* sign_token(features::Sign s) {
    const char* t = features::to_string(s);
    return *t ? t : ".";
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("model file line " + std::to_string(line_no_) + ": " + msg);
    }

    std::vector<std::string> tokens(const std::string& line) const {
        std::istringstream s(line);
        std::vector<std::string> out;
        std::string t;
        while (s >> t) out.push_back(t);
        return out;
    }

    double number(const std::string& t) const {
        double v = 0.0;
        if (!text::parse_double(t, v)) fail("bad number '" + t + "'");
        return v;
    }

    long long integer(const std::string& t) const {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(t, &pos);
            if (pos != t.size()) fail("bad integer '" + t + "'");
            return v;
        } catch (const std::logic_error&) {
            fail("bad integer '" + t + "'");
        }
    }

    Eigen::VectorXd vector(const std::vector<std::string>& tok, std::size_t from) const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(tok.size() - from));
        for (std::size_t k = from; k < tok.size(); ++k) v(static_cast<Eigen::Index>(k - from)) = number(tok[k]);
        return v;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace

void save_model(std::ostream& out, const FittedJointModel& m) {
    const std::size_t d = m.turbines();
    out << "wpf-model " << kModelFormatVersion << '\n';
    out << "[meta]\n";
    out << "labels=" << join_labels(m.labels) << '\n';
    out << "iterations=" << m.iterations << '\n';
    out << "sample_begin=" << m.sample_begin << '\n';
    out << "sample_end=" << m.sample_end << '\n';
    out << "start_epoch=" << m.start_epoch << '\n';
    out << "config=" << config::model_config_to_json(m.config).dump() << '\n';
    out << "[thresholds]\n";
    for (std::size_t i = 0; i < d; ++i) {
        out << "speed " << i;
        for (double v : m.thresholds.speed.at(i)) out << ' ' << fmt(v);
        out << "\npower " << i;
        for (double v : m.thresholds.power.at(i)) out << ' ' << fmt(v);
        out << '\n';
    }
    out << "[volatility]\n";
    write_vector(out, "speed_vol_floor", m.speed_vol_floor);
    write_vector(out, "power_vol_floor", m.power_vol_floor);
    write_vector(out, "speed_vol_median", m.speed_vol_median);
    write_vector(out, "power_vol_median", m.power_vol_median);
    out << "[equations]\n";
    for (const auto& turbine : m.equations) {
        for (const auto& f : turbine) {
            out << features::to_string(f.equation) << ' ' << f.turbine << ' ' << fmt(f.lambda) << ' ' << fmt(f.bic)
                << ' ' << f.columns << ' ' << f.dropped << ' ' << (f.degenerate ? 1 : 0) << '\n';
        }
    }
    out << "[terms]\n";
    for (const auto& turbine : m.equations) {
        for (const auto& f : turbine) {
            for (const auto& t : f.terms) {
                const auto& c = t.spec;
                out << features::to_string(c.equation) << ' ' << f.turbine << ' ' << features::to_string(c.family) << ' '
                    << c.source << ' ' << c.lag << ' ' << fmt(c.threshold) << ' ' << sign_token(c.sign) << ' '
                    << c.basis << ' ' << fmt(t.coef) << '\n';
            }
        }
    }
    const auto tail = std::min<Eigen::Index>(m.tail_speed.rows(), m.speed_residuals.rows());
    write_matrix(out, "tail_speed", m.tail_speed);
    write_matrix(out, "tail_power", m.tail_power);
    write_matrix(out, "tail_speed_residual", m.speed_residuals.bottomRows(tail));
    write_matrix(out, "tail_power_residual", m.power_residuals.bottomRows(tail));
    write_matrix(out, "tail_speed_vol", m.speed_vol.bottomRows(tail));
    write_matrix(out, "tail_power_vol_cbrt", m.power_vol_cbrt.bottomRows(tail));
    write_matrix(out, "z_pool", m.z_pool);
    write_matrix(out, "u_pool", m.u_pool);
    out << "[end]\n";
}

void save_model(const std::filesystem::path& path, const FittedJointModel& model) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write model file '" + path.string() + "'");
    save_model(out, model);
    if (!out) throw FileError("error writing model file '" + path.string() + "'");
}

FittedJointModel load_model(std::istream& in) {
    Reader r(in);
    std::string line;
    if (!r.next(line)) r.fail("empty model file");
    {
        const auto tok = r.tokens(line);
        if (tok.size() != 2 || tok[0] != "wpf-model") r.fail("missing 'wpf-model <version>' header");
        if (r.integer(tok[1]) != kModelFormatVersion) r.fail("unsupported model format version " + tok[1]);
    }
    FittedJointModel m;
    std::map<std::string, Eigen::MatrixXd> matrices;
    std::string section;
    bool ended = false;
    bool have_config = false;
    while (!ended && r.next(line)) {
        if (line.front() == '[') {
            if (line == "[end]") {
                ended = true;
                continue;
            }
            if (line.rfind("[matrix ", 0) == 0) {
                const auto tok = r.tokens(line.substr(1, line.size() - 2));
                if (tok.size() != 4) r.fail("bad matrix header");
                const auto rows = static_cast<Eigen::Index>(r.integer(tok[2]));
                const auto cols = static_cast<Eigen::Index>(r.integer(tok[3]));
                if (rows < 0 || cols < 0) r.fail("negative matrix size");
                Eigen::MatrixXd mat(rows, cols);
                for (Eigen::Index i = 0; i < rows; ++i) {
                    if (!r.next(line)) r.fail("truncated matrix " + tok[1]);
                    const auto vals = r.tokens(line);
                    if (static_cast<Eigen::Index>(vals.size()) != cols) r.fail("matrix row has the wrong width");
                    for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = r.number(vals[static_cast<std::size_t>(j)]);
                }
                matrices[tok[1]] = std::move(mat);
                section.clear();
                continue;
            }
            section = line;
            continue;
        }
        if (section == "[meta]") {
            const auto eq = line.find('=');
            if (eq == std::string::npos) r.fail("expected key=value");
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            if (key == "labels") {
                m.labels.clear();
                std::string cell;
                std::istringstream s(value);
                while (std::getline(s, cell, ',')) m.labels.push_back(cell);
            } else if (key == "iterations") {
                m.iterations = static_cast<int>(r.integer(value));
            } else if (key == "sample_begin") {
                m.sample_begin = static_cast<std::size_t>(r.integer(value));
            } else if (key == "sample_end") {
                m.sample_end = static_cast<std::size_t>(r.integer(value));
            } else if (key == "start_epoch") {
                m.start_epoch = r.integer(value);
            } else if (key == "config") {
                try {
                    m.config = config::model_config_from_json(nlohmann::json::parse(value));
                } catch (const nlohmann::json::exception& e) {
                    r.fail(std::string("bad config JSON: ") + e.what());
                } catch (const Error& e) {
                    r.fail(std::string("bad config: ") + e.what());
                }
                have_config = true;
            } else {
                r.fail("unknown meta key '" + key + "'");
            }
        } else if (section == "[thresholds]") {
            const auto tok = r.tokens(line);
            if (tok.size() < 2) r.fail("bad threshold line");
            const auto i = static_cast<std::size_t>(r.integer(tok[1]));
            auto& target = tok[0] == "speed" ? m.thresholds.speed : tok[0] == "power" ? m.thresholds.power
                                                                                       : (r.fail("bad series"), m.thresholds.speed);
            if (target.size() <= i) target.resize(i + 1);
            const Eigen::VectorXd v = r.vector(tok, 2);
            target[i].assign(v.data(), v.data() + v.size());
        } else if (section == "[volatility]") {
            const auto tok = r.tokens(line);
            const Eigen::VectorXd v = r.vector(tok, 1);
            if (tok[0] == "speed_vol_floor") {
                m.speed_vol_floor = v;
            } else if (tok[0] == "power_vol_floor") {
                m.power_vol_floor = v;
            } else if (tok[0] == "speed_vol_median") {
                m.speed_vol_median = v;
            } else if (tok[0] == "power_vol_median") {
                m.power_vol_median = v;
            } else {
                r.fail("unknown volatility vector '" + tok[0] + "'");
            }
        } else if (section == "[equations]") {
            const auto tok = r.tokens(line);
            if (tok.size() != 7) r.fail("equation line needs 7 fields");
            EquationFit f;
            try {
                f.equation = features::equation_from_string(tok[0]);
            } catch (const Error& e) {
                r.fail(e.what());
            }
            f.turbine = static_cast<int>(r.integer(tok[1]));
            if (f.turbine < 0 || static_cast<std::size_t>(f.turbine) >= m.labels.size()) r.fail("turbine out of range");
            f.lambda = r.number(tok[2]);
            f.bic = r.number(tok[3]);
            f.columns = static_cast<std::size_t>(r.integer(tok[4]));
            f.dropped = static_cast<std::size_t>(r.integer(tok[5]));
            f.degenerate = r.integer(tok[6]) != 0;
            if (m.equations.size() != m.labels.size()) m.equations.resize(m.labels.size());
            m.equations[static_cast<std::size_t>(f.turbine)][static_cast<std::size_t>(f.equation)] = std::move(f);
        } else if (section == "[terms]") {
            const auto tok = r.tokens(line);
            if (tok.size() != 9) r.fail("term line needs 9 fields");
            Term t;
            try {
                t.spec.equation = features::equation_from_string(tok[0]);
                t.spec.family = features::family_from_string(tok[2]);
                t.spec.sign = features::sign_from_string(tok[6] == "." ? "" : tok[6]);
            } catch (const Error& e) {
                r.fail(e.what());
            }
            const auto i = r.integer(tok[1]);
            if (i < 0 || static_cast<std::size_t>(i) >= m.equations.size()) r.fail("term turbine out of range");
            t.spec.source = static_cast<int>(r.integer(tok[3]));
            t.spec.lag = static_cast<int>(r.integer(tok[4]));
            t.spec.threshold = r.number(tok[5]);
            t.spec.basis = static_cast<int>(r.integer(tok[7]));
            t.coef = r.number(tok[8]);
            m.equations[static_cast<std::size_t>(i)][static_cast<std::size_t>(t.spec.equation)].terms.push_back(t);
        } else {
            r.fail("content outside a section");
        }
    }
    if (!ended) r.fail("missing [end] marker (truncated file?)");
    if (!have_config) r.fail("missing config");
    const std::size_t d = m.labels.size();
    if (d == 0) r.fail("no turbine labels");
    if (m.equations.size() != d) r.fail("equation table does not cover every turbine");
    auto take = [&](const char* name, Eigen::MatrixXd& dst) {
        const auto it = matrices.find(name);
        if (it == matrices.end()) r.fail(std::string("missing matrix ") + name);
        if (it->second.cols() != static_cast<Eigen::Index>(d)) r.fail(std::string("matrix ") + name + " has the wrong width");
        dst = std::move(it->second);
    };
    take("tail_speed", m.tail_speed);
    take("tail_power", m.tail_power);
    take("tail_speed_residual", m.speed_residuals);
    take("tail_power_residual", m.power_residuals);
    take("tail_speed_vol", m.speed_vol);
    take("tail_power_vol_cbrt", m.power_vol_cbrt);
    take("z_pool", m.z_pool);
    take("u_pool", m.u_pool);
    for (const Eigen::VectorXd* v : {&m.speed_vol_floor, &m.power_vol_floor, &m.speed_vol_median, &m.power_vol_median}) {
        if (v->size() != static_cast<Eigen::Index>(d)) r.fail("volatility vectors have the wrong length");
    }
    if (m.thresholds.speed.size() != d || m.thresholds.power.size() != d) r.fail("thresholds missing for a turbine");
    return m;
}

FittedJointModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open model file '" + path.string() + "'");
    return load_model(in);
}

}  // namespace wpf::model
