#pragma once

#include "bltail/gstar.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace bltail {

using json = nlohmann::ordered_json;

namespace detail {

inline Complex parse_complex(const json& v) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2)
        return Complex(v[0].get<double>(), v[1].get<double>());
    throw validation_error("expected a number or [re, im] pair");
}

inline json dump_complex(Complex z) {
    if (z.imag() == 0.0) return json(z.real());
    return json::array({z.real(), z.imag()});
}

inline Freq parse_freq(const json& v, int d) {
    if (!v.is_array() || (int)v.size() != d)
        throw validation_error("frequency must be an integer array of length d");
    Freq xi(d);
    for (int k = 0; k < d; ++k) xi[k] = v[k].get<int>();
    return xi;
}

} // namespace detail

/// Tensor definition file: {"d": 2, "N": 1, "entries": [{"xi": [..],
/// "block": [[[[..]]..]]}, ...]} with block[a][b][i][j] a number or [re, im].
/// Hermitian closure is enforced by auto-inserting conjugates; if a file
/// lists both xi and -xi the blocks must be consistent.
inline PeriodicTensor tensor_from_json(const json& j) {
    int d = j.at("d").get<int>();
    int N = j.at("N").get<int>();
    PeriodicTensor t(d, N);
    std::map<Freq, TensorBlock> listed;
    for (const auto& e : j.at("entries")) {
        Freq xi = detail::parse_freq(e.at("xi"), d);
        const json& blk = e.at("block");
        if ((int)blk.size() != d) throw validation_error("block must be d x d x N x N");
        TensorBlock c(d, N);
        for (int a = 0; a < d; ++a) {
            if ((int)blk[a].size() != d) throw validation_error("block must be d x d x N x N");
            for (int b = 0; b < d; ++b) {
                const json& m = blk[a][b];
                if ((int)m.size() != N) throw validation_error("block must be d x d x N x N");
                for (int i = 0; i < N; ++i) {
                    if ((int)m[i].size() != N) throw validation_error("block must be d x d x N x N");
                    for (int jj = 0; jj < N; ++jj) c.at(a, b)(i, jj) = detail::parse_complex(m[i][jj]);
                }
            }
        }
        listed[xi] = c;
    }
    for (const auto& [xi, c] : listed) {
        auto mirror = listed.find(negate(xi));
        if (mirror != listed.end()) {
            const TensorBlock conj = c.conjugate();
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    if ((mirror->second.at(a, b) - conj.at(a, b)).cwiseAbs().maxCoeff() > 1e-12)
                        throw validation_error("tensor file: inconsistent conjugate pair at a listed frequency");
        }
        t.set_block(xi, c);
    }
    if (j.contains("lambda") && j.contains("Lambda"))
        t.set_ellipticity(j["lambda"].get<double>(), j["Lambda"].get<double>());
    t.validate();
    return t;
}

/// Field definition file (also used for corrector export): {"d": 2,
/// "rows": N, "cols": M, "entries": [{"xi": [..], "value": [[..]]}]}.
inline PeriodicField field_from_json(const json& j) {
    int d = j.at("d").get<int>();
    int rows = j.at("rows").get<int>();
    int cols = j.at("cols").get<int>();
    PeriodicField f(d, rows, cols);
    std::map<Freq, Eigen::MatrixXcd> listed;
    for (const auto& e : j.at("entries")) {
        Freq xi = detail::parse_freq(e.at("xi"), d);
        Eigen::MatrixXcd v(rows, cols);
        const json& m = e.at("value");
        if ((int)m.size() != rows) throw validation_error("field value shape mismatch");
        for (int i = 0; i < rows; ++i)
            for (int jj = 0; jj < cols; ++jj) v(i, jj) = detail::parse_complex(m[i][jj]);
        listed[xi] = v;
    }
    for (const auto& [xi, v] : listed) {
        auto mirror = listed.find(negate(xi));
        if (mirror != listed.end() &&
            (mirror->second - v.conjugate()).cwiseAbs().maxCoeff() > 1e-12)
            throw validation_error("field file: inconsistent conjugate pair at a listed frequency");
        f.set_coeff(xi, v);
    }
    f.validate();
    return f;
}

inline json field_to_json(const PeriodicField& f) {
    json j;
    j["d"] = f.dim();
    j["rows"] = f.rows();
    j["cols"] = f.cols();
    j["entries"] = json::array();
    for (const auto& [xi, v] : f.coeffs()) {
        json e;
        e["xi"] = xi;
        json m = json::array();
        for (int i = 0; i < f.rows(); ++i) {
            json row = json::array();
            for (int jj = 0; jj < f.cols(); ++jj) row.push_back(detail::dump_complex(v(i, jj)));
            m.push_back(row);
        }
        e["value"] = m;
        j["entries"].push_back(e);
    }
    return j;
}

/// Oscillating boundary data: {"d": 2, "N": 1, "terms": [{"xi": [..],
/// "coeff": [..], "poly": [{"powers": [..], "c": ..}]}]}. Conjugate mirrors
/// are inserted automatically; list each pair once.
inline OscillatingData data_from_json(const json& j) {
    int d = j.at("d").get<int>();
    int N = j.at("N").get<int>();
    OscillatingData g(d, N);
    for (const auto& e : j.at("terms")) {
        Freq xi = detail::parse_freq(e.at("xi"), d);
        Eigen::VectorXcd coeff(N);
        const json& c = e.at("coeff");
        if ((int)c.size() != N) throw validation_error("data coeff must have N entries");
        for (int i = 0; i < N; ++i) coeff[i] = detail::parse_complex(c[i]);
        std::vector<Monomial> poly;
        if (e.contains("poly")) {
            for (const auto& mj : e["poly"]) {
                Monomial m;
                m.c = mj.at("c").get<double>();
                m.powers = mj.at("powers").get<std::vector<int>>();
                if ((int)m.powers.size() != d)
                    throw validation_error("monomial powers must have d entries");
                poly.push_back(std::move(m));
            }
        }
        g.add_term(xi, coeff, std::move(poly));
    }
    return g;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

inline PeriodicTensor load_tensor(const std::string& path) {
    return tensor_from_json(load_json_file(path));
}
inline PeriodicField load_field(const std::string& path) {
    return field_from_json(load_json_file(path));
}
inline OscillatingData load_data(const std::string& path) {
    return data_from_json(load_json_file(path));
}

// ── report exports ────────────────────────────────────────────────────────

inline json direction_to_json(const Direction& d) {
    json j;
    j["n"] = std::vector<double>(d.n.data(), d.n.data() + d.n.size());
    j["rational"] = d.rational;
    if (d.rational) j["witness"] = d.witness;
    j["kappa_est"] = d.kappa_est;
    j["l"] = d.l;
    j["scan_bound"] = d.scan_bound;
    if (std::isfinite(d.layer_angle)) j["layer_angle"] = d.layer_angle;
    return j;
}

inline json tail_table_to_json(const TailTable& table) {
    json j;
    j["n"] = std::vector<double>(table.n.data(), table.n.data() + table.n.size());
    if (std::isfinite(table.angle)) j["angle"] = table.angle;
    j["entries"] = json::array();
    for (const auto& [xi, e] : table.entries) {
        json row;
        row["xi"] = xi;
        json mat = json::array();
        for (int i = 0; i < e.value.rows(); ++i) {
            json r = json::array();
            for (int c = 0; c < e.value.cols(); ++c) r.push_back(detail::dump_complex(e.value(i, c)));
            mat.push_back(r);
        }
        row["matrix"] = mat;
        row["route"] = e.route;
        row["err_bound"] = e.err_bound;
        j["entries"].push_back(row);
    }
    return j;
}

/// g* field export: one CSV row per sample.
inline std::string gstar_field_to_csv(const GStarField& field) {
    std::ostringstream out;
    out.precision(17);
    if (field.samples.empty()) return "";
    const int d = (int)field.samples.front().x.size();
    const int N = (int)field.samples.front().g.size();
    for (int k = 0; k < d; ++k) out << "x" << k + 1 << ",";
    for (int k = 0; k < d; ++k) out << "n" << k + 1 << ",";
    out << "angle";
    for (int k = 0; k < N; ++k) out << ",g" << k + 1;
    out << ",remainder\n";
    for (const auto& s : field.samples) {
        for (int k = 0; k < d; ++k) out << s.x[k] << ",";
        for (int k = 0; k < d; ++k) out << s.n[k] << ",";
        out << s.angle;
        for (int k = 0; k < N; ++k) out << "," << s.g[k];
        out << "," << s.remainder << "\n";
    }
    return out.str();
}

/// Strip snapshot exports: depth profiles as JSON rows {xi, t, re, im} and
/// the solution raster as CSV (tangential points x depth).
inline json profiles_to_json(const StripSolution& sol, int max_mode = 4) {
    json rows = json::array();
    for (int i = 0; i < (int)sol.modes.size(); ++i) {
        if (linf_norm(sol.modes[i]) > max_mode) continue;
        for (int k = 0; k <= sol.steps; ++k) {
            json r;
            r["xi"] = sol.modes[i];
            r["t"] = k * sol.h;
            r["re"] = sol.profiles[i][k](0, 0).real();
            r["im"] = sol.profiles[i][k](0, 0).imag();
            rows.push_back(r);
        }
    }
    return rows;
}

inline std::string strip_raster_csv(const StripSolution& sol, int points = 64) {
    std::ostringstream out;
    out.precision(17);
    out << "z1,t,w_re,w_im\n";
    if (sol.d != 2) return out.str(); // raster export supports tangential dim 1
    for (int p = 0; p < points; ++p) {
        double z1 = double(p) / points;
        for (int k = 0; k <= sol.steps; ++k) {
            Complex w = 0;
            for (int i = 0; i < (int)sol.modes.size(); ++i)
                w += sol.profiles[i][k](0, 0) * std::exp(two_pi_i * (sol.modes[i][0] * z1));
            out << z1 << "," << k * sol.h << "," << w.real() << "," << w.imag() << "\n";
        }
    }
    return out.str();
}

} // namespace bltail
