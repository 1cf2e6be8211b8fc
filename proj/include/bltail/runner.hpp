#pragma once

#include "bltail/scenario.hpp"

#include <atomic>
#include <iostream>
#include <thread>

namespace bltail {

/// Deterministic parallel loop: f(i) writes only into slot i, so the result
/// is independent of the scheduling order.
template <typename F>
inline void parallel_for(long n, int workers, F&& f) {
    if (workers <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct StageError : std::runtime_error {
    std::string stage;
    bool config_error;
    StageError(std::string st, const std::string& msg, bool cfg)
        : std::runtime_error("[" + st + "] " + msg), stage(std::move(st)), config_error(cfg) {}
};

/// Everything a run produces, in memory; files are written by run_scenario.
struct RunReport {
    json summary;
    std::vector<GStarField> fields;        // one per tau
    std::map<std::string, TailTable> tails; // keyed by quantized direction
    json decay;                             // representative decay profile
    json lipschitz;                         // per-tau probe reports
    std::string outdir;
};

namespace detail {

inline std::string quantize_key(const Eigen::VectorXd& n) {
    std::ostringstream os;
    os.precision(9);
    os << std::fixed;
    for (int k = 0; k < n.size(); ++k) os << (k ? "," : "") << n[k];
    return os.str();
}

inline json matrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < m.cols(); ++j) r.push_back(dump_complex(m(i, j)));
        rows.push_back(r);
    }
    return rows;
}

} // namespace detail

/// Per-direction tail bundle: corrector traces, the formula context, and the
/// strip-route cross-checks where the data mode is layered.
class TailSweep {
public:
    TailSweep(const Scenario& sc, const PeriodicTensor& A, const HomogenizedTensor& A0,
              const CorrectorSet& chi_star)
        : sc_(sc), A_(A), A0_(A0), chi_star_(chi_star) {
        trivial_correctors_ = true;
        for (const auto& c : chi_star.per_gamma)
            trivial_correctors_ = trivial_correctors_ && c.chi.coeffs().empty();
    }

    bool trivial_correctors() const { return trivial_correctors_; }

    double rate_estimate(double angle) const {
        double contrast = A_.lambda() > 0 ? A_.lambda() / A_.big_lambda() : 1.0;
        return 2.0 * pi * angle * angle * contrast;
    }

    StripOptions strip_options(double angle, double depth_step = 0) const {
        StripOptions o;
        o.tangential_modes = sc_.tangential_modes;
        double rate = std::max(1e-4, rate_estimate(std::abs(angle)));
        o.depth_step = depth_step > 0 ? depth_step
                       : (sc_.depth_step > 0 ? sc_.depth_step
                                             : std::clamp(0.02 / rate, 1.0 / 256, 1.0 / 16));
        o.depth = sc_.strip_depth > 0 ? sc_.strip_depth
                                      : std::clamp(std::log(1.0 / sc_.tolerance) / rate + 2.0, 6.0, 2000.0);
        o.truncation_tol = sc_.tolerance;
        return o;
    }

    /// Formula-route tails for every data mode, for one classified direction.
    TailTable formula_table(const Direction& dir, const std::vector<Freq>& modes) const {
        std::vector<CorrectorTrace> traces;
        StripOptions o = strip_options(dir.layer_angle);
        for (int g = 1; g <= A_.dim(); ++g)
            traces.push_back(solve_corrector(A_, chi_star_, g, dir.n, sc_.nu0, {}, o));
        TailContext ctx(A_, A0_, chi_star_, traces, dir);
        TailTable table;
        table.n = dir.n;
        for (const auto& xi : modes) {
            TailEntry e;
            e.value = ctx.tail(xi);
            e.route = trivial_correctors_ ? "formula-trivial" : "formula";
            e.err_bound = trivial_correctors_ ? 0.0
                          : traces.front().trivial ? traces.back().solution.tail_err_bound
                                                   : traces.front().solution.tail_err_bound;
            table.entries[xi] = e;
        }
        return table;
    }

    struct RouteCheck {
        Freq xi;
        double angle = 0;
        double rel_err = 0;
        double decay_slope = 0;
        double tau_guaranteed = 0;
        double boundary_trace_err = 0;
        Eigen::MatrixXcd strip_value, formula_value;
    };

    /// Solve the data mode on the strip and compare against the formula.
    RouteCheck route_check(const Direction& dir, const Freq& xi,
                           const Eigen::MatrixXcd& formula_value) const {
        PeriodicField v_xi(A_.dim(), A_.sys(), A_.sys());
        v_xi.set_coeff_raw(xi, Eigen::MatrixXcd::Identity(A_.sys(), A_.sys()));
        StripProblem p = reduce_to_strip(A_, v_xi, dir.n, sc_.nu0);
        StripOptions o = strip_options(dir.layer_angle, sc_.route_depth_step);
        double rate = std::max(1e-4, rate_estimate(std::abs(dir.layer_angle)));
        o.depth = std::clamp(16.0 / rate, 6.0, 2000.0);

        StripSolution sol = solve_strip(p, o);
        double grad_tol = 100.0 * sc_.tolerance;
        Eigen::MatrixXcd strip_value;
        for (int attempt = 0;; ++attempt) {
            try {
                strip_value = extract_tail(sol, grad_tol).value;
                break;
            } catch (const convergence_error&) {
                if (attempt >= 2) throw;
                o.depth *= 2;
                sol = solve_strip(p, o);
            }
        }
        RouteCheck rc;
        rc.xi = xi;
        rc.angle = dir.layer_angle;
        rc.strip_value = strip_value;
        rc.formula_value = formula_value;
        double denom = std::max(strip_value.cwiseAbs().maxCoeff(), 1e-9);
        rc.rel_err = (strip_value - formula_value).cwiseAbs().maxCoeff() / denom;
        rc.decay_slope = sol.decay_slope;
        rc.tau_guaranteed = p.tau;
        rc.boundary_trace_err = sol.boundary_trace_err;
        return rc;
    }

private:
    const Scenario& sc_;
    const PeriodicTensor& A_;
    const HomogenizedTensor& A0_;
    const CorrectorSet& chi_star_;
    bool trivial_correctors_ = false;
};

/// Execute the full pipeline: validate -> cell -> A0 -> per-direction strip
/// and corrector solves -> tails (both routes where applicable) -> g*
/// assembly -> probes -> files.
inline RunReport run_scenario(Scenario& sc, std::ostream& log = std::cerr) {
    RunReport rep;
    json& S = rep.summary;
    S["scenario"] = sc.name;
    S["seed"] = sc.seed;

    // ── stage: validate ──
    try {
        validate_scenario(sc);
    } catch (const std::exception& e) {
        throw StageError("validate", e.what(), true);
    }
    PeriodicTensor A = *sc.tensor;
    const int d = A.dim(), N = A.sys();
    try {
        EllipticityReport er = check_ellipticity(A, 1024);
        if (!er.pass) throw validation_error("tensor is not elliptic on samples");
        A.set_ellipticity(er.lambda_est, er.Lambda_est);
        if (!check_layered(A, sc.nu0))
            throw validation_error("tensor is not layered in nu0");
        S["validate"]["lambda"] = er.lambda_est;
        S["validate"]["Lambda"] = er.Lambda_est;
        S["validate"]["divfree"] = divfree_check(A);
        ConvexDomain dom0(sc.domain_axes);
        auto [cg, lip] = sc.data->verify_decay(dom0);
        S["validate"]["data_decay_constant"] = cg;
        S["validate"]["data_lipschitz_constant"] = lip;
        S["validate"]["curvature_lower_bound"] = dom0.curvature_lower_bound();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("validate", e.what(), true);
    }
    log << "[validate] ok\n";

    // ── stage: cell ──
    CorrectorSet chi, chi_star;
    HomogenizedTensor A0;
    try {
        chi = solve_cell_all(A, sc.cell_cutoff);
        chi_star = solve_cell_all(adjoint_tensor(A), sc.cell_cutoff);
        A0 = homogenized_tensor(A, chi);
        json jc;
        jc["cutoff"] = sc.cell_cutoff;
        for (int g = 0; g < d; ++g) {
            jc["residuals"].push_back(chi.per_gamma[g].residual);
            jc["adjoint_residuals"].push_back(chi_star.per_gamma[g].residual);
        }
        json a0 = json::array();
        for (int a = 0; a < d; ++a) {
            json row = json::array();
            for (int b = 0; b < d; ++b) row.push_back(detail::matrix_to_json(A0.at(a, b).cast<Complex>()));
            a0.push_back(row);
        }
        jc["A0"] = a0;
        jc["lambda0"] = A0.lambda0;
        jc["Lambda0"] = A0.Lambda0;
        S["cell"] = jc;
    } catch (const std::exception& e) {
        throw StageError("cell", e.what(), false);
    }
    log << "[cell] ok (lambda0 = " << A0.lambda0 << ")\n";

    ConvexDomain dom(sc.domain_axes);
    OscillatingData& data = *sc.data;
    auto [c_g, c_lip] = data.verify_decay(dom);
    (void)c_lip;

    std::vector<Freq> modes;
    for (const auto& xi : data.support())
        if (linf_norm(xi) <= sc.kg) modes.push_back(xi);

    TailSweep sweep(sc, A, A0, chi_star);

    // ── stage: hemispheres ──
    std::vector<HemisphereSet> hsets;
    try {
        for (double tau : sc.tau_list) {
            HemisphereSet hs = hemisphere_set(dom, tau, sc.samples, sc.nu0, {}, sc.seed);
            if ((long)hs.samples.size() < sc.samples)
                log << "[hemisphere] tau = " << tau << ": only " << hs.samples.size()
                    << " samples in budget\n";
            json h;
            h["tau"] = tau;
            h["kept"] = hs.samples.size();
            h["scanned"] = hs.scanned;
            h["excluded_fraction"] = hs.excluded_fraction();
            h["excluded_rational"] = hs.excluded_rational;
            S["hemispheres"].push_back(h);
            hsets.push_back(std::move(hs));
        }
    } catch (const std::exception& e) {
        throw StageError("hemisphere", e.what(), false);
    }
    log << "[hemisphere] ok\n";

    // ── stage: tails (formula route, memoized per quantized direction) ──
    std::map<std::string, const Direction*> unique_dirs;
    for (const auto& hs : hsets)
        for (const auto& s : hs.samples) unique_dirs.emplace(detail::quantize_key(s.normal.n), &s.normal);

    std::vector<std::pair<std::string, const Direction*>> dir_list(unique_dirs.begin(), unique_dirs.end());
    std::vector<TailTable> tables(dir_list.size());
    try {
        parallel_for((long)dir_list.size(), sc.workers, [&](long i) {
            tables[i] = sweep.formula_table(*dir_list[i].second, modes);
        });
    } catch (const std::exception& e) {
        throw StageError("tails", e.what(), false);
    }
    for (size_t i = 0; i < dir_list.size(); ++i) rep.tails[dir_list[i].first] = tables[i];
    {
        std::vector<double> norms;
        for (const auto& t : tables) norms.push_back(t.max_norm());
        if (!norms.empty()) {
            std::vector<double> sorted = norms;
            std::sort(sorted.begin(), sorted.end());
            S["tails"]["directions"] = norms.size();
            S["tails"]["max_norm"] = sorted.back();
            S["tails"]["median_norm"] = sorted[sorted.size() / 2];
            S["tails"]["trivial_correctors"] = sweep.trivial_correctors();
        }
    }
    log << "[tails] ok (" << dir_list.size() << " directions)\n";

    // ── stage: route consistency + decay (strip route where applicable) ──
    try {
        std::vector<Freq> layered_modes;
        for (const auto& xi : modes) {
            long long dotv = 0;
            for (int k = 0; k < d; ++k) dotv += (long long)xi[k] * sc.nu0[k];
            if (dotv == 0 && !is_zero(xi) && linf_norm(xi) <= 2) layered_modes.push_back(xi);
        }
        json checks = json::array();
        double worst = 0, worst_slope_gap = -1e300;
        if (sc.route_check_directions > 0 && !layered_modes.empty()) {
            // sweep directions streamed from the domain sampler
            std::vector<Direction> dirs;
            Eigen::VectorXd nu(d);
            for (int k = 0; k < d; ++k) nu[k] = double(sc.nu0[k]);
            nu.normalize();
            for (long i = 0; (int)dirs.size() < sc.route_check_directions && i < 100000; ++i) {
                Eigen::VectorXd x = dom.sample(i, 100000, sc.seed + 17);
                Eigen::VectorXd n = dom.inward_normal(x);
                if (std::abs(n.dot(nu)) < sc.route_delta) continue;
                Direction dir = classify_direction(n, Params{}.scan_bound(d));
                if (dir.rational) continue;
                dir.layer_angle = n.dot(nu);
                dirs.push_back(std::move(dir));
            }
            std::vector<std::vector<TailSweep::RouteCheck>> results(dirs.size());
            parallel_for((long)dirs.size(), sc.workers, [&](long i) {
                TailTable table = sweep.formula_table(dirs[i], layered_modes);
                for (const auto& xi : layered_modes)
                    results[i].push_back(sweep.route_check(dirs[i], xi, table.entries[xi].value));
            });
            json decay_rows = json::array();
            for (const auto& per_dir : results)
                for (const auto& rc : per_dir) {
                    json c;
                    c["xi"] = rc.xi;
                    c["angle"] = rc.angle;
                    c["rel_err"] = rc.rel_err;
                    c["decay_slope"] = rc.decay_slope;
                    c["tau_guaranteed"] = rc.tau_guaranteed;
                    c["boundary_trace_err"] = rc.boundary_trace_err;
                    checks.push_back(c);
                    worst = std::max(worst, rc.rel_err);
                    worst_slope_gap = std::max(worst_slope_gap, rc.decay_slope + rc.tau_guaranteed);
                }
            if (!results.empty() && !results.front().empty()) {
                // representative decay profile for plot data
                const Direction& dir = dirs.front();
                PeriodicField v_xi(d, N, N);
                v_xi.set_coeff_raw(layered_modes.front(), Eigen::MatrixXcd::Identity(N, N));
                StripProblem p = reduce_to_strip(A, v_xi, dir.n, sc.nu0);
                StripOptions o = sweep.strip_options(dir.layer_angle, sc.route_depth_step);
                StripSolution sol = solve_strip(p, o);
                json rows = json::array();
                for (int k = 0; k <= sol.steps; ++k)
                    if (sol.grad_sup[k] > 0)
                        rows.push_back(json::array({k * sol.h, std::log(sol.grad_sup[k])}));
                rep.decay["slope"] = sol.decay_slope;
                rep.decay["intercept"] = sol.decay_intercept;
                rep.decay["tau_guaranteed"] = p.tau;
                rep.decay["rows"] = rows;
            }
        }
        S["routes"]["checks"] = checks;
        S["routes"]["max_rel_err"] = worst;
        if (worst_slope_gap > -1e300) S["routes"]["max_slope_plus_tau"] = worst_slope_gap;
    } catch (const std::exception& e) {
        throw StageError("routes", e.what(), false);
    }
    log << "[routes] ok\n";

    // ── stage: g* assembly ──
    try {
        double c_tail = 0;
        for (const auto& t : tables) c_tail = std::max(c_tail, t.max_norm());
        if (c_tail == 0) c_tail = 1;
        for (size_t hi = 0; hi < hsets.size(); ++hi) {
            GStarField field;
            field.tau = sc.tau_list[hi];
            field.kg = sc.kg;
            for (const auto& s : hsets[hi].samples) {
                const TailTable& table = rep.tails.at(detail::quantize_key(s.normal.n));
                auto provider = [&](const Freq& xi) { return table.entries.at(xi).value; };
                field.samples.push_back(assemble_gstar(dom, data, provider, s, sc.kg, c_g, c_tail));
            }
            double imax = 0, rmax = 0;
            for (const auto& s : field.samples) {
                imax = std::max(imax, s.imag_residual);
                rmax = std::max(rmax, s.remainder);
            }
            json f;
            f["tau"] = field.tau;
            f["samples"] = field.samples.size();
            f["max_imag_residual"] = imax;
            f["max_remainder"] = rmax;
            S["gstar"].push_back(f);
            rep.fields.push_back(std::move(field));
        }
    } catch (const std::exception& e) {
        throw StageError("gstar", e.what(), false);
    }
    log << "[gstar] ok\n";

    // ── stage: probes ──
    try {
        rep.lipschitz = json::array();
        for (const auto& field : rep.fields) {
            LipschitzReport pr = lipschitz_probe(field, sc.pairs, sc.h_min, sc.seed + 99);
            json r;
            r["tau"] = field.tau;
            r["L_emp"] = pr.L_emp;
            r["L_emp_doubled"] = pr.L_emp_doubled;
            r["change"] = pr.change;
            r["pairs"] = pr.pairs;
            r["h_min"] = pr.h_min;
            rep.lipschitz.push_back(r);
        }
        S["lipschitz"] = rep.lipschitz;
    } catch (const std::exception& e) {
        throw StageError("probes", e.what(), false);
    }
    log << "[probes] ok\n";

    // ── stage: output files ──
    try {
        std::filesystem::create_directories(sc.outdir);
        auto path = [&](const std::string& f) { return (std::filesystem::path(sc.outdir) / f).string(); };
        for (size_t i = 0; i < rep.fields.size(); ++i) {
            std::ostringstream name;
            name << "gstar_tau" << sc.tau_list[i] << ".csv";
            write_text_file(path(name.str()), gstar_field_to_csv(rep.fields[i]));
        }
        json tails = json::array();
        for (const auto& [key, table] : rep.tails) {
            (void)key;
            tails.push_back(tail_table_to_json(table));
        }
        write_text_file(path("tails.json"), json(tails).dump(1));
        if (!rep.decay.is_null()) write_text_file(path("decay.json"), rep.decay.dump(1));
        write_text_file(path("lipschitz.json"), rep.lipschitz.dump(1));
        write_text_file(path("summary.json"), S.dump(1));
        rep.outdir = sc.outdir;
    } catch (const std::exception& e) {
        throw StageError("output", e.what(), true);
    }
    log << "[output] " << sc.outdir << "\n";
    return rep;
}

/// Plain numeric plot files from a previously written report directory.
inline std::string emit_plotdata(const std::string& report_dir, const std::string& kind) {
    auto path = [&](const std::string& f) {
        return (std::filesystem::path(report_dir) / f).string();
    };
    std::ostringstream out;
    out.precision(12);
    if (kind == "decay_profile") {
        json d = load_json_file(path("decay.json"));
        out << "# log-gradient decay profile; fitted slope " << d["slope"].get<double>()
            << ", guaranteed -tau " << -d["tau_guaranteed"].get<double>() << "\n";
        out << "# t  log_grad_sup\n";
        for (const auto& r : d["rows"]) out << r[0].get<double>() << " " << r[1].get<double>() << "\n";
    } else if (kind == "tail_vs_n") {
        json tails = load_json_file(path("tails.json"));
        Freq pick;
        bool found = false;
        for (const auto& table : tails)
            for (const auto& e : table["entries"]) {
                Freq xi = e["xi"].get<Freq>();
                if (!is_zero(xi) && (!found || xi < pick)).,
                found = true;
            }
        out << "";
    } else if (kind == "gstar_surface") {
        out << "";
    } else if (kind == "lipschitz_vs_tau") {
        json lip = load_json_file(path("lipschitz.json"));
        out << "# tau  L_emp\n";
        for (const auto& r : lip) out << r["tau"].get<double>() << " " << r["L_emp"].get<double>() << "\n";
    } else {
        throw std::invalid_argument("emit_plotdata: unknown kind " + kind);
    }
    return out.str();
}

} // namespace bltail
