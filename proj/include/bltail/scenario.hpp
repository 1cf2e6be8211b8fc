#pragma once

#include "bltail/io.hpp"

#include <filesystem>

namespace bltail {

/// One batch run: a coefficient tensor, oscillating boundary data, the
/// layering vector, a domain, a direction sweep, and solver settings.
struct Scenario {
    std::string name = "scenario";
    std::string tensor_path;
    std::string data_path;
    std::vector<long long> nu0;
    Eigen::VectorXd domain_axes;

    std::vector<double> tau_list{0.3};
    long samples = 100;
    long pairs = 2000;
    double h_min = 1e-3;

    int route_check_directions = 0; // strip-vs-formula cross checks
    double route_delta = 0.3;       // hemisphere threshold for the check sweep
    double route_depth_step = 1.0 / 128;

    int cell_cutoff = 24;
    int tangential_modes = 16;
    double depth_step = 0;   // 0 = scale with the expected decay rate
    double strip_depth = 0;  // 0 = from tolerance and the expected rate
    int kg = 4;
    double tolerance = 1e-6;

    unsigned long long seed = 1;
    int workers = 1;
    std::string outdir = "out";

    // loaded inputs
    std::optional<PeriodicTensor> tensor;
    std::optional<OscillatingData> data;
};

inline Scenario scenario_from_json(const json& j, const std::string& base_dir = ".") {
    Scenario s;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (std::filesystem::path(base_dir) / fp).string();
    };
    s.name = j.value("name", std::string("scenario"));
    s.tensor_path = resolve(j.at("tensor").get<std::string>());
    s.data_path = resolve(j.at("data").get<std::string>());
    s.nu0 = j.at("nu0").get<std::vector<long long>>();
    auto axes = j.at("domain").at("semi_axes").get<std::vector<double>>();
    s.domain_axes = Eigen::Map<Eigen::VectorXd>(axes.data(), axes.size());
    if (j.contains("tau_list")) s.tau_list = j["tau_list"].get<std::vector<double>>();
    s.samples = j.value("samples", s.samples);
    s.pairs = j.value("pairs", s.pairs);
    s.h_min = j.value("h_min", s.h_min);
    s.route_check_directions = j.value("route_check_directions", s.route_check_directions);
    s.route_delta = j.value("route_delta", s.route_delta);
    s.route_depth_step = j.value("route_depth_step", s.route_depth_step);
    s.cell_cutoff = j.value("cell_cutoff", s.cell_cutoff);
    s.tangential_modes = j.value("tangential_modes", s.tangential_modes);
    s.depth_step = j.value("depth_step", s.depth_step);
    s.strip_depth = j.value("strip_depth", s.strip_depth);
    s.kg = j.value("kg", s.kg);
    s.tolerance = j.value("tolerance", s.tolerance);
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    s.outdir = resolve(j.value("outdir", s.outdir));
    return s;
}

/// Load the referenced files and check the settings; throws validation_error
/// (or propagates file errors) on anything out of range.
inline void validate_scenario(Scenario& s) {
    s.tensor = load_tensor(s.tensor_path);
    s.data = load_data(s.data_path);
    const int d = s.tensor->dim();
    if (s.data->dim() != d) throw validation_error("scenario: data dimension mismatch");
    if (s.data->sys() != s.tensor->sys())
        throw validation_error("scenario: data system size mismatch");
    if ((int)s.nu0.size() != d) throw validation_error("scenario: nu0 dimension mismatch");
    bool nz = false;
    for (long long c : s.nu0) nz = nz || c != 0;
    if (!nz) throw validation_error("scenario: nu0 must be nonzero");
    if ((int)s.domain_axes.size() != d) throw validation_error("scenario: domain dimension mismatch");
    if (s.domain_axes.minCoeff() <= 0) throw validation_error("scenario: semi-axes must be positive");
    for (double tau : s.tau_list)
        if (tau <= 0 || tau >= 1) throw validation_error("scenario: tau must lie in (0,1)");
    if (s.samples < 2 || s.pairs < 1) throw validation_error("scenario: need samples >= 2, pairs >= 1");
    if (s.cell_cutoff < s.tensor->cutoff())
        throw validation_error("scenario: cell_cutoff below the tensor cutoff");
    if (s.kg < 0 || s.tangential_modes < 1) throw validation_error("scenario: bad cutoffs");
    if (s.tolerance <= 0 || s.tolerance >= 1) throw validation_error("scenario: bad tolerance");
    if (s.workers < 1 || s.workers > 256) throw validation_error("scenario: workers out of range");
}

} // namespace bltail
