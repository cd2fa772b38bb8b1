#include "bsee/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "bsee/error_norms.hpp"
#include "bsee/errors.hpp"
#include "bsee/lq_control.hpp"
#include "bsee/reference_solutions.hpp"

namespace bsee {

namespace {

using nlohmann::json;

// --- config parsing ---------------------------------------------------------

template <typename T>
T get(const json& node, const char* key, const std::string& path, T fallback) {
    if (!node.contains(key)) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

void reject_unknown(const json& node, const std::string& path, std::initializer_list<const char*> known) {
    for (const auto& [key, value] : node.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

std::string coefficient_text(const json& value, const std::string& path) {
    if (value.is_number()) {
        std::ostringstream s;
        s << value.get<double>();
        return s.str();
    }
    if (value.is_string()) return value.get<std::string>();
    throw ConfigError(path + ": coefficient must be a number or a preset name");
}

RateTarget parse_rate_target(const std::string& name) {
    if (name == "combined") return RateTarget::combined;
    if (name == "p") return RateTarget::p;
    if (name == "z") return RateTarget::z;
    throw ConfigError("rate_of must be combined, p or z; got '" + name + "'");
}

std::string to_string(RateTarget t) {
    switch (t) {
        case RateTarget::combined: return "combined";
        case RateTarget::p: return "p";
        case RateTarget::z: return "z";
    }
    return "combined";
}

double rate_value(const CellResult& c, RateTarget t) {
    switch (t) {
        case RateTarget::p: return c.err_p;
        case RateTarget::z: return c.err_z;
        default: return c.err_p + c.err_z;
    }
}

// --- execution --------------------------------------------------------------

// Runs tasks[i] for every i on `threads` workers; rethrows the first failure in index order.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> failures(count);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
}

// Same exception type, message prefixed with the failing cell.
[[noreturn]] void rethrow_in_cell(const std::string& cell) {
    try {
        throw;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(cell + ": " + e.what(), e.residuals());
    } catch (const PreconditionError& e) {
        throw PreconditionError(cell + ": " + e.what());
    } catch (const BackendError& e) {
        throw BackendError(cell + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(cell + ": " + e.what());
    } catch (const StructuralError& e) {
        throw StructuralError(cell + ": " + e.what());
    } catch (...) {
        throw;
    }
}

std::string cell_name(const std::string& id, int scheme, long J) {
    return "cell (case " + id + ", scheme " + std::to_string(scheme) + ", J " + std::to_string(J) + ")";
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void finish_report(SchemeReport& r, const ExperimentConfig& config) {
    std::vector<double> tau, err;
    for (const CellResult& c : r.cells) {
        tau.push_back(c.tau);
        err.push_back(rate_value(c, config.rate_of));
    }
    r.asymptotic_from = asymptotic_start(err);
    if (err.size() - r.asymptotic_from < 2) {
        r.reason = "insufficient asymptotic points";
        r.pass = false;
        return;
    }
    for (double e : err)
        if (!(e > 0.0)) {
            r.reason = "nonpositive error";
            return;
        }
    const auto from = static_cast<long>(r.asymptotic_from);
    r.fit = fit_rate({tau.begin() + from, tau.end()}, {err.begin() + from, err.end()});
    std::ostringstream why;
    r.pass = true;
    if (r.fit->slope < config.thresholds.min_rate) {
        r.pass = false;
        why << "slope " << r.fit->slope << " below " << config.thresholds.min_rate << "; ";
    }
    if (err.back() > config.thresholds.max_error) {
        r.pass = false;
        why << "finest error " << err.back() << " above " << config.thresholds.max_error << "; ";
    }
    r.reason = r.pass ? "ok" : why.str();
}

ExperimentReport run_bsee(const ExperimentConfig& config, const StochasticBackend& backend,
                          const RunSettings& settings) {
    const ReferenceCase reference = get_case(config.case_id);
    const Operator op = config.op.build();
    const FieldMatrix terminal = reference.terminal(backend, config.horizon, op.mode_count());
    const auto problem_on = [&](long J) {
        return BseeProblem{op, TimeGrid(config.horizon, J), terminal, reference.driver, config.quadrature};
    };

    ExperimentReport report;
    report.config = config;
    const bool exact = reference.exact.has_value();
    report.reference_J = exact ? 0 : reference.reference_factor * config.J.back();

    const std::size_t nS = config.schemes.size(), nJ = config.J.size();
    std::vector<BseeSolution> references(exact ? 0 : nS);
    if (!exact)
        parallel_for(nS, settings.threads, [&](std::size_t s) {
            const int scheme = config.schemes[s];
            try {
                references[s] = solve_scheme(scheme, problem_on(report.reference_J), backend, config.substeps,
                                             config.fixed_point);
            } catch (const Error&) {
                rethrow_in_cell(cell_name(config.case_id, scheme, report.reference_J) + " [reference]");
            }
        });

    std::vector<CellResult> cells(nS * nJ);
    parallel_for(cells.size(), settings.threads, [&](std::size_t k) {
        const std::size_t s = k / nJ, i = k % nJ;
        const int scheme = config.schemes[s];
        const long J = config.J[i];
        CellResult& c = cells[k];
        c.case_id = config.case_id;
        c.scheme = scheme;
        c.backend = backend.name();
        c.J = J;
        c.tau = config.horizon / static_cast<double>(J);
        try {
            const BseeProblem prob = problem_on(J);
            const auto start = std::chrono::steady_clock::now();
            const BseeSolution sol = solve_scheme(scheme, prob, backend, config.substeps, config.fixed_point);
            c.wall_ms = settings.timing ? elapsed_ms(start) : 0.0;
            c.fp_iters_max = sol.fp_iterations_max();
            if (exact) {
                c.err_p = error_p_max(reference, op, sol.P, backend);
                c.err_z = error_z(reference, op, sol.Z, backend);
                c.gap = projection_gap(reference, op, prob.grid);
            } else {
                c.err_p = node_distance_max(references[s].P, sol.P, backend);
                c.err_z = process_distance(references[s].Z, sol.Z, backend);
            }
        } catch (const Error&) {
            rethrow_in_cell(cell_name(config.case_id, scheme, J));
        }
    });

    for (std::size_t s = 0; s < nS; ++s) {
        SchemeReport r;
        r.scheme = config.schemes[s];
        r.cells.assign(cells.begin() + static_cast<long>(s * nJ), cells.begin() + static_cast<long>((s + 1) * nJ));
        finish_report(r, config);
        report.schemes.push_back(std::move(r));
    }
    return report;
}

ExperimentReport run_lq(const ExperimentConfig& config, const StochasticBackend& backend,
                        const RunSettings& settings) {
    const Operator op = config.op.build();
    const MarkovFunction target = lq_target(config.lq.target, op.mode_count());
    const auto problem_on = [&](long J) {
        const TimeGrid grid(config.horizon, J);
        return LQProblem{op, grid, config.lq.coeffs, config.lq.nu, target_from_function(backend, grid, target),
                         config.quadrature};
    };
    LQOptions options;
    options.tol = config.lq.tol;

    ExperimentReport report;
    report.config = config;
    report.reference_J = 4 * config.J.back();
    const std::string id = "LQ";
    LQSolution reference;
    try {
        reference = solve_lq(problem_on(report.reference_J), backend, options);
    } catch (const Error&) {
        rethrow_in_cell(cell_name(id, 0, report.reference_J) + " [reference]");
    }

    std::vector<CellResult> cells(config.J.size());
    parallel_for(cells.size(), settings.threads, [&](std::size_t i) {
        CellResult& c = cells[i];
        c.case_id = id;
        c.backend = backend.name();
        c.J = config.J[i];
        c.tau = config.horizon / static_cast<double>(c.J);
        try {
            const auto start = std::chrono::steady_clock::now();
            const LQSolution sol = solve_lq(problem_on(c.J), backend, options);
            c.wall_ms = settings.timing ? elapsed_ms(start) : 0.0;
            c.fp_iters_max = static_cast<int>(sol.residual_history.size()) - 1;
            c.err_p = process_distance(reference.U, sol.U, backend);
        } catch (const Error&) {
            rethrow_in_cell(cell_name(id, 0, c.J));
        }
    });
    SchemeReport r;
    r.cells = std::move(cells);
    ExperimentConfig fit_config = config;
    fit_config.rate_of = RateTarget::p;
    finish_report(r, fit_config);
    report.schemes.push_back(std::move(r));
    return report;
}

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

Operator OperatorSpec::build() const {
    if (!eigenvalues.empty()) return Operator{Eigen::Map<const Vector>(eigenvalues.data(), static_cast<Eigen::Index>(eigenvalues.size()))};
    if (preset == "laplacian_1d") return Operator::laplacian_1d(static_cast<std::size_t>(modes), diffusivity);
    throw ConfigError("unknown operator preset '" + preset + "'");
}

nlohmann::json ExperimentConfig::echo() const {
    json op_json = {{"preset", op.preset}, {"modes", op.modes}, {"diffusivity", op.diffusivity}};
    if (!op.eigenvalues.empty()) op_json["eigenvalues"] = op.eigenvalues;
    json backend_json = {{"kind", backend.kind}};
    if (backend.kind == "lattice")
        backend_json.update({{"nodes", backend.lattice.nodes},
                             {"extent", backend.lattice.extent},
                             {"gh_order", backend.lattice.gh_order},
                             {"interpolation", to_string(backend.lattice.interpolation)}});
    else
        backend_json.update({{"paths", backend.regression.paths},
                             {"degree", backend.regression.degree},
                             {"seed", backend.regression.seed},
                             {"time_steps", backend.regression.time_steps}});
    json out = {{"name", name},
                {"kind", kind == ExperimentKind::bsee ? "bsee" : "lq"},
                {"horizon", horizon},
                {"J", J},
                {"quadrature", quadrature},
                {"operator", op_json},
                {"backend", backend_json},
                {"thresholds",
                 {{"min_rate", thresholds.min_rate},
                  {"max_error", std::isfinite(thresholds.max_error) ? json(thresholds.max_error) : json(nullptr)}}}};
    if (kind == ExperimentKind::bsee) {
        out.update({{"case", case_id},
                    {"schemes", schemes},
                    {"substeps", substeps},
                    {"rate_of", to_string(rate_of)},
                    {"fixed_point", {{"tol", fixed_point.fp_tol}, {"max_iterations", fixed_point.fp_max_iterations}}}});
    } else {
        out["lq"] = {{"nu", lq.nu},
                     {"alpha0", lq.coeff_names[0]},
                     {"alpha1", lq.coeff_names[1]},
                     {"alpha2", lq.coeff_names[2]},
                     {"alpha3", lq.coeff_names[3]},
                     {"target", lq.target},
                     {"tol", lq.tol}};
    }
    return out;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(doc, "config",
                   {"name", "kind", "case", "scheme", "schemes", "substeps", "quadrature", "horizon", "J", "operator",
                    "backend", "rate_of", "thresholds", "fixed_point", "lq", "seed"});
    ExperimentConfig c;
    c.name = get<std::string>(doc, "name", "config", c.name);
    if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("config.name must be a plain file stem");
    const std::string kind = get<std::string>(doc, "kind", "config", "bsee");
    if (kind == "bsee")
        c.kind = ExperimentKind::bsee;
    else if (kind == "lq")
        c.kind = ExperimentKind::lq;
    else
        throw ConfigError("config.kind must be bsee or lq");

    c.horizon = get<double>(doc, "horizon", "config", c.horizon);
    if (!(c.horizon > 0.0)) throw ConfigError("config.horizon must be positive");
    c.quadrature = get<int>(doc, "quadrature", "config", c.quadrature);
    if (c.quadrature < 1) throw ConfigError("config.quadrature must be at least 1");

    c.J = get<std::vector<long>>(doc, "J", "config", {});
    if (c.J.empty()) throw ConfigError("config.J must list at least one step count");
    for (std::size_t i = 0; i < c.J.size(); ++i) {
        if (c.J[i] < 1) throw ConfigError("config.J entries must be positive");
        if (i > 0 && (c.J[i] <= c.J[i - 1] || c.J[i] % c.J[i - 1] != 0))
            throw ConfigError("config.J must be strictly increasing with each entry a multiple of the previous (got " +
                              std::to_string(c.J[i - 1]) + " then " + std::to_string(c.J[i]) + ")");
    }

    if (doc.contains("operator")) {
        const json& o = doc.at("operator");
        reject_unknown(o, "config.operator", {"preset", "modes", "diffusivity", "eigenvalues"});
        c.op.preset = get<std::string>(o, "preset", "config.operator", c.op.preset);
        c.op.modes = get<long>(o, "modes", "config.operator", c.op.modes);
        c.op.diffusivity = get<double>(o, "diffusivity", "config.operator", c.op.diffusivity);
        c.op.eigenvalues = get<std::vector<double>>(o, "eigenvalues", "config.operator", {});
        if (c.op.modes < 1) throw ConfigError("config.operator.modes must be positive");
        if (!c.op.eigenvalues.empty()) c.op.modes = static_cast<long>(c.op.eigenvalues.size());
        try {
            c.op.build();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("config.operator: ") + e.what());
        }
    }

    if (doc.contains("backend")) {
        const json& b = doc.at("backend");
        reject_unknown(b, "config.backend",
                       {"kind", "nodes", "extent", "gh_order", "interpolation", "paths", "degree", "seed"});
        c.backend.kind = get<std::string>(b, "kind", "config.backend", c.backend.kind);
        if (c.backend.kind != "lattice" && c.backend.kind != "regression")
            throw ConfigError("config.backend.kind must be lattice or regression");
        auto& lat = c.backend.lattice;
        lat.nodes = get<long>(b, "nodes", "config.backend", lat.nodes);
        lat.extent = get<double>(b, "extent", "config.backend", lat.extent);
        lat.gh_order = get<int>(b, "gh_order", "config.backend", lat.gh_order);
        lat.interpolation = parse_interpolation(get<std::string>(b, "interpolation", "config.backend", "cubic"));
        auto& reg = c.backend.regression;
        reg.paths = get<long>(b, "paths", "config.backend", reg.paths);
        reg.degree = get<int>(b, "degree", "config.backend", reg.degree);
        reg.seed = get<std::uint64_t>(b, "seed", "config.backend", reg.seed);
    }
    c.backend.regression.seed = get<std::uint64_t>(doc, "seed", "config", c.backend.regression.seed);

    if (doc.contains("thresholds")) {
        const json& t = doc.at("thresholds");
        reject_unknown(t, "config.thresholds", {"min_rate", "max_error"});
        c.thresholds.min_rate = get<double>(t, "min_rate", "config.thresholds", c.thresholds.min_rate);
        c.thresholds.max_error = get<double>(t, "max_error", "config.thresholds", c.thresholds.max_error);
    }

    if (c.kind == ExperimentKind::bsee) {
        if (doc.contains("lq")) throw ConfigError("config.lq is only valid with kind lq");
        c.case_id = get<std::string>(doc, "case", "config", "");
        if (c.case_id.empty()) throw ConfigError("config.case is required");
        get_case(c.case_id);
        if (doc.contains("scheme") && doc.contains("schemes")) throw ConfigError("config: give scheme or schemes, not both");
        if (doc.contains("scheme")) c.schemes = {get<int>(doc, "scheme", "config", 1)};
        if (doc.contains("schemes")) c.schemes = get<std::vector<int>>(doc, "schemes", "config", {});
        if (c.schemes.empty()) throw ConfigError("config.schemes must not be empty");
        for (int s : c.schemes)
            if (s < 1 || s > 3) throw ConfigError("config.schemes entries must be 1, 2 or 3");
        c.substeps = get<long>(doc, "substeps", "config", c.substeps);
        if (c.substeps < 1) throw ConfigError("config.substeps must be positive");
        c.rate_of = parse_rate_target(get<std::string>(doc, "rate_of", "config", "combined"));
        if (doc.contains("fixed_point")) {
            const json& f = doc.at("fixed_point");
            reject_unknown(f, "config.fixed_point", {"tol", "max_iterations"});
            c.fixed_point.fp_tol = get<double>(f, "tol", "config.fixed_point", c.fixed_point.fp_tol);
            c.fixed_point.fp_max_iterations =
                get<int>(f, "max_iterations", "config.fixed_point", c.fixed_point.fp_max_iterations);
        }
    } else {
        for (const char* key : {"case", "scheme", "schemes", "substeps", "rate_of", "fixed_point"})
            if (doc.contains(key)) throw ConfigError(std::string("config.") + key + " is not valid with kind lq");
        c.backend.lattice.interpolation = Interpolation::linear;
        if (doc.contains("backend") && doc.at("backend").contains("interpolation") &&
            doc.at("backend").at("interpolation") != "linear")
            throw ConfigError("config.backend.interpolation must be linear for kind lq");
        if (doc.contains("lq")) {
            const json& l = doc.at("lq");
            reject_unknown(l, "config.lq", {"nu", "alpha0", "alpha1", "alpha2", "alpha3", "target", "tol"});
            c.lq.nu = get<double>(l, "nu", "config.lq", c.lq.nu);
            if (!(c.lq.nu > 0.0)) throw ConfigError("config.lq.nu must be positive");
            Coefficient* slots[] = {&c.lq.coeffs.alpha0, &c.lq.coeffs.alpha1, &c.lq.coeffs.alpha2,
                                    &c.lq.coeffs.alpha3};
            const char* keys[] = {"alpha0", "alpha1", "alpha2", "alpha3"};
            for (int k = 0; k < 4; ++k)
                if (l.contains(keys[k])) {
                    c.lq.coeff_names[k] = coefficient_text(l.at(keys[k]), std::string("config.lq.") + keys[k]);
                    *slots[k] = Coefficient::parse(c.lq.coeff_names[k]);
                }
            c.lq.target = get<std::string>(l, "target", "config.lq", c.lq.target);
            lq_target(c.lq.target, 1);
            c.lq.tol = get<double>(l, "tol", "config.lq", c.lq.tol);
        }
    }
    c.backend.lattice.horizon = c.horizon;
    c.backend.regression.horizon = c.horizon;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

std::unique_ptr<StochasticBackend> make_backend(const ExperimentConfig& config) {
    try {
        if (config.backend.kind == "lattice") return std::make_unique<LatticeBackend>(config.backend.lattice);
        RegressionOptions opts = config.backend.regression;
        // Path resolution must contain every grid the run touches, the reference grid included.
        long finest = config.J.back() * config.substeps;
        if (config.kind == ExperimentKind::lq)
            finest = 4 * config.J.back() * 16;  // target midpoints of 8 substeps
        else if (!get_case(config.case_id).exact)
            finest *= get_case(config.case_id).reference_factor;
        opts.time_steps = finest;
        return std::make_unique<RegressionBackend>(opts);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config.backend: ") + e.what());
    }
}

MarkovFunction lq_target(const std::string& id, Eigen::Index modes) {
    Eigen::RowVectorXd w(modes);
    for (Eigen::Index m = 0; m < modes; ++m) w[m] = 1.0 / static_cast<double>((m + 1) * (m + 1));
    if (id == "cos_markov") return [w](double t, double x) -> Eigen::RowVectorXd { return (1.0 + t) * std::cos(x) * w; };
    if (id == "sin_deterministic")
        return [w](double t, double) -> Eigen::RowVectorXd { return std::sin(3.0 * t) * w; };
    throw ConfigError("unknown LQ target '" + id + "' (expected cos_markov or sin_deterministic)");
}

bool ExperimentReport::pass() const {
    if (schemes.empty()) return false;
    for (const SchemeReport& s : schemes)
        if (!s.pass) return false;
    return true;
}

ExperimentReport run_experiment(ExperimentConfig config, const RunSettings& settings) {
    if (settings.seed) config.backend.regression.seed = *settings.seed;
    const auto backend = make_backend(config);
    return config.kind == ExperimentKind::bsee ? run_bsee(config, *backend, settings)
                                               : run_lq(config, *backend, settings);
}

void write_csv(std::ostream& out, const ExperimentReport& report) {
    if (report.config.kind == ExperimentKind::lq) {
        out << "case,backend,J,tau,errU,cg_iters,wall_ms\n";
        for (const SchemeReport& s : report.schemes)
            for (const CellResult& c : s.cells)
                out << c.case_id << ',' << c.backend << ',' << c.J << ',' << format_double(c.tau) << ','
                    << format_double(c.err_p) << ',' << c.fp_iters_max << ',' << format_double(c.wall_ms) << '\n';
        return;
    }
    out << "case,scheme,backend,J,tau,errP_inf,errZ,fp_iters_max,wall_ms\n";
    for (const SchemeReport& s : report.schemes)
        for (const CellResult& c : s.cells)
            out << c.case_id << ',' << c.scheme << ',' << c.backend << ',' << c.J << ',' << format_double(c.tau)
                << ',' << format_double(c.err_p) << ',' << format_double(c.err_z) << ',' << c.fp_iters_max << ','
                << format_double(c.wall_ms) << '\n';
}

json summary_json(const ExperimentReport& report) {
    json schemes = json::array();
    for (const SchemeReport& s : report.schemes) {
        json cells = json::array();
        for (const CellResult& c : s.cells) {
            json cell = {{"J", c.J}, {"tau", c.tau}, {"errP_inf", c.err_p}, {"errZ", c.err_z}};
            if (std::isfinite(c.gap)) cell["projection_gap"] = c.gap;
            cells.push_back(cell);
        }
        json entry = {{"scheme", s.scheme},
                      {"cells", cells},
                      {"asymptotic_from_J", s.cells.empty() ? 0 : s.cells[s.asymptotic_from].J},
                      {"pass", s.pass},
                      {"reason", s.reason}};
        if (s.fit)
            entry["fit"] = {{"slope", s.fit->slope}, {"intercept", s.fit->intercept}, {"r2", s.fit->r2},
                            {"points", s.fit->points}};
        // Two-term check errZ <= C (tau^{1/2} + gap): the smallest C that works over the J list.
        double constant = 0.0;
        bool have_gap = false;
        for (const CellResult& c : s.cells)
            if (std::isfinite(c.gap)) {
                have_gap = true;
                constant = std::max(constant, c.err_z / (std::sqrt(c.tau) + c.gap));
            }
        if (have_gap) entry["two_term_constant"] = constant;
        schemes.push_back(entry);
    }
    return {{"config", report.config.echo()},
            {"reference_J", report.reference_J},
            {"schemes", schemes},
            {"pass", report.pass()}};
}

json fit_csv(std::istream& in, RateTarget target) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("fit: empty CSV");
    if (line != "case,scheme,backend,J,tau,errP_inf,errZ,fp_iters_max,wall_ms")
        throw ConfigError("fit: unexpected CSV header '" + line + "'");
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 9) throw ConfigError("fit: row " + std::to_string(row) + " has " + std::to_string(f.size()) + " fields");
        CellResult c;
        try {
            c.tau = std::stod(f[4]);
            c.err_p = std::stod(f[5]);
            c.err_z = std::stod(f[6]);
        } catch (const std::exception&) {
            throw ConfigError("fit: row " + std::to_string(row) + " has a malformed number");
        }
        auto& g = groups[f[0] + "," + f[1] + "," + f[2]];
        g.first.push_back(c.tau);
        g.second.push_back(rate_value(c, target));
    }
    json out = json::array();
    for (auto& [key, g] : groups) {
        json entry = {{"group", key}};
        const std::size_t from = asymptotic_start(g.second);
        if (g.second.size() - from < 2) {
            entry["status"] = "insufficient points";
        } else {
            const auto k = static_cast<long>(from);
            const RateFit fit = fit_rate({g.first.begin() + k, g.first.end()}, {g.second.begin() + k, g.second.end()});
            entry.update({{"status", "ok"}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2},
                          {"points", fit.points}});
        }
        out.push_back(entry);
    }
    return out;
}

int run_command(const std::string& config_path, const std::string& out_dir, const RunSettings& settings,
                std::ostream& log) {
    ExperimentConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    }
    ExperimentReport report;
    try {
        report = run_experiment(config, settings);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const Error& e) {
        log << "solver error: " << e.what() << '\n';
        return exit_solver;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::filesystem::path base = std::filesystem::path(out_dir) / config.name;
    std::ofstream csv(base.string() + ".csv");
    std::ofstream summary(base.string() + ".json");
    if (!csv || !summary) {
        log << "cannot write reports under " << out_dir << '\n';
        return exit_config;
    }
    write_csv(csv, report);
    summary << summary_json(report).dump(2) << '\n';
    for (const SchemeReport& s : report.schemes) {
        log << config.name << (config.kind == ExperimentKind::lq ? std::string(" control") : " scheme " + std::to_string(s.scheme)) << ": ";
        if (s.fit) log << "slope " << std::setprecision(4) << s.fit->slope << ", ";
        log << (s.pass ? "pass" : "FAIL") << " (" << s.reason << ")\n";
    }
    return report.pass() ? exit_pass : exit_threshold;
}

}  // namespace bsee
