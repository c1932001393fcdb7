#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "epbolt/diagnostics.hpp"
#include "epbolt/initial_data.hpp"
#include "epbolt/stepper.hpp"

namespace epbolt {

enum class RunMode { full, asymptotic_eps0 };

/// Exit statuses of the experiment runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitIo = 3;

struct RunConfig {
    ExperimentSpec spec{};
    RunMode mode = RunMode::full;
    std::filesystem::path output_dir = "out";
    int snapshot_stride = 1;
    int diagnostics_stride = 1;
    double ref_phi_bar = 0.0;  // modulated energy reference is (u_bar, ref_phi_bar)
    double picard_tol = 1e-7;
    double newton_tol = 1e-15;
    int picard_max_iter = 200;
    std::filesystem::path input_file;  // custom_file kind only

    double solver_epsilon() const {
        return mode == RunMode::asymptotic_eps0 ? 0.0 : spec.epsilon;
    }
    ConstantState reference() const { return ConstantState(spec.u_bar, ref_phi_bar); }

    StepConfig step_config() const {
        StepConfig s;
        s.dt = spec.dt;
        s.picard_rel_tol = picard_tol;
        s.picard_max_iter = picard_max_iter;
        s.poisson_cfg.newton_tol = newton_tol;
        s.newton_tol_momentum = newton_tol;
        return s;
    }

    void validate() const {
        spec.check();
        if (snapshot_stride < 1 || diagnostics_stride < 1) {
            throw std::invalid_argument("strides must be >= 1");
        }
        if (!(picard_tol > 0.0) || !(newton_tol > 0.0)) {
            throw std::invalid_argument("tolerances must be positive");
        }
        if (picard_max_iter < 1) throw std::invalid_argument("picard_max_iter must be >= 1");
        switch (spec.kind) {
            case ExperimentKind::well_prepared:
            case ExperimentKind::ill_prepared:
                if (!(spec.epsilon > 0.0)) {
                    throw std::invalid_argument(
                        "kind=" + std::string(spec.kind == ExperimentKind::well_prepared
                                                  ? "well_prepared"
                                                  : "ill_prepared") +
                        " requires epsilon > 0: the fluctuation wave number is floor(1/epsilon)");
                }
                if (spec.domain_length != 1.0) {
                    throw std::invalid_argument("fluctuation data requires length = 1");
                }
                break;
            case ExperimentKind::five_branch:
                if (std::abs(spec.domain_length - 2.0 * std::numbers::pi) > 1e-12) {
                    throw std::invalid_argument("five_branch requires length = 2*pi");
                }
                break;
            case ExperimentKind::custom_file:
                if (input_file.empty()) {
                    throw std::invalid_argument("custom_file requires input=<csv path>");
                }
                break;
        }
    }
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Applies one key=value setting. Shared between the config-file parser and
/// the command-line flags so both accept the same names. `where` prefixes
/// error messages (file:line or the flag name).
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::string& where, bool& length_given) {
    auto fail = [&](const std::string& msg) { throw ConfigError(where + ": " + msg); };
    auto as_double = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            fail("expected a number for '" + key + "', got '" + v + "'");
            return 0.0;
        }
    };
    auto as_int = [&](const std::string& v) {
        try {
            std::size_t pos = 0;
            const int i = std::stoi(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return i;
        } catch (const std::exception&) {
            fail("expected an integer for '" + key + "', got '" + v + "'");
            return 0;
        }
    };

    if (key == "kind") {
        if (value == "well_prepared") cfg.spec.kind = ExperimentKind::well_prepared;
        else if (value == "ill_prepared") cfg.spec.kind = ExperimentKind::ill_prepared;
        else if (value == "five_branch") cfg.spec.kind = ExperimentKind::five_branch;
        else if (value == "custom_file") cfg.spec.kind = ExperimentKind::custom_file;
        else fail("unknown kind '" + value + "'");
    } else if (key == "epsilon") {
        cfg.spec.epsilon = as_double(value);
    } else if (key == "s") {
        cfg.spec.s_exponent = as_double(value);
    } else if (key == "ubar") {
        cfg.spec.u_bar = as_double(value);
    } else if (key == "ncells") {
        cfg.spec.n_cells = as_int(value);
    } else if (key == "dt") {
        cfg.spec.dt = as_double(value);
    } else if (key == "nsteps") {
        cfg.spec.n_steps = as_int(value);
    } else if (key == "length") {
        cfg.spec.domain_length = as_double(value);
        length_given = true;
    } else if (key == "mode") {
        if (value == "full") cfg.mode = RunMode::full;
        else if (value == "asymptotic_eps0") cfg.mode = RunMode::asymptotic_eps0;
        else fail("unknown mode '" + value + "' (full | asymptotic_eps0)");
    } else if (key == "out") {
        cfg.output_dir = value;
    } else if (key == "snapshot-stride") {
        cfg.snapshot_stride = as_int(value);
    } else if (key == "diag-stride") {
        cfg.diagnostics_stride = as_int(value);
    } else if (key == "picard-tol") {
        cfg.picard_tol = as_double(value);
    } else if (key == "newton-tol") {
        cfg.newton_tol = as_double(value);
    } else if (key == "picard-max-iter") {
        cfg.picard_max_iter = as_int(value);
    } else if (key == "ref-phibar") {
        cfg.ref_phi_bar = as_double(value);
    } else if (key == "input") {
        cfg.input_file = value;
    } else {
        fail("unknown key '" + key + "'");
    }
}

inline void default_length_for_kind(RunConfig& cfg, bool length_given) {
    if (!length_given && cfg.spec.kind == ExperimentKind::five_branch) {
        cfg.spec.domain_length = 2.0 * std::numbers::pi;
    }
}

}  // namespace detail

/// Parses a flat key=value config file. Unknown keys, malformed lines and
/// invariant violations are errors carrying the file name and line number.
/// Lines starting with '#' are comments.
inline RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw detail::ConfigError("cannot open config file " + path.string());
    RunConfig cfg;
    bool length_given = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw detail::ConfigError(where + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        detail::apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where,
                              length_given);
    }
    detail::default_length_for_kind(cfg, length_given);
    return cfg;
}

/// Builds the initial state of a run, honoring the asymptotic mode by
/// solving the eps = 0 potential while the data keeps its epsilon.
inline PlasmaState build_initial_state(const RunConfig& cfg) {
    const double eps = cfg.solver_epsilon();
    switch (cfg.spec.kind) {
        case ExperimentKind::well_prepared:
            return well_prepared(cfg.spec, eps);
        case ExperimentKind::ill_prepared:
            return ill_prepared(cfg.spec, eps);
        case ExperimentKind::five_branch:
            return five_branch(cfg.spec, eps);
        case ExperimentKind::custom_file:
            return from_fields_csv(cfg.spec, cfg.input_file, eps);
    }
    throw std::logic_error("unreachable");
}

struct ExperimentResult {
    int status = kExitOk;
    double e_initial = 0.0;
    double e_final = 0.0;
    int steps_completed = 0;
    std::string error;
};

namespace detail {

inline void write_snapshot(const std::filesystem::path& dir, int step, const PlasmaState& s) {
    std::ofstream out(dir / ("fields_" + std::to_string(step) + ".csv"));
    if (!out) throw std::ios_base::failure("cannot open snapshot file");
    out << "i,x_i,rho_i,x_ip12,u_ip12,phi_i\n";
    for (int i = 0; i < s.grid().n_cells(); ++i) {
        out << i << ',' << fmt17(s.grid().primal_center(i)) << ',' << fmt17(s.rho[i]) << ','
            << fmt17(s.grid().dual_center(i)) << ',' << fmt17(s.u[i]) << ',' << fmt17(s.phi[i])
            << '\n';
    }
    if (!out) throw std::ios_base::failure("snapshot write failed");
}

}  // namespace detail

/// Runs one experiment: builds the initial state, drives the time loop and
/// writes diagnostics.csv plus periodic field snapshots into output_dir.
/// Solver failures flush partial output and yield status 2, I/O failures
/// status 3.
inline ExperimentResult run_experiment(const RunConfig& cfg, std::ostream& err = std::cerr) {
    ExperimentResult result;
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        result.status = kExitConfig;
        result.error = e.what();
        err << "config error: " << e.what() << "\n";
        return result;
    }

    std::ofstream diag;
    try {
        std::filesystem::create_directories(cfg.output_dir);
        diag.open(cfg.output_dir / "diagnostics.csv");
        if (!diag) throw std::ios_base::failure("cannot open diagnostics.csv");
        diag << "step,time,mass,momentum,total_energy,modulated_energy,tau,picard_iters,"
                "min_rho,max_rho\n";
    } catch (const std::exception& e) {
        result.status = kExitIo;
        result.error = e.what();
        err << "i/o error: " << e.what() << "\n";
        return result;
    }

    try {
        PlasmaState state = build_initial_state(cfg);
        const FluxScheme scheme = FluxScheme::for_grid(state.grid());
        const ConstantState ref = cfg.reference();
        result.e_initial = modulated_energy(state, ref);

        detail::write_snapshot(cfg.output_dir, 0, state);

        Stepper stepper(scheme, cfg.step_config());
        PlasmaState prev = state;
        for (int s = 1; s <= cfg.spec.n_steps; ++s) {
            int iters = 0;
            try {
                auto [next, its] = stepper.advance(state);
                iters = its;
                prev = std::move(state);
                state = std::move(next);
            } catch (const ConvergenceError& e) {
                throw StepError(s, e.what());
            }
            result.steps_completed = s;
            if (s % cfg.diagnostics_stride == 0 || s == cfg.spec.n_steps) {
                const DiagnosticsRecord r =
                    make_record(scheme, prev, state, cfg.spec.dt, ref, s, iters);
                diag << r.step << ',' << detail::fmt17(r.time) << ',' << detail::fmt17(r.mass)
                     << ',' << detail::fmt17(r.momentum) << ',' << detail::fmt17(r.total_energy)
                     << ',' << detail::fmt17(r.modulated_energy) << ',' << detail::fmt17(r.tau)
                     << ',' << r.picard_iters << ',' << detail::fmt17(r.min_rho) << ','
                     << detail::fmt17(r.max_rho) << '\n';
                if (!diag) throw std::ios_base::failure("diagnostics write failed");
            }
            if (s % cfg.snapshot_stride == 0 || s == cfg.spec.n_steps) {
                detail::write_snapshot(cfg.output_dir, s, state);
            }
        }
        result.e_final = cfg.spec.n_steps == 0 ? result.e_initial : modulated_energy(state, ref);
        diag.flush();
    } catch (const StepError& e) {
        diag.flush();
        result.status = kExitSolver;
        result.error = e.what();
        err << "solver failure: " << e.what() << "\n";
        return result;
    } catch (const std::ios_base::failure& e) {
        result.status = kExitIo;
        result.error = e.what();
        err << "i/o error: " << e.what() << "\n";
        return result;
    } catch (const std::exception& e) {
        diag.flush();
        result.status = kExitSolver;
        result.error = e.what();
        err << "error: " << e.what() << "\n";
        return result;
    }
    return result;
}

struct SweepRow {
    double epsilon = 0.0;
    ExperimentResult result;
};

inline int sweep_thread_count(int rows) {
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (const char* env = std::getenv("EPBOLT_THREADS")) {
        try {
            threads = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            threads = 1;
        }
    }
    return std::min(threads, std::max(rows, 1));
}

/// Runs one experiment per epsilon concurrently (pool bounded by
/// EPBOLT_THREADS) and writes sweep.csv with one row per epsilon. A failed
/// run marks its row with nan energies; the other rows proceed.
inline std::vector<SweepRow> sweep(const RunConfig& templ, const std::vector<double>& epsilons,
                                   std::ostream& err = std::cerr) {
    std::vector<SweepRow> rows(epsilons.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= epsilons.size()) return;
            RunConfig cfg = templ;
            cfg.spec.epsilon = epsilons[j];
            std::ostringstream name;
            name << "eps_" << epsilons[j];
            cfg.output_dir = templ.output_dir / name.str();
            std::ostringstream local_err;
            rows[j].epsilon = epsilons[j];
            rows[j].result = run_experiment(cfg, local_err);
            if (!local_err.str().empty()) {
                std::scoped_lock lock(err_mutex);
                err << local_err.str();
            }
        }
    };

    const int threads = sweep_thread_count(static_cast<int>(epsilons.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return rows;
}

/// Writes the sweep summary table (epsilon, E_final, E_initial). Returns
/// kExitOk when every row succeeded, kExitSolver otherwise.
inline int write_sweep_csv(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "sweep.csv");
    if (!out) return kExitIo;
    out << "epsilon,E_final,E_initial\n";
    int status = kExitOk;
    for (const auto& row : rows) {
        if (row.result.status == kExitOk) {
            out << detail::fmt17(row.epsilon) << ',' << detail::fmt17(row.result.e_final) << ','
                << detail::fmt17(row.result.e_initial) << '\n';
        } else {
            out << detail::fmt17(row.epsilon) << ",nan,nan\n";
            status = kExitSolver;
        }
    }
    return out ? status : kExitIo;
}

}  // namespace epbolt
