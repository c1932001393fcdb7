// Experiment runner for the Euler-Poisson-Boltzmann solver.
//
//   epbolt run  [config.txt] [flags...]   one experiment
//   epbolt sweep [config.txt] [flags...] --epsilons 0.1,0.01,...
//                                         one run per epsilon, concurrently
//
// Configuration comes from an optional flat key=value file and from flags;
// a flag wins over the file. EPBOLT_THREADS bounds the sweep worker pool.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epbolt/epbolt.hpp"

namespace {

struct FlagValues {
    std::optional<std::string> kind, mode, out, input;
    std::optional<double> epsilon, s, ubar, dt, length, picard_tol, newton_tol, ref_phibar;
    std::optional<int> ncells, nsteps, snapshot_stride, diag_stride, picard_max_iter;
};

void add_common_flags(CLI::App* cmd, std::string& config_file, FlagValues& f) {
    cmd->add_option("config", config_file, "flat key=value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--kind", f.kind, "well_prepared | ill_prepared | five_branch | custom_file");
    cmd->add_option("--epsilon", f.epsilon, "Debye length");
    cmd->add_option("--s", f.s, "density fluctuation exponent (well_prepared)");
    cmd->add_option("--ubar", f.ubar, "background velocity");
    cmd->add_option("--ncells", f.ncells, "number of cells");
    cmd->add_option("--dt", f.dt, "time step");
    cmd->add_option("--nsteps", f.nsteps, "number of steps");
    cmd->add_option("--length", f.length, "domain length (default 1; 2*pi for five_branch)");
    cmd->add_option("--mode", f.mode, "full | asymptotic_eps0");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--snapshot-stride", f.snapshot_stride, "write fields every k steps");
    cmd->add_option("--diag-stride", f.diag_stride, "write diagnostics every k steps");
    cmd->add_option("--picard-tol", f.picard_tol, "fixed-point relative tolerance");
    cmd->add_option("--newton-tol", f.newton_tol, "Newton residual tolerance");
    cmd->add_option("--picard-max-iter", f.picard_max_iter, "fixed-point iteration cap");
    cmd->add_option("--ref-phibar", f.ref_phibar, "reference potential for the modulated energy");
    cmd->add_option("--input", f.input, "initial fields CSV (custom_file kind)");
}

int apply_flags(epbolt::RunConfig& cfg, const FlagValues& f) {
    bool length_given = false;
    auto set = [&](const char* key, const std::string& value) {
        epbolt::detail::apply_setting(cfg, key, value, std::string("--") + key, length_given);
    };
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    try {
        if (f.kind) set("kind", *f.kind);
        if (f.epsilon) set("epsilon", num(*f.epsilon));
        if (f.s) set("s", num(*f.s));
        if (f.ubar) set("ubar", num(*f.ubar));
        if (f.ncells) set("ncells", std::to_string(*f.ncells));
        if (f.dt) set("dt", num(*f.dt));
        if (f.nsteps) set("nsteps", std::to_string(*f.nsteps));
        if (f.length) set("length", num(*f.length));
        if (f.mode) set("mode", *f.mode);
        if (f.out) set("out", *f.out);
        if (f.snapshot_stride) set("snapshot-stride", std::to_string(*f.snapshot_stride));
        if (f.diag_stride) set("diag-stride", std::to_string(*f.diag_stride));
        if (f.picard_tol) set("picard-tol", num(*f.picard_tol));
        if (f.newton_tol) set("newton-tol", num(*f.newton_tol));
        if (f.picard_max_iter) set("picard-max-iter", std::to_string(*f.picard_max_iter));
        if (f.ref_phibar) set("ref-phibar", num(*f.ref_phibar));
        if (f.input) set("input", *f.input);
        if (!f.length && cfg.spec.kind == epbolt::ExperimentKind::five_branch) {
            // keep a file-provided length; otherwise the kind's natural default
            epbolt::detail::default_length_for_kind(cfg, length_given);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return epbolt::kExitConfig;
    }
    return epbolt::kExitOk;
}

int load_config(const std::string& config_file, const FlagValues& flags,
                epbolt::RunConfig& cfg) {
    try {
        if (!config_file.empty()) {
            cfg = epbolt::parse_config_file(config_file);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return epbolt::kExitConfig;
    }
    return apply_flags(cfg, flags);
}

std::vector<double> parse_epsilon_list(const std::string& list) {
    std::vector<double> out;
    std::istringstream is(list);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"implicit Euler-Poisson-Boltzmann solver on the 1-D torus"};
    app.require_subcommand(1);

    std::string run_config_file, sweep_config_file, epsilons_arg;
    FlagValues run_flags, sweep_flags;

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common_flags(run_cmd, run_config_file, run_flags);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run one experiment per epsilon");
    add_common_flags(sweep_cmd, sweep_config_file, sweep_flags);
    sweep_cmd->add_option("--epsilons", epsilons_arg, "comma-separated epsilon list")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        epbolt::RunConfig cfg;
        if (int rc = load_config(run_config_file, run_flags, cfg); rc != epbolt::kExitOk) {
            return rc;
        }
        const epbolt::ExperimentResult res = epbolt::run_experiment(cfg);
        if (res.status == epbolt::kExitOk) {
            std::cout << "completed " << res.steps_completed << " steps; E_initial="
                      << epbolt::detail::fmt17(res.e_initial)
                      << " E_final=" << epbolt::detail::fmt17(res.e_final) << "\n";
        }
        return res.status;
    }

    // sweep
    epbolt::RunConfig cfg;
    if (int rc = load_config(sweep_config_file, sweep_flags, cfg); rc != epbolt::kExitOk) {
        return rc;
    }
    std::vector<double> epsilons;
    try {
        epsilons = parse_epsilon_list(epsilons_arg);
    } catch (const std::exception&) {
        std::cerr << "config error: --epsilons expects comma-separated numbers\n";
        return epbolt::kExitConfig;
    }
    const auto rows = epbolt::sweep(cfg, epsilons);
    const int status = epbolt::write_sweep_csv(cfg.output_dir, rows);
    for (const auto& row : rows) {
        std::cout << "epsilon=" << row.epsilon;
        if (row.result.status == epbolt::kExitOk) {
            std::cout << " E_initial=" << epbolt::detail::fmt17(row.result.e_initial)
                      << " E_final=" << epbolt::detail::fmt17(row.result.e_final) << "\n";
        } else {
            std::cout << " FAILED: " << row.result.error << "\n";
        }
    }
    return status;
}
