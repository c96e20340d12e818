// mhd2d: run, verify, compare and sweep compressible non-resistive MHD simulations.
#include "mhd/mhd.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"2D compressible viscous non-resistive MHD solver with inflow/outflow boundaries"};
    app.require_subcommand(1);

    std::string config, out_dir, dir_a, dir_b;
    bool vtk = false, quiet = false;
    std::vector<double> eps_list, delta_list;

    auto* run = app.add_subcommand("run", "run a configuration and write a trajectory directory");
    run->add_option("config", config, "configuration file")->required();
    run->add_option("-o,--out", out_dir, "output directory")->required();
    run->add_flag("--vtk", vtk, "also write legacy VTK snapshots");
    run->add_flag("-q,--quiet", quiet, "do not print the report");

    auto* verify = app.add_subcommand("verify", "re-check the invariants of a trajectory directory");
    verify->add_option("dir", dir_a, "trajectory directory")->required();

    auto* compare = app.add_subcommand("compare", "relative energy of two trajectories and Gronwall fit");
    compare->add_option("run", dir_a, "trajectory directory")->required();
    compare->add_option("reference", dir_b, "reference trajectory directory")->required();

    auto* sweep = app.add_subcommand("sweep", "continuation family over eps and delta");
    sweep->add_option("config", config, "configuration file")->required();
    sweep->add_option("--eps", eps_list, "descending eps values")->required();
    sweep->add_option("--delta", delta_list, "descending delta values (default: the configured delta)");
    sweep->add_option("-o,--out", out_dir, "directory for sweep.txt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : mhd::exit_usage;
    }

    try {
        if (*run) return mhd::run_command(config, out_dir, {vtk, quiet});
        if (*verify) return mhd::verify_command(dir_a);
        if (*compare) return mhd::compare_command(dir_a, dir_b);
        if (*sweep) {
            if (delta_list.empty()) {
                try {
                    delta_list.push_back(mhd::parse_config(mhd::read_text(config), config).reg.delta);
                } catch (const mhd::Error& e) {
                    std::cerr << "configuration error: " << e.what() << "\n";
                    return mhd::exit_usage;
                }
            }
            return mhd::sweep_command(config, eps_list, delta_list, out_dir);
        }
    } catch (const mhd::StepFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return mhd::exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mhd::exit_usage;
    }
    return mhd::exit_usage;
}
