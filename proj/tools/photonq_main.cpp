#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "photonq/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photonq: linear quantum circuit algebra and semiclassical simulation"};
    app.require_subcommand(1);

    std::string netlist_path, out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;

    auto* run = app.add_subcommand("run", "execute the run blocks of a netlist");
    run->add_option("netlist", netlist_path, "netlist JSON file")->required();
    run->add_option("--seed", seed, "base RNG seed (recorded in the manifest)")
        ->each([&](const std::string&) { seed_given = true; });
    run->add_option("--threads", threads, "internal parallelism bound");
    run->add_option("--out", out_dir, "output directory");

    auto* check = app.add_subcommand("check", "parse a netlist and verify realizability");
    check->add_option("netlist", netlist_path, "netlist JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    photonq::Netlist nl;
    try {
        nl = photonq::parse_netlist(slurp(netlist_path));
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return photonq::exit_parse;
    }

    if (check->parsed()) {
        try {
            bool linear = true;
            if (nl.expression) {
                std::function<void(const photonq::Expr&)> visit =
                    [&](const photonq::Expr& e) {
                        if (e.op == photonq::Expr::Op::atom &&
                            !photonq::is_linear_kind(nl.find(e.name)->kind))
                            linear = false;
                        for (auto& a : e.args) visit(*a);
                    };
                visit(*nl.expression);
            }
            if (nl.expression && linear) {
                auto g = photonq::build_linear_circuit(nl);
                auto rep = photonq::check_realizable(g, 1e-8);
                std::cout << "ports: " << g.n_ports << "\nmodes: " << g.n_modes
                          << "\nrealizable: " << (rep.passed ? "yes" : "NO")
                          << "\nresiduals: " << rep.residual_commutator << " "
                          << rep.residual_io << " " << rep.residual_scatter << "\n";
                if (!rep.passed) return photonq::exit_model;
            } else if (nl.expression) {
                auto c = photonq::build_nonlinear_component(nl);
                std::cout << "nonlinear component: " << c.kind
                          << "\nfields: " << c.n_fields << "\nports: " << c.n_ports
                          << "\nnoise channels: " << c.channels.size() << "\n";
            } else {
                std::cout << "no expression; " << nl.components.size()
                          << " components declared\n";
            }
            std::cout << "canonical: "
                      << (nl.expression ? photonq::print_expression(*nl.expression) : "")
                      << "\n";
        } catch (const photonq::ParseError& e) {
            std::cerr << "parse error: " << e.what() << "\n";
            return photonq::exit_parse;
        } catch (const std::exception& e) {
            std::cerr << "model error: " << e.what() << "\n";
            return photonq::exit_model;
        }
        return photonq::exit_ok;
    }

    photonq::RunnerOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.seed_given = seed_given;
    opts.threads = threads;
    auto outcome = photonq::run_netlist(nl, opts);
    if (outcome.exit_code != photonq::exit_ok)
        std::cerr << "error (" << outcome.exit_code << "): " << outcome.message << "\n";
    for (const auto& a : outcome.artifacts) std::cout << a << "\n";
    return outcome.exit_code;
}
