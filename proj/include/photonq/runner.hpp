#pragma once

#include "photonq/netlist.hpp"

namespace photonq {

// Exit codes shared by the library runner and the CLI.
enum ExitCode {
    exit_ok = 0,
    exit_parse = 2,
    exit_model = 3,
    exit_numerics = 4,
    exit_io = 5,
};

struct RunnerOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    std::vector<std::string> artifacts;  // paths written (including the manifest)
};

// Executes every run block of the netlist; stops at the first failure.
RunOutcome run_netlist(const Netlist& nl, const RunnerOptions& opts);

// Locale-independent 17-significant-digit formatting used by all CSV output.
std::string format_g17(double v);

// Atomic text-file write (temp file + rename).
void write_atomic(const std::string& path, const std::string& content);

}  // namespace photonq
