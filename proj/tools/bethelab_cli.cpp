// Command line front end: drives the chain solver, the spectral-determinant
// integrator and the study pipelines from sectioned key=value config files.

#include <CLI11.hpp>

#include <cstdio>

namespace {

struct CommonOpts {
    std::string config;
    std::string out_dir = ".";
    int nmax = 0;
    double tol = 0.0;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "Path to a sectioned key=value config file");
    cmd->add_option("--out", opts.out_dir, "Directory for output files");
    cmd->add_option("--nmax", opts.nmax, "Largest chain length in sweeps");
    cmd->add_option("--tol", opts.tol, "Override tolerance for the command");
    cmd->add_option("--threads", opts.threads, "Worker thread count");
}

int not_implemented(const char* name) {
    std::fprintf(stderr, "%s: not implemented yet\n", name);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bethe-root and spectral-determinant laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;

    const char* names[] = {"gen-inhom",  "solve",   "sweep",           "sumrule",
                           "ode-det",    "ode-zeros", "dict",          "verify-wronskian",
                           "reproduce",  "cft-levels", "appendix-e"};
    for (const char* n : names) {
        auto* cmd = app.add_subcommand(n);
        add_common(cmd, opts);
        if (std::string(n) == "reproduce")
            cmd->add_option("table", opts.config, "Table identifier")->required();
        cmd->callback([n] { std::exit(not_implemented(n)); });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
