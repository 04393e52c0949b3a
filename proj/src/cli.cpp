#include "pseudohaptic/cli.hpp"

#include "pseudohaptic/analysis.hpp"
#include "pseudohaptic/errors.hpp"
#include "pseudohaptic/service.hpp"
#include "pseudohaptic/simulation.hpp"

#include "CLI11.hpp"

#include <ostream>

namespace pseudohaptic {

namespace {

struct SimulateArgs {
    std::string study;
    int participants = 10;
    std::uint64_t seed = 1;
    std::string observer;
    double tune_p = 0.0;
    unsigned threads = 0;
    std::string out;
};

struct AnalyzeArgs {
    std::string in;
    std::string out;
};

struct ServeArgs {
    int port = 0;
    std::string address = "127.0.0.1";
    std::string data;
    std::uint64_t seed = 1;
    std::string seed_policy = "client";
};

int do_simulate(const SimulateArgs& a, std::ostream& out)
{
    SimulationConfig cfg;
    cfg.protocol = parse_protocol(a.study);
    cfg.participants = a.participants;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    if (!a.observer.empty()) {
        if (!std::filesystem::exists(a.observer)) {
            throw StorageError("observer config not found: " + a.observer);
        }
        cfg.observer = load_observer_config(a.observer);
    }
    if (a.tune_p > 0.0) {
        // Noise chosen so the weakest Study 1 condition is picked with this probability.
        cfg.observer.sigma = calibrate_sigma(cfg.observer, kComparisonAlphas.front(), a.tune_p);
    }
    validate(cfg);

    const auto runs = simulate_study(cfg);
    const auto csv = write_simulation(runs, a.out);
    std::size_t trials = 0;
    for (const auto& r : runs) {
        trials += r.records.size();
    }
    out << "simulated " << runs.size() << " participants, " << trials << " trials (observer k="
        << format_double(cfg.observer.k) << " sigma=" << format_double(cfg.observer.sigma)
        << " jnd=" << format_double(cfg.observer.jnd) << ")\n";
    out << "wrote " << csv.string() << '\n';
    return kExitOk;
}

int do_analyze(const AnalyzeArgs& a, std::ostream& out)
{
    std::filesystem::path in = a.in;
    if (std::filesystem::is_directory(in)) {
        in /= "trials.csv";
    }
    if (!std::filesystem::exists(in)) {
        throw StorageError("input not found: " + in.string());
    }
    const auto rows = read_summary_csv(in);
    const auto files = run_analysis(rows, a.out);
    out << "analysed " << rows.size() << " trials from " << in.string() << '\n';
    for (const auto& f : files.written) {
        out << "wrote " << f.string() << '\n';
    }
    return kExitOk;
}

int do_serve(const ServeArgs& a, std::ostream& out)
{
    ServiceConfig cfg;
    cfg.seed = a.seed;
    cfg.seed_policy = a.seed_policy == "derived" ? SeedPolicy::derived : SeedPolicy::client_or_derived;
    if (!a.data.empty()) {
        cfg.data_dir = a.data;
    }
    ExperimentService service(cfg);
    out << "listening on ws://" << a.address << ':' << a.port << "/ws" << std::endl;
    run_websocket_server(service, a.address, static_cast<unsigned short>(a.port));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Pseudo-haptic texture experiment engine", "pseudohaptic"};
    app.set_config("--config", "", "Read options from an INI/TOML file (flags win)");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a study with synthetic observers");
    simulate->add_option("--study", sim.study, "1|2|comparison|adjust_amplitude|adjust_wavelength|adjustment")
        ->required();
    simulate->add_option("--participants", sim.participants, "Number of participants")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Run seed")->capture_default_str();
    simulate->add_option("--observer", sim.observer, "Observer config file (k, sigma, jnd, strategy, min_reversals)");
    simulate->add_option("--tune-p", sim.tune_p,
                         "Set sigma so the weakest comparison condition is chosen with this probability")
        ->check(CLI::Range(0.5, 1.0));
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output directory")->required();

    AnalyzeArgs ana;
    auto* analyze = app.add_subcommand("analyze", "Run the statistical pipeline on a trial CSV");
    analyze->add_option("--in", ana.in, "trials.csv, or a directory containing it")->required();
    analyze->add_option("--out", ana.out, "Output directory")->required();

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "Serve live sessions over WebSocket");
    serve->add_option("--port", srv.port, "TCP port")->required()->check(CLI::Range(1, 65535));
    serve->add_option("--address", srv.address, "Listen address")->capture_default_str();
    serve->add_option("--data", srv.data, "Directory for the wire log and session exports");
    serve->add_option("--seed", srv.seed, "Service seed")->capture_default_str();
    serve->add_option("--seed-policy", srv.seed_policy, "client: accept client seeds; derived: always derive")
        ->check(CLI::IsMember({"client", "derived"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            return do_simulate(sim, out);
        }
        if (analyze->parsed()) {
            return do_analyze(ana, out);
        }
        return do_serve(srv, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace pseudohaptic
