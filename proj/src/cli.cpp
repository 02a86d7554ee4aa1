#include "evograd/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "evograd/presets.hpp"
#include "evograd/report.hpp"

namespace evograd {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string preset;
    std::string spec_file;
    double box = 2.0;
    int grid_n = 61;
    std::string t_range = "1:2";
    double s = 1.0;
    double T = 1.25;
    std::string f_text = "exp(-norm2(x))";
    std::string c0_text = "auto";
    std::string eta_mode_text = "lambda-min";
    std::string scheme_text = "implicit";
    std::string advection_text = "upwind";
    double theta = 1.0;
    double dt = 0.0;  // 0: auto
    int snapshot_count = 5;
    double rho = 0.5;
    double tol_grad = 0.0;  // 0: default
    double tol_bern = 0.0;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
    std::string out_dir = "evograd-out";
};

std::string load_spec_text(const CommonOptions& opt) {
    if (!opt.preset.empty() && !opt.spec_file.empty())
        throw PresetError("--preset and --spec are mutually exclusive");
    if (!opt.preset.empty()) return instantiate(opt.preset);
    if (!opt.spec_file.empty()) {
        std::ifstream in(opt.spec_file, std::ios::binary);
        if (!in) throw PresetError("cannot read spec file " + opt.spec_file);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    throw PresetError("one of --preset or --spec is required");
}

std::pair<double, double> parse_t_range(const std::string& text) {
    std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw PresetError("--t expects lo:hi, got '" + text + "'");
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

EtaMode parse_eta_mode(const std::string& text) {
    if (text == "lambda-min") return EtaMode::LambdaMin;
    if (text == "expr") return EtaMode::UserExpression;
    throw PresetError("--eta-mode expects lambda-min or expr");
}

SolverConfig make_solver_config(const CommonOptions& opt, double s, double T) {
    SolverConfig config;
    if (opt.scheme_text == "implicit") {
        config.scheme = Scheme::ThetaImplicit;
        config.theta = opt.theta;
    } else if (opt.scheme_text == "explicit") {
        config.scheme = Scheme::ExplicitEuler;
    } else {
        throw PresetError("--scheme expects implicit or explicit");
    }
    if (opt.advection_text == "upwind")
        config.advection = Advection::Upwind;
    else if (opt.advection_text == "centered")
        config.advection = Advection::Centered;
    else
        throw PresetError("--advection expects upwind or centered");
    if (opt.dt > 0.0) config.dt = opt.dt;
    config.inner_fraction = opt.rho;
    for (int k = 1; k < opt.snapshot_count; ++k)
        config.snapshot_times.push_back(s + (T - s) * k / opt.snapshot_count);
    return config;
}

std::string command_line_of(int argc, const char* const* argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

struct OutputWriter {
    fs::path dir;
    RunManifest manifest;
    std::string report_text;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    explicit OutputWriter(const std::string& out_dir) : dir(out_dir) {
        fs::create_directories(dir);
    }

    void add_file(const std::string& name, const std::string& content) {
        write_text_file(dir / name, content);
        manifest.output_files.push_back(name);
    }

    void finish() {
        add_file("report.txt", report_text);
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_text_file(dir / "manifest.txt", manifest_text(manifest));
    }
};

std::vector<ConditionReport> run_condition_checks(const OperatorFamily& op,
                                                  const SampleRegion& region, EtaMode eta_mode,
                                                  std::optional<double> lyap_gamma,
                                                  std::vector<std::string>& skipped) {
    std::vector<ConditionReport> reports;
    reports.push_back(check_ellipticity(op, region));
    reports.push_back(check_algebraic(op, region));
    reports.push_back(estimate_c0(op, region, eta_mode));
    if (op.lyapunov_phi()) {
        double gamma = lyap_gamma ? *lyap_gamma
                                  : (op.lyapunov_gamma() ? *op.lyapunov_gamma() : 0.0);
        reports.push_back(check_lyapunov(op, *op.lyapunov_phi(), gamma, region));
    } else {
        skipped.push_back("lyapunov: skipped (operator document has no phi)");
    }
    return reports;
}

int cmd_check(const CommonOptions& opt, const std::string& cmdline,
              std::optional<double> lyap_gamma) {
    std::string spec_text = load_spec_text(opt);
    OperatorFamily op = build_operator_from_text(spec_text);
    auto [t_lo, t_hi] = parse_t_range(opt.t_range);
    SampleRegion region = SampleRegion::defaults(op.dimension(), opt.box, t_lo, t_hi);
    region.seed = opt.seed;
    EtaMode eta_mode = parse_eta_mode(opt.eta_mode_text);

    OutputWriter out(opt.out_dir);
    out.manifest.command_line = cmdline;
    out.manifest.spec_hash = fnv1a_hash(spec_text);
    out.manifest.seed = opt.seed;

    std::vector<std::string> skipped;
    std::vector<ConditionReport> reports =
        run_condition_checks(op, region, eta_mode, lyap_gamma, skipped);

    bool all_pass = true;
    for (const auto& rep : reports) {
        out.report_text += key_value_block(rep, op.dimension()) + "\n";
        all_pass = all_pass && rep.pass;
        std::cout << rep.condition << ": " << (rep.pass ? "PASS" : "FAIL")
                  << " (extremal " << format_float(rep.extremal) << ")\n";
    }
    for (const auto& s : skipped) {
        out.report_text += s + "\n";
        std::cout << s << "\n";
    }
    out.add_file("conditions.csv", conditions_csv(reports, op.dimension()));
    out.finish();
    return all_pass ? 0 : 1;
}

int cmd_solve(const CommonOptions& opt, const std::string& cmdline,
              const std::vector<double>& radii) {
    std::string spec_text = load_spec_text(opt);
    OperatorFamily op = build_operator_from_text(spec_text);
    expr::NodePtr f = expr::parse(opt.f_text, op.dimension());
    SolverConfig config = make_solver_config(opt, opt.s, opt.T);

    OutputWriter out(opt.out_dir);
    out.manifest.command_line = cmdline;
    out.manifest.spec_hash = fnv1a_hash(spec_text);
    out.manifest.seed = opt.seed;

    Trajectory traj;
    if (radii.empty()) {
        auto grid = std::make_shared<Grid>(op.dimension(), opt.box, opt.grid_n);
        traj = evolve(op, f, opt.s, opt.T, grid, config);
    } else {
        NestedEvolveResult nested = nested_evolve(op, f, opt.s, opt.T, radii, opt.grid_n, config);
        traj = std::move(nested.trajectory);
        out.add_file("convergence.csv", convergence_csv(nested.table));
        for (const auto& w : nested.table.warnings) out.report_text += "warning=" + w + "\n";
    }

    fs::create_directories(out.dir / "snapshots");
    std::string snap_manifest = "time,file\n";
    for (std::size_t m = 0; m < traj.times.size(); ++m) {
        std::string name = "snapshots/snapshot_" + std::to_string(m) + ".csv";
        out.add_file(name, snapshot_csv(traj.snapshots[m]));
        snap_manifest += format_float(traj.times[m]) + "," + name + "\n";
    }
    out.add_file("trajectory.csv", snap_manifest);

    out.report_text += "initial=" + traj.initial_expression + "\n";
    out.report_text += "s=" + format_float(traj.s) + "\n";
    for (std::size_t m = 0; m < traj.times.size(); ++m)
        out.report_text += "sup_norm_" + format_float(traj.times[m]) + "=" +
                           format_float(traj.sup_norms[m]) + "\n";
    out.finish();
    std::cout << "solve: wrote " << traj.times.size() << " snapshots to " << out.dir.string()
              << "\n";
    return 0;
}

int cmd_verify_gradient(const CommonOptions& opt, const std::string& cmdline,
                        std::optional<double> lyap_gamma) {
    std::string spec_text = load_spec_text(opt);
    OperatorFamily op = build_operator_from_text(spec_text);
    expr::NodePtr f = expr::parse(opt.f_text, op.dimension());
    EtaMode eta_mode = parse_eta_mode(opt.eta_mode_text);

    SampleRegion region = SampleRegion::defaults(op.dimension(), opt.box, opt.s, opt.T);
    region.seed = opt.seed;

    OutputWriter out(opt.out_dir);
    out.manifest.command_line = cmdline;
    out.manifest.spec_hash = fnv1a_hash(spec_text);
    out.manifest.seed = opt.seed;

    std::vector<std::string> skipped;
    std::vector<ConditionReport> conditions =
        run_condition_checks(op, region, eta_mode, lyap_gamma, skipped);
    bool all_pass = true;
    for (const auto& rep : conditions) all_pass = all_pass && rep.pass;

    double c0;
    if (opt.c0_text == "auto") {
        c0 = conditions[2].extremal;  // dissipativity estimate
    } else {
        c0 = std::stod(opt.c0_text);
    }

    auto grid = std::make_shared<Grid>(op.dimension(), opt.box, opt.grid_n);
    SolverConfig config = make_solver_config(opt, opt.s, opt.T);
    std::optional<double> tol_grad;
    if (opt.tol_grad > 0.0) tol_grad = opt.tol_grad;
    GradientCheckRun run =
        run_gradient_check(op, f, opt.s, opt.T, c0, grid, config, tol_grad);

    std::optional<double> tol_bern;
    if (opt.tol_bern > 0.0) tol_bern = opt.tol_bern;
    VerificationReport bern =
        bernstein_diagnostic(op, run.u, c0, opt.epsilon, tol_bern, opt.rho);
    VerificationReport maxp_u = max_principle_check(run.u, run.u.sup_norms.front());
    VerificationReport maxp_v = max_principle_check(run.v, run.v.sup_norms.front());
    maxp_v.kind = "max-principle-v";

    std::vector<VerificationReport> verifications{run.report, bern, maxp_u, maxp_v};
    for (auto& rep : verifications) rep.seed = opt.seed;
    for (const auto& rep : verifications) {
        out.report_text += key_value_block(rep, op.dimension()) + "\n";
        all_pass = all_pass && rep.pass;
        std::cout << rep.kind << ": " << (rep.pass ? "PASS" : "FAIL") << " (worst margin "
                  << format_float(rep.worst_margin) << ", tol " << format_float(rep.tol)
                  << ")\n";
    }
    for (const auto& rep : conditions) {
        out.report_text += key_value_block(rep, op.dimension()) + "\n";
        std::cout << rep.condition << ": " << (rep.pass ? "PASS" : "FAIL") << " (extremal "
                  << format_float(rep.extremal) << ")\n";
    }
    for (const auto& s : skipped) out.report_text += s + "\n";

    out.manifest.entries.emplace_back("c0", format_float(c0));
    out.manifest.entries.emplace_back("tol_grad", format_float(run.report.tol));
    out.manifest.entries.emplace_back("tol_bern", format_float(bern.tol));
    out.add_file("conditions.csv", conditions_csv(conditions, op.dimension()));
    out.add_file("margins.csv", margins_csv(verifications, op.dimension()));
    out.finish();
    return all_pass ? 0 : 1;
}

int cmd_probe(const CommonOptions& opt, const std::string& cmdline, const std::string& x_text) {
    std::string spec_text = load_spec_text(opt);
    OperatorFamily op = build_operator_from_text(spec_text);

    std::vector<double> x;
    std::stringstream ss(x_text);
    std::string item;
    while (std::getline(ss, item, ',')) x.push_back(std::stod(item));
    if (static_cast<int>(x.size()) != op.dimension())
        throw PresetError("--x expects " + std::to_string(op.dimension()) +
                          " comma-separated coordinates");

    OutputWriter out(opt.out_dir);
    out.manifest.command_line = cmdline;
    out.manifest.spec_hash = fnv1a_hash(spec_text);
    out.manifest.seed = opt.seed;

    std::vector<NecessityPattern> patterns = necessity_patterns(op, opt.s, x);
    ConditionReport probe = necessity_probe(op, opt.s, x);
    double residual = algebraic_residual(op, opt.s, x);

    out.report_text += key_value_block(probe, op.dimension()) + "\n";
    out.report_text += "algebraic_residual=" + format_float(residual) + "\n";
    out.add_file("patterns.csv", patterns_csv(patterns));
    out.add_file("conditions.csv", conditions_csv({probe}, op.dimension()));
    out.finish();

    std::cout << "necessity-probe: " << (probe.pass ? "PASS" : "FAIL") << " (max violation "
              << format_float(probe.extremal) << ", algebraic residual "
              << format_float(residual) << ")\n";
    return probe.pass ? 0 : 1;
}

int cmd_presets(const std::string& verb, const std::string& name) {
    if (verb == "list") {
        for (const auto& p : preset_catalog()) {
            std::cout << p.name << ": " << p.summary << "\n";
            if (!p.defaults.empty()) {
                std::cout << "  defaults:";
                for (const auto& [k, v] : p.defaults) std::cout << " " << k << "=" << v;
                std::cout << "\n";
            }
        }
        return 0;
    }
    if (verb == "show") {
        std::cout << instantiate(name);
        return 0;
    }
    throw PresetError("presets expects list or show <name>");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"evolution-operator laboratory for second-order elliptic families"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string radii_text;
    std::string probe_x;
    std::string presets_verb;
    std::string presets_name;
    double lyap_gamma_flag = std::nan("");

    auto add_common = [&](CLI::App* cmd, bool solver_opts) {
        cmd->add_option("--preset", opt.preset, "preset operator name");
        cmd->add_option("--spec", opt.spec_file, "operator document file");
        cmd->add_option("--box", opt.box, "box half-width");
        cmd->add_option("--seed", opt.seed, "sampling seed");
        cmd->add_option("--out", opt.out_dir, "output directory");
        if (solver_opts) {
            cmd->add_option("--grid", opt.grid_n, "points per axis (odd)");
            cmd->add_option("--s", opt.s, "initial time");
            cmd->add_option("--T", opt.T, "final time");
            cmd->add_option("--f", opt.f_text, "initial datum expression");
            cmd->add_option("--scheme", opt.scheme_text, "implicit | explicit");
            cmd->add_option("--theta", opt.theta, "implicit weight in [0,1]");
            cmd->add_option("--dt", opt.dt, "time step (0 = auto)");
            cmd->add_option("--advection", opt.advection_text, "upwind | centered");
            cmd->add_option("--snapshots", opt.snapshot_count, "snapshot intervals");
            cmd->add_option("--rho", opt.rho, "inner-region fraction");
        }
    };

    CLI::App* check = app.add_subcommand("check", "run the hypothesis checkers");
    add_common(check, false);
    check->add_option("--t", opt.t_range, "time range lo:hi for sampling");
    check->add_option("--eta-mode", opt.eta_mode_text, "lambda-min | expr");
    check->add_option("--lyap-gamma", lyap_gamma_flag, "Lyapunov gamma override");

    CLI::App* solve = app.add_subcommand("solve", "evolve an initial datum");
    add_common(solve, true);
    solve->add_option("--radii", radii_text, "comma-separated radii for nested runs");

    CLI::App* verify = app.add_subcommand("verify-gradient",
                                          "full pipeline: checks, c0, gradient bound");
    add_common(verify, true);
    verify->add_option("--c0", opt.c0_text, "dissipativity constant or 'auto'");
    verify->add_option("--eta-mode", opt.eta_mode_text, "lambda-min | expr");
    verify->add_option("--tol-grad", opt.tol_grad, "gradient margin tolerance (0 = default)");
    verify->add_option("--tol-bern", opt.tol_bern, "interior diagnostic tolerance (0 = default)");
    verify->add_option("--epsilon", opt.epsilon, "gradient regularization epsilon");
    verify->add_option("--lyap-gamma", lyap_gamma_flag, "Lyapunov gamma override");

    CLI::App* probe = app.add_subcommand("probe-necessity",
                                         "directional probes at a point");
    add_common(probe, false);
    probe->add_option("--s", opt.s, "probe time");
    probe->add_option("--x", probe_x, "probe point, comma-separated")->required();

    CLI::App* presets = app.add_subcommand("presets", "list or show presets");
    presets->add_option("verb", presets_verb, "list | show")->required();
    presets->add_option("name", presets_name, "preset name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string cmdline = command_line_of(argc, argv);
    std::optional<double> lyap_gamma;
    if (!std::isnan(lyap_gamma_flag)) lyap_gamma = lyap_gamma_flag;

    try {
        if (*check) return cmd_check(opt, cmdline, lyap_gamma);
        if (*solve) {
            std::vector<double> radii;
            if (!radii_text.empty()) {
                std::stringstream ss(radii_text);
                std::string item;
                while (std::getline(ss, item, ',')) radii.push_back(std::stod(item));
            }
            return cmd_solve(opt, cmdline, radii);
        }
        if (*verify) return cmd_verify_gradient(opt, cmdline, lyap_gamma);
        if (*probe) return cmd_probe(opt, cmdline, probe_x);
        if (*presets) return cmd_presets(presets_verb, presets_name);
    } catch (const PresetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: malformed numeric argument (" << e.what() << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace evograd
