#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinbridge/errors.hpp"
#include "kinbridge/experiments.hpp"

namespace kinbridge {

using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "flat key = value config file");
    sub->add_option("--set", f.overrides, "override a config key, key=value");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--out", f.out, "output file (stdout when omitted)");
    sub->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig read_config(const CommonFlags& f) {
    KeyValueConfig kv = f.config.empty() ? KeyValueConfig::parse_string("") : KeyValueConfig::parse_file(f.config);
    for (const std::string& o : f.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigurationError("--set expects key=value, got " + o);
        kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (f.seed) kv.set("seed", std::to_string(*f.seed));
    return load_config(kv);
}

void emit(const CommonFlags& f, const std::string& text) {
    if (f.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream os(f.out);
    if (!os) throw ConfigurationError("cannot write " + f.out);
    os << text;
}

int cmd_kappa(const CommonFlags& f, double alpha, double beta, double gamma, bool optimize, int dim) {
    const Potential pot = (beta > alpha) ? Potential::tanh_band(alpha, beta, gamma) : Potential::quadratic(alpha, gamma);
    const TwistedNorms tn = build_twisted_norms(pot, dim, optimize);
    const Eigen::Vector2d ev = tn.q_eigenvalues();
    json j{{"schema_version", 1}, {"alpha", alpha},          {"beta", beta},
           {"gamma", gamma},      {"a", tn.a},               {"b", tn.b},
           {"c", tn.c},           {"kappa", tn.kappa},       {"q_eigenvalues", {ev(0), ev(1)}},
           {"optimized", tn.optimized}, {"degenerate", tn.degenerate}, {"warning", tn.warning}};
    if (f.format == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "alpha,beta,gamma,a,b,c,kappa,q_min,q_max,optimized,degenerate\n"
           << alpha << ',' << beta << ',' << gamma << ',' << tn.a << ',' << tn.b << ',' << tn.c << ',' << tn.kappa << ','
           << ev(0) << ',' << ev(1) << ',' << tn.optimized << ',' << tn.degenerate << '\n';
        emit(f, os.str());
    } else {
        emit(f, j.dump(2));
    }
    return 0;
}

int cmd_kernel_check(const CommonFlags& f) {
    const ExperimentConfig cfg = read_config(f);
    Context ctx(cfg);
    const TransitionKernel k = ctx.kernel(cfg.kernel_t);
    const StochasticityReport st = stochasticity(k);
    json j{{"schema_version", 1}, {"t", cfg.kernel_t}, {"source", cfg.kernel_source}, {"grid_hash", k.grid_hash},
           {"max_row_defect", st.max_row_defect}, {"max_col_defect", st.max_col_defect},
           {"raw_row_defect", k.raw_row_defect}, {"escaped_fraction", k.escaped_fraction}};
    const bool exact = cfg.kernel_source == "exact";
    bool ok = !exact || (st.max_row_defect <= 1e-6 && st.max_col_defect <= 1e-6);
    if (ctx.grid.v_symmetric()) {
        const double rev = check_reversibility(k, ctx.grid);
        j["reversibility"] = rev;
        if (exact) ok = ok && rev <= 1e-10;
    }
    if (!exact && ctx.pot.kind() == Potential::Kind::Quadratic) {
        KernelOptions raw;
        raw.balance = false;
        const TransitionKernel ex = gaussian_kernel(ctx.pot.alpha(), ctx.pot.gamma(), cfg.kernel_t, ctx.grid, ctx.m, raw);
        const RowDistance d = row_total_variation(k, ex);
        j["max_row_tv_vs_exact"] = d.max_tv;
        ok = ok && d.max_tv <= 0.1;
    }
    j["passed"] = ok;
    emit(f, j.dump(2));
    return ok ? 0 : 1;
}

int cmd_solve(const CommonFlags& f) {
    const ExperimentConfig cfg = read_config(f);
    Context ctx(cfg);
    const double T = cfg.T_list.front();
    const BridgeSolve b = solve_bridge(ctx, T, {});
    const SolveReport& r = b.solve.report;
    const double S = cfg.problem == "ksp" ? relative_entropy(b.mu_x, ctx.m) + relative_entropy(b.nu_x, ctx.m)
                                          : relative_entropy(b.mu_phase, ctx.m) + relative_entropy(b.nu_phase, ctx.m);
    json j{{"schema_version", 1}, {"problem", cfg.problem}, {"T", T},
           {"iterations", r.iterations}, {"marginal_residual", r.marginal_residual_l1},
           {"cost", r.primal_cost}, {"dual", r.dual_value}, {"gap", r.gap}, {"converged", r.converged},
           {"S", S}, {"lower_bound_ok", 0.5 * S <= r.primal_cost + 1e-12}, {"kappa", ctx.tn.kappa}};
    if (cfg.dump) {
        const std::filesystem::path dir(cfg.output_dir);
        std::filesystem::create_directories(dir);
        std::ofstream os(dir / "potentials.csv");
        os.precision(17);
        os << "node,log_f,log_g\n";
        for (Eigen::Index z = 0; z < b.solve.potentials.log_f.size(); ++z)
            os << z << ',' << b.solve.potentials.log_f(z) << ',' << b.solve.potentials.log_g(z) << '\n';
        j["dump"] = (dir / "potentials.csv").string();
    }
    if (f.format == "csv") {
        std::ostringstream os;
        os.precision(12);
        os << "T,iterations,marginal_residual,cost,dual,gap,converged,S\n"
           << T << ',' << r.iterations << ',' << r.marginal_residual_l1 << ',' << r.primal_cost << ',' << r.dual_value
           << ',' << r.gap << ',' << r.converged << ',' << S << '\n';
        emit(f, os.str());
    } else {
        emit(f, j.dump(2));
    }
    return r.converged ? 0 : 1;
}

int cmd_sweep(const CommonFlags& f, const std::string& kind) {
    const ExperimentConfig cfg = read_config(f);
    SweepSummary s;
    if (kind == "turnpike") s = run_turnpike_sweep(cfg);
    else if (kind == "cost") s = run_cost_sweep(cfg);
    else s = run_fixed_window(cfg, cfg.t_fixed);
    emit(f, f.format == "csv" ? sweep_csv(s) : summary_json(s));
    for (const Check& c : s.checks) std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
    return s.passed() ? 0 : 1;
}

int cmd_contraction(const CommonFlags& f) {
    const ExperimentConfig cfg = read_config(f);
    const ContractionResult r = run_contraction_check(cfg);
    if (f.format == "csv") {
        std::ostringstream os;
        os.precision(12);
        os << "pair,t,adjoint,ratio,bound,passed\n";
        for (const ContractionRow& row : r.rows)
            os << row.pair << ',' << row.t << ',' << row.adjoint << ',' << row.ratio << ',' << row.bound << ','
               << row.passed << '\n';
        emit(f, os.str());
    } else {
        emit(f, contraction_json(r));
    }
    for (const ContractionRow& row : r.rows)
        if (!row.passed)
            std::cerr << "violation: pair " << row.pair << " t " << row.t << " ratio " << row.ratio << " bound "
                      << row.bound << '\n';
    return r.passed ? 0 : 1;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"kinetic Schrodinger bridge solver and diagnostics"};
    app.require_subcommand(1);

    double alpha = 1.0, beta = 1.0, gamma = 1.0;
    bool optimize = false;
    int dim = 1;
    CLI::App* kappa = app.add_subcommand("kappa", "twisted-norm parameters and contraction rate");
    kappa->add_option("--alpha", alpha)->required();
    kappa->add_option("--beta", beta)->required();
    kappa->add_option("--gamma", gamma)->required();
    kappa->add_option("--dim", dim)->check(CLI::PositiveNumber);
    kappa->add_flag("--optimize", optimize);

    CommonFlags flags;
    kappa->add_option("--out", flags.out, "output file (stdout when omitted)");
    kappa->add_option("--format", flags.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* name : {"kernel-check", "solve", "turnpike", "cost", "contraction", "window"}) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub, flags);
        subs.emplace_back(name, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (kappa->parsed()) {
            if (!(beta >= alpha)) throw ConfigurationError("need beta >= alpha");
            return cmd_kappa(flags, alpha, beta, gamma, optimize, dim);
        }
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            if (name == "kernel-check") return cmd_kernel_check(flags);
            if (name == "solve") return cmd_solve(flags);
            if (name == "contraction") return cmd_contraction(flags);
            return cmd_sweep(flags, name);
        }
    } catch (const ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace kinbridge
