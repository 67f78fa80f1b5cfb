#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "mfhawkes/cli.hpp"
#include "mfhawkes/errors.hpp"
#include "mfhawkes/estimator.hpp"
#include "mfhawkes/io.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/rate.hpp"
#include "mfhawkes/simulator.hpp"

namespace mfhawkes {

namespace {

namespace fs = std::filesystem;
using cli::Json;
using cli::OutputFile;
using cli::RunConfig;

struct RunOutput {
    std::vector<OutputFile> files;
    std::string summary;
};

struct Context {
    RunConfig cfg;
    const ModelSpec& model() const { return *cfg.model; }
    double horizon() const { return cfg.model->horizon(); }
    std::size_t threads = 0;
    std::map<std::string, std::string> inputs;
};

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

std::string dump_json(const Json& j) {
    return j.dump(2) + "\n";
}

std::size_t auto_n_max(double mean) {
    return static_cast<std::size_t>(std::ceil(mean + 10.0 * std::sqrt(mean) + 10.0));
}

MeanPath mean_limit_path(const Context& ctx, double dt) {
    MeanLimitOptions opts = ctx.cfg.mean_limit.options;
    opts.dt = dt;
    return solve_mean_limit(ctx.model(), opts).path;
}

EventSpec build_event(const Context& ctx, const cli::EventConfig& e) {
    const double horizon = ctx.horizon();
    if (e.kind == cli::EventConfig::Kind::MeanExceeds) {
        const double at = e.at > 0.0 ? e.at : horizon;
        std::ostringstream os;
        os << "mean count at t=" << format_double(at) << " >= " << format_double(e.a);
        return EventSpec{MeanExceeds{e.a, at}, os.str()};
    }
    const double dt = e.dt > 0.0 ? e.dt : horizon / 100.0;
    const MeanPath m = mean_limit_path(ctx, dt);
    const std::size_t n_max = e.n_max > 0 ? e.n_max : auto_n_max(m.terminal());
    std::ostringstream os;
    os << "sup-W1 ball of radius " << format_double(e.radius) << " around the mean-field law";
    return EventSpec{W1Ball{mean_field_law(m, n_max), e.radius}, os.str()};
}

std::string estimate_row(std::size_t n, const Estimate& e) {
    std::ostringstream os;
    os << n << ',' << e.reps << ',' << method_name(e.method) << ',' << format_double(e.p_hat) << ','
       << format_double(e.std_err) << ',' << format_double(e.log_p_hat);
    return os.str();
}

Json estimate_json(const Estimate& e) {
    return Json{{"p_hat", cli::json_number(e.p_hat)},
                {"log_p_hat", cli::json_number(e.log_p_hat)},
                {"std_err", cli::json_number(e.std_err)},
                {"reps", e.reps},
                {"hits", e.hits},
                {"method", method_name(e.method)},
                {"ess", cli::json_number(e.ess)},
                {"weight_mean", cli::json_number(e.weight_mean)},
                {"weight_std_err", cli::json_number(e.weight_std_err)},
                {"flags", e.flags}};
}

RunOutput cmd_simulate(Context& ctx) {
    const auto& s = ctx.cfg.simulate;
    SimConfig sim{ctx.model(), s.N, ctx.cfg.seed, s.safety, s.max_candidates};
    SimResult res;
    const bool tilted = s.tilt.kind != cli::TiltConfig::Kind::None;
    if (tilted) {
        const TiltField tilt = cli::build_tilt(s.tilt, ctx.model(), nullptr, ctx.cfg.base_dir, &ctx.inputs);
        res = simulate_tilted(sim, tilt);
    } else {
        res = simulate_replicate(sim, nullptr, 0);
    }
    const TimeGrid grid = TimeGrid::uniform(ctx.horizon(), s.grid_dt > 0.0 ? s.grid_dt : ctx.horizon() / 100.0);
    const std::size_t n_max = s.n_max > 0 ? s.n_max : res.paths.max_count();
    const MeasureFlow flow = empirical_measure(res.paths, grid, n_max);
    const MeanPath mean = mean_process(res.paths, grid);

    Json summary{{"events", res.paths.total_events()},
                 {"max_count", res.paths.max_count()},
                 {"mean_T", cli::json_number(mean.terminal())},
                 {"candidates", res.stats.candidates},
                 {"accepted", res.stats.accepted},
                 {"majorant_violations", res.stats.majorant_violations}};
    if (tilted) {
        summary["log_rn"] = cli::json_number(res.log_rn);
    }
    RunOutput out;
    out.files = {{"events.csv", render([&](std::ostream& os) { write_event_paths(os, res.paths); })},
                 {"measure_flow.csv", render([&](std::ostream& os) { write_measure_flow(os, flow); })},
                 {"mean_process.csv", render([&](std::ostream& os) { write_mean_path(os, mean); })},
                 {"summary.json", dump_json(summary)}};
    out.summary = "simulate: N=" + std::to_string(s.N) + " events=" + std::to_string(res.paths.total_events()) +
                  " mean(T)=" + format_double(mean.terminal());
    return out;
}

RunOutput cmd_mean_limit(Context& ctx) {
    const auto& c = ctx.cfg.mean_limit;
    MeanLimitOptions opts = c.options;
    if (!(opts.dt > 0.0)) {
        opts.dt = 1e-3 * ctx.horizon();
    }
    const MeanLimitResult res = solve_mean_limit(ctx.model(), opts);
    const std::size_t n_max = c.n_max > 0 ? c.n_max : auto_n_max(res.path.terminal());
    const MeasureFlow law = mean_field_law(res.path, n_max);
    Json summary{{"iterations", res.iterations},
                 {"increments", res.increments},
                 {"m_T", cli::json_number(res.path.terminal())},
                 {"n_max", n_max},
                 {"law_max_deficit", cli::json_number(law.max_deficit())}};
    RunOutput out;
    out.files = {{"mean_limit.csv", render([&](std::ostream& os) { write_mean_path(os, res.path); })},
                 {"law.csv", render([&](std::ostream& os) { write_measure_flow(os, law); })},
                 {"solver.json", dump_json(summary)}};
    out.summary = "mean-limit: m(T)=" + format_double(res.path.terminal()) +
                  " iterations=" + std::to_string(res.iterations);
    return out;
}

PerturbedLawResult perturbed(const Context& ctx, const cli::TiltConfig& tilt_cfg, double dt, std::size_t n_max,
                             std::map<std::string, std::string>* inputs) {
    PerturbedLawOptions opts = ctx.cfg.perturbed.options;
    opts.dt = dt > 0.0 ? dt : 1e-3 * ctx.horizon();
    if (n_max > 0) {
        opts.n_max = n_max;
    }
    const TiltField tilt = cli::build_tilt(tilt_cfg, ctx.model(), nullptr, ctx.cfg.base_dir, inputs);
    return solve_perturbed_law(ctx.model(), tilt, opts);
}

RunOutput cmd_perturbed_law(Context& ctx) {
    const auto& c = ctx.cfg.perturbed;
    const PerturbedLawResult res = perturbed(ctx, c.tilt, c.options.dt, c.options.n_max, &ctx.inputs);
    const MeanPath mean = lawbar(res.flow);
    Json summary{{"terminal_deficit", cli::json_number(res.terminal_deficit)},
                 {"monotonicity_violations", res.monotonicity_violations},
                 {"mass_balance_residual", cli::json_number(res.mass_balance_residual)},
                 {"lawbar_T", cli::json_number(mean.terminal())}};
    RunOutput out;
    out.files = {{"perturbed_law.csv", render([&](std::ostream& os) { write_measure_flow(os, res.flow); })},
                 {"lawbar.csv", render([&](std::ostream& os) { write_mean_path(os, mean); })},
                 {"solver.json", dump_json(summary)}};
    out.summary = "perturbed-law: lawbar(T)=" + format_double(mean.terminal()) +
                  " deficit=" + format_double(res.terminal_deficit);
    return out;
}

RunOutput cmd_rate(Context& ctx) {
    const auto& c = ctx.cfg.rate;
    MeasureFlow flow;
    switch (c.flow) {
        case cli::RateSection::Flow::MeanField: {
            const MeanPath m = mean_limit_path(ctx, c.dt > 0.0 ? c.dt : 1e-3 * ctx.horizon());
            flow = mean_field_law(m, c.n_max > 0 ? c.n_max : auto_n_max(m.terminal()));
            break;
        }
        case cli::RateSection::Flow::Perturbed:
            flow = perturbed(ctx, c.tilt, c.dt, c.n_max, &ctx.inputs).flow;
            break;
        case cli::RateSection::Flow::Csv: {
            const fs::path p = fs::path(ctx.cfg.base_dir) / c.flow_path;
            std::ifstream in(p, std::ios::binary);
            if (!in) {
                throw std::ios_base::failure("cannot open flow file " + p.string());
            }
            std::stringstream buf;
            buf << in.rdbuf();
            ctx.inputs[c.flow_path] = buf.str();
            flow = read_measure_flow(buf);
            break;
        }
    }
    const RateReport report = rate_I(flow, ctx.model(), c.options);
    Json result{{"value", cli::json_number(report.value)},
                {"ac_violation", report.ac_violation},
                {"mass_balance_residual", cli::json_number(report.mass_balance_residual)}};
    result["witness"] = report.witness ? Json{{"t", report.witness->t}, {"x", report.witness->x}} : Json(nullptr);
    if (c.mean_process) {
        result["mean_process_rate"] = cli::json_number(rate_mean_process(lawbar(flow), ctx.model()));
    }
    RunOutput out;
    if (c.endpoint) {
        const EndpointMinimum em = minimize_rate_endpoint(*c.endpoint, ctx.model(), flow.grid());
        result["endpoint"] = Json{{"a", *c.endpoint},
                                  {"value", cli::json_number(em.value)},
                                  {"converged", em.converged},
                                  {"iterations", em.iterations}};
        out.files.push_back({"endpoint_path.csv", render([&](std::ostream& os) { write_mean_path(os, em.eta); })});
    }
    out.files.push_back({"rate.json", dump_json(result)});
    if (c.write_integrand) {
        out.files.push_back({"integrand.csv", render([&](std::ostream& os) {
                                 os << 't';
                                 for (std::size_t x = 0; x <= flow.n_max(); ++x) {
                                     os << ",x" << x;
                                 }
                                 os << '\n';
                                 for (std::size_t k = 0; k < flow.grid().steps(); ++k) {
                                     os << format_double(flow.grid().time(k));
                                     for (std::size_t x = 0; x <= flow.n_max(); ++x) {
                                         os << ',' << format_double(report.integrand[k * flow.levels() + x]);
                                     }
                                     os << '\n';
                                 }
                             })});
    }
    out.summary = "rate: I=" + format_double(report.value) + (report.ac_violation ? " (AC violation)" : "");
    return out;
}

RunOutput cmd_estimate(Context& ctx) {
    const auto& c = ctx.cfg.estimate;
    const EventSpec spec = build_event(ctx, c.event);
    SimConfig sim{ctx.model(), c.N, ctx.cfg.seed, c.safety};
    Estimate e;
    if (c.importance) {
        const TiltField tilt = cli::build_tilt(c.tilt, ctx.model(), &c.event, ctx.cfg.base_dir, &ctx.inputs);
        e = estimate_importance(spec, sim, tilt, c.reps, ctx.threads);
    } else {
        e = estimate_naive(spec, sim, c.reps, ctx.threads);
    }
    RunOutput out;
    out.files = {{"estimate.csv", "N,reps,method,p_hat,std_err,log_p_hat\n" + estimate_row(c.N, e) + "\n"},
                 {"summary.json", dump_json(Json{{"event", spec.description}, {"estimate", estimate_json(e)}})}};
    out.summary = "estimate: p_hat=" + format_double(e.p_hat) + " std_err=" + format_double(e.std_err);
    return out;
}

RunOutput cmd_decay_fit(Context& ctx) {
    const auto& c = ctx.cfg.decay;
    const EventSpec spec = build_event(ctx, c.event);
    TiltField tilt;
    const TiltField* use = nullptr;
    if (!c.importance) {
        tilt = TiltField::zero(TimeGrid(ctx.horizon(), 1));
        use = &tilt;
    } else if (c.tilt.kind != cli::TiltConfig::Kind::Cramer) {
        tilt = cli::build_tilt(c.tilt, ctx.model(), &c.event, ctx.cfg.base_dir, &ctx.inputs);
        use = &tilt;
    }
    const DecayFit fit = decay_rate_fit(spec, ctx.model(), c.Ns, c.reps, use, ctx.cfg.seed, ctx.threads);
    std::ostringstream csv;
    csv << "N,reps,method,p_hat,std_err,log_p_hat,residual\n";
    Json points = Json::array();
    for (const auto& p : fit.points) {
        csv << estimate_row(p.N, p.estimate) << ',' << format_double(p.residual) << '\n';
        Json pj = estimate_json(p.estimate);
        pj["N"] = p.N;
        points.push_back(pj);
    }
    RunOutput out;
    out.files = {{"decay.csv", csv.str()},
                 {"fit.json", dump_json(Json{{"slope", cli::json_number(fit.slope)},
                                             {"intercept", cli::json_number(fit.intercept)},
                                             {"r_squared", cli::json_number(fit.r_squared)},
                                             {"event", spec.description},
                                             {"points", points}})}};
    out.summary = "decay-fit: slope=" + format_double(fit.slope) + " R2=" + format_double(fit.r_squared);
    return out;
}

RunOutput cmd_lln(Context& ctx) {
    const auto& c = ctx.cfg.lln;
    const double dt = c.dt > 0.0 ? c.dt : ctx.horizon() / 100.0;
    const TimeGrid grid = TimeGrid::uniform(ctx.horizon(), dt);
    std::size_t n_max = c.n_max;
    if (n_max == 0) {
        n_max = auto_n_max(mean_limit_path(ctx, grid.dt()).terminal());
    }
    const auto rows = lln_study(ctx.model(), c.Ns, c.reps, grid, n_max, ctx.cfg.seed, ctx.threads);
    std::ostringstream csv;
    csv << "N,reps,mean_w1,std_err\n";
    for (const auto& r : rows) {
        csv << r.N << ',' << r.reps << ',' << format_double(r.mean_w1) << ',' << format_double(r.std_err) << '\n';
    }
    RunOutput out;
    out.files = {{"lln.csv", csv.str()}};
    out.summary = "lln: " + std::to_string(rows.size()) + " rows";
    return out;
}

const std::map<std::string, std::pair<std::string, std::function<RunOutput(Context&)>>>& commands() {
    static const std::map<std::string, std::pair<std::string, std::function<RunOutput(Context&)>>> table{
        {"simulate", {"Simulate the N-component system (optionally tilted)", cmd_simulate}},
        {"mean-limit", {"Solve the mean-field limit and its Poisson law", cmd_mean_limit}},
        {"perturbed-law", {"Solve the tilted limit law", cmd_perturbed_law}},
        {"rate", {"Evaluate the rate function of a flow", cmd_rate}},
        {"estimate", {"Estimate a rare-event probability", cmd_estimate}},
        {"decay-fit", {"Fit the exponential decay rate over N", cmd_decay_fit}},
        {"lln", {"Law-of-large-numbers study", cmd_lln}},
    };
    return table;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::ios_base::failure("cannot open " + p.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << content;
    os.flush();
    if (!os) {
        throw std::ios_base::failure("cannot write " + p.string());
    }
}

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::size_t threads = 0;
};

int execute(const std::string& command, const Flags& flags, bool seed_set, bool threads_set, std::ostream& out) {
    const fs::path config_path(flags.config);
    const std::string text = read_file(config_path);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("", std::string("cannot parse configuration: ") + e.what());
    }
    std::string base_dir = fs::absolute(config_path).parent_path().string();
    const YAML::Node& view = root;
    if (view.IsMap() && view["manifest_version"]) {
        const YAML::Node cfg = view["config"];
        if (!cfg || !cfg.IsMap()) {
            throw ConfigError("config", "manifest has no config section");
        }
        if (view["base_dir"] && view["base_dir"].IsScalar()) {
            base_dir = view["base_dir"].Scalar();
        }
        root = cfg;
    }
    Json config = cli::yaml_to_json(root);
    if (seed_set) {
        config["seed"] = flags.seed;
    }
    if (threads_set) {
        config["threads"] = flags.threads;
    }

    Context ctx;
    ctx.cfg = cli::parse_config(YAML::Load(config.dump()), base_dir);
    if (!config.contains("seed")) {
        config["seed"] = ctx.cfg.seed;
    }
    ctx.threads = ctx.cfg.threads;
    ctx.inputs["config"] = text;
    require_valid(ctx.model());

    RunOutput result = commands().at(command).second(ctx);

    const fs::path dir(flags.out);
    fs::create_directories(dir);
    for (const auto& f : result.files) {
        write_file(dir / f.name, f.content);
    }
    const fs::path manifest = dir / "manifest.json";
    write_file(manifest, dump_json(cli::make_manifest(command, config, base_dir, ctx.inputs, result.files)));
    out << result.summary << '\n' << manifest.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-field nonlinear Hawkes toolkit", "mfhawkes"};
    app.require_subcommand(1);
    Flags flags;
    for (const auto& [name, entry] : commands()) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", flags.config, "YAML configuration or a previous manifest.json")->required();
        sub->add_option("--seed", flags.seed, "Seed (overrides the configuration)");
        sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
        sub->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            for (const CLI::App* sub : app.get_subcommands()) {
                out << sub->help();
            }
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    const CLI::App* sub = app.get_subcommands().front();
    try {
        return execute(sub->get_name(), flags, sub->count("--seed") > 0, sub->count("--threads") > 0, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const AssumptionViolation& e) {
        err << "assumption violated: " << e.what() << '\n';
        return kExitAssumption;
    } catch (const DomainError& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const OverflowError& e) {
        err << "numerical failure: " << e.what() << " (required n_max " << e.required_n_max() << ")\n";
        return kExitNumeric;
    } catch (const std::ios_base::failure& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace mfhawkes
