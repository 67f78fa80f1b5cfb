#include "config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mfhawkes/errors.hpp"
#include "mfhawkes/estimator.hpp"
#include "mfhawkes/io.hpp"

namespace mfhawkes::cli {

namespace {

// Map view that remembers which keys were read, so leftovers can be rejected.
class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) {
            throw ConfigError(path_, "expected a mapping");
        }
    }

    const std::string& path() const noexcept { return path_; }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    YAML::Node get(const std::string& key) {
        seen_.insert(key);
        const YAML::Node& view = node_;  // const access does not insert
        return has(key) ? view[key] : YAML::Node(YAML::NodeType::Undefined);
    }

    double number(const std::string& key, double fallback) {
        const YAML::Node n = get(key);
        return n ? as_double(n, child(key)) : fallback;
    }

    double required_number(const std::string& key) {
        if (!has(key)) {
            throw ConfigError(child(key), "required field is missing");
        }
        return number(key, 0.0);
    }

    std::uint64_t unsigned_number(const std::string& key, std::uint64_t fallback) {
        const YAML::Node n = get(key);
        return n ? as_unsigned(n, child(key)) : fallback;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const YAML::Node n = get(key);
        if (!n) {
            return fallback;
        }
        if (!n.IsScalar()) {
            throw ConfigError(child(key), "expected a string");
        }
        return n.Scalar();
    }

    bool flag(const std::string& key, bool fallback) {
        const YAML::Node n = get(key);
        if (!n) {
            return fallback;
        }
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            throw ConfigError(child(key), "expected true or false");
        }
    }

    std::vector<double> numbers(const std::string& key) {
        const YAML::Node n = get(key);
        std::vector<double> out;
        if (!n) {
            return out;
        }
        if (!n.IsSequence()) {
            throw ConfigError(child(key), "expected a list of numbers");
        }
        for (std::size_t i = 0; i < n.size(); ++i) {
            out.push_back(as_double(n[i], child(key) + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) {
        const YAML::Node n = get(key);
        if (!n) {
            return fallback;
        }
        if (!n.IsSequence() || n.size() == 0) {
            throw ConfigError(child(key), "expected a non-empty list of positive integers");
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string p = child(key) + "[" + std::to_string(i) + "]";
            const auto v = as_unsigned(n[i], p);
            if (v == 0) {
                throw ConfigError(p, "must be positive");
            }
            out.push_back(static_cast<std::size_t>(v));
        }
        return out;
    }

    Section section(const std::string& key) { return Section(get(key), child(key)); }

    void finish() const {
        if (!node_ || !node_.IsMap()) {
            return;
        }
        for (const auto& kv : node_) {
            const std::string key = kv.first.Scalar();
            if (!seen_.count(key)) {
                throw ConfigError(child(key), "unknown key");
            }
        }
    }

    static double as_double(const YAML::Node& n, const std::string& path) {
        if (!n.IsScalar()) {
            throw ConfigError(path, "expected a number");
        }
        const std::string& s = n.Scalar();
        if (s == "inf" || s == ".inf") {
            return std::numeric_limits<double>::infinity();
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ConfigError(path, "expected a number, got '" + s + "'");
        }
        if (used != s.size()) {
            throw ConfigError(path, "expected a number, got '" + s + "'");
        }
        return v;
    }

    static std::uint64_t as_unsigned(const YAML::Node& n, const std::string& path) {
        if (!n.IsScalar()) {
            throw ConfigError(path, "expected a nonnegative integer");
        }
        const std::string& s = n.Scalar();
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError(path, "expected a nonnegative integer, got '" + s + "'");
        }
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError(path, "integer out of range");
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

void require_positive(double v, const std::string& path) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(path, "must be positive and finite");
    }
}

ModelSpec parse_model(Section s) {
    const double horizon = s.required_number("horizon");
    require_positive(horizon, s.child("horizon"));

    Section k = s.section("kernel");
    if (!s.has("kernel")) {
        throw ConfigError(k.path(), "required section is missing");
    }
    const std::string kf = k.text("family", "");
    std::optional<KernelSpec> kernel;
    try {
        if (kf == "exponential") {
            kernel = KernelSpec::exponential(k.number("rate", 1.0), k.number("scale", 1.0), horizon);
        } else if (kf == "piecewise_linear") {
            const YAML::Node knots = k.get("knots");
            if (!knots || !knots.IsSequence()) {
                throw ConfigError(k.child("knots"), "expected a list of [time, value] pairs");
            }
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < knots.size(); ++i) {
                const std::string p = k.child("knots") + "[" + std::to_string(i) + "]";
                if (!knots[i].IsSequence() || knots[i].size() != 2) {
                    throw ConfigError(p, "expected [time, value]");
                }
                pts.emplace_back(Section::as_double(knots[i][0], p), Section::as_double(knots[i][1], p));
            }
            kernel = KernelSpec::piecewise_linear(std::move(pts), horizon);
        } else if (kf == "zero") {
            kernel = KernelSpec::zero(horizon);
        } else {
            throw ConfigError(k.child("family"), "expected exponential, piecewise_linear or zero");
        }
    } catch (const DomainError& e) {
        throw ConfigError(k.path(), e.what());
    }
    k.finish();

    Section r = s.section("rate");
    if (!s.has("rate")) {
        throw ConfigError(r.path(), "required section is missing");
    }
    const std::string rf = r.text("family", "");
    std::optional<RateSpec> rate;
    try {
        if (rf == "constant") {
            rate = RateSpec::constant(r.required_number("c"));
        } else if (rf == "affine_clipped") {
            const double a = r.required_number("a");
            const double b = r.required_number("b");
            rate = RateSpec::affine_clipped(a, b, r.number("floor", a));
        } else if (rf == "sigmoidal") {
            rate = RateSpec::sigmoidal(r.required_number("lo"), r.required_number("hi"), r.number("slope", 1.0),
                                       r.number("center", 0.0));
        } else {
            throw ConfigError(r.child("family"), "expected constant, affine_clipped or sigmoidal");
        }
    } catch (const DomainError& e) {
        throw ConfigError(r.path(), e.what());
    }
    r.finish();
    s.finish();
    return ModelSpec{*kernel, *rate};
}

TiltConfig parse_tilt(Section s, TiltConfig::Kind fallback) {
    TiltConfig t;
    t.kind = fallback;
    if (!s.has("kind")) {
        s.finish();
        return t;
    }
    const std::string kind = s.text("kind", "");
    if (kind == "zero") {
        t.kind = TiltConfig::Kind::Zero;
    } else if (kind == "constant") {
        t.kind = TiltConfig::Kind::Constant;
        t.value = s.required_number("value");
    } else if (kind == "levels") {
        t.kind = TiltConfig::Kind::Levels;
        t.values = s.numbers("values");
        if (t.values.empty()) {
            throw ConfigError(s.child("values"), "expected at least one level value");
        }
        t.tail = s.number("tail", 0.0);
    } else if (kind == "csv") {
        t.kind = TiltConfig::Kind::Csv;
        t.path = s.text("path", "");
        if (t.path.empty()) {
            throw ConfigError(s.child("path"), "required field is missing");
        }
    } else if (kind == "cramer") {
        t.kind = TiltConfig::Kind::Cramer;
    } else {
        throw ConfigError(s.child("kind"), "expected zero, constant, levels, csv or cramer");
    }
    t.dt = s.number("dt", 0.0);
    if (t.dt < 0.0) {
        throw ConfigError(s.child("dt"), "must be nonnegative");
    }
    s.finish();
    return t;
}

EventConfig parse_event(Section s) {
    EventConfig e;
    const std::string kind = s.text("kind", "mean_exceeds");
    if (kind == "mean_exceeds") {
        e.kind = EventConfig::Kind::MeanExceeds;
        e.a = s.required_number("a");
        e.at = s.number("at", 0.0);
    } else if (kind == "w1_ball") {
        e.kind = EventConfig::Kind::W1Ball;
        e.radius = s.required_number("radius");
        require_positive(e.radius, s.child("radius"));
        e.dt = s.number("dt", 0.0);
        e.n_max = s.unsigned_number("n_max", 0);
    } else {
        throw ConfigError(s.child("kind"), "expected mean_exceeds or w1_ball");
    }
    s.finish();
    return e;
}

bool parse_method(Section& s, const std::string& key) {
    const std::string m = s.text(key, "importance");
    if (m == "importance") {
        return true;
    }
    if (m == "naive") {
        return false;
    }
    throw ConfigError(s.child(key), "expected importance or naive");
}

}  // namespace

RunConfig parse_config(const YAML::Node& root, const std::string& base_dir) {
    if (!root || !root.IsMap()) {
        throw ConfigError("", "configuration must be a mapping");
    }
    RunConfig cfg;
    cfg.base_dir = base_dir;
    Section top(root, "");
    if (!top.has("model")) {
        throw ConfigError("model", "required section is missing");
    }
    cfg.model = parse_model(top.section("model"));
    cfg.seed = top.unsigned_number("seed", 0);
    cfg.threads = static_cast<std::size_t>(top.unsigned_number("threads", 0));

    {
        Section s = top.section("simulate");
        auto& c = cfg.simulate;
        c.N = static_cast<std::size_t>(s.unsigned_number("N", c.N));
        if (c.N == 0) {
            throw ConfigError(s.child("N"), "must be positive");
        }
        c.grid_dt = s.number("grid_dt", 0.0);
        c.n_max = static_cast<std::size_t>(s.unsigned_number("n_max", 0));
        c.safety = s.number("safety", 1.0);
        if (!(c.safety >= 1.0)) {
            throw ConfigError(s.child("safety"), "must be >= 1");
        }
        c.max_candidates = s.unsigned_number("max_candidates", c.max_candidates);
        c.tilt = parse_tilt(s.section("tilt"), TiltConfig::Kind::None);
        s.finish();
    }
    {
        Section s = top.section("mean_limit");
        auto& c = cfg.mean_limit;
        c.options.dt = s.number("dt", 0.0);
        const std::string q = s.text("quadrature", "trapezoid");
        if (q == "trapezoid") {
            c.options.quadrature = VolterraQuadrature::Trapezoid;
        } else if (q == "left_endpoint") {
            c.options.quadrature = VolterraQuadrature::LeftEndpoint;
        } else {
            throw ConfigError(s.child("quadrature"), "expected trapezoid or left_endpoint");
        }
        c.options.tolerance = s.number("tolerance", c.options.tolerance);
        c.options.max_iterations = static_cast<int>(s.unsigned_number("max_iterations", 200));
        c.n_max = static_cast<std::size_t>(s.unsigned_number("n_max", 0));
        s.finish();
    }
    {
        Section s = top.section("perturbed_law");
        auto& c = cfg.perturbed;
        c.options.dt = s.number("dt", 0.0);
        c.options.n_max = static_cast<std::size_t>(s.unsigned_number("n_max", c.options.n_max));
        c.options.clip = s.number("clip", c.options.clip);
        c.options.deficit_tolerance = s.number("deficit_tolerance", c.options.deficit_tolerance);
        c.options.negativity_tolerance = s.number("negativity_tolerance", c.options.negativity_tolerance);
        c.tilt = parse_tilt(s.section("tilt"), TiltConfig::Kind::Zero);
        s.finish();
    }
    {
        Section s = top.section("rate");
        auto& c = cfg.rate;
        const std::string flow = s.text("flow", "mean_field");
        if (flow == "mean_field") {
            c.flow = RateSection::Flow::MeanField;
        } else if (flow == "perturbed") {
            c.flow = RateSection::Flow::Perturbed;
        } else if (flow == "csv") {
            c.flow = RateSection::Flow::Csv;
        } else {
            throw ConfigError(s.child("flow"), "expected mean_field, perturbed or csv");
        }
        c.flow_path = s.text("flow_path", "");
        if (c.flow == RateSection::Flow::Csv && c.flow_path.empty()) {
            throw ConfigError(s.child("flow_path"), "required when flow is csv");
        }
        c.dt = s.number("dt", 0.0);
        c.n_max = static_cast<std::size_t>(s.unsigned_number("n_max", 0));
        c.tilt = parse_tilt(s.section("tilt"), TiltConfig::Kind::Zero);
        c.options.eps_num = s.number("eps_num", c.options.eps_num);
        c.options.eps_floor = s.number("eps_floor", c.options.eps_floor);
        c.options.resolve_floor = s.number("resolve_floor", c.options.resolve_floor);
        c.options.substeps = static_cast<int>(s.unsigned_number("substeps", 64));
        c.mean_process = s.flag("mean_process", true);
        if (s.has("endpoint")) {
            c.endpoint = s.number("endpoint", 0.0);
        }
        c.write_integrand = s.flag("write_integrand", false);
        s.finish();
    }
    {
        Section s = top.section("estimate");
        auto& c = cfg.estimate;
        c.N = static_cast<std::size_t>(s.unsigned_number("N", c.N));
        c.reps = static_cast<std::size_t>(s.unsigned_number("reps", c.reps));
        c.importance = parse_method(s, "method");
        c.safety = s.number("safety", 1.0);
        if (s.has("event")) {
            c.event = parse_event(s.section("event"));
        } else {
            s.get("event");
        }
        c.tilt = parse_tilt(s.section("tilt"), TiltConfig::Kind::Cramer);
        s.finish();
    }
    {
        Section s = top.section("decay_fit");
        auto& c = cfg.decay;
        c.Ns = s.counts("Ns", c.Ns);
        c.reps = static_cast<std::size_t>(s.unsigned_number("reps", c.reps));
        c.importance = parse_method(s, "method");
        if (s.has("event")) {
            c.event = parse_event(s.section("event"));
        } else {
            s.get("event");
        }
        c.tilt = parse_tilt(s.section("tilt"), TiltConfig::Kind::Cramer);
        s.finish();
    }
    {
        Section s = top.section("lln");
        auto& c = cfg.lln;
        c.Ns = s.counts("Ns", c.Ns);
        c.reps = static_cast<std::size_t>(s.unsigned_number("reps", c.reps));
        c.dt = s.number("dt", 0.0);
        c.n_max = static_cast<std::size_t>(s.unsigned_number("n_max", 0));
        s.finish();
    }
    top.finish();
    return cfg;
}

TiltField build_tilt(const TiltConfig& cfg, const ModelSpec& model, const EventConfig* event,
                     const std::string& base_dir, std::map<std::string, std::string>* inputs) {
    const double horizon = model.horizon();
    const TimeGrid grid = cfg.dt > 0.0 ? TimeGrid::uniform(horizon, cfg.dt) : TimeGrid(horizon, 1);
    switch (cfg.kind) {
        case TiltConfig::Kind::None:
        case TiltConfig::Kind::Zero:
            return TiltField::zero(grid);
        case TiltConfig::Kind::Constant:
            return TiltField::constant(grid, cfg.value);
        case TiltConfig::Kind::Levels: {
            TiltField t(grid, cfg.values.size() - 1, cfg.tail);
            for (std::size_t k = 0; k < t.cells(); ++k) {
                for (std::size_t x = 0; x < cfg.values.size(); ++x) {
                    t(k, x) = cfg.values[x];
                }
            }
            return t;
        }
        case TiltConfig::Kind::Csv: {
            const std::filesystem::path p = std::filesystem::path(base_dir) / cfg.path;
            std::ifstream in(p, std::ios::binary);
            if (!in) {
                throw std::ios_base::failure("cannot open tilt file " + p.string());
            }
            std::stringstream buf;
            buf << in.rdbuf();
            if (inputs != nullptr) {
                (*inputs)[cfg.path] = buf.str();
            }
            TiltField t = read_tilt_field(buf);
            if (std::abs(t.grid().horizon() - horizon) > 1e-9 * horizon) {
                throw ConfigError("tilt.path", "tilt grid horizon does not match the model horizon");
            }
            return t;
        }
        case TiltConfig::Kind::Cramer: {
            if (event == nullptr || event->kind != EventConfig::Kind::MeanExceeds) {
                throw ConfigError("tilt.kind", "cramer tilts need a mean_exceeds event");
            }
            return cramer_tilt(MeanExceeds{event->a, event->at > 0.0 ? event->at : horizon}, model);
        }
    }
    return TiltField::zero(grid);
}

}  // namespace mfhawkes::cli
