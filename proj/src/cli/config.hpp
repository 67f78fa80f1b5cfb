#ifndef MFHAWKES_CLI_CONFIG_HPP
#define MFHAWKES_CLI_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/rate.hpp"
#include "mfhawkes/types.hpp"

namespace mfhawkes::cli {

struct TiltConfig {
    enum class Kind { None, Zero, Constant, Levels, Csv, Cramer };
    Kind kind = Kind::None;
    double value = 0.0;
    double dt = 0.0;  // 0: one cell over the whole horizon
    std::vector<double> values;
    double tail = 0.0;
    std::string path;
};

struct EventConfig {
    enum class Kind { MeanExceeds, W1Ball };
    Kind kind = Kind::MeanExceeds;
    double a = 0.0;
    double at = 0.0;       // 0: horizon
    double radius = 0.0;
    double dt = 0.0;       // W1 ball center grid; 0: T/100
    std::size_t n_max = 0; // 0: automatic
};

struct SimulateSection {
    std::size_t N = 100;
    double grid_dt = 0.0;    // 0: T/100
    std::size_t n_max = 0;   // 0: the largest realized count
    double safety = 1.0;
    std::uint64_t max_candidates = 100'000'000;
    TiltConfig tilt;
};

struct MeanLimitSection {
    MeanLimitOptions options;  // dt 0 means 1e-3 T
    std::size_t n_max = 0;     // 0: automatic
};

struct PerturbedSection {
    PerturbedLawOptions options;  // dt 0 means 1e-3 T
    TiltConfig tilt;
};

struct RateSection {
    enum class Flow { MeanField, Perturbed, Csv };
    Flow flow = Flow::MeanField;
    std::string flow_path;
    double dt = 0.0;
    std::size_t n_max = 0;
    TiltConfig tilt;
    RateOptions options;
    bool mean_process = true;
    std::optional<double> endpoint;
    bool write_integrand = false;
};

struct EstimateSection {
    std::size_t N = 50;
    std::size_t reps = 10000;
    bool importance = true;
    EventConfig event;
    TiltConfig tilt;  // default: Cramer
    double safety = 1.0;
};

struct DecaySection {
    std::vector<std::size_t> Ns{25, 50, 100, 200};
    std::size_t reps = 10000;
    bool importance = true;
    EventConfig event;
    TiltConfig tilt;
};

struct LlnSection {
    std::vector<std::size_t> Ns{10, 100, 1000};
    std::size_t reps = 50;
    double dt = 0.0;
    std::size_t n_max = 0;
};

struct RunConfig {
    std::optional<ModelSpec> model;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    SimulateSection simulate;
    MeanLimitSection mean_limit;
    PerturbedSection perturbed;
    RateSection rate;
    EstimateSection estimate;
    DecaySection decay;
    LlnSection lln;
    /// Directory used to resolve relative input paths.
    std::string base_dir;
};

/// Strict parse of the configuration tree; every unknown key and malformed
/// value raises ConfigError naming its path.
RunConfig parse_config(const YAML::Node& root, const std::string& base_dir);

/// Builds the tilt field for a model horizon. Cramer tilts need `event`.
TiltField build_tilt(const TiltConfig& cfg, const ModelSpec& model, const EventConfig* event,
                     const std::string& base_dir, std::map<std::string, std::string>* inputs);

}  // namespace mfhawkes::cli

#endif  // MFHAWKES_CLI_CONFIG_HPP
