#include "ergoid/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ergoid/errors.hpp"

namespace ergoid {

namespace {

/// Reads keys from one TOML table and rejects any key nobody asked for.
class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    void read(const std::string& key, std::size_t& out) {
        if (const auto* node = find(key)) out = to_count(*node, key);
    }
    void read(const std::string& key, int& out) {
        if (const auto* node = find(key)) out = static_cast<int>(to_integer(*node, key));
    }
    void read(const std::string& key, double& out) {
        if (const auto* node = find(key)) out = to_double(*node, key);
    }
    void read(const std::string& key, std::optional<double>& out) {
        if (const auto* node = find(key)) out = to_double(*node, key);
    }
    void read(const std::string& key, bool& out) {
        if (const auto* node = find(key)) {
            const auto v = node->value<bool>();
            if (!v) fail(key, "must be a boolean");
            out = *v;
        }
    }
    void read(const std::string& key, std::string& out) {
        if (const auto* node = find(key)) {
            const auto v = node->value<std::string>();
            if (!v) fail(key, "must be a string");
            out = *v;
        }
    }
    void read(const std::string& key, std::vector<std::size_t>& out) {
        if (const auto* node = find(key)) {
            out.clear();
            for (const auto& item : array_of(*node, key)) out.push_back(to_count(item, key));
        }
    }
    void read(const std::string& key, std::vector<double>& out) {
        if (const auto* node = find(key)) {
            out.clear();
            for (const auto& item : array_of(*node, key)) out.push_back(to_double(item, key));
        }
    }

    void reject_unknown(const std::set<std::string>& subsections = {}) const {
        if (!table_) return;
        for (const auto& [key, node] : *table_) {
            const std::string k(key.str());
            if (!seen_.contains(k) && !subsections.contains(k)) {
                throw UsageError("unknown configuration key '" + qualified(k) + "'");
            }
        }
    }

private:
    const toml::node* find(const std::string& key) {
        seen_.insert(key);
        if (!table_) return nullptr;
        return table_->get(key);
    }

    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw UsageError("configuration key '" + qualified(key) + "' " + why);
    }

    std::int64_t to_integer(const toml::node& node, const std::string& key) const {
        const auto v = node.value_exact<std::int64_t>();
        if (!v) fail(key, "must be an integer");
        return *v;
    }
    std::size_t to_count(const toml::node& node, const std::string& key) const {
        const auto v = to_integer(node, key);
        if (v < 0) fail(key, "must be nonnegative");
        return static_cast<std::size_t>(v);
    }
    double to_double(const toml::node& node, const std::string& key) const {
        const auto v = node.value<double>();
        if (!v) fail(key, "must be a number");
        return *v;
    }
    const toml::array& array_of(const toml::node& node, const std::string& key) const {
        const auto* arr = node.as_array();
        if (!arr) fail(key, "must be an array");
        return *arr;
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> seen_;
};

ScreenRegion parse_screen(const std::string& name) {
    if (name == "circle") return ScreenRegion::circle;
    if (name == "orbit_hull") return ScreenRegion::orbit_hull;
    throw UsageError("unknown screen region '" + name + "' (expected circle or orbit_hull)");
}

const toml::table* subtable(const toml::table& root, const char* name) {
    const auto* node = root.get(name);
    if (!node) return nullptr;
    const auto* t = node->as_table();
    if (!t) throw UsageError(std::string("configuration key '") + name + "' must be a table");
    return t;
}

}  // namespace

std::string to_string(ScreenRegion region) {
    return region == ScreenRegion::circle ? "circle" : "orbit_hull";
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ParameterError("invalid configuration: " + what);
    };
    require(max_freq >= 1, "map.nmax must be >= 1");
    require(dc_value > 0.0 && dc_value < 1.0, "map.dc must lie in (0, 1)");
    require(amplitude_budget >= 0.0, "map.amplitude_budget must be nonnegative");
    require(grid_points >= 1, "map.grid_points must be positive");
    require(xi_threshold >= 0.0, "map.xi_threshold must be nonnegative");
    require(max_retries >= 1, "map.max_retries must be positive");
    require(density_length >= 1 && density_bins >= 1, "dynamics counts must be positive");
    require(stride >= 1, "dynamics.stride must be positive");
    (void)strategy();
    require(!sparsity.empty() && !samples.empty() && !sigma.empty(), "grid axes must be nonempty");
    for (auto s : sparsity) require(s >= 1, "grid.sparsity entries must be positive");
    for (auto m : samples) require(m >= 1, "grid.samples entries must be positive");
    for (auto v : sigma) require(v >= 0.0, "grid.sigma entries must be nonnegative");
    require(trials >= 1, "grid.trials must be positive");
    require(lambda_constant > 0.0, "solver.lambda_constant must be positive");
    if (enforce_admissible_constant) {
        require(lambda_constant > 2.0 * std::sqrt(2.0),
                "solver.lambda_constant must exceed 2 sqrt(2) (set enforce_admissible_constant = false to override)");
    }
    if (lambda) require(*lambda >= 0.0, "solver.lambda must be nonnegative");
    require(noiseless_lambda > 0.0, "solver.noiseless_lambda must be positive");
    require(tolerance > 0.0, "solver.tolerance must be positive");
    require(max_iterations >= 1, "solver.max_iterations must be positive");
    require(c2 > 0.0, "theory.c2 must be positive");
}

ExperimentConfig parse_config(const std::string& toml_text) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "malformed TOML: " << e.description() << " (line " << e.source().begin.line << ")";
        throw UsageError(msg.str());
    }

    ExperimentConfig cfg;
    Section top(&root, "");
    static_assert(std::is_same_v<std::size_t, std::uint64_t>);
    top.read("seed", cfg.seed);
    top.read("threads", cfg.threads);
    top.read("output", cfg.output);
    top.read("record_timing", cfg.record_timing);
    top.reject_unknown({"map", "dynamics", "grid", "solver", "theory"});

    Section map(subtable(root, "map"), "map");
    map.read("nmax", cfg.max_freq);
    map.read("dc", cfg.dc_value);
    map.read("amplitude_budget", cfg.amplitude_budget);
    map.read("grid_points", cfg.grid_points);
    map.read("xi_threshold", cfg.xi_threshold);
    std::string screen = to_string(cfg.screen);
    map.read("screen", screen);
    cfg.screen = parse_screen(screen);
    map.read("max_retries", cfg.max_retries);
    map.reject_unknown();

    Section dyn(subtable(root, "dynamics"), "dynamics");
    dyn.read("burn_in", cfg.burn_in);
    dyn.read("density_length", cfg.density_length);
    dyn.read("density_bins", cfg.density_bins);
    dyn.read("sampling", cfg.sampling);
    dyn.read("stride", cfg.stride);
    dyn.reject_unknown();

    Section grid(subtable(root, "grid"), "grid");
    grid.read("sparsity", cfg.sparsity);
    grid.read("samples", cfg.samples);
    grid.read("sigma", cfg.sigma);
    grid.read("trials", cfg.trials);
    grid.reject_unknown();

    Section solver(subtable(root, "solver"), "solver");
    solver.read("lambda_constant", cfg.lambda_constant);
    solver.read("enforce_admissible_constant", cfg.enforce_admissible_constant);
    solver.read("lambda", cfg.lambda);
    solver.read("noiseless_lambda", cfg.noiseless_lambda);
    solver.read("tolerance", cfg.tolerance);
    solver.read("max_iterations", cfg.max_iterations);
    solver.read("symmetrize", cfg.symmetrize);
    solver.reject_unknown();

    Section theory(subtable(root, "theory"), "theory");
    theory.read("c2", cfg.c2);
    theory.reject_unknown();

    try {
        cfg.validate();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read configuration file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace ergoid
