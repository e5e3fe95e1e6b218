#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smartconf/config_io.hpp"
#include "smartconf/errors.hpp"
#include "smartconf/harness.hpp"
#include "smartconf/profiler.hpp"
#include "smartconf/scenario.hpp"

namespace fs = std::filesystem;
using namespace smartconf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitScenario = 3;

// Bad flag values surface as UsageError; everything thrown later is a
// scenario or file problem.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::string plant;
    std::string scenario;
    std::string scenario_file;
    std::optional<std::int64_t> ticks;
};

std::string default_scenario_for(PlantKind kind) {
    switch (kind) {
    case PlantKind::bounded_queue: return "hb3813-two-phase";
    case PlantKind::write_buffer: return "hb2149-goal-shift";
    case PlantKind::dual_queue: return "dualqueue-readwrite";
    }
    return "hb3813-two-phase";
}

Scenario load_scenario(const CommonFlags& flags) {
    std::optional<PlantKind> kind;
    if (!flags.plant.empty()) {
        try {
            kind = parse_plant_kind(flags.plant);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    std::string name = flags.scenario;
    if (name.empty()) name = default_scenario_for(kind.value_or(PlantKind::bounded_queue));
    Scenario s = make_scenario(name);
    if (!flags.scenario_file.empty()) {
        s = apply_scenario_overrides(std::move(s), read_text_file(flags.scenario_file));
    }
    if (kind && s.kind != *kind) {
        throw UsageError("scenario '" + s.name + "' uses plant " + std::string(to_string(s.kind)) +
                         ", not " + flags.plant);
    }
    if (flags.ticks) {
        if (*flags.ticks <= 0) throw UsageError("--ticks must be positive");
        s.ticks = *flags.ticks;
    }
    s.validate();
    return s;
}

Mode parse_mode(const std::string& text) {
    try {
        return Mode::parse(text);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

SweepRange parse_range(const std::string& text) {
    try {
        return SweepRange::parse(text);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

// "a:b:step" or a comma list.
std::vector<double> parse_settings(const std::string& text) {
    if (text.find(':') != std::string::npos) return parse_range(text).values();
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(parse_real(item));
        } catch (const std::exception&) {
            throw UsageError("bad setting '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("--settings is empty");
    return out;
}

// "N" means seeds 0..N-1; "a:b" is inclusive; otherwise a comma list.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    try {
        if (const auto colon = text.find(':'); colon != std::string::npos) {
            const auto a = std::stoull(text.substr(0, colon));
            const auto b = std::stoull(text.substr(colon + 1));
            if (b < a) throw UsageError("seed range must be ascending");
            for (auto s = a; s <= b; ++s) out.push_back(s);
        } else if (text.find(',') != std::string::npos) {
            std::stringstream in(text);
            std::string item;
            while (std::getline(in, item, ',')) out.push_back(std::stoull(item));
        } else {
            const auto n = std::stoull(text);
            for (std::uint64_t s = 0; s < n; ++s) out.push_back(s);
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("bad --seeds '" + text + "'");
    }
    if (out.empty()) throw UsageError("--seeds selects nothing");
    return out;
}

std::vector<Mode> parse_modes(const std::string& text) {
    std::vector<Mode> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_mode(item));
    if (out.empty()) throw UsageError("--modes is empty");
    return out;
}

std::size_t find_knob(const Scenario& s, const std::string& knob) {
    if (knob.empty()) return 0;
    for (std::size_t k = 0; k < s.knobs.size(); ++k) {
        if (s.knobs[k].name == knob) return k;
    }
    throw UsageError("scenario '" + s.name + "' has no knob '" + knob + "'");
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text_file_atomic(out, text);
    }
}

std::string describe(const SynthesisReport& r) {
    std::ostringstream os;
    os << "alpha = " << format_real(r.alpha) << "\n"
       << "delta = " << format_real(r.delta) << "\n"
       << "lambda = " << format_real(r.lambda) << "\n"
       << "pole = " << format_real(r.pole) << "\n"
       << "virtual_goal = " << format_real(r.virtual_goal) << "\n";
    return os.str();
}

// Controllers for a run: from <dir>/<knob>.SmartConf.sys when --sys is
// given (synthesizing from samples if needed), otherwise by profiling.
std::vector<SynthesisReport> controllers_for(const Scenario& s, const std::string& sys_dir) {
    if (sys_dir.empty()) return synthesize_scenario(s);
    std::vector<SynthesisReport> out;
    for (const auto& spec : s.knobs) {
        const auto file = parse_knob_sys(read_text_file(fs::path(sys_dir) / knob_sys_filename(spec.name)));
        if (file.synthesized) {
            out.push_back(*file.synthesized);
        } else {
            out.push_back(synthesize(file.samples, s.goal.goal, s.goal.hard));
        }
    }
    return out;
}

std::string summary_text(const RunSummary& s) {
    std::ostringstream os;
    os << "scenario = " << s.scenario << "\n"
       << "mode = " << s.mode.str() << "\n"
       << "seed = " << s.seed << "\n"
       << "violations = " << s.violations << "\n"
       << "first_violation_tick = "
       << (s.first_violation_tick ? std::to_string(*s.first_violation_tick) : std::string("none")) << "\n"
       << "throughput_cum = " << csv_real(s.throughput_cum) << "\n"
       << "mean_abs_error = " << csv_real(s.mean_abs_error) << "\n";
    return os.str();
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--plant", flags.plant, "bounded_queue | write_buffer | dual_queue");
    cmd->add_option("--scenario", flags.scenario, "preset name");
    cmd->add_option("--scenario-file", flags.scenario_file, "key = value overrides");
    cmd->add_option("--ticks", flags.ticks, "run length override");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-tuning configuration toolkit: profile, synthesize, run, sweep, compare"};
    app.require_subcommand(1);

    CommonFlags common;
    std::uint64_t seed = 0;
    std::string out;
    std::string out_dir = ".";
    std::string mode_text = "smartconf";
    std::string sys_dir;
    std::string goals_path;
    std::string knob;
    std::string settings_text;
    int reps = 0;
    int settle = -1;
    std::string range_text;
    std::string seeds_text = "50";
    std::string modes_text = "smartconf,single-pole,no-virtual-goal";
    unsigned workers = 0;
    std::string summary_path;

    auto* profile = app.add_subcommand("profile", "profile one knob and write its system file");
    add_common(profile, common);
    profile->add_option("--knob", knob, "knob name (default: first knob)");
    profile->add_option("--settings", settings_text, "comma list or a:b:step");
    profile->add_option("--reps", reps, "cycles through the settings");
    profile->add_option("--settle", settle, "ticks held before each sample");
    profile->add_option("--seed", seed, "profiling seed (default: scenario's)");
    profile->add_option("--out", out_dir, "output directory");

    auto* synth = app.add_subcommand("synthesize", "fit a controller from a system file's samples");
    synth->add_option("--sys", sys_dir, "knob system file")->required();
    synth->add_option("--goals", goals_path, "goal file")->required();
    synth->add_option("--out", out, "rewrite target (default: in place; '-' prints only)");

    auto* run = app.add_subcommand("run", "run one scenario and emit the per-tick trace");
    add_common(run, common);
    run->add_option("--mode", mode_text, "smartconf | static:<v> | single-pole | no-virtual-goal");
    run->add_option("--seed", seed, "evaluation seed");
    run->add_option("--sys", sys_dir, "directory with <knob>.SmartConf.sys files");
    run->add_option("--out", out, "trace CSV path (default: stdout)");
    run->add_option("--summary", summary_path, "summary path (default: stderr)");

    auto* sweep = app.add_subcommand("sweep", "exhaustive static sweep for the best-static value");
    add_common(sweep, common);
    sweep->add_option("--range", range_text, "a:b:step")->required();
    sweep->add_option("--seed", seed, "evaluation seed");
    sweep->add_option("--workers", workers, "0 = hardware concurrency");
    sweep->add_option("--out", out, "CSV path (default: stdout)");

    auto* compare = app.add_subcommand("compare", "run several modes over several seeds");
    add_common(compare, common);
    compare->add_option("--seeds", seeds_text, "N, a:b or a comma list");
    compare->add_option("--modes", modes_text, "comma list of modes");
    compare->add_option("--mode", modes_text, "alias of --modes");
    compare->add_option("--workers", workers, "0 = hardware concurrency");
    compare->add_option("--out", out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*profile) {
            const auto s = load_scenario(common);
            const auto k = find_knob(s, knob);
            const auto& spec = s.knobs[k];
            const auto settings = settings_text.empty() ? spec.profile_settings : parse_settings(settings_text);
            if (reps == 0) reps = s.profile_reps;
            if (settle < 0) settle = s.profile_settle;
            if (reps < 1) throw UsageError("--reps must be >= 1");
            const auto profile_seed = profile->count("--seed") ? seed : s.profile_seed + k;

            KnobSysFile file;
            file.conf_name = spec.name;
            file.metric = s.metric;
            file.initial_conf = spec.initial;
            file.deputy_name = spec.deputy;
            file.samples = profile_knob(s, k, settings, reps, settle, profile_seed);
            fs::create_directories(out_dir);
            const auto path = fs::path(out_dir) / knob_sys_filename(spec.name);
            write_text_file_atomic(path, serialize_knob_sys(file));

            GoalFile goals;
            goals.goals[s.metric] = s.goal;
            const auto goal_path = fs::path(out_dir) / (s.metric + ".goals");
            write_text_file_atomic(goal_path, serialize_goal_file(goals));
            std::cout << path.string() << ": " << file.samples.size() << " samples\n"
                      << goal_path.string() << "\n";
        } else if (*synth) {
            auto file = parse_knob_sys(read_text_file(sys_dir));
            const auto goals = parse_goal_file(read_text_file(goals_path));
            const auto it = goals.goals.find(file.metric);
            if (it == goals.goals.end()) throw ConfigError("no goal for metric " + file.metric);
            file.synthesized = synthesize(file.samples, it->second.goal, it->second.hard);
            std::cout << describe(*file.synthesized);
            if (out != "-") write_text_file_atomic(out.empty() ? sys_dir : out, serialize_knob_sys(file));
        } else if (*run) {
            const auto s = load_scenario(common);
            const auto mode = parse_mode(mode_text);
            const auto result = mode.kind == ModeKind::static_value
                                    ? run_scenario(s, mode, seed, {})
                                    : run_scenario(s, mode, seed, controllers_for(s, sys_dir));
            emit(out, result.trace.to_csv());
            const auto text = summary_text(result.summary);
            if (summary_path.empty()) {
                std::cerr << text;
            } else {
                write_text_file_atomic(summary_path, text);
            }
        } else if (*sweep) {
            const auto s = load_scenario(common);
            const auto range = parse_range(range_text);
            const auto result = sweep_static(s, range, seed, workers);
            emit(out, result.to_csv());
            std::cerr << "best_static = "
                      << (result.best_static ? csv_real(*result.best_static) : std::string("none"))
                      << "\nbest_throughput = " << csv_real(result.best_throughput) << "\n";
        } else if (*compare) {
            const auto s = load_scenario(common);
            const auto seeds = parse_seeds(seeds_text);
            const auto modes = parse_modes(modes_text);
            emit(out, compare_modes(s, seeds, modes, workers).to_csv());
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitScenario;
    }
    return 0;
}
