#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartconf/profiler.hpp"

namespace smartconf {

// Per-knob system file, `<ConfName>.SmartConf.sys`.
//
//   smartconf-sys v1
//   conf_name = max.queue.size
//   metric = memory.used
//   initial_conf = 0
//   deputy_name = queue.size          (optional)
//   alpha = ... delta = ... lambda = ... pole = ... virtual_goal = ...
//                                      (optional, all five or none)
//   samples:
//   sample,<setting>,<perf>
//
// Blank lines and lines starting with '#' are ignored. Reals are written with
// 17 significant digits, so parse(serialize(x)) == x.
struct KnobSysFile {
    int format_version = 1;
    std::string conf_name;
    std::string metric;
    double initial_conf = 0.0;
    std::optional<std::string> deputy_name;
    std::optional<SynthesisReport> synthesized;
    std::vector<ProfileSample> samples;
};

struct GoalEntry {
    double goal = 0.0;
    bool hard = false;
    bool super_hard = false;

    friend bool operator==(const GoalEntry&, const GoalEntry&) = default;
};

// `<metric>.goal = v`, `<metric>.goal.hard = 0|1`, `<metric>.goal.super_hard = 0|1`.
struct GoalFile {
    std::map<std::string, GoalEntry> goals;
};

struct KnobEntry {
    std::string conf_name;
    std::string metric;

    friend bool operator==(const KnobEntry&, const KnobEntry&) = default;
};

// Global `SmartConf.sys`: `profiling = 0|1` plus `knob,<conf_name>,<metric>` lines.
struct GlobalSysFile {
    bool profiling_enabled = false;
    std::vector<KnobEntry> knobs;
};

KnobSysFile parse_knob_sys(std::string_view text);
std::string serialize_knob_sys(const KnobSysFile& file);

GoalFile parse_goal_file(std::string_view text);
std::string serialize_goal_file(const GoalFile& file);

GlobalSysFile parse_global_sys(std::string_view text);
std::string serialize_global_sys(const GlobalSysFile& file);

// Locale-independent real formatting (shortest form that fits 17 significant digits).
std::string format_real(double value);
// Accepts only the C-locale decimal syntax; throws InvalidArgument otherwise.
double parse_real(std::string_view text);

struct KeyValueLine {
    std::size_t line;
    std::string key;
    std::string value;
};

// Shared `key = value` reader (comments and blank lines skipped).
std::vector<KeyValueLine> parse_key_values(std::string_view text);

std::string knob_sys_filename(std::string_view conf_name);
inline constexpr std::string_view global_sys_filename = "SmartConf.sys";

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Appends profiling samples to an existing per-knob system file.
void append_samples(const std::filesystem::path& sys_path, std::span<const ProfileSample> samples);

} // namespace smartconf
