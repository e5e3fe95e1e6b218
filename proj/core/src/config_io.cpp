#include "smartconf/config_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "smartconf/controller.hpp"
#include "smartconf/errors.hpp"

namespace smartconf {

namespace {

constexpr std::string_view kSysHeader = "smartconf-sys v";
constexpr std::string_view kSamplesSentinel = "samples:";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool skippable(std::string_view line) {
    return line.empty() || line.front() == '#';
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        line = trim(line);
        if (!skippable(line)) fn(lineno, line);
    }
}

std::pair<std::string, std::string> split_key_value(std::size_t lineno, std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
        throw ParseError(lineno, "expected 'key = value', got '" + std::string(line) + "'");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
        throw ParseError(lineno, "empty key or value");
    }
    return {std::string(key), std::string(value)};
}

double real_at(std::size_t lineno, std::string_view text) {
    try {
        return parse_real(text);
    } catch (const InvalidArgument& e) {
        throw ParseError(lineno, e.what());
    }
}

bool flag_at(std::size_t lineno, std::string_view text) {
    if (text == "0") return false;
    if (text == "1") return true;
    throw ParseError(lineno, "expected 0 or 1, got '" + std::string(text) + "'");
}

bool valid_name(std::string_view name) {
    if (name.empty() || name.front() == '#') return false;
    for (char c : name) {
        if (c == ',' || c == '=' || c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
    }
    return true;
}

void require_name(std::string_view what, std::string_view name) {
    if (!valid_name(name)) {
        throw ConfigError("invalid " + std::string(what) + " '" + std::string(name) + "'");
    }
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        parts.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return parts;
}

void check_synthesized(const SynthesisReport& r) {
    if (!(r.delta >= 1.0) || !(r.lambda >= 0.0) || r.alpha == 0.0) {
        throw ConfigError("synthesized parameters out of range");
    }
    if (compute_pole(r.delta) != r.pole) {
        throw ConfigError("synthesized pole does not match delta");
    }
}

} // namespace

std::string format_real(double value) {
    if (!std::isfinite(value)) {
        throw InvalidArgument("cannot format a non-finite real");
    }
    std::array<char, 64> buf{};
    const auto res =
        std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

double parse_real(std::string_view text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value,
                                     std::chars_format::general);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw InvalidArgument("not a finite real: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<KeyValueLine> parse_key_values(std::string_view text) {
    std::vector<KeyValueLine> out;
    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        auto [k, v] = split_key_value(lineno, line);
        out.push_back({lineno, std::move(k), std::move(v)});
    });
    return out;
}

KnobSysFile parse_knob_sys(std::string_view text) {
    KnobSysFile f;
    bool header_seen = false;
    bool in_samples = false;
    std::set<std::string> seen;
    std::array<std::optional<double>, 5> synth{};
    constexpr std::array<std::string_view, 5> synth_keys = {"alpha", "delta", "lambda", "pole",
                                                            "virtual_goal"};

    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (!header_seen) {
            if (line.substr(0, kSysHeader.size()) != kSysHeader) {
                throw ParseError(lineno, "missing 'smartconf-sys v1' header");
            }
            const auto version = line.substr(kSysHeader.size());
            if (version != "1") {
                throw ParseError(lineno, "unsupported format version '" + std::string(version) + "'");
            }
            header_seen = true;
            return;
        }
        if (in_samples) {
            const auto parts = split_commas(line);
            if (parts.size() != 3 || parts[0] != "sample") {
                throw ParseError(lineno, "expected 'sample,<setting>,<perf>'");
            }
            f.samples.push_back({real_at(lineno, parts[1]), real_at(lineno, parts[2])});
            return;
        }
        if (line == kSamplesSentinel) {
            in_samples = true;
            return;
        }
        auto [key, value] = split_key_value(lineno, line);
        if (!seen.insert(key).second) {
            throw ParseError(lineno, "duplicate key '" + key + "'");
        }
        if (key == "conf_name") {
            if (!valid_name(value)) throw ParseError(lineno, "invalid conf_name");
            f.conf_name = value;
        } else if (key == "metric") {
            if (!valid_name(value)) throw ParseError(lineno, "invalid metric");
            f.metric = value;
        } else if (key == "initial_conf") {
            f.initial_conf = real_at(lineno, value);
        } else if (key == "deputy_name") {
            if (!valid_name(value)) throw ParseError(lineno, "invalid deputy_name");
            f.deputy_name = value;
        } else {
            bool matched = false;
            for (std::size_t i = 0; i < synth_keys.size(); ++i) {
                if (key == synth_keys[i]) {
                    synth[i] = real_at(lineno, value);
                    matched = true;
                }
            }
            if (!matched) throw ParseError(lineno, "unknown key '" + key + "'");
        }
    });

    if (!header_seen) throw ParseError(1, "empty system file");
    for (std::string_view required : {"conf_name", "metric", "initial_conf"}) {
        if (!seen.contains(std::string(required))) {
            throw ConfigError("system file missing '" + std::string(required) + "'");
        }
    }
    const auto present = std::count_if(synth.begin(), synth.end(),
                                       [](const auto& v) { return v.has_value(); });
    if (present == 5) {
        f.synthesized = SynthesisReport{*synth[0], *synth[1], *synth[2], *synth[3], *synth[4]};
        check_synthesized(*f.synthesized);
    } else if (present != 0) {
        throw ConfigError("synthesized parameters must be all present or all absent");
    }
    return f;
}

std::string serialize_knob_sys(const KnobSysFile& f) {
    if (f.format_version != 1) {
        throw ConfigError("unsupported format version " + std::to_string(f.format_version));
    }
    require_name("conf_name", f.conf_name);
    require_name("metric", f.metric);
    std::string out;
    out += "smartconf-sys v1\n";
    out += "conf_name = " + f.conf_name + "\n";
    out += "metric = " + f.metric + "\n";
    out += "initial_conf = " + format_real(f.initial_conf) + "\n";
    if (f.deputy_name) {
        require_name("deputy_name", *f.deputy_name);
        out += "deputy_name = " + *f.deputy_name + "\n";
    }
    if (f.synthesized) {
        check_synthesized(*f.synthesized);
        const auto& r = *f.synthesized;
        out += "alpha = " + format_real(r.alpha) + "\n";
        out += "delta = " + format_real(r.delta) + "\n";
        out += "lambda = " + format_real(r.lambda) + "\n";
        out += "pole = " + format_real(r.pole) + "\n";
        out += "virtual_goal = " + format_real(r.virtual_goal) + "\n";
    }
    if (!f.samples.empty()) {
        out += "samples:\n";
        for (const auto& s : f.samples) {
            out += "sample," + format_real(s.setting) + "," + format_real(s.perf) + "\n";
        }
    }
    return out;
}

GoalFile parse_goal_file(std::string_view text) {
    struct Partial {
        std::optional<double> goal;
        std::optional<bool> hard;
        std::optional<bool> super_hard;
        std::size_t line = 0;
    };
    std::map<std::string, Partial> partial;

    constexpr std::string_view kSuperHard = ".goal.super_hard";
    constexpr std::string_view kHard = ".goal.hard";
    constexpr std::string_view kGoal = ".goal";
    const auto ends_with = [](std::string_view s, std::string_view suffix) {
        return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
    };

    for (const auto& kv : parse_key_values(text)) {
        const std::string_view key = kv.key;
        std::string metric;
        auto assign = [&](auto& slot, auto value) {
            if (slot) throw ParseError(kv.line, "duplicate key '" + kv.key + "'");
            slot = value;
        };
        if (ends_with(key, kSuperHard)) {
            metric = key.substr(0, key.size() - kSuperHard.size());
            assign(partial[metric].super_hard, flag_at(kv.line, kv.value));
        } else if (ends_with(key, kHard)) {
            metric = key.substr(0, key.size() - kHard.size());
            assign(partial[metric].hard, flag_at(kv.line, kv.value));
        } else if (ends_with(key, kGoal)) {
            metric = key.substr(0, key.size() - kGoal.size());
            const double g = real_at(kv.line, kv.value);
            if (!(g > 0.0)) throw ParseError(kv.line, "goal must be positive");
            assign(partial[metric].goal, g);
        } else {
            throw ParseError(kv.line, "unknown key '" + kv.key + "'");
        }
        if (!valid_name(metric)) throw ParseError(kv.line, "invalid metric name");
        if (partial[metric].line == 0) partial[metric].line = kv.line;
    }

    GoalFile f;
    for (const auto& [metric, p] : partial) {
        if (!p.goal) {
            throw ConfigError("no goal for metric " + metric);
        }
        GoalEntry e{*p.goal, p.hard.value_or(false), p.super_hard.value_or(false)};
        if (e.super_hard && !e.hard) {
            throw ConfigError("metric " + metric + " is super_hard but not hard");
        }
        f.goals.emplace(metric, e);
    }
    return f;
}

std::string serialize_goal_file(const GoalFile& f) {
    std::string out;
    for (const auto& [metric, e] : f.goals) {
        require_name("metric", metric);
        if (!(e.goal > 0.0)) throw ConfigError("goal for " + metric + " must be positive");
        if (e.super_hard && !e.hard) {
            throw ConfigError("metric " + metric + " is super_hard but not hard");
        }
        out += metric + ".goal = " + format_real(e.goal) + "\n";
        out += metric + ".goal.hard = " + (e.hard ? "1" : "0") + "\n";
        out += metric + ".goal.super_hard = " + (e.super_hard ? "1" : "0") + "\n";
    }
    return out;
}

GlobalSysFile parse_global_sys(std::string_view text) {
    GlobalSysFile f;
    bool profiling_seen = false;
    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (line.substr(0, 5) == "knob,") {
            const auto parts = split_commas(line);
            if (parts.size() != 3 || !valid_name(parts[1]) || !valid_name(parts[2])) {
                throw ParseError(lineno, "expected 'knob,<conf_name>,<metric>'");
            }
            f.knobs.push_back({std::string(parts[1]), std::string(parts[2])});
            return;
        }
        auto [key, value] = split_key_value(lineno, line);
        if (key != "profiling") throw ParseError(lineno, "unknown key '" + key + "'");
        if (profiling_seen) throw ParseError(lineno, "duplicate key 'profiling'");
        profiling_seen = true;
        f.profiling_enabled = flag_at(lineno, value);
    });
    return f;
}

std::string serialize_global_sys(const GlobalSysFile& f) {
    std::string out = std::string("profiling = ") + (f.profiling_enabled ? "1" : "0") + "\n";
    for (const auto& k : f.knobs) {
        require_name("conf_name", k.conf_name);
        require_name("metric", k.metric);
        out += "knob," + k.conf_name + "," + k.metric + "\n";
    }
    return out;
}

std::string knob_sys_filename(std::string_view conf_name) {
    return std::string(conf_name) + ".SmartConf.sys";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ConfigError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw ConfigError("cannot replace " + path.string() + ": " + ec.message());
    }
}

void append_samples(const std::filesystem::path& sys_path, std::span<const ProfileSample> samples) {
    auto file = parse_knob_sys(read_text_file(sys_path));
    file.samples.insert(file.samples.end(), samples.begin(), samples.end());
    write_text_file_atomic(sys_path, serialize_knob_sys(file));
}

} // namespace smartconf
