#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SMARTCONF_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch() {
    auto dir = fs::temp_directory_path() / "smartconf-cli-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("cli exit codes") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("run --mode pid") == 2);
    CHECK(run("run --scenario hb9999") == 3);
    CHECK(run("frobnicate") == 2);
    CHECK(run("synthesize --sys /nonexistent/x.SmartConf.sys --goals /nonexistent/goals") != 0);
}

TEST_CASE("cli run is byte-for-byte reproducible") {
    const auto dir = scratch();
    const auto a = dir / "a.csv";
    const auto b = dir / "b.csv";
    REQUIRE(run("run --scenario hb3813-two-phase --mode smartconf --seed 4 --out " + a.string()) == 0);
    REQUIRE(run("run --scenario hb3813-two-phase --mode smartconf --seed 4 --out " + b.string()) == 0);
    const auto text = slurp(a);
    CHECK(text.rfind("tick,conf_value,", 0) == 0);
    CHECK(text == slurp(b));
    fs::remove_all(dir);
}

TEST_CASE("cli profile then synthesize") {
    const auto dir = scratch();
    REQUIRE(run("profile --scenario hb3813-two-phase --knob max.queue.size --out " + dir.string()) == 0);
    const auto sys = dir / "max.queue.size.SmartConf.sys";
    REQUIRE(fs::exists(sys));
    CHECK(slurp(sys).find("sample,") != std::string::npos);
    const auto goals = dir / "memory.used.goals";
    REQUIRE(fs::exists(goals));
    REQUIRE(run("synthesize --sys " + sys.string() + " --goals " + goals.string()) == 0);
    CHECK(slurp(sys).find("virtual_goal = ") != std::string::npos);
    fs::remove_all(dir);
}
