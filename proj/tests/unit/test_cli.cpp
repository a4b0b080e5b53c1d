#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(TORVAC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    CHECK(run("validate") == 0);
    CHECK(run("--print-schema") == 0);
    CHECK(run("no-such-command") == 2);
    CHECK(run("validate --config /nonexistent.json") == 2);
    CHECK(run("validate --config " + temp_file("torvac_bad.json", "{ not json")) == 2);
    CHECK(run("validate --config " + temp_file("torvac_key.json", R"({"params": {"bogus": 1}})")) == 2);
    CHECK(run("validate --config " + temp_file("torvac_grid.json", R"({"params": {"grid": "/nonexistent.grid"}})")) == 2);
    CHECK(run("validate --config " + temp_file("torvac_trunc.json", R"({"params": {"grid": ")" +
                                                   temp_file("torvac_trunc.grid", "TVG") + R"("}})")) == 2);
    CHECK(run("survival --config " + temp_file("torvac_range.json", R"({"params": {"N": 1}})")) == 2);
  }

  TEST_CASE("outputs land in the requested directory") {
    const auto dir = std::filesystem::temp_directory_path() / "torvac_cli_out";
    std::filesystem::remove_all(dir);
    CHECK(run("validate --out " + dir.string() + " --seed 3") == 0);
    CHECK(std::filesystem::exists(dir / "validate.csv"));
    CHECK(std::filesystem::exists(dir / "validate.ndjson"));
    CHECK(std::filesystem::exists(dir / "validate.meta.json"));
    std::filesystem::remove_all(dir);
  }
}
