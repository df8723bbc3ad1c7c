/*
 Copyright 2026 The escbranch Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
// Runs the escbranch executable as a subprocess and inspects its output.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

struct Run {
    int exit_code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(ESCBRANCH_CLI) + " " + args + " 2>cli_stderr.txt";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Data rows of a CSV with a '#' header, keyed by column name.
struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        FAIL("no column " << name);
        return 0;
    }
    double num(std::size_t row, const std::string& name) const { return std::stod(rows[row][col(name)]); }
    const std::string& text(std::size_t row, const std::string& name) const { return rows[row][col(name)]; }
    bool has_comment(const std::string& needle) const {
        for (const auto& c : comments)
            if (c.find(needle) != std::string::npos) return true;
        return false;
    }
};

Csv parse(const std::string& text) {
    Csv csv;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) {
        if (line.rfind("#", 0) == 0) {
            csv.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (csv.header.empty())
            csv.header = cells;
        else
            csv.rows.push_back(cells);
    }
    return csv;
}

}  // namespace

TEST_CASE("equilibrium map of the reactor") {
    const Run r = run("--plant reactor equilibrium --u-range 0.02:1.2:400");
    REQUIRE(r.exit_code == 0);
    const Csv csv = parse(r.out);
    REQUIRE(csv.rows.size() == 400);
    std::size_t best = 0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        if (csv.num(i, "J") > csv.num(best, "J")) best = i;
    CHECK(std::abs(csv.num(best, "u") - 0.245) < 0.01);
}

TEST_CASE("equilibrium map of the linear plant is a line") {
    const Run r = run("--plant linear equilibrium --u-range -1:1:11");
    REQUIRE(r.exit_code == 0);
    const Csv csv = parse(r.out);
    REQUIRE(csv.rows.size() == 11);
    for (std::size_t i = 0; i < 11; ++i) CHECK(csv.num(i, "J") == doctest::Approx(csv.num(i, "u")));
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run("equilibrium").exit_code == 1);
    CHECK(run("--plant nowhere equilibrium").exit_code == 1);
    CHECK(run("--plant reactor").exit_code == 1);
    CHECK(run("--plant reactor --param v_min equilibrium").exit_code == 1);
    CHECK(run("--plant reactor equilibrium --u-range 1:0:5").exit_code == 1);
    CHECK(run("--plant reactor simulate --u-seed 0.3 --rtol 0.5").exit_code == 1);
    CHECK(run("--help").exit_code == 0);
}

TEST_CASE("numerical failures exit with 2") {
    // Far from any orbit the slow input direction leaves Newton without a descent step.
    CHECK(run("--plant reactor simulate --u-seed 0.05 --periods 20 --shoot").exit_code == 2);
}

TEST_CASE("stationary points of the benchmark plants") {
    Run r = run("--plant reactor --omega 0.4 --omega-ratio 0.1 --k 0.01 --a 0.001 stationary");
    REQUIRE(r.exit_code == 0);
    Csv csv = parse(r.out);
    REQUIRE(csv.rows.size() == 5);
    int stable = 0;
    for (std::size_t i = 0; i < 5; ++i) stable += csv.text(i, "stability") == "stable";
    CHECK(stable == 3);

    r = run("--plant hammerstein stationary");
    REQUIRE(r.exit_code == 0);
    csv = parse(r.out);
    REQUIRE(csv.rows.size() == 1);
    CHECK(std::abs(csv.num(0, "u") - 1.0) < 1e-6);
    CHECK(csv.has_comment("DegenerateResponse"));

    r = run("--plant linear stationary");
    REQUIRE(r.exit_code == 0);
    CHECK(parse(r.out).rows.empty());
}

TEST_CASE("branch diagrams") {
    Run r = run("--plant linear branch --seed-frequencies 3 --scan-grid 200");
    REQUIRE(r.exit_code == 0);
    Csv csv = parse(r.out);
    CHECK(csv.rows.empty());
    CHECK(csv.header.size() == 6);

    r = run("--plant reactor --omega-ratio 0.1 branch --omega-range 0.01:0.8");
    REQUIRE(r.exit_code == 0);
    csv = parse(r.out);
    // Branch holding the near-optimal point at omega = 0.4.
    std::map<std::string, bool> near_optimal;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        if (std::abs(csv.num(i, "omega") - 0.4) < 0.01 && std::abs(csv.num(i, "u") - 0.238) < 0.01)
            near_optimal[csv.text(i, "branch_id")] = true;
    bool fold = false;
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        if (csv.num(i, "is_fold") == 1.0 && near_optimal.count(csv.text(i, "branch_id")))
            fold = fold || std::abs(csv.num(i, "omega") - 0.614) <= 0.03;
    CHECK(fold);
}

TEST_CASE("simulation settles on an orbit satisfying the stationarity condition") {
    const Run r = run("--plant reactor simulate --u-seed 0.25 --periods 20 --shoot --summary cli_summary.json");
    REQUIRE(r.exit_code == 0);
    const auto summary = nlohmann::json::parse(slurp("cli_summary.json"));
    CHECK(summary["stability"] == "stable");
    CHECK(summary["abs_condition"].get<double>() <= 1e-4 * summary["condition_scale"].get<double>());
    CHECK(std::abs(summary["mean_input"].get<double>() - 0.2383) < 0.002);
    const Csv csv = parse(r.out);
    CHECK(csv.rows.size() == 20 * 128 + 1);
}

TEST_CASE("different seeds reach different stable orbits") {
    REQUIRE(run("--plant reactor simulate --u-seed 0.06 --periods 20 --shoot --summary cli_low.json").exit_code == 0);
    REQUIRE(run("--plant reactor simulate --u-seed 0.25 --periods 20 --shoot --summary cli_high.json").exit_code ==
            0);
    const auto low = nlohmann::json::parse(slurp("cli_low.json"));
    const auto high = nlohmann::json::parse(slurp("cli_high.json"));
    CHECK(low["stability"] == "stable");
    CHECK(high["stability"] == "stable");
    CHECK(std::abs(low["mean_input"].get<double>() - high["mean_input"].get<double>()) > 0.1);
}

TEST_CASE("unforced simulation is constant") {
    const Run r = run("--plant reactor --k 0 --a 0 simulate --u-seed 0.3 --periods 2");
    REQUIRE(r.exit_code == 0);
    const Csv csv = parse(r.out);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        CHECK(csv.num(i, "u_hat") == 0.3);
        CHECK(std::abs(csv.num(i, "y") - csv.num(0, "y")) <= 1e-9);
    }
}

TEST_CASE("zero scans") {
    Run r = run("--plant reactor zeros --u-range 0.1:0.6:101");
    REQUIRE(r.exit_code == 0);
    Csv csv = parse(r.out);
    int brackets = 0;
    for (const auto& c : csv.comments) brackets += c.find("crossing zero changes sign in [0.24") != std::string::npos;
    CHECK(brackets == 1);
    CHECK(csv.has_comment("G(0) changes sign in [0.24"));

    r = run("--plant linear zeros");
    REQUIRE(r.exit_code == 0);
    CHECK_FALSE(parse(r.out).has_comment("changes sign"));

    r = run("--plant hammerstein zeros --u-range 0:2:5");
    REQUIRE(r.exit_code == 0);
    CHECK(parse(r.out).has_comment("u=1: DegenerateResponse"));
}

TEST_CASE("header echoes the resolved configuration") {
    const Run r = run("--plant reactor --omega 0.3 --omega-ratio 0.1 equilibrium --u-range 0.1:0.2:3");
    REQUIRE(r.exit_code == 0);
    const Csv csv = parse(r.out);
    REQUIRE(csv.comments.size() > 3);
    CHECK(csv.comments[0].rfind("# escbranch ", 0) == 0);
    CHECK(csv.has_comment("# command: equilibrium"));
    CHECK(csv.has_comment("omega=0.3"));
    CHECK(csv.has_comment("omega-ratio=0.1"));
    CHECK(csv.has_comment("equilibrium.u-range=\"0.1:0.2:3\""));
    CHECK_FALSE(csv.has_comment("branch."));
}

TEST_CASE("config file with flags taking precedence") {
    {
        std::ofstream f("cli_run.ini");
        f << "plant=\"reactor\"\nomega=0.2\nomega-ratio=0.1\n[stationary]\ngrid=1500\n";
    }
    Run r = run("--config cli_run.ini stationary");
    REQUIRE(r.exit_code == 0);
    Csv csv = parse(r.out);
    CHECK(csv.has_comment("omega=0.2"));
    CHECK(csv.has_comment("stationary.grid=1500"));
    REQUIRE_FALSE(csv.rows.empty());
    CHECK(csv.num(0, "omega") == 0.2);

    r = run("--config cli_run.ini --omega 0.4 stationary --grid 2000");
    REQUIRE(r.exit_code == 0);
    csv = parse(r.out);
    CHECK(csv.has_comment("omega=0.4"));
    CHECK(csv.has_comment("stationary.grid=2000"));
    CHECK(csv.rows.size() == 5);
}

TEST_CASE("identical configuration gives byte-identical output") {
    REQUIRE(run("--plant reactor stationary -o cli_same.csv").exit_code == 0);
    const std::string a = slurp("cli_same.csv");
    CHECK_FALSE(a.empty());
    REQUIRE(run("--plant reactor stationary -o cli_same.csv").exit_code == 0);
    CHECK(a == slurp("cli_same.csv"));
    REQUIRE(run("--plant reactor --threads 3 zeros -o cli_same.csv").exit_code == 0);
    const std::string c = slurp("cli_same.csv");
    REQUIRE(run("--plant reactor --threads 3 zeros -o cli_same.csv").exit_code == 0);
    CHECK(c == slurp("cli_same.csv"));
}
