#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

const std::string kBin = CAUSTICA_CLI_PATH;

int run(const std::string& args, const std::string& out_path = "") {
    std::string cmd = kBin + " " + args;
    if (!out_path.empty()) cmd += " > " + out_path + " 2>/dev/null";
    else cmd += " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("re-running a command produces byte-identical output") {
    REQUIRE(run("--preset ex_1_1_rarefaction --threads 3 density --t 1 --nx 33", "cli_det_a.csv") == 0);
    REQUIRE(run("--preset ex_1_1_rarefaction --threads 2 density --t 1 --nx 33", "cli_det_b.csv") == 0);
    CHECK(slurp("cli_det_a.csv") == slurp("cli_det_b.csv"));

    REQUIRE(run("--preset ex_1_2_focus caustics --nz 33 --nt 17", "cli_det_c.csv") == 0);
    REQUIRE(run("--preset ex_1_2_focus caustics --nz 33 --nt 17", "cli_det_d.csv") == 0);
    CHECK(slurp("cli_det_c.csv") == slurp("cli_det_d.csv"));
}

TEST_CASE("density CSV carries the rarefaction closed form") {
    REQUIRE(run("--preset ex_1_1_rarefaction density --t 1 --nx 9", "cli_dens.csv") == 0);
    auto rows = csv_rows(slurp("cli_dens.csv"));
    REQUIRE(rows.size() == 10);
    CHECK(rows[0] == std::vector<std::string>{"x", "t", "n", "N"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double x = std::stod(rows[r][0]);
        const double n = std::stod(rows[r][2]);
        const double expect = std::exp(-x * x / 4.0) / std::sqrt(M_PI) / 2.0;
        CHECK(n == Catch::Approx(expect).margin(1e-8));
        CHECK(rows[r][3] == "1");
    }
}

TEST_CASE("rays CSV reports the airy blow-up time") {
    REQUIRE(run("--preset appendix1_airy_k rays --t1 0.6 --nt 4 --nx 5", "cli_rays.csv") == 0);
    auto rows = csv_rows(slurp("cli_rays.csv"));
    REQUIRE(rows.size() > 1);
    int blown = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string& st = rows[r][6];
        if (st.rfind("blown_up@", 0) == 0) {
            ++blown;
            const double tev = std::stod(st.substr(9));
            CHECK(std::abs(tev - 0.5) <= 1e-6);
        }
    }
    CHECK(blown == 5);  // every x0 row at t = 0.6
}

TEST_CASE("caustics CSV localizes the focus") {
    REQUIRE(run("--preset ex_1_2_focus caustics", "cli_caustics.csv") == 0);
    auto rows = csv_rows(slurp("cli_caustics.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(std::stod(rows[1][0])) <= 1e-6);
    CHECK(std::abs(std::stod(rows[1][1]) - 1.0) <= 1e-6);
}

TEST_CASE("focus JSON carries the concentrated mass") {
    REQUIRE(run("--preset ex_1_3_cusp_lipschitz focus --y 1 --t 1", "cli_focus.json") == 0);
    const std::string text = slurp("cli_focus.json");
    CHECK(text.find("\"classification\": \"hot\"") != std::string::npos);
    const auto pos = text.find("\"mu\": ");
    REQUIRE(pos != std::string::npos);
    const double mu = std::stod(text.substr(pos + 6));
    CHECK(mu == Catch::Approx(0.5 * std::erf(1.0)).margin(1e-6));
}

TEST_CASE("exit codes distinguish usage, validation and numerics") {
    CHECK(run("--preset no_such_preset density --t 1") == 2);
    CHECK(run("--preset ex_1_1_rarefaction branches --t 1") == 2);   // missing --x
    CHECK(run("--preset ex_1_1_rarefaction compare --eps-list 1/16 --t 0") == 2);
    CHECK(run("--preset ex_1_1_rarefaction nosuchcommand") == 2);
    CHECK(run("density --t 1") == 2);  // neither --scenario nor --preset
    CHECK(run("--preset ex_1_1_rarefaction validate") == 0);
    CHECK(run("--preset appendix1_airy_k validate") == 2);  // flow probe fails
    // boundary-mass violation in the spectral oracle is a numerical failure
    CHECK(run("--preset ex_1_1_rarefaction wigner --eps 1/16 --t 3 --domain -4 4 --n 2048") == 3);
}

TEST_CASE("wigner CSV has the x,xi,w layout") {
    REQUIRE(run("--preset ex_1_3_cusp_smooth wigner --eps 1/8 --t 0 --n 512 --stride 64 "
                "--domain -8 8",
                "cli_wigner.csv") == 0);
    auto rows = csv_rows(slurp("cli_wigner.csv"));
    REQUIRE(rows.size() == std::size_t(1 + 8 * 256));
    CHECK(rows[0] == std::vector<std::string>{"x", "xi", "w"});
}

TEST_CASE("fluid CSV reports second-order small residuals on a smooth window") {
    REQUIRE(run("--preset ex_1_1_rarefaction fluid --t0 0.3 --t1 0.7 --nt 9 --nx 33 "
                "--sigma x^2/2",
                "cli_fluid.csv") == 0);
    auto rows = csv_rows(slurp("cli_fluid.csv"));
    REQUIRE(rows.size() == std::size_t(1 + 9 * 33));
    REQUIRE(rows[0].size() == 11);  // incl. res_sigma column
    double max_res = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string& rc = rows[r][4];
        if (rc == "nan" || rc == "-nan") continue;
        max_res = std::max(max_res, std::abs(std::stod(rc)));
    }
    CHECK(max_res > 0.0);
    CHECK(max_res < 0.05);
}

TEST_CASE("scenario files load the same way presets do") {
    REQUIRE(run("--preset ex_1_2_focus --dump-scenario cli_scenario.json validate") == 0);
    REQUIRE(run("--scenario cli_scenario.json caustics", "cli_caustics2.csv") == 0);
    CHECK(slurp("cli_caustics2.csv") == slurp("cli_caustics.csv"));
}
