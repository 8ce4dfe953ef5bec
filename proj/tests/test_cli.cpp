#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out_file = workdir / "cli_output.txt";
    const std::string cmd = "cd " + workdir.string() + " && " + TAKVAR_CLI_PATH + " " + args +
                            " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CommandResult res;
    res.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("gen-bundle then check: study bundle satisfies the conditions", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_car1d");
    const CommandResult gen =
        run_cli("gen-bundle --kind car1d --n 80 --N 60 --m 120 --seed 3 --out b", dir);
    REQUIRE(gen.exit_code == 0);
    REQUIRE(fs::exists(dir / "b" / "Q.mtx"));
    REQUIRE(fs::exists(dir / "b" / "manifest.json"));

    const CommandResult check = run_cli("check --bundle b", dir);
    REQUIRE(check.exit_code == 0);
    REQUIRE(check.output.find("\"theorem\": true") != std::string::npos);
}

TEST_CASE("check on an unpadded frk bundle reports fixable failure", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_frk");
    REQUIRE(run_cli("gen-bundle --kind frk-car --n 90 --m 50 --rank 8 --seed 5 --out b", dir)
                .exit_code == 0);
    const CommandResult check = run_cli("check --bundle b", dir);
    REQUIRE(check.exit_code == 2);
    REQUIRE(check.output.find("\"theorem\": false") != std::string::npos);
    REQUIRE(check.output.find("\"padding_required\": 0") == std::string::npos);
}

TEST_CASE("check on a corrupted bundle exits 1", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_bad");
    REQUIRE(run_cli("gen-bundle --kind car1d --n 20 --N 10 --m 15 --out b", dir).exit_code == 0);
    std::ofstream(dir / "b" / "A.mtx") << "this is not a matrix market file\n";
    REQUIRE(run_cli("check --bundle b", dir).exit_code == 1);
    REQUIRE(run_cli("check --bundle nowhere", dir).exit_code == 1);
}

TEST_CASE("variances: direct and sparse_inv csvs agree", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_var");
    REQUIRE(run_cli("gen-bundle --kind car1d --n 100 --N 200 --m 300 --seed 9 --out b", dir)
                .exit_code == 0);
    REQUIRE(run_cli("variances --bundle b --method direct --out out_d", dir).exit_code == 0);
    REQUIRE(run_cli("variances --bundle b --method sparse_inv --out out_s", dir).exit_code == 0);

    std::ifstream fd(dir / "out_d" / "d.csv"), fsv(dir / "out_s" / "d.csv");
    std::string ld, ls;
    std::getline(fd, ld);
    std::getline(fsv, ls);  // header
    std::size_t rows = 0;
    while (std::getline(fd, ld) && std::getline(fsv, ls)) {
        if (ld.empty() || ls.empty()) continue;
        const double vd = std::stod(ld.substr(ld.find(',') + 1));
        const double vs = std::stod(ls.substr(ls.find(',') + 1));
        REQUIRE(std::abs(vd - vs) <= 1e-9 * std::abs(vd));
        ++rows;
    }
    REQUIRE(rows == 200);

    const std::string telemetry = slurp(dir / "out_s" / "telemetry.json");
    REQUIRE(telemetry.find("\"method\": \"sparse_inv\"") != std::string::npos);
    REQUIRE(telemetry.find("\"PartInv\"") != std::string::npos);
    // the condition report ships with every method's telemetry
    const std::string direct_telemetry = slurp(dir / "out_d" / "telemetry.json");
    REQUIRE(direct_telemetry.find("\"condition\"") != std::string::npos);
    REQUIRE(direct_telemetry.find("\"theorem\": true") != std::string::npos);
}

TEST_CASE("variances: cond_sim with a fixed seed is reproducible", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_sim");
    REQUIRE(run_cli("gen-bundle --kind car1d --n 60 --N 40 --m 100 --seed 2 --out b", dir)
                .exit_code == 0);
    REQUIRE(run_cli("variances --bundle b --method cond_sim --M 50 --seed 7 --out o1", dir)
                .exit_code == 0);
    REQUIRE(run_cli("variances --bundle b --method cond_sim --M 50 --seed 7 --out o2", dir)
                .exit_code == 0);
    REQUIRE(slurp(dir / "o1" / "d.csv") == slurp(dir / "o2" / "d.csv"));
}

TEST_CASE("variances on unpadded frk: refuses without --pad, works with it", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_pad");
    REQUIRE(run_cli("gen-bundle --kind frk-car --n 80 --m 45 --rank 6 --seed 4 --out b", dir)
                .exit_code == 0);
    const CommandResult fail = run_cli("variances --bundle b --method sparse_inv --out o", dir);
    REQUIRE(fail.exit_code == 3);
    REQUIRE(fail.output.find("condition check failed") != std::string::npos);
    REQUIRE(run_cli("variances --bundle b --method sparse_inv --pad --out o", dir).exit_code == 0);
    // the unsafe override also runs (values then carry no exactness claim)
    REQUIRE(run_cli("variances --bundle b --method sparse_inv --unsafe-skip-check --out o2", dir)
                .exit_code == 0);
}

TEST_CASE("worker count does not change results", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_threads");
    REQUIRE(run_cli("gen-bundle --kind car1d --n 80 --N 120 --m 150 --seed 8 --out b", dir)
                .exit_code == 0);
    const fs::path out_file = dir / "cli_output.txt";
    auto run_with_threads = [&](const std::string& threads, const std::string& out) {
        const std::string cmd = "cd " + dir.string() + " && TAKVAR_THREADS=" + threads + " " +
                                TAKVAR_CLI_PATH + " variances --bundle b --method cond_sim" +
                                " --M 24 --seed 5 --out " + out + " > " + out_file.string() +
                                " 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    REQUIRE(run_with_threads("1", "o1") == 0);
    REQUIRE(run_with_threads("4", "o4") == 0);
    REQUIRE(slurp(dir / "o1" / "d.csv") == slurp(dir / "o4" / "d.csv"));
}

TEST_CASE("simulate-car1d writes the timing csv", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_grid");
    const CommandResult res = run_cli(
        "simulate-car1d --n 60 --N 10 --N 40 --m 100 --M 8 --seed 3 --out grid.csv", dir);
    REQUIRE(res.exit_code == 0);
    const std::string csv = slurp(dir / "grid.csv");
    REQUIRE(csv.find("schema,n,N,m,method") == 0);
    REQUIRE(csv.find("timing-v1,60,10,100,direct") != std::string::npos);
    REQUIRE(csv.find("timing-v1,60,40,100,cond_sim") != std::string::npos);
}

TEST_CASE("relerr-study runs on a generated bundle", "[cli]") {
    const fs::path dir = fresh_dir("takvar_cli_relerr");
    REQUIRE(run_cli("gen-bundle --kind car1d --n 80 --N 100 --m 150 --seed 6 --out b", dir)
                .exit_code == 0);
    const CommandResult res =
        run_cli("relerr-study --bundle b --M 10 --M 20 --M 30 --seed 5 --out r.csv", dir);
    REQUIRE(res.exit_code == 0);
    const std::string csv = slurp(dir / "r.csv");
    REQUIRE(csv.find("schema,M,r_hat,s_hat") == 0);
    REQUIRE(csv.find("relerr-v1,10,") != std::string::npos);
    REQUIRE(csv.find("relerr-v1,30,") != std::string::npos);
}
