#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "supou/io.hpp"

using namespace supou;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

class Workdir {
public:
    explicit Workdir(const std::string& name) : dir_(fs::temp_directory_path() / ("supou_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Workdir() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

    std::string write_config(const std::string& name, const Json& doc) const {
        write_text(path(name), doc.dump());
        return path(name);
    }

    Run run(const std::string& args) const {
        const std::string out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = std::string(SUPOU_CLI) + " " + args + " >" + out + " 2>" + err;
        const int status = std::system(cmd.c_str());
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return {code, read_text(out), read_text(err)};
    }

private:
    fs::path dir_;
};

Json load_config(const std::string& name) { return Json::parse(read_text(std::string(SUPOU_CONFIG_DIR) + "/" + name)); }

Json small_bivariate(int n, int paths) {
    Json doc = load_config("bivariate.json");
    doc["sim"]["N"] = n;
    doc["sim"]["paths"] = paths;
    doc["sim"]["pre_history_jumps"] = 200;
    return doc;
}

}  // namespace

TEST_CASE("simulate writes one row per observation and is reproducible") {
    Workdir w("simulate");
    const std::string cfg = w.write_config("cfg.json", small_bivariate(10, 2));
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("a") + " simulate").code == 0);
    const CsvTable t = read_csv(w.path("a/path_0.csv"));
    CHECK(t.header == std::vector<std::string>{"t", "x1", "x2"});
    CHECK(t.data.rows() == 10);
    CHECK(t.data(0, 0) == 1.0);
    CHECK(t.data(9, 0) == 10.0);

    REQUIRE(w.run("--config " + cfg + " --out " + w.path("b") + " --jobs 1 simulate").code == 0);
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("c") + " --jobs 4 simulate").code == 0);
    for (const char* f : {"path_0.csv", "path_1.csv", "provenance.json"}) {
        CHECK(read_text(w.path(std::string("a/") + f)) == read_text(w.path(std::string("b/") + f)));
        CHECK(read_text(w.path(std::string("a/") + f)) == read_text(w.path(std::string("c/") + f)));
    }

    // Replaying a provenance file reproduces the paths.
    REQUIRE(w.run("--config " + w.path("a/provenance.json") + " --out " + w.path("d") + " simulate").code == 0);
    CHECK(read_text(w.path("a/path_1.csv")) == read_text(w.path("d/path_1.csv")));

    REQUIRE(w.run("--config " + cfg + " --out " + w.path("e") + " --seed 7 simulate").code == 0);
    CHECK(read_text(w.path("a/path_0.csv")) != read_text(w.path("e/path_0.csv")));
    const Json prov = Json::parse(read_text(w.path("e/provenance.json")));
    CHECK(prov["config"]["sim"]["master_seed"] == 7);
    CHECK(prov["paths"].size() == 2);
}

TEST_CASE("moments on the bivariate configuration") {
    Workdir w("moments");
    Json doc = load_config("bivariate.json");
    doc["moments"]["lags"] = {0, 1};
    const std::string cfg = w.write_config("cfg.json", doc);
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("o") + " moments").code == 0);
    const Json j = Json::parse(read_text(w.path("o/moments.json")));
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(j["mean"][i].get<double>() - 2.101) < 5e-3);
        CHECK(std::abs(j["variance"][i][i].get<double>() - 0.3419) < 5e-3);
        CHECK(std::abs(j["variance"][i][1 - i].get<double>() + 0.0526) < 5e-3);
    }
    CHECK(j["acov"][0]["lag"] == 0.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            CHECK(std::abs(j["acov"][0]["value"][a][b].get<double>() - j["variance"][a][b].get<double>()) < 1e-12);
    CHECK(j["levy"]["mean"][0] == 3.0);
    CHECK(j["existence"]["pass"] == true);
}

TEST_CASE("check reports stability, existence and the CLT condition") {
    Workdir w("check");
    Run r = w.run("--config " + std::string(SUPOU_CONFIG_DIR) + "/unstable_fixed.json --out " + w.path("u") + " check");
    REQUIRE(r.code == 0);
    Json j = Json::parse(read_text(w.path("u/check.json")));
    CHECK(j["stable"] == false);
    CHECK(j["existence"] == "fail");

    r = w.run("--config " + std::string(SUPOU_CONFIG_DIR) + "/bivariate.json --out " + w.path("b") + " check");
    REQUIRE(r.code == 0);
    j = Json::parse(read_text(w.path("b/check.json")));
    CHECK(j["stable"] == true);
    CHECK(j["existence"] == "pass");
    CHECK(j["clt"]["condition"] == false);
    const Json& zeta = j["zeta_bound"];
    REQUIRE(zeta.size() == 4);
    for (std::size_t i = 1; i < zeta.size(); ++i) CHECK(zeta[i]["bound"].get<double>() < zeta[i - 1]["bound"].get<double>());

    // Moments of an unstable model are a domain error.
    r = w.run("--config " + std::string(SUPOU_CONFIG_DIR) + "/unstable_fixed.json --out " + w.path("m") + " moments");
    CHECK(r.code == 3);
    CHECK(Json::parse(r.err)["error"]["kind"] == "domain");
}

TEST_CASE("exit codes") {
    Workdir w("codes");
    CHECK(w.run("simulate").code == 2);
    CHECK(w.run("--config " + w.path("missing.json") + " simulate").code != 0);
    write_text(w.path("broken.json"), "{not json");
    CHECK(w.run("--config " + w.path("broken.json") + " simulate").code == 2);

    Json doc = small_bivariate(10, 1);
    doc["sim"]["bogus"] = 1;
    Run r = w.run("--config " + w.write_config("unknown.json", doc) + " simulate");
    CHECK(r.code == 2);
    CHECK(r.err.find("sim.bogus") != std::string::npos);

    const std::string cfg = w.write_config("cfg.json", small_bivariate(10, 1));
    write_text(w.path("bad.csv"), "t,x1,x2\n1,2,3\n2,x,3\n");
    r = w.run("--config " + cfg + " --out " + w.path("o") + " estimate " + w.path("bad.csv"));
    CHECK(r.code == 4);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(r.err.find("column 2") != std::string::npos);

    // Too few observations for the requested lag count.
    write_text(w.path("short.csv"), "t,x1,x2\n1,2,3\n2,2.5,3\n3,2,3.5\n");
    r = w.run("--config " + cfg + " --out " + w.path("o") + " estimate " + w.path("short.csv"));
    CHECK((r.code == 2 || r.code == 3));

    CHECK(w.run("--config " + cfg + " --jobs 0 simulate").code == 2);
}

TEST_CASE("mc-study with one path agrees with estimate on that path") {
    Workdir w("mc");
    const std::string cfg = w.write_config("cfg.json", small_bivariate(300, 1));
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("s") + " simulate").code == 0);
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("e") + " estimate " + w.path("s/path_0.csv")).code == 0);
    REQUIRE(w.run("--config " + cfg + " --out " + w.path("m") + " mc-study").code == 0);
    const Json est = Json::parse(read_text(w.path("e/estimate.json")));
    const Json sum = Json::parse(read_text(w.path("m/summary.json")));
    CHECK(sum["paths"] == 1);
    for (const auto& [name, value] : est["xi_hat"].items())
        CHECK(sum["parameters"][name]["median"].get<double>() == value.get<double>());
    CHECK(fs::exists(w.path("m/estimates.csv")));
    CHECK(fs::exists(w.path("m/acf_path0.csv")));
    CHECK(fs::exists(w.path("m/hist_alpha.csv")));
    CHECK(fs::exists(w.path("m/qq_mu.csv")));
}
