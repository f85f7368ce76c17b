#include "fixtures.hpp"

#include "gensep/cli.hpp"
#include "gensep/error.hpp"
#include "gensep/simulate.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <memory>
#include <sstream>

using namespace gensep;
namespace fs = std::filesystem;

namespace {

/// Simulated study written to disk plus a config pointing at it.
struct Study {
    fs::path dir;
    RunConfig config;
};

Study make_study(const std::string& tag, std::size_t n = 600) {
    Study s;
    s.dir = fixtures::temp_dir(tag);
    Rng rng = stream_rng(81, n);
    auto d = gen_dataset(rng, n, 800, 8.0);
    Schema schema;
    for (const auto& name : sim_covariate_names()) schema.covariates.push_back(VariableSpec::continuous(name));
    write_csv(d, (s.dir / "exp.csv").string(), (s.dir / "pop.csv").string(), schema);
    s.config.experiment_csv = (s.dir / "exp.csv").string();
    s.config.population_csv = (s.dir / "pop.csv").string();
    s.config.sampling_set = {"X4", "X5"};
    s.config.out = (s.dir / "out").string();
    s.config.bootstrap_replicates = 0;
    return s;
}

int run(const std::string& command, const RunConfig& config, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    const int code = run_command(command, config, log, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::string capture(const std::string& command) {
    std::string out;
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe.get())) out += buf;
    return out;
}

}  // namespace

TEST_CASE("config text parses into the run config") {
    const auto c = parse_config(
        "# study\n"
        "experiment_csv = a.csv\n"
        "population_csv=b.csv   # trailing comment\n"
        "sampling_set = X4, X5\n"
        "mode = exact\n"
        "heterogeneity_set = X2,X3\n"
        "estimators = ipw, aipw, naive\n"
        "B = 250\n"
        "seed = 9\n"
        "N = 1e6\n"
        "rule = or\n"
        "treatment_probability = 0.4\n"
        "resample_population = false\n"
        "categorical = G:3\n"
        "sim_sizes = 500,1000\n");
    CHECK(c.experiment_csv == "a.csv");
    CHECK(c.population_csv == "b.csv");
    CHECK(c.sampling_set == std::vector<std::string>{"X4", "X5"});
    CHECK(c.mode == SepsetMode::exact);
    CHECK(c.estimators == std::vector<EstimatorKind>{EstimatorKind::ipw, EstimatorKind::aipw, EstimatorKind::sate_dim});
    CHECK(c.bootstrap_replicates == 250);
    CHECK(c.seed == 9);
    CHECK(*c.population_size == 1e6);
    CHECK(c.rule == EdgeRule::or_rule);
    CHECK(*c.treatment_probability == 0.4);
    CHECK_FALSE(c.resample_population);
    CHECK(c.categorical == std::vector<std::string>{"G:3"});
    CHECK(c.sim_sizes == std::vector<std::size_t>{500, 1000});

    auto sim = sim_from_config(c);
    CHECK(sim.sizes == std::vector<std::size_t>{500, 1000});
    auto pipe = pipeline_from_config(c);
    CHECK(pipe.sepset.mgm.rule == EdgeRule::or_rule);
    CHECK(pipe.heterogeneity_set == std::vector<std::string>{"X2", "X3"});
}

TEST_CASE("config errors are fatal") {
    CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), ArgumentError);
    CHECK_THROWS_AS(parse_config("no equals sign\n"), ArgumentError);
    CHECK_THROWS_AS(parse_config("B = many\n"), ArgumentError);
    CHECK_THROWS_AS(parse_config("mode = sideways\n"), ArgumentError);
    CHECK_THROWS_AS(parse_config("estimators = tmle\n"), ArgumentError);
    CHECK_THROWS_AS(load_config("/nonexistent/gensep.cfg"), InputError);
    try {
        (void)parse_config("seed = 1\nwhatever = 2\n");
        FAIL("expected an argument error");
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("estimate writes its outputs") {
    auto s = make_study("cli_estimate");
    s.config.estimators = {EstimatorKind::ipw, EstimatorKind::sate_dim};
    s.config.bootstrap_replicates = 20;
    REQUIRE(run("estimate", s.config) == kExitOk);
    const fs::path out = s.config.out;
    for (const char* f : {"sepset.json", "estimates.json", "bootstrap.json", "selection.csv"}) {
        CHECK(fs::exists(out / f));
    }
    auto sepset = nlohmann::json::parse(fixtures::read_text(out / "sepset.json"));
    CHECK(sepset["mode"] == "marginal");
    auto estimates = nlohmann::json::parse(fixtures::read_text(out / "estimates.json"));
    REQUIRE(estimates.size() == 2);
    CHECK(estimates[0]["estimator"] == "ipw");
    CHECK(estimates[0]["se"].is_number());
    auto boot = nlohmann::json::parse(fixtures::read_text(out / "bootstrap.json"));
    CHECK(boot["B"] == 20);
    // no temporary files left behind
    for (const auto& entry : fs::directory_iterator(out)) {
        CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);
    }
}

TEST_CASE("exit codes for bad and infeasible runs") {
    auto s = make_study("cli_codes", 300);

    SUBCASE("exact mode without a heterogeneity set") {
        RunConfig c = s.config;
        c.mode = SepsetMode::exact;
        std::string err;
        CHECK(run("estimate", c, &err) == kExitInput);
        CHECK(err.find("heterogeneity") != std::string::npos);
    }
    SUBCASE("every covariate unmeasured") {
        RunConfig c = s.config;
        c.unmeasured = sim_covariate_names();
        CHECK(run("estimate", c) == kExitInfeasible);
        auto sepset = nlohmann::json::parse(fixtures::read_text(fs::path(c.out) / "sepset.json"));
        CHECK(sepset["status"] == "infeasible");
        CHECK(nlohmann::json::parse(fixtures::read_text(fs::path(c.out) / "estimates.json")).empty());
    }
    SUBCASE("malformed CSV") {
        fixtures::write_text(s.dir / "bad.csv", "X1,X2,T,Y\n1,2,1\n");
        RunConfig c = s.config;
        c.experiment_csv = (s.dir / "bad.csv").string();
        CHECK(run("estimate", c) == kExitInput);
    }
    SUBCASE("missing files and unknown commands") {
        RunConfig c = s.config;
        c.population_csv = (s.dir / "absent.csv").string();
        CHECK(run("estimate", c) == kExitInput);
        CHECK(run("frobnicate", s.config) == kExitInput);
    }
    SUBCASE("a single bootstrap replicate") {
        RunConfig c = s.config;
        c.bootstrap_replicates = 1;
        CHECK(run("estimate", c) == kExitInput);
    }
    SUBCASE("unmeasured names must be covariates") {
        RunConfig c = s.config;
        c.unmeasured = {"Q"};
        CHECK(run("estimate", c) == kExitInput);
    }
}

TEST_CASE("graph command writes both graphs") {
    auto s = make_study("cli_graph", 400);
    REQUIRE(run("graph", s.config) == kExitOk);
    auto doc = nlohmann::json::parse(fixtures::read_text(fs::path(s.config.out) / "graph.json"));
    CHECK(doc.contains("with_treatment"));
    CHECK(doc.contains("without_treatment"));
    CHECK(doc["with_treatment"]["nodes"].size() == 11);
    CHECK(doc["without_treatment"]["nodes"].size() == 10);
    const auto dot = fixtures::read_text(fs::path(s.config.out) / "graph.dot");
    CHECK(dot.find("mrf_without_treatment") != std::string::npos);
}

TEST_CASE("write_file_atomic replaces content whole") {
    auto dir = fixtures::temp_dir("atomic");
    const auto path = (dir / "f.txt").string();
    write_file_atomic(path, "first\n");
    write_file_atomic(path, "second\n");
    CHECK(fixtures::read_text(path) == "second\n");
    CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
    CHECK_THROWS_AS(write_file_atomic((dir / "missing" / "f.txt").string(), "x"), InputError);
}

TEST_CASE("simulate command output is reproducible across thread counts") {
    auto dir = fixtures::temp_dir("cli_sim");
    RunConfig c;
    c.sim_sizes = {300};
    c.sim_m = 1000;
    c.sim_reps = 4;
    c.seed = 12;
    std::vector<std::string> tables;
    for (unsigned th : {1u, 2u, 8u}) {
        c.threads = th;
        c.out = (dir / ("t" + std::to_string(th))).string();
        REQUIRE(run("simulate", c) == kExitOk);
        tables.push_back(fixtures::read_text(fs::path(c.out) / "sim_bias.csv") +
                         fixtures::read_text(fs::path(c.out) / "sim_types.csv"));
    }
    CHECK(tables[0] == tables[1]);
    CHECK(tables[0] == tables[2]);
}

TEST_CASE("command-line help lists every config key") {
    const std::string help = capture(std::string(GENSEP_CLI_PATH) + " --help 2>&1");
    for (const auto& key : config_keys()) {
        const std::string name = key.name;
        const std::string flag = name.size() == 1 ? "-" + name : "--" + name;
        CHECK_MESSAGE(help.find(flag) != std::string::npos, flag);
    }
    CHECK(help.find("--config") != std::string::npos);
}

TEST_CASE("command-line flags override the config file") {
    auto s = make_study("cli_flags", 300);
    const fs::path cfg = s.dir / "run.cfg";
    fixtures::write_text(cfg, "experiment_csv = " + s.config.experiment_csv + "\npopulation_csv = " +
                                  s.config.population_csv + "\nsampling_set = X4,X5\nB = 0\nout = " +
                                  (s.dir / "ignored").string() + "\n");
    const std::string out = (s.dir / "flag_out").string();
    const std::string cmd = std::string(GENSEP_CLI_PATH) + " estimate --config " + cfg.string() + " --out " + out +
                            " > /dev/null 2>&1; echo $?";
    CHECK(capture(cmd) == "0\n");
    CHECK(fs::exists(fs::path(out) / "estimates.json"));
    CHECK_FALSE(fs::exists(s.dir / "ignored"));
    CHECK(capture(std::string(GENSEP_CLI_PATH) + " estimate --bogus 1 > /dev/null 2>&1; echo $?") != "0\n");
}
