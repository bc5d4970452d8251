#include <doctest.h>

#include <string>

#include "mimo/config.hpp"
#include "mimo/errors.hpp"

using namespace mimo;

namespace {

std::string error_text(const std::string& toml) {
    try {
        parse_toml(toml);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("scalar values keep their type") {
    const TomlDoc doc = parse_toml(
        "[a]\n"
        "i = 42\n"
        "neg = -7\n"
        "f = 1.5\n"
        "e = 1e3\n"
        "s = \"hi # not a comment\"\n"
        "t = true\n"
        "fl = false\n");
    const TomlTable& a = doc.tables.at("a");
    CHECK(a.at("i").is_int);
    CHECK(a.at("i").i == 42);
    CHECK(a.at("neg").i == -7);
    CHECK(!a.at("f").is_int);
    CHECK(a.at("f").num == 1.5);
    CHECK(!a.at("e").is_int);
    CHECK(a.at("e").num == 1000.0);
    CHECK(a.at("s").str == "hi # not a comment");
    CHECK(a.at("t").b);
    CHECK(!a.at("fl").b);
}

TEST_CASE("comments and blank lines are ignored") {
    const TomlDoc doc = parse_toml(
        "# leading comment\n"
        "\n"
        "[sec]   # trailing\n"
        "x = 1 # value comment\n"
        "  \t \n"
        "y = [1, 2, 3] # array\n");
    const TomlTable& s = doc.tables.at("sec");
    CHECK(s.at("x").i == 1);
    REQUIRE(s.at("y").arr.size() == 3);
    CHECK(s.at("y").arr[2].i == 3);
}

TEST_CASE("arrays hold mixed-format numbers and strings") {
    const TomlDoc doc = parse_toml(
        "[s]\n"
        "nums = [1.0, 2, 3e-1]\n"
        "strs = [\"a\", \"b,c\"]\n"
        "empty = []\n");
    const TomlTable& s = doc.tables.at("s");
    REQUIRE(s.at("nums").arr.size() == 3);
    CHECK(s.at("nums").arr[0].num == 1.0);
    CHECK(s.at("nums").arr[1].is_int);
    CHECK(s.at("nums").arr[2].num == doctest::Approx(0.3));
    REQUIRE(s.at("strs").arr.size() == 2);
    CHECK(s.at("strs").arr[1].str == "b,c"); // comma inside quotes is not a separator
    CHECK(s.at("empty").arr.empty());
}

TEST_CASE("array-of-table sections accumulate in order") {
    const TomlDoc doc = parse_toml(
        "[[detectors]]\n"
        "kind = \"radmm\"\n"
        "[[detectors]]\n"
        "kind = \"robust_mmse\"\n"
        "label = \"rmmse\"\n");
    const auto& arr = doc.table_arrays.at("detectors");
    REQUIRE(arr.size() == 2);
    CHECK(arr[0].at("kind").str == "radmm");
    CHECK(arr[1].at("label").str == "rmmse");
}

TEST_CASE("parse errors carry the offending line number") {
    CHECK(error_text("[a]\nx 1\n").find("line 2") != std::string::npos);
    CHECK(error_text("x = 1\n").find("outside any") != std::string::npos);
    CHECK(error_text("[a]\nx = 1q\n").find("line 2") != std::string::npos);
    CHECK(error_text("[a]\nx = [1, 2\n").find("unterminated") != std::string::npos);
    CHECK(error_text("[a]\nx = [1,, 2]\n").find("empty array element") != std::string::npos);
    CHECK(error_text("[bad name]\n").find("bad table name") != std::string::npos);
    CHECK(error_text("[a]\n x$ = 2\n").find("bad key") != std::string::npos);
    CHECK(error_text("[a]\nx = 1e999\n").find("out of range") != std::string::npos);
}

TEST_CASE("experiment defaults cover an omitted file") {
    const ExperimentConfig cfg = experiment_from_toml(parse_toml(""));
    CHECK(cfg.scenario.sys.M == 8);
    CHECK(cfg.scenario.sys.K == 4);
    CHECK(cfg.scenario.sys.L == 10);
    CHECK(cfg.scenario.sys.Lp == 4);
    CHECK(cfg.scenario.sys.N == 4);
    CHECK(cfg.scenario.mod_order == 1);
    CHECK(cfg.scenario.rho_time.size() == 4);
    CHECK(cfg.scenario.rho_time(0) == 0.99);
    CHECK(cfg.csi_method == "lmmse");
    REQUIRE(cfg.snr_db.size() == 1);
    CHECK(cfg.snr_db[0] == 15.0);
    REQUIRE(cfg.blocks.size() == 1);
    CHECK(cfg.blocks[0] == 5);
    CHECK(cfg.min_symbol_errors == 100);
    CHECK(cfg.max_trials == 1000000);
    CHECK(cfg.master_seed == 1);
    CHECK(cfg.threads == 1);
    CHECK(cfg.timing);
    CHECK(cfg.detectors.empty());
}

TEST_CASE("experiment fields map from their sections") {
    const ExperimentConfig cfg = experiment_from_toml(parse_toml(
        "[system]\n"
        "M = 4\nK = 2\nL = 8\nL_P = 3\nN = 2\nsnr_db = 12.0\n"
        "[channel]\n"
        "rho_t = 0.1\nrho_r = 0.2\nrho_time = [0.9, 0.95]\n"
        "[modulation]\n"
        "Q = 2\n"
        "[csi]\n"
        "method = \"rdakf\"\n"
        "[[detectors]]\n"
        "kind = \"radmm\"\niters = 30\n"
        "[[detectors]]\n"
        "kind = \"lcradmmnet\"\nlabel = \"lcnet10\"\nparams = \"w.json\"\n"
        "[sweep]\n"
        "snr_db = [5.0, 10.0, 15.0]\nblocks = [1, 3]\n"
        "[mc]\n"
        "min_symbol_errors = 200\nmax_trials = 5000\nmaster_seed = 77\nthreads = 2\ntiming = false\n"));
    CHECK(cfg.scenario.sys.M == 4);
    CHECK(cfg.scenario.sys.Lp == 3);
    CHECK(cfg.scenario.snr_db == 12.0);
    CHECK(cfg.scenario.rho_t == 0.1);
    CHECK(cfg.scenario.rho_time(1) == 0.95);
    CHECK(cfg.scenario.mod_order == 2);
    CHECK(cfg.csi_method == "rdakf");
    REQUIRE(cfg.detectors.size() == 2);
    CHECK(cfg.detectors[0].kind == "radmm");
    CHECK(cfg.detectors[0].label == "radmm"); // label falls back to kind
    CHECK(cfg.detectors[0].iters == 30);
    CHECK(cfg.detectors[1].label == "lcnet10");
    CHECK(cfg.detectors[1].params_file == "w.json");
    CHECK(cfg.snr_db == std::vector<double>{5.0, 10.0, 15.0});
    CHECK(cfg.blocks == std::vector<int>{1, 3});
    CHECK(cfg.min_symbol_errors == 200);
    CHECK(cfg.max_trials == 5000);
    CHECK(cfg.master_seed == 77);
    CHECK(cfg.threads == 2);
    CHECK(!cfg.timing);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("scalar rho_time broadcasts over users") {
    const ExperimentConfig cfg = experiment_from_toml(parse_toml(
        "[system]\nK = 3\n[channel]\nrho_time = 0.9\n"));
    REQUIRE(cfg.scenario.rho_time.size() == 3);
    CHECK(cfg.scenario.rho_time(2) == 0.9);
}

TEST_CASE("experiment validation rejects bad settings") {
    auto base = []() {
        ExperimentConfig cfg = experiment_from_toml(parse_toml(""));
        DetectorSpec d;
        d.kind = "robust_mmse";
        d.label = "r";
        cfg.detectors.push_back(d);
        return cfg;
    };
    CHECK_NOTHROW(base().validate());

    ExperimentConfig cfg = base();
    cfg.csi_method = "genie";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.detectors[0].kind = "zf";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.detectors[0].params_file = "w.json"; // only unfolded detectors take weights
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.blocks = {6}; // N + 1 == 5 is the last block
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.blocks = {0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.min_symbol_errors = 50;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.snr_db.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.threads = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base();
    cfg.scenario.rho_time = RVec::Constant(2, 0.9); // K is 4
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("train jobs parse their own section") {
    const TrainJob job = train_job_from_toml(parse_toml(
        "[system]\nM = 4\nK = 2\n"
        "[train]\n"
        "network = \"lcradmmnet\"\nlayers = 6\ntrain_size = 100\nval_size = 20\n"
        "batch = 10\nseed = 9\nblock = 2\nsnr_db = 13.0\ntrain_w = true\n"));
    CHECK(job.kind == NetworkKind::Lc);
    CHECK(job.train.layers == 6);
    CHECK(job.train.train_size == 100);
    CHECK(job.train.val_size == 20);
    CHECK(job.train.batch == 10);
    CHECK(job.train.seed == 9);
    CHECK(job.train.train_w);
    CHECK(job.scenario.block == 2);
    CHECK(job.scenario.snr_db == 13.0);

    CHECK_THROWS_AS(train_job_from_toml(parse_toml("[system]\nM = 4\n")), ConfigError);
    CHECK_THROWS_AS(
        train_job_from_toml(parse_toml("[train]\nnetwork = \"mlp\"\n")), ConfigError);
    CHECK_THROWS_AS(
        train_job_from_toml(parse_toml("[train]\nnetwork = \"radmmnet\"\nblock = 9\n")),
        ConfigError);
}

TEST_CASE("missing config files are reported by path") {
    try {
        parse_toml_file("/tmp/no_such_config_file.toml");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("no_such_config_file") != std::string::npos);
    }
}

} // TEST_SUITE
