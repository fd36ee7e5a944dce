#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Path of the command-line binary, injected by the build.
const char* kCli = EPIFIT_CLI_PATH;

struct CmdResult {
    int exit_code;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    fs::path dir = fs::temp_directory_path() / "epifit_test_cli";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    fs::path out = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
    fs::path err = work_dir() / ("stderr" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = std::string(kCli) + " " + args + " > " + out.string() + " 2> " +
                      err.string();
    int rc = std::system(cmd.c_str());
    int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return {code, slurp(out), slurp(err)};
}

} // namespace

TEST_CASE("models lists every registered disease") {
    CmdResult r = run_cli("models");
    CHECK(r.exit_code == 0);
    for (const char* id : {"covid", "hiv", "smallpox", "tuberculosis", "pneumonia",
                           "dengue", "ebola", "anthrax", "polio", "measles", "zika"}) {
        CHECK(r.out.find(id) != std::string::npos);
    }
}

TEST_CASE("model card carries the covid ranges") {
    CmdResult r = run_cli("models --id covid");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("alpha") != std::string::npos);
    CHECK(r.out.find("0.12") != std::string::npos);
    CHECK(r.out.find("0.52") != std::string::npos);
    CHECK(r.out.find("0.04") != std::string::npos);
    CHECK(r.out.find("0.06") != std::string::npos);
    CHECK(r.out.find("0.02") != std::string::npos);

    CmdResult rj = run_cli("models --id covid --json");
    CHECK(rj.exit_code == 0);
    json j = json::parse(rj.out);
    CHECK(j["model_id"] == "covid");
    CHECK(j["params"][0]["range_lo"] == 0.12);
}

TEST_CASE("every subcommand documents its flags in --help") {
    struct Expect {
        const char* sub;
        std::vector<const char*> flags;
    };
    const std::vector<Expect> expectations = {
        {"models", {"--id", "--json"}},
        {"simulate", {"--model", "--params", "--out", "--y0", "--rel-tol", "--abs-tol",
                      "--t-horizon", "--n-samples"}},
        {"generate", {"--model", "--out", "--train", "--val", "--test", "--seed",
                      "--rel-tol", "--abs-tol", "--full-scale"}},
        {"train", {"--dataset", "--out", "--hidden", "--layers", "--dense", "--epochs",
                   "--batch", "--lr", "--decay-factor", "--decay-every", "--seed",
                   "--jobs", "--log-every", "--history", "--full-scale"}},
        {"infer", {"--weights", "--traj", "--out", "--json"}},
        {"refine", {"--traj", "--init", "--weights", "--steps", "--pretrain-steps",
                    "--collocation", "--lr", "--weight-data", "--weight-physics",
                    "--seed", "--out"}},
        {"eval", {"--dataset", "--weights", "--split", "--out", "--timing"}},
        {"plot", {"--traj", "--overlay", "--out", "--channels"}},
        {"pipeline", {"--model", "--out", "--train", "--val", "--test", "--hidden",
                      "--epochs", "--batch", "--seed", "--jobs"}},
    };
    for (const auto& e : expectations) {
        CmdResult r = run_cli(std::string(e.sub) + " --help");
        CHECK(r.exit_code == 0);
        for (const char* flag : e.flags) {
            INFO(e.sub, " missing ", flag);
            CHECK(r.out.find(flag) != std::string::npos);
        }
    }
    // Defaults are printed alongside the flags.
    CmdResult gen = run_cli("generate --help");
    CHECK(gen.out.find("2000") != std::string::npos);
    CmdResult tr = run_cli("train --help");
    CHECK(tr.out.find("3000") != std::string::npos);
}

TEST_CASE("a bad flag is a usage error: exit 1 with guidance") {
    CmdResult r = run_cli("models --no-such-flag");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("--no-such-flag") != std::string::npos);

    CmdResult r2 = run_cli("");
    CHECK(r2.exit_code == 1);
    CHECK(r2.err.find("subcommand") != std::string::npos);
}

TEST_CASE("a missing input file is a runtime error: exit 2 with the path") {
    CmdResult r = run_cli("plot --traj /definitely/not/here.bin --out /tmp/x");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("/definitely/not/here.bin") != std::string::npos);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("an unknown model id is a runtime error naming the alternatives") {
    CmdResult r = run_cli("models --id nothing");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("nothing") != std::string::npos);
    CHECK(r.err.find("covid") != std::string::npos);
}

TEST_CASE("conflicting refine initializations are rejected citing both flags") {
    fs::path traj = work_dir() / "conflict_traj.bin";
    CmdResult sim = run_cli("simulate --model covid --params 0.3,0.05,0.03 --out " +
                            traj.string());
    REQUIRE(sim.exit_code == 0);
    CmdResult r = run_cli("refine --traj " + traj.string() +
                          " --init 0.3,0.05,0.03 --weights /tmp/w.bin");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("--init") != std::string::npos);
    CHECK(r.err.find("--weights") != std::string::npos);
}

TEST_CASE("simulate writes deterministic trajectory containers") {
    fs::path a = work_dir() / "det_a.bin";
    fs::path b = work_dir() / "det_b.bin";
    CmdResult ra = run_cli("simulate --model measles --params 0.02,0.4,100,35 --out " +
                           a.string());
    CmdResult rb = run_cli("simulate --model measles --params 0.02,0.4,100,35 --out " +
                           b.string());
    CHECK(ra.exit_code == 0);
    CHECK(rb.exit_code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
}

TEST_CASE("generate is deterministic for a fixed seed and differs across seeds") {
    fs::path a = work_dir() / "gen_a.bin";
    fs::path b = work_dir() / "gen_b.bin";
    fs::path c = work_dir() / "gen_c.bin";
    std::string base = "generate --model covid --train 12 --val 3 --test 3 ";
    CHECK(run_cli(base + "--seed 9 --out " + a.string()).exit_code == 0);
    CHECK(run_cli(base + "--seed 9 --out " + b.string()).exit_code == 0);
    CHECK(run_cli(base + "--seed 10 --out " + c.string()).exit_code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("plot emits one SVG and one CSV per channel with the exact numbers") {
    fs::path traj = work_dir() / "plot_traj.bin";
    REQUIRE(run_cli("simulate --model covid --params 0.3,0.05,0.03 --out " +
                    traj.string()).exit_code == 0);
    fs::path dir = work_dir() / "plots";
    CmdResult r = run_cli("plot --traj " + traj.string() + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    for (const char* label : {"S", "I", "D", "R"}) {
        fs::path svg = dir / (std::string("ch_") + label + ".svg");
        fs::path csv = dir / (std::string("ch_") + label + ".csv");
        CHECK(fs::exists(svg));
        CHECK(fs::exists(csv));
        // Header plus one row per grid point.
        std::string text = slurp(csv);
        std::size_t rows = static_cast<std::size_t>(
            std::count(text.begin(), text.end(), '\n'));
        CHECK(rows == 101);
    }
    CHECK(fs::exists(dir / "all_channels.svg"));

    // Byte determinism of the emitted files.
    fs::path dir2 = work_dir() / "plots2";
    REQUIRE(run_cli("plot --traj " + traj.string() + " --out " + dir2.string())
                .exit_code == 0);
    CHECK(slurp(dir / "ch_I.svg") == slurp(dir2 / "ch_I.svg"));
    CHECK(slurp(dir / "ch_I.csv") == slurp(dir2 / "ch_I.csv"));
}

TEST_CASE("plot overlays demand a shared grid") {
    fs::path t1 = work_dir() / "ov_a.bin";
    fs::path t2 = work_dir() / "ov_b.bin";
    REQUIRE(run_cli("simulate --model covid --params 0.3,0.05,0.03 --out " + t1.string())
                .exit_code == 0);
    REQUIRE(run_cli("simulate --model covid --params 0.3,0.05,0.03 --n-samples 50 --out " +
                    t2.string()).exit_code == 0);
    fs::path dir = work_dir() / "ov_plots";
    CmdResult r = run_cli("plot --traj " + t1.string() + " --overlay " + t2.string() +
                          " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("grid") != std::string::npos);

    // Matching grids overlay fine, two series per channel.
    fs::path t3 = work_dir() / "ov_c.bin";
    REQUIRE(run_cli("simulate --model covid --params 0.32,0.05,0.03 --out " + t3.string())
                .exit_code == 0);
    CmdResult ok = run_cli("plot --traj " + t1.string() + " --overlay " + t3.string() +
                           " --out " + dir.string());
    CHECK(ok.exit_code == 0);
    std::string csv = slurp(dir / "ch_I.csv");
    CHECK(csv.find(',') != std::string::npos);
    // Header names both series.
    CHECK(csv.substr(0, csv.find('\n')).find("I") != std::string::npos);
}

TEST_CASE("config files supply defaults and flags take precedence") {
    fs::path cfg = work_dir() / "gen.cfg";
    {
        std::ofstream out(cfg);
        out << "# dataset defaults\n";
        out << "[generate]\n";
        out << "model=covid\n";
        out << "train=10\n";
        out << "val=3\n";
        out << "test=3\n";
        out << "seed=4\n";
    }
    fs::path a = work_dir() / "cfg_a.bin";
    CmdResult r = run_cli("--config " + cfg.string() + " generate --out " + a.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("10/3/3") != std::string::npos);

    // A command-line flag overrides the config value.
    fs::path b = work_dir() / "cfg_b.bin";
    CmdResult r2 = run_cli("--config " + cfg.string() + " generate --train 14 --out " +
                           b.string());
    CHECK(r2.exit_code == 0);
    CHECK(r2.out.find("14/3/3") != std::string::npos);
}

TEST_CASE("infer reports parameters as json when asked") {
    fs::path ds = work_dir() / "infer_ds.bin";
    fs::path w = work_dir() / "infer_w.bin";
    fs::path traj = work_dir() / "infer_traj.bin";
    REQUIRE(run_cli("generate --model covid --train 16 --val 4 --test 4 --seed 2 --out " +
                    ds.string()).exit_code == 0);
    REQUIRE(run_cli("train --dataset " + ds.string() + " --out " + w.string() +
                    " --hidden 6 --dense 6 --epochs 3 --batch 8 --seed 3").exit_code == 0);
    REQUIRE(run_cli("simulate --model covid --params 0.3,0.05,0.03 --out " +
                    traj.string()).exit_code == 0);

    CmdResult r = run_cli("infer --weights " + w.string() + " --traj " + traj.string() +
                          " --json");
    CHECK(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["params"].contains("alpha"));
    CHECK(j["params"].contains("beta"));
    CHECK(j["params"].contains("gamma"));
    CHECK(j["model_id"] == "covid");

    // Model mismatch between weights and trajectory is a runtime error.
    fs::path other = work_dir() / "other_traj.bin";
    REQUIRE(run_cli("simulate --model measles --params 0.02,0.4,100,35 --out " +
                    other.string()).exit_code == 0);
    CmdResult bad = run_cli("infer --weights " + w.string() + " --traj " + other.string());
    CHECK(bad.exit_code == 2);
}

TEST_CASE("eval writes a machine-readable report") {
    fs::path ds = work_dir() / "eval_ds.bin";
    fs::path w = work_dir() / "eval_w.bin";
    fs::path rep = work_dir() / "report.json";
    REQUIRE(run_cli("generate --model covid --train 16 --val 4 --test 4 --seed 6 --out " +
                    ds.string()).exit_code == 0);
    REQUIRE(run_cli("train --dataset " + ds.string() + " --out " + w.string() +
                    " --hidden 6 --dense 6 --epochs 3 --batch 8 --seed 7").exit_code == 0);
    CmdResult r = run_cli("eval --dataset " + ds.string() + " --weights " + w.string() +
                          " --split test --out " + rep.string());
    CHECK(r.exit_code == 0);
    json j = json::parse(slurp(rep));
    CHECK(j["model_id"] == "covid");
    CHECK(j["n_tasks"] == 4);
    CHECK(j["per_param"].size() == 3);

    CmdResult bad = run_cli("eval --dataset " + ds.string() + " --weights " + w.string() +
                            " --split nope");
    CHECK(bad.exit_code == 1); // rejected by flag validation
}

TEST_CASE("train writes a history csv without wall-clock columns") {
    fs::path ds = work_dir() / "hist_ds.bin";
    fs::path w = work_dir() / "hist_w.bin";
    REQUIRE(run_cli("generate --model covid --train 16 --val 4 --test 4 --seed 8 --out " +
                    ds.string()).exit_code == 0);
    REQUIRE(run_cli("train --dataset " + ds.string() + " --out " + w.string() +
                    " --hidden 6 --dense 6 --epochs 4 --batch 8 --seed 9 --log-every 2")
                .exit_code == 0);
    std::string hist = slurp(fs::path(w.string() + ".history.csv"));
    CHECK(hist.substr(0, hist.find('\n')) == "epoch,train_loss,val_loss,lr");
    // Wall times live in a separate file so the primary outputs stay
    // byte-reproducible.
    std::string timing = slurp(fs::path(w.string() + ".history.csv.timing.csv"));
    CHECK(timing.substr(0, timing.find('\n')) == "epoch,wall_seconds");
}
