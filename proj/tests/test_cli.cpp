// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// End-to-end checks of the CLI contract: subcommand behavior, exit codes,
// and report formats, driven through the real binary.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef MCTA_TOOL_PATH
#error "MCTA_TOOL_PATH must point at the mcta binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_tool(const std::string& args, const fs::path& workdir) {
    const fs::path log = workdir / "cmd.log";
    const std::string cmd = "cd '" + workdir.string() + "' && '" + MCTA_TOOL_PATH + "' " + args + " > '" +
                            log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_tiny_config(const fs::path& path) {
    std::ofstream(path) << "# tiny model for CLI smoke tests\n"
                           "model.hidden_channels = 16\n"
                           "embed.block1_filters = 6\n"
                           "embed.block2_filters = 10\n"
                           "embed.final_kernel_t = 3\n"
                           "embed.final_stride_t = 1\n"
                           "train.batch_size = 8\n"
                           "train.repeats = 1\n";
}

}  // namespace

TEST_CASE("cli: synth is validated, idempotent, and forceable") {
    auto dir = fresh_dir("mcta_cli_synth");
    auto r = run_tool("synth --out ds --seed 7 --classes 3 --clips-per-class 5 --seconds 0.8 --rate 8000", dir);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "ds" / "manifest.csv"));

    auto again = run_tool("synth --out ds --seed 7 --classes 3 --clips-per-class 5 --seconds 0.8 --rate 8000", dir);
    CHECK(again.exit_code == 0);
    CHECK(again.output.find("already exists") != std::string::npos);

    auto forced = run_tool("synth --out ds --seed 7 --classes 3 --clips-per-class 5 --seconds 0.8 --rate 8000 --force", dir);
    CHECK(forced.exit_code == 0);
    CHECK(forced.output.find("already exists") == std::string::npos);

    auto bad = run_tool("synth --out ds2 --classes 0", dir);
    CHECK(bad.exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: features caches, self-heals corrupt entries") {
    auto dir = fresh_dir("mcta_cli_features");
    REQUIRE(run_tool("synth --out ds --seed 3 --classes 2 --clips-per-class 3 --seconds 0.5 --rate 8000", dir)
                .exit_code == 0);
    auto first = run_tool("features --manifest ds/manifest.csv", dir);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("6 extracted") != std::string::npos);

    auto second = run_tool("features --manifest ds/manifest.csv", dir);
    CHECK(second.exit_code == 0);
    CHECK(second.output.find("6 cached") != std::string::npos);

    // Corrupt one cache file: the next run warns and re-extracts it.
    std::ofstream(dir / "ds" / "feature_cache" / "synth_c0_i000.mctaf", std::ios::trunc) << "garbage";
    auto third = run_tool("features --manifest ds/manifest.csv", dir);
    CHECK(third.exit_code == 0);
    CHECK(third.output.find("1 repaired") != std::string::npos);
    CHECK(third.output.find("re-extracted corrupt cache entry") != std::string::npos);

    // MCTA_CACHE_DIR steers the cache location.
    const fs::path env_cache = dir / "env_cache";
    const std::string cmd = "cd '" + dir.string() + "' && MCTA_CACHE_DIR='" + env_cache.string() + "' '" +
                            MCTA_TOOL_PATH + "' features --manifest ds/manifest.csv > env.log 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(env_cache / "synth_c0_i000.mctaf"));
    fs::remove_all(dir);
}

TEST_CASE("cli: augment expands 4x and respects --seed") {
    auto dir = fresh_dir("mcta_cli_augment");
    REQUIRE(run_tool("synth --out ds --seed 5 --classes 2 --clips-per-class 2 --seconds 0.3 --rate 8000", dir)
                .exit_code == 0);
    auto r = run_tool("augment --manifest ds/manifest.csv --out aug --seed 11", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("4 -> 16") != std::string::npos);
    CHECK(fs::exists(dir / "aug" / "manifest.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli: train smoke run writes a one-epoch report; bad inputs exit 2") {
    auto dir = fresh_dir("mcta_cli_train");
    write_tiny_config(dir / "tiny.cfg");
    REQUIRE(run_tool("synth --out ds --seed 7 --classes 3 --clips-per-class 5 --seconds 0.8 --rate 8000", dir)
                .exit_code == 0);
    auto r = run_tool(
        "train --manifest ds/manifest.csv --config tiny.cfg --mode mcta --epochs 1 --report rep.json "
        "--checkpoint model.ckpt",
        dir);
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "rep.json"));
    REQUIRE(fs::exists(dir / "model.ckpt"));

    std::ifstream in(dir / "rep.json");
    nlohmann::json rep = nlohmann::json::parse(in);
    CHECK(rep["mode"] == "mcta");
    CHECK(rep["runs"].size() == 5);  // 5 folds x 1 repeat
    for (const auto& run : rep["runs"]) CHECK(run["loss_history"].size() == 1);
    // Effective config is echoed, including layered overrides.
    CHECK(rep["config"]["model.hidden_channels"] == "16");
    CHECK(rep["config"]["train.epochs"] == "1");
    CHECK(rep["config_hash"].get<std::string>().size() > 0);

    CHECK(run_tool("train --manifest nope.csv --config tiny.cfg", dir).exit_code == 2);
    CHECK(run_tool("train --manifest ds/manifest.csv --config absent.cfg", dir).exit_code == 2);

    // Unknown config keys are rejected.
    std::ofstream(dir / "bad.cfg") << "model.hidden_chanels = 16\n";
    CHECK(run_tool("train --manifest ds/manifest.csv --config bad.cfg", dir).exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: ablate emits a 3-mode comparison with equal parameter counts") {
    auto dir = fresh_dir("mcta_cli_ablate");
    write_tiny_config(dir / "tiny.cfg");
    REQUIRE(run_tool("synth --out ds --seed 9 --classes 3 --clips-per-class 5 --seconds 0.8 --rate 8000", dir)
                .exit_code == 0);
    auto r = run_tool(
        "ablate --manifest ds/manifest.csv --config tiny.cfg --modes mcta,single,none --epochs 1 "
        "--report ab.json --jobs 2",
        dir);
    CHECK(r.exit_code == 0);
    std::ifstream in(dir / "ab.json");
    nlohmann::json rep = nlohmann::json::parse(in);
    REQUIRE(rep["reports"].size() == 3);
    const auto params0 = rep["reports"][0]["param_count"].get<std::int64_t>();
    for (const auto& mode_rep : rep["reports"]) {
        CHECK(mode_rep["param_count"].get<std::int64_t>() == params0);
        CHECK(mode_rep["runs"].size() == 5);
    }
    CHECK(rep["reports"][0]["runs"][0]["batch_log"] == rep["reports"][2]["runs"][0]["batch_log"]);
    fs::remove_all(dir);
}

TEST_CASE("cli: attention-dump emits per-channel rows that sum to 1 for MCTA") {
    auto dir = fresh_dir("mcta_cli_dump");
    write_tiny_config(dir / "tiny.cfg");
    // 2 s at 8 kHz -> 32 frames -> T' = 6 under the tiny config.
    REQUIRE(run_tool("synth --out ds --seed 13 --classes 2 --clips-per-class 3 --seconds 2.0 --rate 8000", dir)
                .exit_code == 0);
    REQUIRE(run_tool(
                "train --manifest ds/manifest.csv --config tiny.cfg --mode mcta --epochs 1 "
                "--checkpoint mcta.ckpt --report -",
                dir)
                .exit_code == 0);
    auto r = run_tool(
        "attention-dump --checkpoint mcta.ckpt --manifest ds/manifest.csv --clips synth_c0_i000,synth_c1_i001 "
        "--channels 5 --seed 3 --out att.csv",
        dir);
    CHECK(r.exit_code == 0);

    std::ifstream csv(dir / "att.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "clip_id,channel,t,weight");
    std::map<std::pair<std::string, std::string>, double> sums;
    std::map<std::string, std::set<std::string>> channels;
    std::string line;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string clip, channel, t, w;
        std::getline(ss, clip, ',');
        std::getline(ss, channel, ',');
        std::getline(ss, t, ',');
        std::getline(ss, w, ',');
        sums[{clip, channel}] += std::stod(w);
        channels[clip].insert(channel);
    }
    REQUIRE(channels.size() == 2);
    for (auto& [clip, set] : channels) CHECK(set.size() == 5);
    for (auto& [key, sum] : sums) CHECK(sum == Catch::Approx(1.0).margin(1e-6));

    // Unknown clip id is a validation error.
    CHECK(run_tool("attention-dump --checkpoint mcta.ckpt --manifest ds/manifest.csv --clips ghost --out g.csv",
                   dir)
              .exit_code == 2);

    // NoAttention checkpoints dump constant 1.0 weights.
    REQUIRE(run_tool(
                "train --manifest ds/manifest.csv --config tiny.cfg --mode none --epochs 1 "
                "--checkpoint none.ckpt --report -",
                dir)
                .exit_code == 0);
    REQUIRE(run_tool(
                "attention-dump --checkpoint none.ckpt --manifest ds/manifest.csv --clips synth_c0_i000 "
                "--out att_none.csv",
                dir)
                .exit_code == 0);
    std::ifstream csv2(dir / "att_none.csv");
    std::getline(csv2, header);
    while (std::getline(csv2, line)) {
        const auto last = line.rfind(',');
        CHECK(std::stod(line.substr(last + 1)) == 1.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli: params table and gradcheck subset") {
    auto dir = fresh_dir("mcta_cli_params");
    auto r = run_tool("params", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("total 1421218") != std::string::npos);

    auto r2 = run_tool("params --mode single", dir);
    CHECK(r2.output.find("total 1421218") != std::string::npos);
    auto r3 = run_tool("params --mode none", dir);
    CHECK(r3.output.find("total 1421218") != std::string::npos);

    auto g = run_tool("gradcheck --ops linear,sigmoid", dir);
    CHECK(g.exit_code == 0);
    CHECK(g.output.find("PASS") != std::string::npos);
    CHECK(run_tool("gradcheck --ops bogus", dir).exit_code == 2);
    fs::remove_all(dir);
}
