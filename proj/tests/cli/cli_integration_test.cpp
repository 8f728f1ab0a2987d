#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "semstego/cli/artifacts.hpp"
#include "semstego/data/covers.hpp"
#include "semstego/data/manifest.hpp"
#include "semstego/stegocore/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semstego;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_root() {
  static const fs::path root = [] {
    auto r = fs::temp_directory_path() / "semstego_cli_it";
    fs::remove_all(r);
    fs::create_directories(r);
    return r;
  }();
  return root;
}

RunResult run(const std::string& args, const std::string& env = {}) {
  static int counter = 0;
  const auto base = work_root() / ("run" + std::to_string(counter++));
  const auto cmd = env + (env.empty() ? "" : " ") + std::string(SEMSTEGO_CLI_BINARY) + " " + args + " >" +
                   base.string() + ".out 2>" + base.string() + ".err";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = cli::read_text_file(base.string() + ".out");
  r.err = cli::read_text_file(base.string() + ".err");
  return r;
}

fs::path fresh(const std::string& name) {
  auto d = work_root() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::vector<std::string> kSecrets = {"the red fox runs", "a quiet blue river", "seven small stones",
                                           "morning light falls"};

/// Manifest + run config for a short stage at 3×64×64, P = 16.
fs::path write_run_config(const fs::path& dir, int steps) {
  std::vector<data::TextRecord> recs;
  for (const auto& s : kSecrets) recs.push_back(data::make_record(s, "t", "t"));
  data::write_manifest(dir / "secrets.jsonl", recs);
  json cfg = {{"geometry", {{"channels", 3}, {"height", 64}, {"width", 64}, {"patch", 16}}},
              {"train_manifest", "secrets.jsonl"},
              {"synthetic_covers", 4},
              {"seed", 3},
              {"stage1", {{"steps", steps}, {"batch_size", 4}, {"warmup_steps", 2}}},
              {"stage2", {{"steps", steps}, {"batch_size", 4}, {"warmup_steps", 2}}}};
  std::ofstream(dir / "run.json") << cfg.dump(2);
  return dir / "run.json";
}

}  // namespace

TEST(Cli, HelpListsEveryCommandAndFlag) {
  const auto top = run("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* c : {"build-dataset", "train", "embed", "decode", "evaluate", "capacity-sweep", "steganalyze",
                        "generate-ivtg"}) {
    EXPECT_NE(top.out.find(c), std::string::npos) << c;
    const auto sub = run(std::string(c) + " --help");
    EXPECT_EQ(sub.code, 0) << c;
    EXPECT_NE(sub.out.find("--out"), std::string::npos) << c;
  }
  EXPECT_NE(run("embed --help").out.find("[hard]"), std::string::npos);
}

TEST(Cli, UsageErrorsExit64) {
  EXPECT_EQ(run("").code, 64);
  EXPECT_EQ(run("no-such-command").code, 64);
  const auto dir = fresh("usage");
  const auto cfg = write_run_config(dir, 1);
  const auto r = run("train --stage 2 --config " + cfg.string() + " --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.err.find("--init"), std::string::npos);
}

TEST(Cli, EvaluateIdentityStub) {
  const auto dir = fresh("eval_stub");
  std::vector<data::TextRecord> recs;
  for (const auto& s : kSecrets) recs.push_back(data::make_record(s, "t", "t"));
  data::write_manifest(dir / "m.jsonl", recs);
  const auto r = run("evaluate --model identity-stub --manifest " + (dir / "m.jsonl").string() + " --height 32 --width 32 --out " +
                     (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = cli::read_json_file(dir / "out" / "report.json");
  EXPECT_DOUBLE_EQ(report.at("aggregate").at("wer").get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(report.at("aggregate").at("psnr").get<double>(), 100.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "SHA256SUMS"));
}

TEST(Cli, SteganalyzeIdenticalDirectories) {
  const auto dir = fresh("stega");
  for (std::uint64_t s = 0; s < 4; ++s)
    stegocore::write_png(dir / ("c" + std::to_string(s) + ".png"), data::synthetic_cover(3, 32, 32, s));
  const auto r = run("steganalyze --covers " + dir.string() + " --stegos " + dir.string() + " --out " +
                     (dir.parent_path() / "stega_out").string() + " --plot");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("AUC 0.5"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir.parent_path() / "stega_out" / "roc.png"));
  EXPECT_EQ(cli::read_text_file(dir.parent_path() / "stega_out" / "roc.csv").rfind("threshold,fpr,tpr\n", 0), 0u);
}

TEST(Cli, BuildDatasetExitCodes) {
  const auto dir = fresh("dataset");
  std::ofstream(dir / "news.txt") << "this sentence has exactly six words\nshort\nanother perfectly fine sentence right here\n";
  json ok = {{"name", "IVT-S"},
             {"granularity", "S"},
             {"sources", {{{"path", "news.txt"}, {"category", "news"}, {"quota", 2}}}}};
  std::ofstream(dir / "ok.json") << ok.dump();
  const auto r0 = run("build-dataset --spec " + (dir / "ok.json").string() + " --out " + (dir / "o0").string());
  EXPECT_EQ(r0.code, 0) << r0.err;
  EXPECT_EQ(data::read_manifest(dir / "o0" / "IVT-S.jsonl").size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "o0" / "stats.csv"));

  ok["sources"][0]["quota"] = 5;
  std::ofstream(dir / "short.json") << ok.dump();
  const auto r2 = run("build-dataset --spec " + (dir / "short.json").string() + " --out " + (dir / "o2").string());
  EXPECT_EQ(r2.code, 2);
  EXPECT_NE(r2.err.find("wanted 5, got 2"), std::string::npos) << r2.err;

  ok["sources"][0]["path"] = "missing.txt";
  std::ofstream(dir / "bad.json") << ok.dump();
  const auto r1 = run("build-dataset --spec " + (dir / "bad.json").string() + " --out " + (dir / "o1").string());
  EXPECT_EQ(r1.code, 1);
  EXPECT_NE(r1.err.find("missing.txt"), std::string::npos);
}

TEST(Cli, GenerateAgainstStubServer) {
  httplib::Server server;
  std::mutex mu;
  int hits = 0;
  server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    ++hits;
    json j = {{"choices", {{{"message", {{"content", "one two three four five six"}}}}}}};
    res.set_content(j.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto dir = fresh("generate");
  json client = {{"base_url", "http://127.0.0.1:" + std::to_string(port)},
                 {"credential_env", "SEMSTEGO_IT_KEY"},
                 {"rate_limit_per_s", 0}};
  std::ofstream(dir / "client.json") << client.dump();
  const std::string secret = "sk-it-do-not-leak-42";
  const auto r = run("generate-ivtg --client-config " + (dir / "client.json").string() + " --n 5 --min-words 5 --max-words 20 --out " +
                         (dir / "out").string(),
                     "SEMSTEGO_IT_KEY=" + secret);
  const auto missing = run("generate-ivtg --client-config " + (dir / "client.json").string() + " --n 1 --out " +
                           (dir / "out_missing").string());
  server.stop();
  t.join();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(hits, 5);
  EXPECT_EQ(data::read_manifest(dir / "out" / "ivtg.jsonl").size(), 5u);
  EXPECT_EQ(r.err.find(secret), std::string::npos);
  EXPECT_EQ(r.out.find(secret), std::string::npos);
  for (const auto& e : fs::recursive_directory_iterator(dir / "out"))
    if (e.is_regular_file()) EXPECT_EQ(cli::read_text_file(e.path()).find(secret), std::string::npos) << e.path();
  EXPECT_EQ(missing.code, 1);
}

TEST(Cli, TrainEmbedDecodeAndDeterminism) {
  const auto dir = fresh("pipeline");
  const auto cfg = write_run_config(dir, 6);
  const auto a = run("train --stage 1 --config " + cfg.string() + " --out " + (dir / "s1a").string());
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run("train --stage 1 --config " + cfg.string() + " --out " + (dir / "s1b").string());
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(cli::read_text_file(dir / "s1a" / "SHA256SUMS"), cli::read_text_file(dir / "s1b" / "SHA256SUMS"));
  const auto ckpt1 = dir / "s1a" / "stage1.ckpt";
  ASSERT_TRUE(fs::exists(ckpt1));

  const auto s2 = run("train --stage 2 --config " + cfg.string() + " --init " + ckpt1.string() + " --out " +
                      (dir / "s2").string());
  ASSERT_EQ(s2.code, 0) << s2.err;
  const auto ckpt2 = dir / "s2" / "stage2.ckpt";
  ASSERT_TRUE(fs::exists(ckpt2));

  stegocore::write_png(dir / "cover.png", data::synthetic_cover(3, 64, 64, 11));
  stegocore::write_png(dir / "odd.png", data::synthetic_cover(3, 60, 64, 11));
  const auto e = run("embed --ckpt " + ckpt2.string() + " --cover " + (dir / "cover.png").string() +
                     " --message \"the red fox runs\" --out " + (dir / "stego.f64").string());
  ASSERT_EQ(e.code, 0) << e.err;
  const auto sidecar = cli::read_json_file(dir / "stego.f64.json");
  EXPECT_EQ(sidecar.at("stego_sha256"), cli::sha256_file(dir / "stego.f64"));
  EXPECT_EQ(sidecar.at("clamp"), "hard");
  EXPECT_TRUE(stegocore::is_float_container(dir / "stego.f64"));

  const auto odd = run("embed --ckpt " + ckpt2.string() + " --cover " + (dir / "odd.png").string() +
                       " --message hi --out " + (dir / "odd_stego.png").string() + " --quantize");
  EXPECT_EQ(odd.code, 64);

  const auto d = run("decode --ckpt " + ckpt2.string() + " --stego " + (dir / "stego.f64").string() + " --out " +
                     (dir / "decoded.json").string());
  EXPECT_TRUE(d.code == 0 || d.code == 3) << d.err;
  EXPECT_NE(d.err.find("parse_status: "), std::string::npos);
  const auto decoded = cli::read_json_file(dir / "decoded.json");
  EXPECT_EQ(decoded.at("text").get<std::string>() + "\n", d.out);
  EXPECT_EQ(d.code == 0, decoded.at("parse_status") == "ok");
}
