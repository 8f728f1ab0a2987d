#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "semstego/cli/artifacts.hpp"
#include "semstego/cli/run_config.hpp"
#include "semstego/data/corpus.hpp"
#include "semstego/data/covers.hpp"
#include "semstego/data/generator.hpp"
#include "semstego/data/manifest.hpp"
#include "semstego/data/subset.hpp"
#include "semstego/evalbench/capacity.hpp"
#include "semstego/evalbench/metrics.hpp"
#include "semstego/evalbench/steganalysis.hpp"
#include "semstego/evalbench/suite.hpp"
#include "semstego/stegocore/image_io.hpp"
#include "semstego/training/checkpoint.hpp"
#include "semstego/training/trainer.hpp"

namespace semstego::app {

namespace fs = std::filesystem;
using cli::ExitCode;
using nlohmann::json;
using stegocore::ImageTensor;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_relative() ? base / p : p; }

std::vector<std::string> texts_of(const std::vector<data::TextRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.text);
  return out;
}

void check_shape(const ImageTensor& img, const stegocore::Geometry& g, const fs::path& path) {
  if (img.height() % g.patch != 0 || img.width() % g.patch != 0) {
    throw GeometryError(path.string() + ": " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                        " is not divisible by patch size " + std::to_string(g.patch));
  }
  if (img.channels() != g.channels || img.height() != g.height || img.width() != g.width) {
    throw GeometryError(path.string() + ": image is " + std::to_string(img.channels()) + "x" +
                        std::to_string(img.height()) + "x" + std::to_string(img.width()) + ", checkpoint expects " +
                        std::to_string(g.channels) + "x" + std::to_string(g.height) + "x" + std::to_string(g.width));
  }
}

std::vector<ImageTensor> covers_for(const fs::path& dir, std::size_t synthetic, const stegocore::Geometry& g,
                                    std::uint64_t seed) {
  if (!dir.empty()) {
    auto covers = data::load_covers(dir, g.height, g.width, 0, g.channels);
    if (covers.empty()) throw PreconditionError("no readable covers in " + dir.string());
    return covers;
  }
  if (synthetic == 0) throw PreconditionError("no covers: give a covers directory or a synthetic count");
  return data::synthetic_covers(synthetic, g.channels, g.height, g.width, seed);
}

std::vector<ImageTensor> images_in(const fs::path& dir, std::vector<std::string>& names) {
  if (!fs::is_directory(dir)) throw PreconditionError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<ImageTensor> out;
  for (const auto& f : files) {
    try {
      out.push_back(stegocore::read_any_image(f));
      names.push_back(f.filename().string());
    } catch (const FormatError& e) {
      spdlog::warn("skipping {}: {}", f.string(), e.what());
    }
  }
  return out;
}

}  // namespace

// ---- build-dataset -------------------------------------------------------

int run_build_dataset(const BuildDatasetArgs& a) {
  const auto spec = cli::read_json_file(a.spec);
  const auto base = a.spec.parent_path();
  std::vector<json> subsets;
  if (spec.contains("subsets")) {
    for (const auto& s : spec.at("subsets")) subsets.push_back(s);
  } else if (spec.contains("sources")) {
    subsets.push_back(spec);
  }
  if (subsets.empty() && !spec.contains("training")) throw FormatError(a.spec.string() + ": no subsets to build");
  fs::create_directories(a.out);
  std::vector<data::Shortfall> shortfalls;
  std::vector<data::TextRecord> all;
  json summary = json::array();
  for (auto sj : subsets) {
    auto sub = sj.get<data::IVTSubsetSpec>();
    for (auto& src : sub.sources) src.path = resolve(base, src.path);
    if (sub.name.empty()) sub.name = "IVT-" + std::string(data::to_string(sub.granularity));
    const auto res = data::build_subset(sub);
    data::write_manifest(a.out / (sub.name + ".jsonl"), res.records);
    shortfalls.insert(shortfalls.end(), res.shortfalls.begin(), res.shortfalls.end());
    all.insert(all.end(), res.records.begin(), res.records.end());
    summary.push_back({{"name", sub.name}, {"records", res.records.size()}, {"rejected_by_bounds", res.rejected_by_bounds}});
    spdlog::info("{}: {} records", sub.name, res.records.size());
  }
  if (spec.contains("training")) {
    auto tspec = spec.at("training").get<data::TrainingCorpusSpec>();
    for (auto& p : tspec.parts) p.path = resolve(base, p.path);
    for (auto& m : tspec.eval_manifests) m = resolve(a.out, m);
    const auto res = data::compose_training_corpus(tspec);
    data::write_manifest(a.out / "train.jsonl", res.composed.records);
    shortfalls.insert(shortfalls.end(), res.shortfalls.begin(), res.shortfalls.end());
    summary.push_back({{"name", "train"},
                       {"records", res.composed.records.size()},
                       {"collisions", res.composed.collisions},
                       {"duplicates", res.composed.duplicates}});
  }
  if (!all.empty()) {
    std::ofstream f(a.out / "stats.csv", std::ios::binary);
    data::write_stats_csv(f, data::stats_table(all));
  }
  json sf = json::array();
  for (const auto& s : shortfalls) {
    sf.push_back({{"category", s.category}, {"source", s.source}, {"wanted", s.wanted}, {"got", s.got}});
    std::cerr << "shortfall: " << s.category << "/" << s.source << " wanted " << s.wanted << ", got " << s.got
              << '\n';
  }
  cli::write_json_file(a.out / "build.json", {{"subsets", summary}, {"shortfalls", sf}});
  cli::write_checksum_manifest(a.out);
  return shortfalls.empty() ? ExitCode::kOk : ExitCode::kShortfall;
}

// ---- train ---------------------------------------------------------------

int run_train(const TrainArgs& a) {
  if (a.stage != 1 && a.stage != 2) throw UsageError("--stage must be 1 or 2");
  if (a.stage == 2 && a.init.empty()) throw UsageError("stage 2 needs --init CKPT from a stage-1 run");
  auto cfg = cli::RunConfig::load(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const fs::path out = a.out.empty() ? cfg.out_dir : a.out;
  if (cfg.train_manifest.empty()) throw PreconditionError("config has no train_manifest");
  const auto secrets = texts_of(data::read_manifest(cfg.train_manifest));
  if (secrets.empty()) throw PreconditionError(cfg.train_manifest.string() + " holds no secrets");
  stegocore::enable_determinism();

  std::unique_ptr<stegocore::StegoUnit> unit;
  if (!a.init.empty()) {
    unit = training::restore_unit(training::load_checkpoint(a.init));
    if (!(unit->geometry() == cfg.geometry)) throw GeometryError("--init checkpoint geometry differs from config");
  } else {
    unit = stegocore::make_tiny_unit(secrets, cfg.geometry, cfg.seed, cfg.model);
  }
  auto stage_cfg = a.stage == 1 ? cfg.stage1 : cfg.stage2;
  stage_cfg.seed = cfg.seed;
  if (a.steps > 0) {
    stage_cfg.steps = a.steps;
    stage_cfg.epochs = 0;
  }
  fs::create_directories(out);
  const auto tag = "stage" + std::to_string(a.stage);
  std::ofstream log(out / ("loss_" + tag + ".tsv"), std::ios::binary);
  training::TrainHooks hooks;
  hooks.log = &log;
  hooks.on_step = [](const training::LossRecord& r) {
    if (r.step % 100 == 0) spdlog::info("step {} l_txt {:.5f} l_emb {:.5f}", r.step, r.l_txt, r.l_emb);
  };
  training::TrainOutcome outcome;
  std::vector<ImageTensor> covers;
  if (a.stage == 1) {
    if (stage_cfg.with_covers) covers = covers_for(cfg.covers_dir, cfg.synthetic_covers, cfg.geometry, cfg.seed);
    outcome = training::train_stage1(*unit, secrets, stage_cfg, stage_cfg.with_covers ? &covers : nullptr, hooks);
  } else {
    covers = covers_for(cfg.covers_dir, cfg.synthetic_covers, cfg.geometry, cfg.seed);
    outcome = training::train_stage2(*unit, covers, secrets, stage_cfg, hooks);
  }
  log.close();
  training::save_checkpoint(outcome.checkpoint, out / (tag + ".ckpt"));
  json run;
  run["command"] = "train";
  run["stage"] = a.stage;
  run["seed"] = cfg.seed;
  run["config"] = cfg;
  run["config"].erase("out_dir");
  run["steps"] = outcome.log.size();
  if (!outcome.log.empty()) {
    run["initial_l_txt"] = outcome.log.front().l_txt;
    run["final_l_txt"] = outcome.log.back().l_txt;
  }
  run["mean_abs_residual"] = training::mean_abs_residual(*unit, secrets);
  cli::write_json_file(out / ("run_" + tag + ".json"), run);
  cli::write_checksum_manifest(out);
  return ExitCode::kOk;
}

// ---- embed / decode -----------------------------------------------------

int run_embed(const EmbedArgs& a) {
  if (a.message.empty() == a.message_file.empty()) throw UsageError("give exactly one of --message or --message-file");
  std::string message = a.message;
  if (!a.message_file.empty()) message = textproto::trim(cli::read_text_file(a.message_file));
  const auto clamp = cli::parse_clamp(a.clamp);
  stegocore::enable_determinism();
  const auto ckpt = training::load_checkpoint(a.ckpt);
  auto unit = training::restore_unit(ckpt);
  const auto cover = stegocore::read_any_image(a.cover);
  check_shape(cover, unit->geometry(), a.cover);
  auto out = stegocore::embed_message(*unit, message, cover, clamp);
  ImageTensor carrier = out.stego;
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  if (a.quantize) {
    carrier = stegocore::quantize(out.stego);
    stegocore::write_png(a.out, carrier);
  } else {
    stegocore::write_float_image(a.out, carrier, stegocore::FloatDtype::float64);
  }
  double mean_abs = 0.0;
  for (double v : out.residual.values()) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(out.residual.size());
  json side;
  side["command"] = "embed";
  side["seed"] = a.seed;
  side["checkpoint_seed"] = ckpt.seed;
  side["geometry"] = unit->geometry();
  side["format"] = a.quantize ? "png" : "float64-container";
  side["clamp"] = a.clamp;
  side["quantize"] = a.quantize;
  side["message_tokens"] = unit->wrap(message).token_ids.size();
  side["psnr"] = evalbench::psnr(cover, carrier);
  side["ssim"] = evalbench::ssim(cover, carrier);
  side["mean_abs_residual"] = mean_abs;
  side["stego_sha256"] = cli::sha256_file(a.out);
  cli::write_json_file(fs::path(a.out.string() + ".json"), side);
  spdlog::info("stego written to {} (PSNR {:.2f} dB)", a.out.string(), side["psnr"].get<double>());
  return ExitCode::kOk;
}

int run_decode(const DecodeArgs& a) {
  stegocore::enable_determinism();
  auto unit = training::restore_unit(training::load_checkpoint(a.ckpt));
  const auto stego = stegocore::read_any_image(a.stego);
  check_shape(stego, unit->geometry(), a.stego);
  const auto max_len = a.max_len > 0 ? a.max_len : unit->max_decode_len();
  const auto rec = stegocore::decode_message(*unit, stego, max_len);
  std::cout << rec.text << std::endl;
  std::cerr << "parse_status: " << textproto::to_string(rec.status) << std::endl;
  if (!a.out.empty()) {
    cli::write_json_file(a.out, {{"text", rec.text}, {"parse_status", textproto::to_string(rec.status)}});
  }
  return rec.ok() ? ExitCode::kOk : ExitCode::kParseFailure;
}

// ---- evaluate ------------------------------------------------------------

int run_evaluate(const EvaluateArgs& a) {
  if (a.model == "checkpoint" && a.ckpt.empty()) throw UsageError("evaluate needs --ckpt or --model identity-stub");
  if (a.model != "checkpoint" && a.model != "identity-stub") {
    throw UsageError("--model must be 'checkpoint' or 'identity-stub'");
  }
  stegocore::enable_determinism();
  const auto secrets = texts_of(data::read_manifest(a.manifest));
  std::unique_ptr<stegocore::StegoUnit> unit;
  std::unique_ptr<stegocore::StegoSystem> system;
  stegocore::Geometry g{a.channels, a.height, a.width, a.patch};
  if (a.model == "identity-stub") {
    g.validate();
    system = std::make_unique<evalbench::IdentityStubSystem>(g);
  } else {
    unit = training::restore_unit(training::load_checkpoint(a.ckpt));
    g = unit->geometry();
    system = std::make_unique<stegocore::UnitStegoSystem>(*unit, cli::parse_clamp(a.clamp));
  }
  const auto covers = covers_for(a.covers, a.synthetic_covers, g, a.seed);
  std::unique_ptr<evalbench::BertScoreBackend> bert;
  if (!a.bert_backend.empty()) bert = evalbench::BertScoreRegistry::instance().make(a.bert_backend);
  evalbench::EvalConfig ec;
  ec.pairing = evalbench::parse_pairing(a.pairing);
  ec.quantize = a.quantize;
  ec.bert_backend = bert.get();
  ec.subset = a.subset;
  ec.seed = a.seed;
  auto report = evalbench::evaluate_suite(*system, secrets, covers, ec);
  report.config["model"] = a.model;
  report.config["clamp"] = a.clamp;
  evalbench::write_report(a.out, report);
  cli::write_checksum_manifest(a.out);
  spdlog::info("WER {:.4f} BLEU {:.4f} PSNR {:.2f} over {} pairs", report.aggregate.wer, report.aggregate.bleu4,
               report.aggregate.psnr, report.aggregate.pairs);
  return ExitCode::kOk;
}

// ---- capacity-sweep ------------------------------------------------------

int run_capacity_sweep(const CapacityArgs& a) {
  const auto j = cli::read_json_file(a.config);
  const auto base = a.config.parent_path();
  std::vector<std::int64_t> lengths = j.value("token_lengths", std::vector<std::int64_t>{32, 64, 128, 256});
  stegocore::Geometry g{3, 128, 128, 16};
  if (j.contains("geometry")) g = j.at("geometry").get<stegocore::Geometry>();
  g.validate();
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});
  evalbench::CapacityHooks hooks;
  if (j.value("train", false)) {
    stegocore::enable_determinism();
    evalbench::DeskSweepOptions opt;
    if (!j.contains("pool_manifest")) throw PreconditionError("a training sweep needs pool_manifest");
    opt.pool = texts_of(data::read_manifest(resolve(base, j.at("pool_manifest").get<std::string>())));
    opt.n_secrets = j.value("n_secrets", opt.n_secrets);
    opt.n_covers = j.value("n_covers", opt.n_covers);
    if (j.contains("stage1")) {
      auto s = j.at("stage1");
      s["stage"] = 1;
      opt.stage1 = s.get<training::StageConfig>();
    }
    if (j.contains("stage2")) {
      auto s = j.at("stage2");
      s["stage"] = 2;
      opt.stage2 = s.get<training::StageConfig>();
    }
    if (j.contains("model")) opt.model = j.at("model").get<stegocore::TinyTransformerConfig>();
    opt.seed = seed;
    hooks = evalbench::desk_capacity_hooks(std::move(opt));
  }
  const auto rows = evalbench::capacity_sweep(lengths, g, hooks);
  fs::create_directories(a.out);
  {
    std::ofstream f(a.out / "capacity.csv", std::ios::binary);
    evalbench::write_capacity_csv(f, rows);
  }
  json rj = json::array();
  for (const auto& r : rows) {
    json row = {{"tokens", r.tokens}, {"n_patches", r.n_patches}, {"ratio", r.ratio}};
    if (r.metrics.pairs > 0) {
      row["mean_secret_tokens"] = r.mean_secret_tokens;
      row["wer"] = r.metrics.wer;
      row["bleu4"] = r.metrics.bleu4;
      row["psnr"] = r.metrics.psnr;
      row["ssim"] = r.metrics.ssim;
    }
    rj.push_back(row);
  }
  cli::write_json_file(a.out / "capacity.json", {{"seed", seed}, {"geometry", g}, {"rows", rj}});
  cli::write_checksum_manifest(a.out);
  return ExitCode::kOk;
}

// ---- steganalyze ---------------------------------------------------------

int run_steganalyze(const SteganalyzeArgs& a) {
  std::vector<std::string> cover_names, stego_names;
  const auto covers = images_in(a.covers, cover_names);
  const auto stegos = images_in(a.stegos, stego_names);
  const auto rep = evalbench::steganalyze(covers, stegos);
  fs::create_directories(a.out);
  {
    std::ofstream f(a.out / "roc.csv", std::ios::binary);
    evalbench::write_roc_csv(f, rep.roc);
  }
  {
    std::ofstream f(a.out / "scores.csv", std::ios::binary);
    f << "file,class,rs,spa,chi_square,fused\n";
    char buf[160];
    auto emit = [&](const std::vector<std::string>& names, const std::vector<evalbench::DetectorScores>& s,
                    const char* cls) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g", cls, s[i].rs, s[i].spa, s[i].chi_square,
                      s[i].fused);
        f << names[i] << ',' << buf << '\n';
      }
    };
    emit(cover_names, rep.cover_scores, "cover");
    emit(stego_names, rep.stego_scores, "stego");
  }
  if (a.plot) evalbench::render_roc_plot(a.out / "roc.png", rep.roc);
  cli::write_json_file(a.out / "summary.json",
                       {{"auc", rep.roc.auc}, {"covers", covers.size()}, {"stegos", stegos.size()}});
  cli::write_checksum_manifest(a.out);
  std::cout << "AUC " << rep.roc.auc << std::endl;
  return ExitCode::kOk;
}

// ---- generate-ivtg -------------------------------------------------------

int run_generate(const GenerateArgs& a) {
  if (a.n == 0) throw UsageError("--n must be positive");
  const auto client = cli::read_json_file(a.client_config).get<data::GeneratorClientConfig>();
  data::LengthBand band{a.min_words, a.max_words};
  const auto res = data::generate_synthetic(client, a.n, band, a.seed);
  fs::create_directories(a.out);
  data::write_manifest(a.out / "ivtg.jsonl", res.records);
  cli::write_json_file(a.out / "generate.json", {{"requested", a.n},
                                                 {"written", res.records.size()},
                                                 {"http_requests", res.http_requests},
                                                 {"skipped", res.skipped},
                                                 {"quota_exhausted", res.quota_exhausted},
                                                 {"seed", a.seed}});
  cli::write_checksum_manifest(a.out);
  if (res.records.size() < a.n) {
    std::cerr << "shortfall: wrote " << res.records.size() << " of " << a.n << " records"
              << (res.quota_exhausted ? " (quota exhausted)" : "") << '\n';
    return ExitCode::kShortfall;
  }
  return ExitCode::kOk;
}

}  // namespace semstego::app
