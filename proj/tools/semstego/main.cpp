#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "semstego/cli/run_config.hpp"
#include "semstego/data/generator.hpp"

using namespace semstego;
using semstego::cli::ExitCode;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("semstego"));

  CLI::App app{"Sentence-to-image steganography toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  app::BuildDatasetArgs bd;
  auto* c_bd = app.add_subcommand("build-dataset", "Build IVT subset manifests and a statistics report");
  c_bd->add_option("--spec", bd.spec, "Dataset spec JSON")->required()->check(CLI::ExistingFile);
  c_bd->add_option("--out", bd.out, "Output directory")->required();

  app::TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Run one training stage and write a checkpoint");
  c_tr->add_option("--stage", tr.stage, "Training stage (1 or 2)")->required();
  c_tr->add_option("--config", tr.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--init", tr.init, "Checkpoint to start from (required for stage 2)");
  c_tr->add_option("--out", tr.out, "Output directory (default: config out_dir)");
  c_tr->add_option("--steps", tr.steps, "Override the stage step budget (0 keeps the config)");
  c_tr->add_option("--seed", tr.seed, "Override the config seed (-1 keeps it)");

  app::EmbedArgs em;
  auto* c_em = app.add_subcommand("embed", "Hide a message in a cover image");
  c_em->add_option("--ckpt", em.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  c_em->add_option("--cover", em.cover, "Cover image")->required()->check(CLI::ExistingFile);
  c_em->add_option("--message", em.message, "Secret message text");
  c_em->add_option("--message-file", em.message_file, "File holding the secret message")->check(CLI::ExistingFile);
  c_em->add_option("--out", em.out, "Stego output path")->required();
  c_em->add_flag("--quantize", em.quantize, "Write an 8-bit PNG instead of the float container");
  c_em->add_option("--clamp", em.clamp, "Clamp policy: hard or none");
  c_em->add_option("--seed", em.seed, "Seed recorded in the sidecar");

  app::DecodeArgs de;
  auto* c_de = app.add_subcommand("decode", "Recover a message from a stego image");
  c_de->add_option("--ckpt", de.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  c_de->add_option("--stego", de.stego, "Stego image")->required()->check(CLI::ExistingFile);
  c_de->add_option("--max-len", de.max_len, "Generation budget in tokens (0: checkpoint default)");
  c_de->add_option("--out", de.out, "Optional JSON result file");

  app::EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Run the metric suite over secret/cover pairs");
  c_ev->add_option("--ckpt", ev.ckpt, "Checkpoint file");
  c_ev->add_option("--model", ev.model, "checkpoint or identity-stub");
  c_ev->add_option("--manifest", ev.manifest, "Secret manifest (JSONL)")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--covers", ev.covers, "Cover directory (empty: synthetic covers)");
  c_ev->add_option("--synthetic-covers", ev.synthetic_covers, "Synthetic cover count when no directory is given");
  c_ev->add_option("--pairing", ev.pairing, "zip or grid");
  c_ev->add_flag("--quantize", ev.quantize, "Round stego images to 8 bits before decoding");
  c_ev->add_option("--clamp", ev.clamp, "Clamp policy: hard or none");
  c_ev->add_option("--bert-backend", ev.bert_backend, "Registered BERT-Score backend (empty: omit)");
  c_ev->add_option("--subset", ev.subset, "Subset label in the report");
  c_ev->add_option("--channels", ev.channels, "Identity-stub geometry: channels");
  c_ev->add_option("--height", ev.height, "Identity-stub geometry: height");
  c_ev->add_option("--width", ev.width, "Identity-stub geometry: width");
  c_ev->add_option("--patch", ev.patch, "Identity-stub geometry: patch size");
  c_ev->add_option("--out", ev.out, "Report directory")->required();
  c_ev->add_option("--seed", ev.seed, "Seed for synthetic covers");

  app::CapacityArgs cs;
  auto* c_cs = app.add_subcommand("capacity-sweep", "Compression-ratio sweep over secret lengths");
  c_cs->add_option("--config", cs.config, "Sweep config JSON")->required()->check(CLI::ExistingFile);
  c_cs->add_option("--out", cs.out, "Report directory")->required();

  app::SteganalyzeArgs sa;
  auto* c_sa = app.add_subcommand("steganalyze", "Statistical steganalysis with ROC output");
  c_sa->add_option("--covers", sa.covers, "Directory of clean images")->required();
  c_sa->add_option("--stegos", sa.stegos, "Directory of stego images")->required();
  c_sa->add_option("--out", sa.out, "Report directory")->required();
  c_sa->add_flag("--plot", sa.plot, "Also render roc.png");

  app::GenerateArgs ge;
  auto* c_ge = app.add_subcommand("generate-ivtg", "Generate a synthetic secret corpus through a chat API");
  c_ge->add_option("--client-config", ge.client_config, "Generator client JSON")->required()->check(CLI::ExistingFile);
  c_ge->add_option("--n", ge.n, "Number of records")->required();
  c_ge->add_option("--out", ge.out, "Output directory")->required();
  c_ge->add_option("--seed", ge.seed, "Prompt sampling seed");
  c_ge->add_option("--min-words", ge.min_words, "Shortest accepted response in words");
  c_ge->add_option("--max-words", ge.max_words, "Longest accepted response in words");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ExitCode::kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*c_bd) return app::run_build_dataset(bd);
    if (*c_tr) return app::run_train(tr);
    if (*c_em) return app::run_embed(em);
    if (*c_de) return app::run_decode(de);
    if (*c_ev) return app::run_evaluate(ev);
    if (*c_cs) return app::run_capacity_sweep(cs);
    if (*c_sa) return app::run_steganalyze(sa);
    if (*c_ge) return app::run_generate(ge);
  } catch (const app::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const data::AuthError& e) {
    std::cerr << "authentication error: " << e.what() << '\n';
    return ExitCode::kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kFailure;
  }
  return ExitCode::kUsage;
}
