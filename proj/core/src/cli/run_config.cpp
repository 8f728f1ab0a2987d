#include "semstego/cli/run_config.hpp"

#include "semstego/cli/artifacts.hpp"
#include "semstego/common/errors.hpp"
#include "semstego/stegocore/pipeline.hpp"

namespace semstego::cli {

stegocore::ClampPolicy parse_clamp(std::string_view s) {
  if (s == "hard") return stegocore::ClampPolicy::hard;
  if (s == "none") return stegocore::ClampPolicy::none;
  throw PreconditionError("unknown clamp policy '" + std::string(s) + "' (expected hard or none)");
}

std::string_view to_string(stegocore::ClampPolicy c) { return c == stegocore::ClampPolicy::hard ? "hard" : "none"; }

void RunConfig::validate() const {
  geometry.validate();
  if (model_preset != "tiny") {
    throw PreconditionError("model preset '" + model_preset + "' is not bundled; only 'tiny' is available");
  }
  model.validate();
  stage1.validate();
  stage2.validate();
  if (stage1.stage != 1 || stage2.stage != 2) throw PreconditionError("stage1/stage2 blocks carry the wrong stage");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  j["model"] = {{"preset", c.model_preset}, {"tiny", c.model}};
  j["geometry"] = c.geometry;
  j["stage1"] = c.stage1;
  j["stage2"] = c.stage2;
  j["train_manifest"] = c.train_manifest.generic_string();
  j["covers_dir"] = c.covers_dir.generic_string();
  j["synthetic_covers"] = c.synthetic_covers;
  j["eval_manifest"] = c.eval_manifest.generic_string();
  j["out_dir"] = c.out_dir.generic_string();
  j["seed"] = c.seed;
  j["quantize"] = c.quantize;
  j["clamp"] = to_string(c.clamp);
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw FormatError("run config must be a JSON object");
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model_preset = m.value("preset", c.model_preset);
    if (m.contains("tiny")) c.model = m.at("tiny").get<stegocore::TinyTransformerConfig>();
  }
  if (j.contains("geometry")) c.geometry = j.at("geometry").get<stegocore::Geometry>();
  if (j.contains("stage1")) {
    auto s = j.at("stage1");
    s["stage"] = 1;
    c.stage1 = s.get<training::StageConfig>();
  }
  if (j.contains("stage2")) {
    auto s = j.at("stage2");
    s["stage"] = 2;
    c.stage2 = s.get<training::StageConfig>();
  }
  c.train_manifest = j.value("train_manifest", c.train_manifest.string());
  c.covers_dir = j.value("covers_dir", c.covers_dir.string());
  c.synthetic_covers = j.value("synthetic_covers", c.synthetic_covers);
  c.eval_manifest = j.value("eval_manifest", c.eval_manifest.string());
  c.out_dir = j.value("out_dir", c.out_dir.string());
  c.seed = j.value("seed", c.seed);
  c.quantize = j.value("quantize", c.quantize);
  if (j.contains("clamp")) c.clamp = parse_clamp(j.at("clamp").get<std::string>());
  c.model.lora = c.stage1.lora;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  RunConfig c = read_json_file(file).get<RunConfig>();
  const auto base = file.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(c.train_manifest);
  resolve(c.covers_dir);
  resolve(c.eval_manifest);
  resolve(c.out_dir);
  c.validate();
  return c;
}

}  // namespace semstego::cli
