#include "semstego/training/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "semstego/common/errors.hpp"
#include "semstego/training/trainer.hpp"

namespace semstego::training {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using textproto::TokenId;

constexpr char kMagic[8] = {'S', 'E', 'M', 'S', 'T', 'C', 'K', 'P'};
constexpr int kFormatVersion = 1;

torch::Tensor cpu_float(const torch::Tensor& t) {
  return t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
}

nlohmann::ordered_json specials_json(const textproto::SpecialTokenSet& s) {
  return {{"secret_start", s.secret_start}, {"secret_end", s.secret_end}, {"secret_emb", s.secret_emb}, {"stego", s.stego}};
}

textproto::SpecialTokenSet specials_from(const nlohmann::json& j) {
  return {j.at("secret_start").get<TokenId>(), j.at("secret_end").get<TokenId>(), j.at("secret_emb").get<TokenId>(),
          j.at("stego").get<TokenId>()};
}

}  // namespace

std::uint32_t tensor_crc32(const torch::Tensor& t) {
  auto c = cpu_float(t);
  const auto bytes = static_cast<uInt>(c.numel() * static_cast<std::int64_t>(sizeof(float)));
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(c.data_ptr<float>()), bytes));
}

std::map<std::string, std::uint32_t> tensor_checksums(const stegocore::NamedTensors& tensors) {
  std::map<std::string, std::uint32_t> out;
  for (const auto& [name, t] : tensors) out.emplace(name, tensor_crc32(t));
  return out;
}

double evaluation_loss(stegocore::StegoUnit& unit, const std::vector<std::string>& batch) {
  if (batch.empty()) return 0.0;
  torch::NoGradGuard no_grad;
  unit.set_training(false);
  std::vector<textproto::WrappedMessage> wrapped;
  wrapped.reserve(batch.size());
  for (const auto& s : batch) wrapped.push_back(unit.wrap(s));
  std::mt19937_64 rng(0);
  StageConfig cfg = StageConfig::defaults(1);
  return stage1_losses(unit, wrapped, {}, rng, cfg).total.item<double>();
}

Checkpoint capture_checkpoint(stegocore::StegoUnit& unit, int stage, std::int64_t step, std::uint64_t seed,
                              const nlohmann::json& stage_config, std::vector<std::string> eval_batch) {
  Checkpoint c;
  c.unit = unit.config();
  c.tokenizer = unit.tokenizer().to_json();
  c.templates = unit.templates();
  c.specials = unit.specials();
  c.stage = stage;
  c.step = step;
  c.seed = seed;
  c.stage_config = stage_config;
  c.eval_batch = std::move(eval_batch);
  c.eval_loss = evaluation_loss(unit, c.eval_batch);
  for (const auto& [name, t] : unit.named_tensors()) c.tensors.emplace_back(name, cpu_float(t).clone());
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["stage"] = ckpt.stage;
  manifest["step"] = ckpt.step;
  manifest["seed"] = ckpt.seed;
  manifest["unit"] = nlohmann::json(ckpt.unit);
  manifest["stage_config"] = ckpt.stage_config;
  manifest["specials"] = specials_json(ckpt.specials);
  manifest["templates"] = {
      {"version", ckpt.templates.version}, {"embed", ckpt.templates.embed}, {"decode", ckpt.templates.decode}};
  manifest["tokenizer"] = ckpt.tokenizer;
  manifest["eval_batch"] = ckpt.eval_batch;
  manifest["eval_loss"] = ckpt.eval_loss;
  auto& entries = manifest["tensors"] = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  std::vector<torch::Tensor> payloads;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = cpu_float(t);
    const auto nbytes = static_cast<std::uint64_t>(c.numel()) * sizeof(float);
    entries.push_back({{"name", name},
                       {"dtype", "float32"},
                       {"shape", c.sizes().vec()},
                       {"offset", offset},
                       {"nbytes", nbytes},
                       {"crc32", tensor_crc32(c)}});
    offset += nbytes;
    payloads.push_back(c);
  }
  const auto text = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const auto len = static_cast<std::uint64_t>(text.size());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& c : payloads) {
    out.write(reinterpret_cast<const char*>(c.data_ptr<float>()),
              static_cast<std::streamsize>(c.numel() * static_cast<std::int64_t>(sizeof(float))));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError(path.string() + ": not a checkpoint");
  if (len > (1ULL << 30)) throw FormatError(path.string() + ": implausible manifest length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError(path.string() + ": truncated manifest");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad manifest: " + e.what());
  }
  if (m.value("format_version", 0) != kFormatVersion) throw FormatError(path.string() + ": unsupported format version");

  Checkpoint c;
  try {
    c.stage = m.at("stage").get<int>();
    c.step = m.at("step").get<std::int64_t>();
    c.seed = m.at("seed").get<std::uint64_t>();
    c.unit = m.at("unit").get<stegocore::UnitConfig>();
    c.stage_config = m.at("stage_config");
    c.specials = specials_from(m.at("specials"));
    const auto& t = m.at("templates");
    c.templates = {t.at("version").get<std::string>(), t.at("embed").get<std::string>(),
                   t.at("decode").get<std::string>()};
    c.tokenizer = m.at("tokenizer");
    c.eval_batch = m.at("eval_batch").get<std::vector<std::string>>();
    c.eval_loss = m.at("eval_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": incomplete manifest: " + e.what());
  }

  const auto data_start = static_cast<std::uint64_t>(sizeof kMagic + sizeof len + len);
  for (const auto& e : m.at("tensors")) {
    const auto name = e.at("name").get<std::string>();
    if (e.at("dtype").get<std::string>() != "float32") throw FormatError(name + ": unsupported dtype");
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    const auto nbytes = e.at("nbytes").get<std::uint64_t>();
    auto t = torch::empty(shape, torch::kFloat32);
    if (static_cast<std::uint64_t>(t.numel()) * sizeof(float) != nbytes) throw FormatError(name + ": size mismatch");
    in.seekg(static_cast<std::streamoff>(data_start + e.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(nbytes));
    if (!in) throw FormatError(path.string() + ": truncated tensor " + name);
    if (tensor_crc32(t) != e.at("crc32").get<std::uint32_t>()) throw FormatError(name + ": checksum mismatch");
    c.tensors.emplace_back(name, std::move(t));
  }
  return c;
}

void load_weights(stegocore::StegoUnit& unit, const Checkpoint& ckpt) {
  auto targets = unit.named_tensors();
  if (targets.size() != ckpt.tensors.size()) throw FormatError("checkpoint tensor count does not match the unit");
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& [name, dst] = targets[i];
    const auto& [src_name, src] = ckpt.tensors[i];
    if (name != src_name || !dst.sizes().equals(src.sizes())) {
      throw FormatError("checkpoint tensor '" + src_name + "' does not match unit tensor '" + name + "'");
    }
    dst.copy_(src);
  }
}

std::unique_ptr<stegocore::StegoUnit> restore_unit(const Checkpoint& ckpt) {
  auto tok = textproto::ByteBpeTokenizer::from_json(ckpt.tokenizer);
  auto unit = std::make_unique<stegocore::StegoUnit>(std::move(tok), ckpt.templates, ckpt.unit);
  if (!(unit->specials() == ckpt.specials)) throw FormatError("checkpoint special-token ids disagree with its tokenizer");
  load_weights(*unit, ckpt);
  unit->set_training(false);
  return unit;
}

bool verify_eval_loss(stegocore::StegoUnit& unit, const Checkpoint& ckpt, double rel_tol) {
  const double now = evaluation_loss(unit, ckpt.eval_batch);
  const double scale = std::max(std::abs(ckpt.eval_loss), 1e-12);
  return std::abs(now - ckpt.eval_loss) <= rel_tol * scale;
}

}  // namespace semstego::training
