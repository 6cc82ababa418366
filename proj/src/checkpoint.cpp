#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "tloc/serialize.hpp"
#include "tloc/trainer.hpp"

namespace tloc {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload layout assumes a little-endian host");

namespace {

constexpr const char* kMagic = "TLOCCKPT 1";

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json tensors = json::array();
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const TensorF& t = ckpt.params.value(i);
    const Shape& s = t.shape();
    json shape = s.rank == 1 ? json::array({s.d0}) : json::array({s.d0, s.d1});
    tensors.push_back(json{{"name", ckpt.params.name(i)},
                           {"shape", std::move(shape)},
                           {"offset", offset},
                           {"count", t.numel()}});
    offset += t.numel() * static_cast<std::int64_t>(sizeof(float));
  }

  json history = json::array();
  for (const EpochRecord& rec : ckpt.history) history.push_back(to_json(rec));

  json header{{"config", to_json(ckpt.config)}, {"dims", to_json(ckpt.dims)},
              {"epoch", ckpt.epoch},            {"history", std::move(history)},
              {"tensors", std::move(tensors)},  {"payload_bytes", offset}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << kMagic << '\n' << header.dump() << '\n';
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const TensorF& t = ckpt.params.value(i);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);

  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kMagic)
    throw ValidationError("not a checkpoint file (bad magic): " + path);
  if (!std::getline(in, header_line))
    throw ValidationError("checkpoint header missing: " + path);
  json header = json::parse(header_line, nullptr, false);
  if (header.is_discarded()) throw ValidationError("checkpoint header is malformed: " + path);

  Checkpoint ckpt;
  try {
    ckpt.config = train_config_from_json(header.at("config"));
    ckpt.dims = dims_from_json(header.at("dims"));
    ckpt.epoch = header.at("epoch").get<int>();
    for (const json& rec : header.at("history")) ckpt.history.push_back(epoch_record_from_json(rec));

    std::int64_t expected_offset = 0;
    for (const json& tj : header.at("tensors")) {
      const std::string name = tj.at("name").get<std::string>();
      const auto shape_dims = tj.at("shape").get<std::vector<std::int64_t>>();
      const std::int64_t offset = tj.at("offset").get<std::int64_t>();
      const std::int64_t count = tj.at("count").get<std::int64_t>();

      Shape shape;
      if (shape_dims.size() == 1)
        shape = Shape::vec(shape_dims[0]);
      else if (shape_dims.size() == 2)
        shape = Shape::mat(shape_dims[0], shape_dims[1]);
      else
        throw ValidationError("checkpoint tensor " + name + " has unsupported rank");
      if (shape.numel() != count || count < 1)
        throw ValidationError("checkpoint tensor " + name + " shape does not match its count");
      if (offset != expected_offset)
        throw ValidationError("checkpoint tensor " + name + " has inconsistent offset");
      expected_offset += count * static_cast<std::int64_t>(sizeof(float));

      TensorF t(shape);
      in.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(count * sizeof(float)));
      if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw ValidationError("checkpoint payload truncated at tensor " + name);
      ckpt.params.add(name, std::move(t));
    }
    if (header.at("payload_bytes").get<std::int64_t>() != expected_offset)
      throw ValidationError("checkpoint payload size disagrees with header");
    if (in.peek() != std::ifstream::traits_type::eof())
      throw ValidationError("checkpoint has trailing bytes after payload");
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint header is malformed: " + std::string(e.what()));
  }

  // Structural cross-check: names and shapes must be exactly what this
  // variant and these dims produce.
  const ParamSet<float> expected = init_params(ckpt.config.variant, ckpt.dims, 0);
  if (expected.size() != ckpt.params.size())
    throw ValidationError("checkpoint parameter list does not match its variant");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected.name(i) != ckpt.params.name(i))
      throw ValidationError("checkpoint parameter order mismatch at " + ckpt.params.name(i));
    if (!(expected.value(i).shape() == ckpt.params.value(i).shape()))
      throw ValidationError("checkpoint tensor " + ckpt.params.name(i) +
                            " has a shape inconsistent with the recorded dims");
  }
  return ckpt;
}

}  // namespace tloc
