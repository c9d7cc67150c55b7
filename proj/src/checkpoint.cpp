#include "seqloc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "seqloc/errors.hpp"

namespace seqloc {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_buffers(std::ostream& os, const LstmParams& lstm, const RegressorParams& reg) {
  for (auto span : param_spans(lstm, reg))
    os.write(reinterpret_cast<const char*>(span.data()),
             static_cast<std::streamsize>(span.size() * sizeof(double)));
}

void read_buffers(std::istream& is, LstmParams& lstm, RegressorParams& reg) {
  for (auto span : param_spans(lstm, reg))
    is.read(reinterpret_cast<char*>(span.data()),
            static_cast<std::streamsize>(span.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());

  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(ckpt.model.lstm.input_dim));
  put_u32(os, static_cast<std::uint32_t>(ckpt.model.lstm.hidden_dim));
  std::uint32_t flags = 0;
  if (ckpt.model.options.peepholes) flags |= 1u;
  if (ckpt.model.options.output_peephole_current_cell) flags |= 2u;
  if (ckpt.adam) flags |= 4u;
  put_u32(os, flags);
  put_f64(os, ckpt.beta);
  write_buffers(os, ckpt.model.lstm, ckpt.model.reg);
  if (ckpt.adam) {
    put_u64(os, ckpt.adam->step_count);
    put_f64(os, ckpt.adam->config.lr);
    put_f64(os, ckpt.adam->config.beta1);
    put_f64(os, ckpt.adam->config.beta2);
    put_f64(os, ckpt.adam->config.eps);
    write_buffers(os, ckpt.adam->m.lstm, ckpt.adam->m.reg);
    write_buffers(os, ckpt.adam->v.lstm, ckpt.adam->v.reg);
  }
  if (!os) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());

  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) throw IoError("unsupported checkpoint version");
  const int input_dim = static_cast<int>(get_u32(is));
  const int hidden_dim = static_cast<int>(get_u32(is));
  const std::uint32_t flags = get_u32(is);

  Checkpoint ckpt;
  ckpt.model.lstm = LstmParams(input_dim, hidden_dim);
  ckpt.model.reg = RegressorParams(hidden_dim);
  ckpt.model.options.peepholes = (flags & 1u) != 0;
  ckpt.model.options.output_peephole_current_cell = (flags & 2u) != 0;
  ckpt.beta = get_f64(is);
  read_buffers(is, ckpt.model.lstm, ckpt.model.reg);
  if (flags & 4u) {
    AdamState adam(AdamConfig{}, input_dim, hidden_dim);
    adam.step_count = get_u64(is);
    adam.config.lr = get_f64(is);
    adam.config.beta1 = get_f64(is);
    adam.config.beta2 = get_f64(is);
    adam.config.eps = get_f64(is);
    read_buffers(is, adam.m.lstm, adam.m.reg);
    read_buffers(is, adam.v.lstm, adam.v.reg);
    ckpt.adam = std::move(adam);
  }
  if (!is) throw IoError("checkpoint truncated: " + path.string());
  return ckpt;
}

}  // namespace seqloc
