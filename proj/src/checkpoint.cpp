#include "crgan/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace crgan {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'G', 'A', 'N', 'C', 'K', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  if (n > (1ull << 32)) throw IoError("checkpoint: corrupt string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& is) {
  const auto rows = static_cast<Index>(read_u64(is));
  const auto cols = static_cast<Index>(read_u64(is));
  if (rows <= 0 || cols <= 0 || rows * cols > (1ll << 30)) {
    throw IoError("checkpoint: corrupt matrix header");
  }
  Matrix m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  return m;
}

}  // namespace

const Matrix& Checkpoint::block(const std::string& name) const {
  for (const auto& [key, value] : blocks) {
    if (key == name) return value;
  }
  throw IoError("checkpoint: missing block " + name);
}

bool Checkpoint::has_block(const std::string& name) const {
  for (const auto& [key, value] : blocks) {
    if (key == name) return true;
  }
  return false;
}

long Checkpoint::config_long(const std::string& key) const {
  return std::stol(config_str(key));
}

double Checkpoint::config_double(const std::string& key) const {
  return std::stod(config_str(key));
}

std::string Checkpoint::config_str(const std::string& key) const {
  auto it = config.find(key);
  if (it == config.end()) throw IoError("checkpoint: missing config key " + key);
  return it->second;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_string(os, ck.kind);

  write_u64(os, ck.config.size());
  for (const auto& [key, value] : ck.config) {
    write_string(os, key);
    write_string(os, value);
  }

  write_u64(os, static_cast<std::uint64_t>(ck.scaler_min.size()));
  os.write(reinterpret_cast<const char*>(ck.scaler_min.data()),
           static_cast<std::streamsize>(sizeof(double) * ck.scaler_min.size()));
  os.write(reinterpret_cast<const char*>(ck.scaler_max.data()),
           static_cast<std::streamsize>(sizeof(double) * ck.scaler_max.size()));
  os.write(reinterpret_cast<const char*>(&ck.dt), sizeof(ck.dt));

  write_u64(os, ck.blocks.size());
  for (const auto& [name, m] : ck.blocks) {
    write_string(os, name);
    write_matrix(os, m);
  }
  if (!os) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw IoError(path + " is not a checkpoint file");
  }
  Checkpoint ck;
  ck.kind = read_string(is);

  const std::uint64_t n_config = read_u64(is);
  for (std::uint64_t i = 0; i < n_config; ++i) {
    std::string key = read_string(is);
    ck.config[key] = read_string(is);
  }

  const auto d = static_cast<Index>(read_u64(is));
  ck.scaler_min.resize(d);
  ck.scaler_max.resize(d);
  is.read(reinterpret_cast<char*>(ck.scaler_min.data()),
          static_cast<std::streamsize>(sizeof(double) * d));
  is.read(reinterpret_cast<char*>(ck.scaler_max.data()),
          static_cast<std::streamsize>(sizeof(double) * d));
  is.read(reinterpret_cast<char*>(&ck.dt), sizeof(ck.dt));

  const std::uint64_t n_blocks = read_u64(is);
  for (std::uint64_t i = 0; i < n_blocks; ++i) {
    std::string name = read_string(is);
    ck.blocks.emplace_back(std::move(name), read_matrix(is));
  }
  if (!is) throw IoError("truncated checkpoint " + path);
  return ck;
}

void store_params(Checkpoint& ck, const std::vector<Param*>& params) {
  for (const Param* p : params) ck.blocks.emplace_back(p->name, p->value);
}

void load_params(const Checkpoint& ck, const std::vector<Param*>& params) {
  for (Param* p : params) {
    const Matrix& m = ck.block(p->name);
    if (m.rows() != p->rows() || m.cols() != p->cols()) {
      throw IoError("checkpoint block " + p->name + " has shape " +
                    shape_str(m) + ", model expects " + shape_str(p->value));
    }
    p->value = m;
  }
}

}  // namespace crgan
