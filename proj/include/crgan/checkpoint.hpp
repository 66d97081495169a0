#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crgan/models.hpp"

namespace crgan {

// Versioned binary container: a key=value config echo, the scaler range, and
// named parameter blocks stored as raw little-endian doubles, so a reloaded
// model reproduces forward results bit for bit.
struct Checkpoint {
  std::string kind;  // "crgan" | "gaussian-rnn" | "stacks"
  std::map<std::string, std::string> config;
  Vector scaler_min, scaler_max;
  double dt = 1.0;
  std::vector<std::pair<std::string, Matrix>> blocks;

  const Matrix& block(const std::string& name) const;
  bool has_block(const std::string& name) const;
  Scaler scaler() const { return Scaler(scaler_min, scaler_max); }

  long config_long(const std::string& key) const;
  double config_double(const std::string& key) const;
  std::string config_str(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Snapshot / restore helpers for named parameter lists.
void store_params(Checkpoint& ck, const std::vector<Param*>& params);
void load_params(const Checkpoint& ck, const std::vector<Param*>& params);

}  // namespace crgan
