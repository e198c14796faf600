#pragma once

// Model checkpoints: a line-oriented text file.
//
//   mgnn-checkpoint 1
//   nonlinearity relu|identity
//   widths F_0 F_1 ... F_L
//   taps K
//   train <lr> <beta1> <beta2> <epsilon> <batch_size> <epochs> <seed>
//   layer <l>                          (1-based, once per layer)
//   <p> <q> <h_0> ... <h_{K-1}>        (F_l * F_{l-1} lines, 0-based p, q)
//   readout <w_1> ... <w_{F_L}>
//   bias <b>
//   end
//
// Reals are written with 17 significant digits, so save/load is exact.

#include <filesystem>
#include <iosfwd>

#include "mgnn/mnn.hpp"

namespace mgnn {

struct Checkpoint {
  MnnModel model;
  TrainConfig config;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgnn
