#pragma once

#include <string>

#include "poseverify/synth.hpp"

namespace pv {

// Dataset directory layout, also the import format for real data:
//   manifest.json            intrinsics, ids, file paths, class-table path
//   classes.json             class-id -> superclass table
//   poses/*.txt              one pose per file (scans, db images, query GT)
//   scans/*.ply              ASCII PLY: x y z nx ny nz red green blue label
//   images/*.ppm  depth/*.pfm  labels/*.pgm
void save_dataset(const std::string& dir, const SyntheticDataset& dataset);
SyntheticDataset load_dataset(const std::string& dir);

}  // namespace pv
