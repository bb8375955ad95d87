#pragma once

// Parameter checkpoints. A text manifest (format version, then one line per
// parameter: name, rows, cols, manifold flag, curvature) is followed by the
// values of every parameter in manifest order as little-endian f64.

#include <iosfwd>
#include <string>

#include "haegan/layers.hpp"

namespace haegan::io {

inline constexpr int kWeightsFormatVersion = 1;

void write_weights(std::ostream& os, const nn::ParamList& params);
// Loads into the given parameters. Names, shapes, manifold flags and
// curvatures must match the manifest; values must be finite and manifold
// rows must lie on their hyperboloid. Nothing is modified on failure.
void read_weights(std::istream& is, const nn::ParamList& params);

void save_weights(const std::string& path, const nn::ParamList& params);
void load_weights(const std::string& path, const nn::ParamList& params);

}  // namespace haegan::io
