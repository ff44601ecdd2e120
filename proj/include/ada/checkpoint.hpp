#pragma once

#include <string>

#include "ada/model.hpp"

namespace ada {

// Checkpoint layout (little-endian):
//   magic "ADAM1" (5 bytes)
//   u32 d_in, u32 D, u32 L, u32 |V|, u32 |N|, u32 H
//   every parameter tensor as row-major f64, in ModelParams field order:
//   embed_w, embed_b, gcn[0].w, gcn[0].b, ..., verb_w, verb_b, noun_w,
//   noun_b, disc_w1, disc_b1, disc_w2, disc_b2
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ada
