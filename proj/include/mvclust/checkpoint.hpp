#pragma once

#include <filesystem>
#include <iosfwd>

#include "mvclust/model.hpp"

namespace mvclust {

// File layout (all text lines end with '\n'):
//
//   mvclust-checkpoint 1
//   input_dims <d_0>,<d_1>,...
//   encoder_hidden <w_0>,<w_1>,...      (may be empty after the space)
//   latent_dim <L>
//   high_dim <H>
//   label_hidden <w_0>,...              (may be empty after the space)
//   clusters <K>
//   tensors <T>
//   <name> <rows> <cols>                (T lines, declaration order)
//   end
//
// followed immediately by the payload: every tensor's values, row-major, as
// IEEE-754 binary64 little-endian, in the order of the tensor lines.
// Optimizer state is not stored.
void save_checkpoint(const MflvcModel& model, std::ostream& out);
void save_checkpoint(const MflvcModel& model, const std::filesystem::path& path);

// Rebuilds the architecture from the header and fills every parameter.
// Throws IoError on a malformed or truncated file.
MflvcModel load_checkpoint(std::istream& in);
MflvcModel load_checkpoint(const std::filesystem::path& path);

}  // namespace mvclust
