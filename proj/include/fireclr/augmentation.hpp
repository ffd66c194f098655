#pragma once

#include <array>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fireclr/rng.hpp"
#include "fireclr/tiling.hpp"

namespace fireclr {

/// Geometric augmentations only: none of them alters a pixel's spectrum except
/// by spatial resampling or averaging.
struct AugmentationConfig {
  double crop_scale_lo = 0.5;  // fraction of tile area
  double crop_scale_hi = 1.0;
  double blur_probability = 0.5;
  double blur_sigma_lo = 0.1;
  double blur_sigma_hi = 2.0;
  double flip_probability = 0.5;  // per axis
  std::vector<int> rotation_angles = {0, 90, 180, 270};

  void validate() const;
  /// Every augmentation switched off; make_views() returns the input twice.
  static AugmentationConfig identity();
};

void to_json(nlohmann::json& j, const AugmentationConfig& cfg);
void from_json(const nlohmann::json& j, AugmentationConfig& cfg);

/// Bilinear resize of the side x side window at (row0, col0) back to 32x32,
/// using pixel-center alignment.
Tile crop_resize(const Tile& tile, int row0, int col0, int side);
Tile random_crop_resize(const Tile& tile, Rng& rng, const AugmentationConfig& cfg);

/// Normalized 3x3 Gaussian weights, row-major.
std::array<double, 9> gaussian_kernel3(double sigma);
/// 3x3 Gaussian filter with reflect-101 padding (index -1 maps to 1).
Tile blur(const Tile& tile, double sigma);
Tile gaussian_blur(const Tile& tile, Rng& rng, const AugmentationConfig& cfg);

Tile flip_horizontal(const Tile& tile);  // mirrors columns
Tile flip_vertical(const Tile& tile);    // mirrors rows
Tile random_flip(const Tile& tile, Rng& rng, const AugmentationConfig& cfg);

/// Rotation by quarter turns. One quarter turn maps pixel (r, c) to
/// (c, 31 - r); with rows drawn bottom-up this is counterclockwise.
Tile rotate_quarter_turns(const Tile& tile, int quarter_turns);
Tile fixed_rotation(const Tile& tile, Rng& rng, const AugmentationConfig& cfg);

/// crop -> blur -> flip -> rotation, one independent stream per view.
std::pair<Tile, Tile> make_views(const Tile& tile, Rng& rng1, Rng& rng2, const AugmentationConfig& cfg);
Tile make_view(const Tile& tile, Rng& rng, const AugmentationConfig& cfg);

}  // namespace fireclr
