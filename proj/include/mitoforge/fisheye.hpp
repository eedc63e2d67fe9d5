#pragma once

#include "mitoforge/imaging.hpp"

namespace mitoforge {

struct FisheyeParams {
  double k = 0.0;  // distortion coefficient, k > -1
  Interpolator interp = Interpolator::clamp();
};

// Source radius sampled for destination radius `r_dest`:
//   r_src = r_dest * (1 + k r_dest^2) / (1 + k)
// Radii are normalised by half the image side, so r = 1 at the edge
// midpoints and r = 1 is a fixed circle for every k.
double fisheye_source_radius(double r_dest, double k) noexcept;

// Radial warp about the image center using inverse mapping. k > 0 magnifies
// the center, k < 0 shrinks it. Requires a square image.
ImageBuffer fisheye(const ImageBuffer& img, const FisheyeParams& params);

}  // namespace mitoforge
