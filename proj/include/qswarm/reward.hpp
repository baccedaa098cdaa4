#ifndef QSWARM_REWARD_HPP_
#define QSWARM_REWARD_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qswarm/mdp.hpp"

namespace qswarm {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// Row-major RGB raster. Tiles and whole images share this type.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, Rgb fill = {});

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y * width + x)]; }
  const Rgb& at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y * width + x)];
  }
  bool empty() const { return pixels.empty(); }
};

struct ImageTile {
  Image image;
  double zoom_factor = 1.0;
};

// Per-pixel colour threshold: a pixel is fire when
// r >= min_red && g <= max_green && b <= max_blue.
struct FireClassifier {
  std::uint8_t min_red = 200;
  std::uint8_t max_green = 120;
  std::uint8_t max_blue = 80;

  bool operator()(Rgb p) const {
    return p.r >= min_red && p.g <= max_green && p.b <= max_blue;
  }
};

// Fraction in [0,1] of pixels the classifier marks as fire. Throws
// DomainError for an empty image.
double FirePixelFraction(const Image& image, const FireClassifier& clf);

// Fire-pixel fraction divided by the zoom factor. Throws ValidationError
// when zoom < 1.
double RewardFromTile(const ImageTile& tile, const FireClassifier& clf);

// Splits `image` into cols x rows equal tiles. Remainder pixels on the
// right and bottom edges are dropped. Output is row-major over tiles.
std::vector<Image> SplitTiles(const Image& image, int cols, int rows);

// Applies RewardFromTile to every tile of a cols x rows split.
RewardField RewardFieldFromImage(const Image& image, int cols, int rows,
                                 double zoom, const FireClassifier& clf);

// Binary PPM (P6, maxval 255).
Image ReadPpm(const std::filesystem::path& path);
void WritePpm(const std::filesystem::path& path, const Image& image);

}  // namespace qswarm

#endif  // QSWARM_REWARD_HPP_
