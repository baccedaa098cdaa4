#include "qswarm/reward.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace qswarm {

Image::Image(int w, int h, Rgb fill)
    : width(w), height(h),
      pixels(static_cast<std::size_t>(std::max(w, 0) * std::max(h, 0)), fill) {}

double FirePixelFraction(const Image& image, const FireClassifier& clf) {
  if (image.width <= 0 || image.height <= 0 || image.empty()) {
    throw DomainError("fire pixel fraction of an empty tile");
  }
  if (image.pixels.size() !=
      static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw ValidationError("pixel count does not match tile dimensions");
  }
  auto hits = std::count_if(image.pixels.begin(), image.pixels.end(), clf);
  return static_cast<double>(hits) / static_cast<double>(image.pixels.size());
}

double RewardFromTile(const ImageTile& tile, const FireClassifier& clf) {
  if (!(tile.zoom_factor >= 1.0)) {
    throw ValidationError("zoom factor must be >= 1, got " +
                          std::to_string(tile.zoom_factor));
  }
  return FirePixelFraction(tile.image, clf) / tile.zoom_factor;
}

std::vector<Image> SplitTiles(const Image& image, int cols, int rows) {
  if (cols < 1 || rows < 1) {
    throw ValidationError("tile grid must be at least 1x1");
  }
  const int tw = image.width / cols;
  const int th = image.height / rows;
  if (tw < 1 || th < 1) {
    throw ValidationError("image " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) +
                          " too small for a " + std::to_string(cols) + "x" +
                          std::to_string(rows) + " split");
  }
  std::vector<Image> tiles;
  tiles.reserve(static_cast<std::size_t>(cols * rows));
  for (int ty = 0; ty < rows; ++ty) {
    for (int tx = 0; tx < cols; ++tx) {
      Image tile(tw, th);
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          tile.at(x, y) = image.at(tx * tw + x, ty * th + y);
        }
      }
      tiles.push_back(std::move(tile));
    }
  }
  return tiles;
}

RewardField RewardFieldFromImage(const Image& image, int cols, int rows,
                                 double zoom, const FireClassifier& clf) {
  GridSpec grid(cols, rows);
  std::vector<double> values;
  for (auto& tile : SplitTiles(image, cols, rows)) {
    values.push_back(RewardFromTile({std::move(tile), zoom}, clf));
  }
  return RewardField(grid, std::move(values));
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string NextToken(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int ParseHeaderInt(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("bad PPM ") + what + ": '" + tok + "'");
  }
}

}  // namespace

Image ReadPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image " + path.string());
  if (NextToken(in) != "P6") {
    throw ValidationError("unsupported image format (need binary PPM P6): " +
                          path.string());
  }
  const int w = ParseHeaderInt(NextToken(in), "width");
  const int h = ParseHeaderInt(NextToken(in), "height");
  const int maxval = ParseHeaderInt(NextToken(in), "maxval");
  if (w < 1 || h < 1) throw ValidationError("PPM has zero dimension");
  if (maxval != 255) {
    throw ValidationError("unsupported PPM maxval " + std::to_string(maxval));
  }
  // NextToken consumed the single whitespace byte after maxval.
  Image img(w, h);
  std::vector<char> raw(static_cast<std::size_t>(w) * h * 3);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError("truncated PPM pixel data: " + path.string());
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = {static_cast<std::uint8_t>(raw[3 * i]),
                     static_cast<std::uint8_t>(raw[3 * i + 1]),
                     static_cast<std::uint8_t>(raw[3 * i + 2])};
  }
  return img;
}

void WritePpm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write image " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (const Rgb& p : image.pixels) {
    const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g),
                        static_cast<char>(p.b)};
    out.write(px, 3);
  }
}

}  // namespace qswarm
