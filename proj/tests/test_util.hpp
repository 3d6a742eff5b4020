#pragma once

#include "scope/image.hpp"
#include "scope/rng.hpp"

#include <filesystem>
#include <fstream>
#include <queue>
#include <string>
#include <vector>

namespace scope::test {

inline BinaryImage random_mask(Index h, Index w, Rng& rng, double p = 0.5) {
  BinaryImage m(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) m.pix(r, c) = rng.bernoulli(p) ? 1 : 0;
  return m;
}

inline GrayImage random_gray(Index h, Index w, Rng& rng) {
  GrayImage g(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) g.pix(r, c) = rng.uniform();
  return g;
}

/// Independent BFS flood-fill component counter (oracle for union-find).
inline int flood_fill_count(const BinaryImage& mask, int connectivity) {
  const Index h = mask.height(), w = mask.width();
  Mask2D seen = Mask2D::Zero(h, w);
  int count = 0;
  for (Index sr = 0; sr < h; ++sr) {
    for (Index sc = 0; sc < w; ++sc) {
      if (!mask.pix(sr, sc) || seen(sr, sc)) continue;
      ++count;
      std::queue<std::pair<Index, Index>> frontier;
      frontier.emplace(sr, sc);
      seen(sr, sc) = 1;
      while (!frontier.empty()) {
        const auto [r, c] = frontier.front();
        frontier.pop();
        for (Index dr = -1; dr <= 1; ++dr) {
          for (Index dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            if (connectivity == 4 && dr != 0 && dc != 0) continue;
            const Index rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
            if (!mask.pix(rr, cc) || seen(rr, cc)) continue;
            seen(rr, cc) = 1;
            frontier.emplace(rr, cc);
          }
        }
      }
    }
  }
  return count;
}

/// Straight horizontal tube mask through the image center.
inline BinaryImage tube(Index h, Index w, Index half_width = 1) {
  BinaryImage m(h, w);
  const Index mid = h / 2;
  for (Index r = mid - half_width; r <= mid + half_width; ++r)
    for (Index c = 2; c < w - 2; ++c) m.pix(r, c) = 1;
  return m;
}

inline std::string temp_dir(const std::string& tag) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("scope_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace scope::test
