#include "pcert/mask_geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace pcert {

int patch_side_from_fraction(int width, int height, double fraction) {
  if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("patch fraction must be in (0, 1]");
  const double area = fraction * static_cast<double>(width) * static_cast<double>(height);
  auto side = static_cast<long long>(std::ceil(std::sqrt(area)));
  // sqrt rounding can land one off in either direction.
  while (side > 1 && static_cast<double>((side - 1) * (side - 1)) >= area) --side;
  while (static_cast<double>(side * side) < area) ++side;
  return static_cast<int>(std::max<long long>(side, 1));
}

MaskSet MaskSet::from_positions(int image_side, int patch_side, int stride, int mask_side,
                                std::vector<int> positions) {
  if (image_side < 1) throw InvalidArgument("image side must be positive");
  if (mask_side < 1 || mask_side > image_side) {
    throw InvalidArgument(fmt::format("mask side {} outside [1, {}]", mask_side, image_side));
  }
  if (positions.empty()) throw InvalidArgument("mask set needs at least one offset");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] + mask_side > image_side) {
      throw InvalidArgument(fmt::format("mask offset {} leaves the image", positions[i]));
    }
    if (i > 0 && positions[i] <= positions[i - 1]) {
      throw InvalidArgument("mask offsets must be strictly increasing");
    }
  }
  MaskSet set;
  set.image_side_ = image_side;
  set.patch_side_ = patch_side;
  set.stride_ = stride;
  set.mask_side_ = mask_side;
  set.positions_ = std::move(positions);
  set.masks_.reserve(set.positions_.size() * set.positions_.size());
  for (int y : set.positions_) {
    for (int x : set.positions_) set.masks_.push_back(MaskRect{x, y, mask_side, mask_side});
  }
  return set;
}

MaskSet build_mask_set(int n, int p, int k) {
  if (n < 1) throw InvalidArgument("image side must be positive");
  if (p < 1 || p > n) throw InvalidArgument(fmt::format("patch side {} outside [1, {}]", p, n));
  if (k < 1) throw InvalidArgument("k must be at least 1");
  const int span = n - p + 1;
  const int stride = (span + k - 1) / k;
  const int side = stride + p - 1;
  if (side > n) {
    throw InfeasibleConfiguration(
        fmt::format("mask side {} exceeds image side for n={} p={} k={}", side, n, p, k));
  }
  std::vector<int> positions;
  positions.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int pos = std::min(i * stride, n - side);
    if (positions.empty() || positions.back() != pos) positions.push_back(pos);
  }
  return MaskSet::from_positions(n, p, stride, side, std::move(positions));
}

CoveringReport verify_r_covering(const MaskSet& set, int p) {
  const int n = set.image_side();
  if (p < 1 || p > n) throw InvalidArgument(fmt::format("patch side {} outside [1, {}]", p, n));
  for (int ty = 0; ty + p <= n; ++ty) {
    for (int tx = 0; tx + p <= n; ++tx) {
      const MaskRect patch{tx, ty, p, p};
      const bool hit = std::any_of(set.masks().begin(), set.masks().end(),
                                   [&](const MaskRect& m) { return m.contains(patch); });
      if (!hit) return CoveringReport{false, std::make_pair(tx, ty)};
    }
  }
  return CoveringReport{};
}

namespace {

bool intervals_cover(int lo, int hi, int a, int b, int len) {
  for (int v = lo; v < hi; ++v) {
    const bool in_a = v >= a && v < a + len;
    const bool in_b = v >= b && v < b + len;
    if (!in_a && !in_b) return false;
  }
  return true;
}

// Pair of fine offset indices whose union covers [lo, lo+len): smallest union, then lexicographic.
std::optional<std::pair<std::size_t, std::size_t>> covering_pair(int lo, int len,
                                                                 std::span<const int> fine,
                                                                 int fine_side) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  int best_extent = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < fine.size(); ++i) {
    for (std::size_t j = i; j < fine.size(); ++j) {
      if (!intervals_cover(lo, lo + len, fine[i], fine[j], fine_side)) continue;
      const int extent = fine[j] + fine_side - fine[i];
      if (extent < best_extent) {
        best_extent = extent;
        best = std::make_pair(i, j);
      }
    }
  }
  return best;
}

}  // namespace

NestingMap build_nesting_map(const MaskSet& coarse, const MaskSet& fine) {
  if (coarse.image_side() != fine.image_side() || coarse.patch_side() != fine.patch_side()) {
    throw InvalidArgument("nesting requires mask sets over the same image and patch sides");
  }
  const auto kc = static_cast<std::size_t>(coarse.k());
  const auto kf = static_cast<std::size_t>(fine.k());

  std::vector<std::pair<std::size_t, std::size_t>> axis_pairs;
  for (int pos : coarse.positions()) {
    auto pair = covering_pair(pos, coarse.mask_side(), fine.positions(), fine.mask_side());
    if (!pair) {
      throw NestingUnavailable(fmt::format(
          "no two fine masks (side {}) cover coarse interval [{}, {})", fine.mask_side(), pos,
          pos + coarse.mask_side()));
    }
    axis_pairs.push_back(*pair);
  }

  std::vector<std::array<std::size_t, 4>> ids(kc * kc);
  for (std::size_t row = 0; row < kc; ++row) {
    for (std::size_t col = 0; col < kc; ++col) {
      const auto [r0, r1] = axis_pairs[row];
      const auto [c0, c1] = axis_pairs[col];
      ids[row * kc + col] = {r0 * kf + c0, r0 * kf + c1, r1 * kf + c0, r1 * kf + c1};

      const MaskRect& target = coarse[row * kc + col];
      for (int y = target.y0; y < target.y1(); ++y) {
        for (int x = target.x0; x < target.x1(); ++x) {
          const MaskRect px{x, y, 1, 1};
          const bool hit = std::any_of(ids[row * kc + col].begin(), ids[row * kc + col].end(),
                                       [&](std::size_t id) { return fine[id].contains(px); });
          if (!hit) throw NestingUnavailable("nesting containment check failed");
        }
      }
    }
  }
  return NestingMap(std::move(ids));
}

ImageTensor apply_masks(const ImageTensor& image, std::span<const MaskRect> masks, float fill) {
  ImageTensor out = image;
  const std::size_t channels = image.channels();
  auto data = out.mutable_data();
  for (const MaskRect& raw : masks) {
    const auto rect = clip_rect(raw, image.width(), image.height());
    if (!rect) continue;
    for (int y = rect->y0; y < rect->y1(); ++y) {
      const std::size_t row = (static_cast<std::size_t>(y) * image.width()) * channels;
      const auto begin = data.begin() + static_cast<std::ptrdiff_t>(
                                            row + static_cast<std::size_t>(rect->x0) * channels);
      std::fill(begin, begin + static_cast<std::ptrdiff_t>(rect->w) * channels, fill);
    }
  }
  return out;
}

std::size_t ComboKeyHash::operator()(const ComboKey& key) const noexcept {
  std::size_t h = std::hash<std::uint32_t>{}(key.fill_bits);
  auto mix = [&h](int v) {
    h ^= std::hash<int>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (const MaskRect& r : key.rects) {
    mix(r.x0);
    mix(r.y0);
    mix(r.w);
    mix(r.h);
  }
  return h;
}

ComboKey canonical_combo_key(std::span<const MaskRect> masks, float fill) {
  std::vector<MaskRect> rects(masks.begin(), masks.end());
  std::sort(rects.begin(), rects.end());
  rects.erase(std::unique(rects.begin(), rects.end()), rects.end());
  std::vector<MaskRect> kept;
  kept.reserve(rects.size());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    bool absorbed = false;
    for (std::size_t j = 0; j < rects.size() && !absorbed; ++j) {
      absorbed = i != j && rects[j].contains(rects[i]);
    }
    if (!absorbed) kept.push_back(rects[i]);
  }
  // -0.0f and 0.0f mask identically.
  const float normalized = fill == 0.0f ? 0.0f : fill;
  return ComboKey{std::move(kept), std::bit_cast<std::uint32_t>(normalized)};
}

std::string to_descriptor(const MaskSet& set) {
  std::string out = fmt::format("{} {} {} {} {}\n", set.image_side(), set.patch_side(), set.k(),
                                set.stride(), set.mask_side());
  for (int pos : set.positions()) out += fmt::format("{}\n", pos);
  return out;
}

MaskSet parse_descriptor(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw FormatError("mask descriptor: missing header");
  std::istringstream hs(header);
  int n = 0, p = 0, k = 0, s = 0, m = 0;
  std::string extra;
  if (!(hs >> n >> p >> k >> s >> m) || (hs >> extra)) {
    throw FormatError("mask descriptor: header must be 'n p k s m'");
  }
  if (k < 1) throw FormatError("mask descriptor: k must be positive");
  std::vector<int> positions;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int pos = 0;
    if (!(ls >> pos) || (ls >> extra)) {
      throw FormatError(fmt::format("mask descriptor: bad offset line '{}'", line));
    }
    positions.push_back(pos);
  }
  if (positions.size() != static_cast<std::size_t>(k)) {
    throw FormatError(fmt::format("mask descriptor: expected {} offsets, found {}", k,
                                  positions.size()));
  }
  try {
    return MaskSet::from_positions(n, p, s, m, std::move(positions));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("mask descriptor: ") + e.what());
  }
}

void save_descriptor(const MaskSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << to_descriptor(set);
}

MaskSet load_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_descriptor(buf.str());
}

}  // namespace pcert
