#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hybridgan {

struct PaletteEntry {
  int class_id = 0;
  std::array<std::uint8_t, 3> color{};
  std::string name;

  bool operator==(const PaletteEntry&) const = default;
};

/// Ordered class list of a label domain; ids run 0..K-1.
struct LabelPalette {
  std::vector<PaletteEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Throws ConfigError on an empty palette, gaps in ids, or repeated colors.
  void validate() const;

  bool operator==(const LabelPalette&) const = default;
};

}  // namespace hybridgan
