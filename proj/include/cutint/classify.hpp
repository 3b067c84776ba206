#pragma once

// Cell classification against one level or a band of two levels.

#include "levelset.hpp"
#include "mesh.hpp"

#include <cstdint>
#include <vector>

namespace cutint {

enum class CellTag : std::uint8_t { interior, exterior, cut };

struct LevelTags {
  LevelCut cut;
  std::vector<CellTag> tags;
};

struct CellClassification {
  std::vector<LevelTags> levels;   // one entry, or two for a band
  std::vector<CellTag> tags;       // combined over all levels
  std::vector<int> cut_cells;      // cells meeting the boundary of the domain
  std::vector<int> boundary_faces; // edges shared by two cut cells

  std::size_t count(CellTag t) const {
    std::size_t n = 0;
    for (auto x : tags) n += (x == t);
    return n;
  }
  // Levels that actually cut cell c.
  std::vector<int> levels_cutting(int c) const {
    std::vector<int> out;
    for (std::size_t l = 0; l < levels.size(); ++l)
      if (levels[l].tags[c] == CellTag::cut) out.push_back(static_cast<int>(l));
    return out;
  }
};

// Oriented value with vertex-on-interface ties pushed to the outside.
inline double tie_broken(double oriented, double h) {
  const double eps = 1e-14 * h;
  return std::abs(oriented) < eps ? eps : oriented;
}

namespace detail {

template <class LocalField>
CellTag classify_cell(const LocalField& phi, const std::array<Vec2, 3>& v, const LevelCut& cut, int s, double h) {
  bool any_in = false, any_out = false;
  for (int j = 0; j <= s; ++j)
    for (int i = 0; i + j <= s; ++i) {
      double a = double(i) / s, b = double(j) / s;
      Vec2 x = v[0] + a * (v[1] - v[0]) + b * (v[2] - v[0]);
      double w = tie_broken(cut.oriented(phi.value(x)), h);
      (w < 0.0 ? any_in : any_out) = true;
      if (any_in && any_out) return CellTag::cut;
    }
  return any_in ? CellTag::interior : CellTag::exterior;
}

}  // namespace detail

template <ScalarField F>
CellClassification classify(const Mesh& mesh, const F& field, const std::vector<LevelCut>& cuts) {
  CellClassification out;
  const int s = sampling_degree(field);
  const std::size_t nc = mesh.num_cells();
  out.tags.assign(nc, CellTag::interior);
  for (const auto& cut : cuts) out.levels.push_back({cut, std::vector<CellTag>(nc)});
  for (std::size_t c = 0; c < nc; ++c) {
    const int ci = static_cast<int>(c);
    const auto& local = restrict_to_cell(field, mesh, ci);
    auto v = mesh.cell_vertices(ci);
    bool exterior = false, cut_any = false;
    for (auto& lv : out.levels) {
      lv.tags[c] = detail::classify_cell(local, v, lv.cut, s, mesh.h);
      exterior |= lv.tags[c] == CellTag::exterior;
      cut_any |= lv.tags[c] == CellTag::cut;
    }
    out.tags[c] = exterior ? CellTag::exterior : (cut_any ? CellTag::cut : CellTag::interior);
    if (out.tags[c] == CellTag::cut) out.cut_cells.push_back(ci);
  }
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const auto& cells = mesh.edges[e].cells;
    if (cells[1] >= 0 && out.tags[cells[0]] == CellTag::cut && out.tags[cells[1]] == CellTag::cut)
      out.boundary_faces.push_back(static_cast<int>(e));
  }
  return out;
}

template <ScalarField F>
CellClassification classify(const Mesh& mesh, const F& field, double level, Side inside = Side::negative) {
  return classify(mesh, field, std::vector<LevelCut>{LevelCut{level, inside}});
}

// Band {|phi| < d}: level +d with inside below, level -d with inside above.
template <ScalarField F>
CellClassification classify_band(const Mesh& mesh, const F& field, double d) {
  return classify(mesh, field, std::vector<LevelCut>{LevelCut{d, Side::negative}, LevelCut{-d, Side::positive}});
}

}  // namespace cutint
