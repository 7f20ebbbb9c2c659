#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace adaptsim {

// Row-major dense grid; row 0 is the northernmost row.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GridD = Grid<double>;
using GridB = Grid<bool>;

struct Cell {
  int row = 0;
  int col = 0;

  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

struct GridGeometry {
  int nrows = 0;
  int ncols = 0;
  double cellsize = 1.0;  // meters
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double nodata_value = -9999.0;

  int size() const { return nrows * ncols; }
  int index(int r, int c) const { return r * ncols + c; }
  int index(Cell c) const { return index(c.row, c.col); }
  Cell cell(int idx) const { return {idx / ncols, idx % ncols}; }
  bool contains(int r, int c) const { return r >= 0 && r < nrows && c >= 0 && c < ncols; }
  bool contains(Cell c) const { return contains(c.row, c.col); }
  bool on_border(int idx) const {
    const int r = idx / ncols, c = idx % ncols;
    return r == 0 || c == 0 || r == nrows - 1 || c == ncols - 1;
  }
  double cell_area() const { return cellsize * cellsize; }

  bool operator==(const GridGeometry&) const = default;
};

struct DemGrid {
  GridGeometry geo;
  GridD elevation;  // meters
  GridB nodata;     // true where no elevation is defined

  int size() const { return geo.size(); }
  bool valid(int idx) const { return !nodata(idx); }
  double z(int idx) const { return elevation(idx); }
};

// Builds a grid with no nodata cells. Throws ValidationError on bad shape.
DemGrid make_dem(const GridD& elevation, double cellsize = 1.0);

// Throws ValidationError if an invariant is broken.
void validate(const DemGrid& dem);

struct DepthRaster {
  GridGeometry geo;
  GridD depth;                 // meters of standing water, 0 on nodata cells
  double outflow_volume = 0.0; // m^3 leaving through an open border
  double absorbed_volume = 0.0;// m^3 taken by storage and pumping

  double ponded_volume() const { return depth.sum() * geo.cell_area(); }
};

// ESRI ASCII grid. Rows are written north to south.
DemGrid parse_ascii_grid(const std::string& text, const std::string& source = "<memory>");
DemGrid read_ascii_grid(const std::string& path);
std::string format_ascii_grid(const GridGeometry& geo, const GridD& values, const GridB& nodata);
std::string format_ascii_grid(const DemGrid& dem);
void write_ascii_grid(const std::string& path, const DemGrid& dem);
void write_ascii_grid(const std::string& path, const DepthRaster& depth, const GridB& nodata);

// D8 neighbourhood in the fixed scan order N, NE, E, SE, S, SW, W, NW.
inline constexpr int kD8Rows[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
inline constexpr int kD8Cols[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr double kD8Dist[8] = {1.0, 1.4142135623730951, 1.0, 1.4142135623730951,
                                      1.0, 1.4142135623730951, 1.0, 1.4142135623730951};

}  // namespace adaptsim
