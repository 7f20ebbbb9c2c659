#include "adaptsim/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "adaptsim/errors.hpp"
#include "adaptsim/textio.hpp"

namespace adaptsim {

DemGrid make_dem(const GridD& elevation, double cellsize) {
  DemGrid dem;
  dem.geo.nrows = static_cast<int>(elevation.rows());
  dem.geo.ncols = static_cast<int>(elevation.cols());
  dem.geo.cellsize = cellsize;
  dem.elevation = elevation;
  dem.nodata = GridB::Constant(elevation.rows(), elevation.cols(), false);
  validate(dem);
  return dem;
}

void validate(const DemGrid& dem) {
  const auto& g = dem.geo;
  if (g.nrows <= 0 || g.ncols <= 0) throw ValidationError("DEM must have positive nrows and ncols");
  if (!(g.cellsize > 0.0) || !std::isfinite(g.cellsize)) throw ValidationError("DEM cellsize must be > 0");
  if (dem.elevation.rows() != g.nrows || dem.elevation.cols() != g.ncols)
    throw ValidationError("DEM elevation shape does not match nrows x ncols");
  if (dem.nodata.rows() != g.nrows || dem.nodata.cols() != g.ncols)
    throw ValidationError("DEM nodata mask shape does not match nrows x ncols");
  for (int i = 0; i < g.size(); ++i)
    if (!dem.nodata(i) && !std::isfinite(dem.elevation(i)))
      throw ValidationError("DEM elevation not finite at cell " + std::to_string(i));
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

DemGrid parse_ascii_grid(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  GridGeometry g;
  bool have_nrows = false, have_ncols = false, have_cellsize = false;
  bool center_x = false, center_y = false;

  // Header: keyword value pairs until the first numeric line.
  std::streampos data_start = in.tellg();
  while (true) {
    data_start = in.tellg();
    if (!std::getline(in, raw)) break;
    ++lineno;
    const auto t = trim(raw);
    if (t.empty()) continue;
    if (!std::isalpha(static_cast<unsigned char>(t.front()))) {
      --lineno;
      break;
    }
    const auto parts = split(t, ' ');
    std::vector<std::string> kv;
    for (auto& p : parts)
      if (!p.empty()) kv.push_back(p);
    if (kv.size() != 2) throw ParseError(source, lineno, "malformed header line '" + std::string(t) + "'");
    const auto key = upper(kv[0]);
    if (key == "NCOLS") {
      g.ncols = static_cast<int>(parse_int(kv[1], source, lineno));
      have_ncols = true;
    } else if (key == "NROWS") {
      g.nrows = static_cast<int>(parse_int(kv[1], source, lineno));
      have_nrows = true;
    } else if (key == "XLLCORNER" || key == "XLLCENTER") {
      g.xllcorner = parse_double(kv[1], source, lineno);
      center_x = key == "XLLCENTER";
    } else if (key == "YLLCORNER" || key == "YLLCENTER") {
      g.yllcorner = parse_double(kv[1], source, lineno);
      center_y = key == "YLLCENTER";
    } else if (key == "CELLSIZE") {
      g.cellsize = parse_double(kv[1], source, lineno);
      have_cellsize = true;
    } else if (key == "NODATA_VALUE") {
      g.nodata_value = parse_double(kv[1], source, lineno);
    } else {
      throw ParseError(source, lineno, "unknown header keyword '" + kv[0] + "'");
    }
  }
  if (!have_ncols || !have_nrows || !have_cellsize)
    throw ParseError(source, lineno, "header must define NCOLS, NROWS and CELLSIZE");
  if (g.nrows <= 0 || g.ncols <= 0) throw ParseError(source, lineno, "NROWS and NCOLS must be positive");
  if (!(g.cellsize > 0.0)) throw ParseError(source, lineno, "CELLSIZE must be positive");
  if (center_x) g.xllcorner -= 0.5 * g.cellsize;
  if (center_y) g.yllcorner -= 0.5 * g.cellsize;

  in.clear();
  in.seekg(data_start);
  DemGrid dem;
  dem.geo = g;
  dem.elevation = GridD::Zero(g.nrows, g.ncols);
  dem.nodata = GridB::Constant(g.nrows, g.ncols, false);
  int r = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto t = trim(raw);
    if (t.empty()) continue;
    if (r >= g.nrows) throw ParseError(source, lineno, "more data rows than NROWS");
    std::istringstream ls{std::string(t)};
    std::string tok;
    int c = 0;
    while (ls >> tok) {
      if (c >= g.ncols) throw ParseError(source, lineno, "more values than NCOLS in row " + std::to_string(r));
      const double v = parse_double(tok, source, lineno);
      if (v == g.nodata_value) {
        dem.nodata(r, c) = true;
        dem.elevation(r, c) = 0.0;
      } else {
        dem.elevation(r, c) = v;
      }
      ++c;
    }
    if (c != g.ncols)
      throw ParseError(source, lineno,
                       "row " + std::to_string(r) + " has " + std::to_string(c) + " values, expected " +
                           std::to_string(g.ncols));
    ++r;
  }
  if (r != g.nrows)
    throw ParseError(source, lineno, "found " + std::to_string(r) + " data rows, expected " + std::to_string(g.nrows));
  validate(dem);
  return dem;
}

DemGrid read_ascii_grid(const std::string& path) { return parse_ascii_grid(read_file(path), path); }

std::string format_ascii_grid(const GridGeometry& g, const GridD& values, const GridB& nodata) {
  std::string out;
  out += "NCOLS " + std::to_string(g.ncols) + "\n";
  out += "NROWS " + std::to_string(g.nrows) + "\n";
  out += "XLLCORNER " + format_double(g.xllcorner) + "\n";
  out += "YLLCORNER " + format_double(g.yllcorner) + "\n";
  out += "CELLSIZE " + format_double(g.cellsize) + "\n";
  out += "NODATA_VALUE " + format_double(g.nodata_value) + "\n";
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      if (c) out += ' ';
      out += format_double(nodata(r, c) ? g.nodata_value : values(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string format_ascii_grid(const DemGrid& dem) { return format_ascii_grid(dem.geo, dem.elevation, dem.nodata); }

void write_ascii_grid(const std::string& path, const DemGrid& dem) { write_file(path, format_ascii_grid(dem)); }

void write_ascii_grid(const std::string& path, const DepthRaster& depth, const GridB& nodata) {
  write_file(path, format_ascii_grid(depth.geo, depth.depth, nodata));
}

}  // namespace adaptsim
