#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lwr/design.hpp"

namespace lwr::layout {

// Database coordinates; one unit is 1 nm.
struct Point {
  std::int32_t x = 0;
  std::int32_t y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

inline constexpr double kDbUnitMeters = 1e-9;

// Converts metres to database units. Throws CoordinateError outside int32.
std::int32_t to_db(double meters);

// Open vertex list; the closing vertex is implied and added on output.
struct Polygon {
  int layer = 0;
  int datatype = 0;
  std::vector<Point> vertices;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Placement {
  std::string cell;
  Point origin;
  int rotation = 0;  // degrees, one of 0/90/180/270
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct Cell {
  std::string name;
  std::vector<Polygon> polygons;
  std::vector<Placement> placements;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Library {
  std::string name = "LWRKIT";
  double user_unit = 1e-3;           // user units per database unit (1 nm = 1e-3 um)
  double db_unit_m = kDbUnitMeters;  // metres per database unit
  std::vector<Cell> cells;

  const Cell* find(std::string_view cell_name) const;
  const Cell& at(std::string_view cell_name) const;
  friend bool operator==(const Library&, const Library&) = default;
};

struct Box {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::int64_t width() const { return x1 - x0; }
  std::int64_t height() const { return y1 - y0; }
};

// Counter-clockwise rectangle. Throws CoordinateError on int32 overflow.
Polygon rectangle(int layer, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1);

// Twice the signed area; positive for counter-clockwise.
std::int64_t signed_area2(const Polygon& p);

// >= 3 distinct vertices, counter-clockwise, no self-intersection. Throws
// InputError naming the first failure.
void validate_polygon(const Polygon& p);

// GDSII-legal structure name: 1-32 characters from [A-Za-z0-9_?$].
bool is_legal_name(std::string_view name);

// Names legal and unique, references resolved, placement graph acyclic,
// rotations right angles, polygons valid.
void validate_library(const Library& lib);

Point rotate(Point p, int degrees);

// Polygons of a cell and its descendants in the cell's frame.
std::vector<Polygon> flatten(const Library& lib, const Cell& cell);

Box bounding_box(const Library& lib, const Cell& cell);

// Layer ids. The IDT fingers go to SMALL or LARGE by pitch; pads, bottom
// electrode, and resonator outline each own a layer.
struct LayerMap {
  int idt_small = 1;
  int idt_large = 2;
  int pads = 3;
  int bottom = 4;
  int outline = 5;
  int chip_outline = 10;
  int marks = 11;

  int idt_for(design::DeviceLayer l) const;
  void validate() const;
};

struct IdtGeometry {
  double busbar_width = 5e-6;
  double pad_size = 50e-6;
  double pad_spacing = 50e-6;     // edge-to-edge between G, S, G
  double pad_clearance = 20e-6;   // outline to pad row
  double outline_margin_wl = 0.5; // plate extends this many wavelengths past the dummies
  double tether_width_wl = 0.25;
  double tether_length_wl = 0.5;
};

enum class DeembedKind { device, open, short_circuit };

std::string cell_name(const design::ResonatorDesign& d, DeembedKind kind);

// Fingers (centres 0, p, 2p, ...), two busbars, dummy fingers beyond each
// end on the IDT layer; bottom electrode over the aperture; plate outline
// with two tethers on its short sides; GSG pads below.
Cell gen_idt_cell(const design::ResonatorDesign& d, const LayerMap& layers,
                  const IdtGeometry& geom = {});

// De-embedding twins: pads and busbars only (open), or with a shorting bar.
Cell gen_deembed_cell(const design::ResonatorDesign& d, DeembedKind kind, const LayerMap& layers,
                      const IdtGeometry& geom = {});

struct ChipSpec {
  double width = 17e-3;
  double height = 3e-3;
  double margin = 100e-6;
  double spacing = 40e-6;
  bool deembed = true;
  std::vector<design::ResonatorDesign> devices;
};

inline constexpr std::string_view kChipCell = "CHIP";

// Row-packed chip: devices by ascending pitch (tie: id), each followed by its
// open and short twins. Throws PackingError naming the first device that
// does not fit. The chip cell is the last cell of the returned library.
Library gen_chip(const ChipSpec& spec, const LayerMap& layers, const IdtGeometry& geom = {});

// A rectangular ReMa blade window at wafer scale (m), exposing one layer.
struct RemaWindow {
  std::string name;
  int layer = 0;
  double x = 0.0;  // lower-left corner within the image field
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

struct ReticleSpec {
  double field_width = 22e-3;
  double field_height = 22e-3;
  int demag = 4;
  std::vector<RemaWindow> windows;

  void validate() const;
};

inline constexpr std::string_view kReticleCell = "RETICLE";

// One chip-sized window per exposure layer, stacked vertically and centred.
ReticleSpec default_reticle(const ChipSpec& chip, const LayerMap& layers);

// Adds one single-layer copy of the chip per window and a RETICLE cell
// placing them, plus placeholder alignment crosses. Geometry stays at wafer
// scale; demag is metadata.
void gen_reticle(Library& lib, const ReticleSpec& spec, const LayerMap& layers);

struct WaferGeometry {
  double diameter_mm = 100.0;
  double edge_exclusion_mm = 5.0;
  double flat_length_mm = 32.5;  // primary flat chord, at the bottom; 0 for none
  double keepout_width_mm = 20.0;
  double keepout_height_mm = 6.0;
  double street_mm = 0.0;

  void validate() const;
};

struct ChipPlacement {
  int index = 0;
  int row = 0;
  int col = 0;
  double x_mm = 0.0;  // chip centre relative to the wafer centre
  double y_mm = 0.0;
};

// Chips on a grid with one chip centred on the wafer centre. A chip is kept
// when all four corners lie inside radius - edge_exclusion, its lower edge
// clears the flat by edge_exclusion, and it does not overlap the centre
// keep-out. Row-major from the top row, left to right.
std::vector<ChipPlacement> gen_wafer_map(double chip_width_mm, double chip_height_mm,
                                         const WaferGeometry& wafer);

// Flat CSV dump: cell,layer,datatype,polygon,vertex,x,y (unflattened).
void write_polygon_csv(std::ostream& out, const Library& lib);

}  // namespace lwr::layout
