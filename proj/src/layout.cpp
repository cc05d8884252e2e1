#include "lwr/layout.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "lwr/error.hpp"

namespace lwr::layout {

namespace {

__extension__ typedef __int128 Wide;

constexpr std::int64_t kMin32 = std::numeric_limits<std::int32_t>::min();
constexpr std::int64_t kMax32 = std::numeric_limits<std::int32_t>::max();

std::int32_t narrow(std::int64_t v) {
  if (v < kMin32 || v > kMax32) {
    throw CoordinateError("coordinate " + std::to_string(v) + " nm overflows 32-bit database units");
  }
  return static_cast<std::int32_t>(v);
}

Wide cross(Point o, Point a, Point b) {
  return static_cast<Wide>(a.x - static_cast<std::int64_t>(o.x)) * (b.y - static_cast<std::int64_t>(o.y)) -
         static_cast<Wide>(a.y - static_cast<std::int64_t>(o.y)) * (b.x - static_cast<std::int64_t>(o.x));
}

int sign(Wide v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(Point a, Point b, Point c, Point d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

// Rotation about the origin followed by a translation.
struct Transform {
  int rotation = 0;
  std::int64_t dx = 0;
  std::int64_t dy = 0;

  Point apply(Point p) const {
    const Point r = rotate(p, rotation);
    return {narrow(r.x + dx), narrow(r.y + dy)};
  }
  // this o inner: first inner, then this.
  Transform compose(const Transform& inner) const {
    const Point o = rotate({narrow(inner.dx), narrow(inner.dy)}, rotation);
    return {(rotation + inner.rotation) % 360, o.x + dx, o.y + dy};
  }
};

void flatten_into(const Library& lib, const Cell& cell, const Transform& t, std::vector<Polygon>& out,
                  int depth) {
  if (depth > 64) throw InputError("layout hierarchy deeper than 64 levels (cycle?)");
  for (const auto& p : cell.polygons) {
    Polygon q{p.layer, p.datatype, {}};
    q.vertices.reserve(p.vertices.size());
    for (const auto& v : p.vertices) q.vertices.push_back(t.apply(v));
    out.push_back(std::move(q));
  }
  for (const auto& pl : cell.placements) {
    const Transform child{pl.rotation, pl.origin.x, pl.origin.y};
    flatten_into(lib, lib.at(pl.cell), t.compose(child), out, depth + 1);
  }
}

Box bbox_of(const std::vector<Polygon>& polys) {
  Box b{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(),
        std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::min()};
  bool any = false;
  for (const auto& p : polys) {
    for (const auto& v : p.vertices) {
      any = true;
      b.x0 = std::min<std::int64_t>(b.x0, v.x);
      b.y0 = std::min<std::int64_t>(b.y0, v.y);
      b.x1 = std::max<std::int64_t>(b.x1, v.x);
      b.y1 = std::max<std::int64_t>(b.y1, v.y);
    }
  }
  return any ? b : Box{};
}

// Plus-shaped placeholder alignment mark centred at (cx, cy).
Polygon cross_mark(int layer, std::int64_t cx, std::int64_t cy, std::int64_t arm, std::int64_t half_w) {
  Polygon p{layer, 0, {}};
  const std::int64_t pts[12][2] = {{half_w, -arm},  {half_w, -half_w}, {arm, -half_w},   {arm, half_w},
                                   {half_w, half_w}, {half_w, arm},     {-half_w, arm},  {-half_w, half_w},
                                   {-arm, half_w},   {-arm, -half_w},   {-half_w, -half_w}, {-half_w, -arm}};
  for (const auto& q : pts) p.vertices.push_back({narrow(cx + q[0]), narrow(cy + q[1])});
  return p;
}

// Shared IDT frame in database units.
struct IdtFrame {
  std::int64_t p, w, a, g, bw;
  int n, dummies;

  std::int64_t finger_x0(std::int64_t centre) const { return centre - w / 2; }
  std::int64_t bus_x0() const { return finger_x0(0); }
  std::int64_t bus_x1() const { return finger_x0((n - 1) * p) + w; }
};

IdtFrame frame_of(const design::ResonatorDesign& d, const IdtGeometry& geom) {
  d.idt.validate();
  IdtFrame f{to_db(d.idt.pitch), to_db(d.idt.finger_width), to_db(d.idt.aperture),
             to_db(d.idt.gap),   to_db(geom.busbar_width),  d.idt.n_fingers,
             d.idt.dummy_count_per_side};
  if (f.w <= 0 || f.p <= f.w) throw CoordinateError(d.id + ": pitch too small for 1 nm database units");
  return f;
}

void add_busbars(Cell& c, const IdtFrame& f, int layer) {
  c.polygons.push_back(rectangle(layer, f.bus_x0(), -f.g - f.bw, f.bus_x1(), -f.g));
  c.polygons.push_back(rectangle(layer, f.bus_x0(), f.a + f.g, f.bus_x1(), f.a + f.g + f.bw));
}

void add_pads(Cell& c, std::int64_t x_centre, std::int64_t top, const IdtGeometry& geom, int layer) {
  const std::int64_t s = to_db(geom.pad_size);
  const std::int64_t step = s + to_db(geom.pad_spacing);
  for (int k = -1; k <= 1; ++k) {
    const std::int64_t x0 = x_centre + k * step - s / 2;
    c.polygons.push_back(rectangle(layer, x0, top - s, x0 + s, top));
  }
}

}  // namespace

std::int32_t to_db(double meters) {
  const double v = std::round(meters / kDbUnitMeters);
  if (!std::isfinite(v) || v < static_cast<double>(kMin32) || v > static_cast<double>(kMax32)) {
    throw CoordinateError("length " + std::to_string(meters) + " m overflows 32-bit database units");
  }
  return static_cast<std::int32_t>(v);
}

const Cell* Library::find(std::string_view cell_name) const {
  for (const auto& c : cells) {
    if (c.name == cell_name) return &c;
  }
  return nullptr;
}

const Cell& Library::at(std::string_view cell_name) const {
  if (const Cell* c = find(cell_name)) return *c;
  throw InputError("library has no cell named '" + std::string(cell_name) + "'");
}

Polygon rectangle(int layer, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
  if (x1 < x0) std::swap(x0, x1);
  if (y1 < y0) std::swap(y0, y1);
  if (x0 == x1 || y0 == y1) throw InputError("degenerate rectangle");
  return {layer, 0, {{narrow(x0), narrow(y0)}, {narrow(x1), narrow(y0)}, {narrow(x1), narrow(y1)}, {narrow(x0), narrow(y1)}}};
}

std::int64_t signed_area2(const Polygon& p) {
  Wide acc = 0;
  const std::size_t n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = p.vertices[i];
    const Point b = p.vertices[(i + 1) % n];
    acc += static_cast<Wide>(a.x) * b.y - static_cast<Wide>(b.x) * a.y;
  }
  return static_cast<std::int64_t>(acc);
}

void validate_polygon(const Polygon& p) {
  const std::size_t n = p.vertices.size();
  std::set<std::pair<std::int32_t, std::int32_t>> distinct;
  for (const auto& v : p.vertices) distinct.insert({v.x, v.y});
  if (distinct.size() < 3) throw InputError("polygon needs at least 3 distinct vertices");
  if (distinct.size() != n) throw InputError("polygon repeats a vertex");
  if (signed_area2(p) <= 0) throw InputError("polygon is not counter-clockwise");
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = p.vertices[i], b = p.vertices[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) {
        // Adjacent edges may only share their common vertex.
        const Point c = p.vertices[j], d = p.vertices[(j + 1) % n];
        const Point shared = (j == i + 1) ? b : a;
        const Point mine = (j == i + 1) ? a : b;
        const Point theirs = (j == i + 1) ? d : c;
        if (sign(cross(mine, shared, theirs)) == 0 &&
            (on_segment(mine, shared, theirs) || on_segment(theirs, shared, mine))) {
          throw InputError("polygon edge folds back on its neighbour");
        }
        continue;
      }
      if (segments_touch(a, b, p.vertices[j], p.vertices[(j + 1) % n])) {
        throw InputError("polygon self-intersects at edges " + std::to_string(i) + " and " + std::to_string(j));
      }
    }
  }
}

bool is_legal_name(std::string_view name) {
  if (name.empty() || name.size() > 32) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '?' || c == '$';
  });
}

void validate_library(const Library& lib) {
  if (lib.name.empty()) throw InputError("library name must not be empty");
  std::map<std::string, const Cell*> by_name;
  for (const auto& c : lib.cells) {
    if (!is_legal_name(c.name)) throw InputError("illegal cell name '" + c.name + "'");
    if (!by_name.emplace(c.name, &c).second) throw InputError("duplicate cell name '" + c.name + "'");
  }
  for (const auto& c : lib.cells) {
    for (const auto& p : c.polygons) {
      if (p.layer < 0 || p.layer > 255 || p.datatype < 0 || p.datatype > 255) {
        throw InputError("cell '" + c.name + "': layer/datatype outside 0-255");
      }
      try {
        validate_polygon(p);
      } catch (const InputError& e) {
        throw InputError("cell '" + c.name + "': " + e.what());
      }
    }
    for (const auto& pl : c.placements) {
      if (!by_name.count(pl.cell)) {
        throw InputError("cell '" + c.name + "' places unknown cell '" + pl.cell + "'");
      }
      if (pl.rotation != 0 && pl.rotation != 90 && pl.rotation != 180 && pl.rotation != 270) {
        throw InputError("cell '" + c.name + "': rotation must be 0, 90, 180, or 270");
      }
    }
  }
  // Depth-first cycle check.
  std::map<std::string, int> state;  // 1 visiting, 2 done
  std::function<void(const Cell&)> visit = [&](const Cell& c) {
    state[c.name] = 1;
    for (const auto& pl : c.placements) {
      const int s = state[pl.cell];
      if (s == 1) throw InputError("placement cycle through cell '" + pl.cell + "'");
      if (s == 0) visit(*by_name.at(pl.cell));
    }
    state[c.name] = 2;
  };
  for (const auto& c : lib.cells) {
    if (state[c.name] == 0) visit(c);
  }
}

Point rotate(Point p, int degrees) {
  switch (((degrees % 360) + 360) % 360) {
    case 0: return p;
    case 90: return {narrow(-static_cast<std::int64_t>(p.y)), p.x};
    case 180: return {narrow(-static_cast<std::int64_t>(p.x)), narrow(-static_cast<std::int64_t>(p.y))};
    case 270: return {p.y, narrow(-static_cast<std::int64_t>(p.x))};
    default: throw InputError("rotation must be a multiple of 90 degrees");
  }
}

std::vector<Polygon> flatten(const Library& lib, const Cell& cell) {
  std::vector<Polygon> out;
  flatten_into(lib, cell, Transform{}, out, 0);
  return out;
}

Box bounding_box(const Library& lib, const Cell& cell) { return bbox_of(flatten(lib, cell)); }

int LayerMap::idt_for(design::DeviceLayer l) const {
  switch (l) {
    case design::DeviceLayer::SMALL: return idt_small;
    case design::DeviceLayer::LARGE: return idt_large;
    case design::DeviceLayer::PADS: return pads;
  }
  return idt_small;
}

void LayerMap::validate() const {
  const std::vector<int> ids{idt_small, idt_large, pads, bottom, outline, chip_outline, marks};
  std::set<int> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw ConfigError("layer map ids must be distinct");
  for (int id : ids) {
    if (id < 0 || id > 255) throw ConfigError("layer map ids must be in 0-255");
  }
}

std::string cell_name(const design::ResonatorDesign& d, DeembedKind kind) {
  switch (kind) {
    case DeembedKind::device: return d.id;
    case DeembedKind::open: return d.id + "_OPEN";
    case DeembedKind::short_circuit: return d.id + "_SHORT";
  }
  return d.id;
}

Cell gen_idt_cell(const design::ResonatorDesign& d, const LayerMap& layers, const IdtGeometry& geom) {
  const IdtFrame f = frame_of(d, geom);
  const int idt_layer = layers.idt_for(d.layer);
  Cell c;
  c.name = cell_name(d, DeembedKind::device);

  // Even fingers hang from the bottom busbar, odd ones from the top.
  for (int i = 0; i < f.n; ++i) {
    const std::int64_t x0 = f.finger_x0(i * f.p);
    if (i % 2 == 0) {
      c.polygons.push_back(rectangle(idt_layer, x0, -f.g, x0 + f.w, f.a));
    } else {
      c.polygons.push_back(rectangle(idt_layer, x0, 0, x0 + f.w, f.a + f.g));
    }
  }
  add_busbars(c, f, idt_layer);
  for (int j = 1; j <= f.dummies; ++j) {
    for (std::int64_t centre : {-j * f.p, (f.n - 1 + j) * f.p}) {
      const std::int64_t x0 = f.finger_x0(centre);
      c.polygons.push_back(rectangle(idt_layer, x0, -f.g, x0 + f.w, f.a + f.g));
    }
  }

  c.polygons.push_back(rectangle(layers.bottom, f.bus_x0(), 0, f.bus_x1(), f.a));

  const std::int64_t lambda = 2 * f.p;
  const std::int64_t margin = std::llround(geom.outline_margin_wl * static_cast<double>(lambda));
  const std::int64_t px0 = f.finger_x0(-f.dummies * f.p) - margin;
  const std::int64_t px1 = f.finger_x0((f.n - 1 + f.dummies) * f.p) + f.w + margin;
  const std::int64_t py0 = -f.g - f.bw - margin;
  const std::int64_t py1 = f.a + f.g + f.bw + margin;
  c.polygons.push_back(rectangle(layers.outline, px0, py0, px1, py1));
  const std::int64_t tw = std::max<std::int64_t>(1, std::llround(geom.tether_width_wl * static_cast<double>(lambda)));
  const std::int64_t tl = std::max<std::int64_t>(1, std::llround(geom.tether_length_wl * static_cast<double>(lambda)));
  std::int64_t pad_top = py0;
  if (px1 - px0 >= py1 - py0) {
    const std::int64_t yc = (py0 + py1) / 2;
    c.polygons.push_back(rectangle(layers.outline, px0 - tl, yc - tw / 2, px0, yc - tw / 2 + tw));
    c.polygons.push_back(rectangle(layers.outline, px1, yc - tw / 2, px1 + tl, yc - tw / 2 + tw));
  } else {
    const std::int64_t xc = (px0 + px1) / 2;
    c.polygons.push_back(rectangle(layers.outline, xc - tw / 2, py0 - tl, xc - tw / 2 + tw, py0));
    c.polygons.push_back(rectangle(layers.outline, xc - tw / 2, py1, xc - tw / 2 + tw, py1 + tl));
    pad_top = py0 - tl;
  }
  add_pads(c, (px0 + px1) / 2, pad_top - to_db(geom.pad_clearance), geom, layers.pads);
  return c;
}

Cell gen_deembed_cell(const design::ResonatorDesign& d, DeembedKind kind, const LayerMap& layers,
                      const IdtGeometry& geom) {
  if (kind == DeembedKind::device) return gen_idt_cell(d, layers, geom);
  const IdtFrame f = frame_of(d, geom);
  const int idt_layer = layers.idt_for(d.layer);
  Cell c;
  c.name = cell_name(d, kind);
  add_busbars(c, f, idt_layer);
  if (kind == DeembedKind::short_circuit) {
    c.polygons.push_back(rectangle(idt_layer, f.bus_x0(), -f.g, f.bus_x1(), f.a + f.g));
  }
  // Same pad position as the device cell so probing is identical.
  const Cell device = gen_idt_cell(d, layers, geom);
  for (const auto& p : device.polygons) {
    if (p.layer == layers.pads) c.polygons.push_back(p);
  }
  return c;
}

Library gen_chip(const ChipSpec& spec, const LayerMap& layers, const IdtGeometry& geom) {
  layers.validate();
  if (!(spec.width > 0.0 && spec.height > 0.0)) throw InputError("chip size must be positive");
  std::vector<const design::ResonatorDesign*> order;
  for (const auto& d : spec.devices) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->idt.pitch != b->idt.pitch) return a->idt.pitch < b->idt.pitch;
    return a->id < b->id;
  });

  Library lib;
  Cell chip;
  chip.name = std::string(kChipCell);
  const std::int64_t W = to_db(spec.width), H = to_db(spec.height);
  const std::int64_t margin = to_db(spec.margin), spacing = to_db(spec.spacing);
  chip.polygons.push_back(rectangle(layers.chip_outline, 0, 0, W, H));

  std::int64_t cursor_x = margin;
  std::int64_t row_top = H - margin;
  std::int64_t row_height = 0;
  for (const auto* d : order) {
    if (lib.find(d->id)) throw InputError("duplicate design id '" + d->id + "'");
    std::vector<Cell> group{gen_idt_cell(*d, layers, geom)};
    if (spec.deembed) {
      group.push_back(gen_deembed_cell(*d, DeembedKind::open, layers, geom));
      group.push_back(gen_deembed_cell(*d, DeembedKind::short_circuit, layers, geom));
    }
    std::vector<Box> boxes;
    std::int64_t group_w = 0, group_h = 0;
    for (const auto& c : group) {
      boxes.push_back(bbox_of(c.polygons));
      group_w += boxes.back().width();
      group_h = std::max(group_h, boxes.back().height());
    }
    group_w += spacing * static_cast<std::int64_t>(group.size() - 1);
    if (cursor_x > margin && cursor_x + group_w > W - margin) {
      row_top -= row_height + spacing;
      cursor_x = margin;
      row_height = 0;
    }
    if (cursor_x + group_w > W - margin || row_top - group_h < margin) {
      throw PackingError("device '" + d->id + "' does not fit on the " + std::to_string(spec.width * 1e3) +
                         " x " + std::to_string(spec.height * 1e3) + " mm chip");
    }
    for (std::size_t k = 0; k < group.size(); ++k) {
      const Box& b = boxes[k];
      chip.placements.push_back(
          {group[k].name, {narrow(cursor_x - b.x0), narrow(row_top - b.height() - b.y0)}, 0});
      cursor_x += b.width() + spacing;
      lib.cells.push_back(std::move(group[k]));
    }
    row_height = std::max(row_height, group_h);
  }
  lib.cells.push_back(std::move(chip));
  return lib;
}

void ReticleSpec::validate() const {
  if (demag != 4) throw ConfigError("reticle demagnification is fixed at 4");
  if (!(field_width > 0.0 && field_height > 0.0 && field_width <= 22e-3 + 1e-12 && field_height <= 22e-3 + 1e-12)) {
    throw ConfigError("reticle image field must be positive and at most 22 x 22 mm");
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (!(w.width > 0.0 && w.height > 0.0) || w.x < 0.0 || w.y < 0.0 ||
        w.x + w.width > field_width + 1e-12 || w.y + w.height > field_height + 1e-12) {
      throw ConfigError("ReMa window '" + w.name + "' lies outside the image field");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = windows[j];
      const bool apart = w.x + w.width <= o.x || o.x + o.width <= w.x || w.y + w.height <= o.y ||
                         o.y + o.height <= w.y;
      if (!apart) throw ConfigError("ReMa windows '" + o.name + "' and '" + w.name + "' overlap");
    }
  }
}

ReticleSpec default_reticle(const ChipSpec& chip, const LayerMap& layers) {
  ReticleSpec r;
  const std::vector<std::pair<std::string, int>> exposures{{"SMALL", layers.idt_small},
                                                           {"LARGE", layers.idt_large},
                                                           {"PADS", layers.pads},
                                                           {"BOTTOM", layers.bottom},
                                                           {"OUTLINE", layers.outline}};
  const double gap = 1e-3;
  const double total = static_cast<double>(exposures.size()) * chip.height +
                       static_cast<double>(exposures.size() - 1) * gap;
  const double x = 0.5 * (r.field_width - chip.width);
  double y = 0.5 * (r.field_height + total) - chip.height;
  for (const auto& [name, layer] : exposures) {
    r.windows.push_back({name, layer, x, y, chip.width, chip.height});
    y -= chip.height + gap;
  }
  r.validate();
  return r;
}

void gen_reticle(Library& lib, const ReticleSpec& spec, const LayerMap& layers) {
  spec.validate();
  const auto flat = flatten(lib, lib.at(kChipCell));
  Cell reticle;
  reticle.name = std::string(kReticleCell);
  reticle.polygons.push_back(rectangle(layers.chip_outline, 0, 0, to_db(spec.field_width), to_db(spec.field_height)));
  const std::int64_t arm = 100'000, half_w = 10'000;
  std::vector<Cell> exposures;
  for (const auto& w : spec.windows) {
    Cell c;
    c.name = std::string(kChipCell) + "_" + w.name;
    for (const auto& p : flat) {
      if (p.layer == w.layer) c.polygons.push_back(p);
    }
    reticle.placements.push_back({c.name, {to_db(w.x), to_db(w.y)}, 0});
    const std::int64_t yc = to_db(w.y + 0.5 * w.height);
    const std::int64_t left = to_db(0.5 * w.x);
    const std::int64_t right = to_db(w.x + w.width + 0.5 * (spec.field_width - w.x - w.width));
    reticle.polygons.push_back(cross_mark(layers.marks, left, yc, arm, half_w));
    reticle.polygons.push_back(cross_mark(layers.marks, right, yc, arm, half_w));
    exposures.push_back(std::move(c));
  }
  for (auto& c : exposures) {
    if (lib.find(c.name)) throw InputError("library already has cell '" + c.name + "'");
    lib.cells.push_back(std::move(c));
  }
  lib.cells.push_back(std::move(reticle));
}

void WaferGeometry::validate() const {
  if (!(diameter_mm > 0.0)) throw ConfigError("wafer diameter must be > 0");
  if (!(edge_exclusion_mm >= 0.0) || !(street_mm >= 0.0)) throw ConfigError("wafer margins must be >= 0");
  if (!(keepout_width_mm >= 0.0 && keepout_height_mm >= 0.0)) throw ConfigError("keep-out size must be >= 0");
  if (!(flat_length_mm >= 0.0 && flat_length_mm < diameter_mm)) {
    throw ConfigError("flat length must be in [0, diameter)");
  }
}

std::vector<ChipPlacement> gen_wafer_map(double chip_width_mm, double chip_height_mm,
                                         const WaferGeometry& wafer) {
  wafer.validate();
  if (!(chip_width_mm > 0.0 && chip_height_mm > 0.0)) throw InputError("chip size must be positive");
  constexpr double kEps = 1e-9;
  const double radius = 0.5 * wafer.diameter_mm;
  const double usable = radius - wafer.edge_exclusion_mm;
  std::vector<ChipPlacement> out;
  if (usable <= 0.0) return out;
  const double y_min = wafer.flat_length_mm > 0.0
                           ? -(std::sqrt(radius * radius - 0.25 * wafer.flat_length_mm * wafer.flat_length_mm) -
                               wafer.edge_exclusion_mm)
                           : -usable;
  const double px = chip_width_mm + wafer.street_mm;
  const double py = chip_height_mm + wafer.street_mm;
  const int ni = static_cast<int>(std::ceil(radius / px));
  const int nj = static_cast<int>(std::ceil(radius / py));
  int row = 0;
  for (int j = nj; j >= -nj; --j) {
    bool any = false;
    for (int i = -ni; i <= ni; ++i) {
      const double x = i * px, y = j * py;
      const double fx = std::abs(x) + 0.5 * chip_width_mm;
      const double fy = std::abs(y) + 0.5 * chip_height_mm;
      if (fx * fx + fy * fy > usable * usable + kEps) continue;
      if (y - 0.5 * chip_height_mm < y_min - kEps) continue;
      const bool in_keepout = std::abs(x) < 0.5 * (wafer.keepout_width_mm + chip_width_mm) - kEps &&
                              std::abs(y) < 0.5 * (wafer.keepout_height_mm + chip_height_mm) - kEps;
      if (wafer.keepout_width_mm > 0.0 && wafer.keepout_height_mm > 0.0 && in_keepout) continue;
      out.push_back({static_cast<int>(out.size()), row, i + ni, x, y});
      any = true;
    }
    if (any) ++row;
  }
  return out;
}

void write_polygon_csv(std::ostream& out, const Library& lib) {
  out << "cell,layer,datatype,polygon,vertex,x_nm,y_nm\n";
  for (const auto& c : lib.cells) {
    for (std::size_t i = 0; i < c.polygons.size(); ++i) {
      const auto& p = c.polygons[i];
      for (std::size_t k = 0; k < p.vertices.size(); ++k) {
        out << c.name << ',' << p.layer << ',' << p.datatype << ',' << i << ',' << k << ','
            << p.vertices[k].x << ',' << p.vertices[k].y << '\n';
      }
    }
  }
}

}  // namespace lwr::layout
