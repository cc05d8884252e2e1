#include "lwr/gdsii.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "lwr/error.hpp"

namespace lwr::gdsii {

namespace {

std::string hex4(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%04X", v & 0xFFFFu);
  return buf;
}

class Writer {
 public:
  void record(Record r, std::span<const std::uint8_t> payload = {}) {
    const std::size_t len = 4 + payload.size();
    if (len > 0xFFFF) throw InputError("GDSII record " + hex4(r) + " exceeds 65535 bytes");
    put16(static_cast<std::uint16_t>(len));
    put16(r);
    out_.insert(out_.end(), payload.begin(), payload.end());
  }
  void int16s(Record r, std::initializer_list<std::int32_t> values) {
    std::vector<std::uint8_t> p;
    for (std::int32_t v : values) {
      p.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
      p.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    record(r, p);
  }
  void text(Record r, const std::string& s) {
    std::vector<std::uint8_t> p(s.begin(), s.end());
    if (p.size() % 2) p.push_back(0);
    record(r, p);
  }
  void reals(Record r, std::initializer_list<double> values) {
    std::vector<std::uint8_t> p;
    for (double v : values) {
      const auto b = encode_real8(v);
      p.insert(p.end(), b.begin(), b.end());
    }
    record(r, p);
  }
  void xy(const std::vector<layout::Point>& pts) {
    std::vector<std::uint8_t> p;
    auto put32 = [&](std::int32_t v) {
      const auto u = static_cast<std::uint32_t>(v);
      for (int s = 24; s >= 0; s -= 8) p.push_back(static_cast<std::uint8_t>((u >> s) & 0xFF));
    };
    for (const auto& pt : pts) {
      put32(pt.x);
      put32(pt.y);
    }
    record(XY, p);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  std::vector<std::uint8_t> out_;
};

struct RawRecord {
  std::size_t offset = 0;
  std::uint16_t tag = 0;  // record type << 8 | data type
  std::span<const std::uint8_t> data;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const {
    for (std::size_t i = pos_; i < bytes_.size(); ++i) {
      if (bytes_[i] != 0) return false;
    }
    return true;
  }

  RawRecord next() {
    if (pos_ + 4 > bytes_.size()) throw ParseError("truncated GDSII stream: record header cut short", pos_);
    const std::size_t len = (static_cast<std::size_t>(bytes_[pos_]) << 8) | bytes_[pos_ + 1];
    if (len < 4 || len % 2) throw ParseError("malformed GDSII record length " + std::to_string(len), pos_);
    if (pos_ + len > bytes_.size()) throw ParseError("truncated GDSII record", pos_);
    RawRecord r;
    r.offset = pos_;
    r.tag = static_cast<std::uint16_t>((bytes_[pos_ + 2] << 8) | bytes_[pos_ + 3]);
    r.data = bytes_.subspan(pos_ + 4, len - 4);
    pos_ += len;
    check_known(r);
    return r;
  }

  RawRecord expect(Record want) {
    RawRecord r = next();
    if (r.tag != want) {
      throw ParseError("expected GDSII record " + hex4(want) + ", found " + hex4(r.tag), r.offset);
    }
    return r;
  }

 private:
  static void check_known(const RawRecord& r) {
    const unsigned type = r.tag >> 8;
    switch (type) {
      case 0x09: throw ParseError("unsupported GDSII element PATH", r.offset);
      case 0x0B: throw ParseError("unsupported GDSII element AREF", r.offset);
      case 0x0C: throw ParseError("unsupported GDSII element TEXT", r.offset);
      case 0x15: throw ParseError("unsupported GDSII element NODE", r.offset);
      case 0x2D: throw ParseError("unsupported GDSII element BOX", r.offset);
      default: break;
    }
    static constexpr std::uint16_t kKnown[] = {HEADER, BGNLIB, LIBNAME, UNITS, ENDLIB, BGNSTR, STRNAME,
                                               ENDSTR, BOUNDARY, SREF, LAYER, DATATYPE, XY, ENDEL,
                                               SNAME, STRANS, MAG, ANGLE,
                                               0x1F06 /* REFLIBS */, 0x2006 /* FONTS */,
                                               0x2202 /* GENERATIONS */, 0x2306 /* ATTRTABLE */,
                                               0x2601 /* ELFLAGS */, 0x2B02 /* PROPATTR */,
                                               0x2C06 /* PROPVALUE */, 0x2F03 /* PLEX */,
                                               0x3602 /* FORMAT */};
    for (std::uint16_t k : kKnown) {
      if (r.tag == k) return;
    }
    throw ParseError("unknown GDSII record " + hex4(r.tag), r.offset);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::int16_t int16_at(const RawRecord& r, std::size_t i) {
  if (r.data.size() < 2 * (i + 1)) throw ParseError("GDSII record too short", r.offset);
  return static_cast<std::int16_t>((r.data[2 * i] << 8) | r.data[2 * i + 1]);
}

std::string string_of(const RawRecord& r) {
  std::string s(r.data.begin(), r.data.end());
  while (!s.empty() && s.back() == '\0') s.pop_back();
  return s;
}

double real_at(const RawRecord& r, std::size_t i) {
  if (r.data.size() < 8 * (i + 1)) throw ParseError("GDSII real record too short", r.offset);
  return decode_real8(std::span<const std::uint8_t, 8>(r.data.data() + 8 * i, 8));
}

std::vector<layout::Point> points_of(const RawRecord& r) {
  if (r.data.size() % 8) throw ParseError("GDSII XY record length is not a multiple of 8", r.offset);
  std::vector<layout::Point> pts;
  auto get32 = [&](std::size_t at) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u = (u << 8) | r.data[at + k];
    return static_cast<std::int32_t>(u);
  };
  for (std::size_t at = 0; at < r.data.size(); at += 8) pts.push_back({get32(at), get32(at + 4)});
  return pts;
}

// Skips optional property and flag records inside an element.
bool is_element_extra(std::uint16_t tag) {
  return tag == 0x2601 || tag == 0x2F03 || tag == 0x2B02 || tag == 0x2C06;
}

layout::Polygon read_boundary(Reader& in) {
  layout::Polygon p;
  bool have_layer = false, have_dt = false;
  for (;;) {
    RawRecord r = in.next();
    if (is_element_extra(r.tag)) continue;
    switch (r.tag) {
      case LAYER: p.layer = int16_at(r, 0); have_layer = true; break;
      case DATATYPE: p.datatype = int16_at(r, 0); have_dt = true; break;
      case XY: {
        auto pts = points_of(r);
        if (pts.size() < 4 || pts.front() != pts.back()) {
          throw ParseError("BOUNDARY XY must be closed with at least 4 points", r.offset);
        }
        pts.pop_back();
        p.vertices = std::move(pts);
        break;
      }
      case ENDEL:
        if (!have_layer || !have_dt || p.vertices.empty()) {
          throw ParseError("BOUNDARY is missing LAYER, DATATYPE, or XY", r.offset);
        }
        return p;
      default: throw ParseError("unexpected record " + hex4(r.tag) + " inside BOUNDARY", r.offset);
    }
  }
}

layout::Placement read_sref(Reader& in) {
  layout::Placement pl;
  bool have_xy = false;
  for (;;) {
    RawRecord r = in.next();
    if (is_element_extra(r.tag)) continue;
    switch (r.tag) {
      case SNAME: pl.cell = string_of(r); break;
      case STRANS:
        if (int16_at(r, 0) != 0) {
          throw ParseError("SREF reflection or absolute transforms are not supported", r.offset);
        }
        break;
      case MAG:
        if (real_at(r, 0) != 1.0) throw ParseError("SREF magnification other than 1 is not supported", r.offset);
        break;
      case ANGLE: {
        const double a = real_at(r, 0);
        const double q = std::round(a / 90.0);
        if (std::abs(a - 90.0 * q) > 1e-9) throw ParseError("SREF angle must be a multiple of 90", r.offset);
        pl.rotation = static_cast<int>(((static_cast<long>(q) % 4) + 4) % 4) * 90;
        break;
      }
      case XY: {
        const auto pts = points_of(r);
        if (pts.size() != 1) throw ParseError("SREF XY must hold exactly one point", r.offset);
        pl.origin = pts[0];
        have_xy = true;
        break;
      }
      case ENDEL:
        if (pl.cell.empty() || !have_xy) throw ParseError("SREF is missing SNAME or XY", r.offset);
        return pl;
      default: throw ParseError("unexpected record " + hex4(r.tag) + " inside SREF", r.offset);
    }
  }
}

}  // namespace

std::array<std::uint8_t, 8> encode_real8(double v) {
  std::array<std::uint8_t, 8> out{};
  if (v == 0.0) return out;
  if (!std::isfinite(v)) throw InputError("GDSII real must be finite");
  const bool negative = v < 0.0;
  double m = std::abs(v);
  int e = 0;
  while (m >= 1.0) {
    m /= 16.0;
    ++e;
  }
  while (m < 1.0 / 16.0) {
    m *= 16.0;
    --e;
  }
  auto mantissa = static_cast<std::uint64_t>(std::llround(std::ldexp(m, 56)));
  if (mantissa >= (std::uint64_t{1} << 56)) {
    mantissa >>= 4;
    ++e;
  }
  if (e + 64 < 0 || e + 64 > 127) throw InputError("value outside the GDSII real range");
  out[0] = static_cast<std::uint8_t>((negative ? 0x80 : 0x00) | (e + 64));
  for (int i = 0; i < 7; ++i) out[1 + i] = static_cast<std::uint8_t>((mantissa >> (8 * (6 - i))) & 0xFF);
  return out;
}

double decode_real8(std::span<const std::uint8_t, 8> b) {
  std::uint64_t mantissa = 0;
  for (int i = 1; i < 8; ++i) mantissa = (mantissa << 8) | b[i];
  const int e = (b[0] & 0x7F) - 64;
  const double v = std::ldexp(static_cast<double>(mantissa), 4 * e - 56);
  return (b[0] & 0x80) ? -v : v;
}

std::vector<std::uint8_t> write_gdsii(const layout::Library& lib) {
  layout::validate_library(lib);
  Writer w;
  w.int16s(HEADER, {kStreamVersion});
  w.int16s(BGNLIB, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  w.text(LIBNAME, lib.name);
  w.reals(UNITS, {lib.user_unit, lib.db_unit_m});
  for (const auto& c : lib.cells) {
    w.int16s(BGNSTR, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    w.text(STRNAME, c.name);
    for (const auto& p : c.polygons) {
      w.record(BOUNDARY);
      w.int16s(LAYER, {p.layer});
      w.int16s(DATATYPE, {p.datatype});
      auto closed = p.vertices;
      closed.push_back(p.vertices.front());
      if (closed.size() > 8191) throw InputError("polygon in '" + c.name + "' has too many vertices for GDSII");
      w.xy(closed);
      w.record(ENDEL);
    }
    for (const auto& pl : c.placements) {
      w.record(SREF);
      w.text(SNAME, pl.cell);
      if (pl.rotation != 0) {
        w.int16s(STRANS, {0});
        w.reals(ANGLE, {static_cast<double>(pl.rotation)});
      }
      w.xy({pl.origin});
      w.record(ENDEL);
    }
    w.record(ENDSTR);
  }
  w.record(ENDLIB);
  return w.take();
}

layout::Library read_gdsii(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const RawRecord header = in.expect(HEADER);
  (void)int16_at(header, 0);
  in.expect(BGNLIB);
  layout::Library lib;
  RawRecord r = in.next();
  while (r.tag == 0x1F06 || r.tag == 0x2006 || r.tag == 0x2202 || r.tag == 0x2306 || r.tag == 0x3602) r = in.next();
  if (r.tag != LIBNAME) throw ParseError("expected LIBNAME, found " + hex4(r.tag), r.offset);
  lib.name = string_of(r);
  r = in.next();
  while (r.tag == 0x1F06 || r.tag == 0x2006 || r.tag == 0x2202 || r.tag == 0x2306 || r.tag == 0x3602) r = in.next();
  if (r.tag != UNITS) throw ParseError("expected UNITS, found " + hex4(r.tag), r.offset);
  lib.user_unit = real_at(r, 0);
  lib.db_unit_m = real_at(r, 1);
  for (;;) {
    r = in.next();
    if (r.tag == ENDLIB) break;
    if (r.tag != BGNSTR) throw ParseError("expected BGNSTR or ENDLIB, found " + hex4(r.tag), r.offset);
    layout::Cell cell;
    cell.name = string_of(in.expect(STRNAME));
    for (;;) {
      r = in.next();
      if (r.tag == ENDSTR) break;
      if (r.tag == BOUNDARY) {
        cell.polygons.push_back(read_boundary(in));
      } else if (r.tag == SREF) {
        cell.placements.push_back(read_sref(in));
      } else {
        throw ParseError("unexpected record " + hex4(r.tag) + " inside structure '" + cell.name + "'", r.offset);
      }
    }
    lib.cells.push_back(std::move(cell));
  }
  if (!in.at_end()) throw ParseError("data after ENDLIB", bytes.size());
  return lib;
}

void write_file(const std::filesystem::path& path, const layout::Library& lib) {
  const auto bytes = write_gdsii(lib);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

layout::Library read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_gdsii(bytes);
}

}  // namespace lwr::gdsii
