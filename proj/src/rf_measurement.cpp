#include "lwr/rf_measurement.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lwr/error.hpp"

namespace lwr::rf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<double> to_number(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

void put_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

Complex decode(DataFormat fmt, double a, double b) {
  switch (fmt) {
    case DataFormat::RI:
      return {a, b};
    case DataFormat::MA:
      return std::polar(a, b * kDeg);
    case DataFormat::DB:
      return std::polar(std::pow(10.0, a / 20.0), b * kDeg);
  }
  return {};
}

std::pair<double, double> encode(DataFormat fmt, Complex s) {
  switch (fmt) {
    case DataFormat::RI:
      return {s.real(), s.imag()};
    case DataFormat::MA:
      return {std::abs(s), std::arg(s) / kDeg};
    case DataFormat::DB:
      return {20.0 * std::log10(std::abs(s)), std::arg(s) / kDeg};
  }
  return {};
}

void parse_option_line(std::string_view line, std::size_t line_no, TouchstoneFile& file) {
  const auto toks = split_ws(line.substr(1));
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string t = upper(toks[i]);
    if (t == "HZ") {
      file.unit = FrequencyUnit::Hz;
    } else if (t == "KHZ") {
      file.unit = FrequencyUnit::kHz;
    } else if (t == "MHZ") {
      file.unit = FrequencyUnit::MHz;
    } else if (t == "GHZ") {
      file.unit = FrequencyUnit::GHz;
    } else if (t == "S") {
    } else if (t == "Y" || t == "Z" || t == "G" || t == "H") {
      throw ParseError("unsupported network parameter '" + std::string(toks[i]) + "'", line_no);
    } else if (t == "RI") {
      file.format = DataFormat::RI;
    } else if (t == "MA") {
      file.format = DataFormat::MA;
    } else if (t == "DB") {
      file.format = DataFormat::DB;
    } else if (t == "R") {
      if (i + 1 >= toks.size()) throw ParseError("option 'R' needs a reference impedance", line_no);
      const auto z0 = to_number(toks[++i]);
      if (!z0 || !(*z0 > 0.0)) throw ParseError("reference impedance must be a positive number", line_no);
      file.z0 = *z0;
    } else {
      throw ParseError("unknown option token '" + std::string(toks[i]) + "'", line_no);
    }
  }
}

}  // namespace

double unit_scale(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::Hz:
      return 1.0;
    case FrequencyUnit::kHz:
      return 1e3;
    case FrequencyUnit::MHz:
      return 1e6;
    case FrequencyUnit::GHz:
      return 1e9;
  }
  return 1.0;
}

std::string_view to_string(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::Hz:
      return "Hz";
    case FrequencyUnit::kHz:
      return "kHz";
    case FrequencyUnit::MHz:
      return "MHz";
    case FrequencyUnit::GHz:
      return "GHz";
  }
  return "";
}

std::string_view to_string(DataFormat f) {
  switch (f) {
    case DataFormat::RI:
      return "RI";
    case DataFormat::MA:
      return "MA";
    case DataFormat::DB:
      return "DB";
  }
  return "";
}

double TouchstoneFile::hz(std::size_t i) const { return points.at(i).freq * unit_scale(unit); }

Complex TouchstoneFile::s11(std::size_t i) const {
  const auto& p = points.at(i);
  return decode(format, p.a, p.b);
}

std::vector<double> TouchstoneFile::frequencies_hz() const {
  std::vector<double> f;
  f.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) f.push_back(hz(i));
  return f;
}

void TouchstoneFile::push_back(double f_hz, Complex s) {
  const auto [a, b] = encode(format, s);
  points.push_back({f_hz / unit_scale(unit), a, b});
}

void TouchstoneFile::validate() const {
  if (!(z0 > 0.0) || !std::isfinite(z0)) throw InputError("touchstone: z0 must be > 0");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].freq > 0.0) || !std::isfinite(points[i].freq)) {
      throw InputError("touchstone: frequencies must be positive");
    }
    if (!std::isfinite(points[i].a) || !std::isfinite(points[i].b)) {
      throw InputError("touchstone: data values must be finite");
    }
    if (i > 0 && !(points[i].freq > points[i - 1].freq)) {
      throw InputError("touchstone: frequencies must be strictly increasing");
    }
  }
}

TouchstoneFile parse_touchstone(std::string_view text) {
  TouchstoneFile file;
  bool have_options = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    if (line[first] == '!') {
      file.comments.emplace_back(line.substr(first + 1));
    } else if (line[first] == '#') {
      if (!have_options) parse_option_line(line.substr(first, line.find('!') - first), line_no, file);
      have_options = true;
    } else if (line[first] == '[') {
      throw ParseError("Touchstone 2.0 keywords are not supported", line_no);
    } else {
      const auto toks = split_ws(line.substr(0, line.find('!')));
      if (toks.size() != 3) {
        throw ParseError("expected 3 columns (f, S11 pair), found " + std::to_string(toks.size()), line_no);
      }
      std::array<double, 3> v{};
      for (std::size_t i = 0; i < 3; ++i) {
        const auto n = to_number(toks[i]);
        if (!n) throw ParseError("not a number: '" + std::string(toks[i]) + "'", line_no);
        v[i] = *n;
      }
      if (!(v[0] > 0.0) || !std::isfinite(v[0] * unit_scale(file.unit))) {
        throw ParseError("frequency must be positive", line_no);
      }
      if (!file.points.empty() && !(v[0] > file.points.back().freq)) {
        throw ParseError("frequencies must be strictly increasing", line_no);
      }
      file.points.push_back({v[0], v[1], v[2]});
    }
    if (end == text.size()) break;
  }
  if (file.points.empty()) throw ParseError("no data points", line_no);
  return file;
}

TouchstoneFile read_touchstone(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_touchstone(ss.str());
}

std::string serialize_touchstone(const TouchstoneFile& file) {
  file.validate();
  std::string out;
  for (const auto& c : file.comments) {
    out += '!';
    out += c;
    out += '\n';
  }
  out += "# ";
  out += to_string(file.unit);
  out += " S ";
  out += to_string(file.format);
  out += " R ";
  put_number(out, file.z0);
  out += '\n';
  for (const auto& p : file.points) {
    put_number(out, p.freq);
    out += ' ';
    put_number(out, p.a);
    out += ' ';
    put_number(out, p.b);
    out += '\n';
  }
  return out;
}

void write_touchstone(const std::string& path, const TouchstoneFile& file) {
  const std::string text = serialize_touchstone(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

Complex s11_to_y(Complex s, double z0) {
  if (!(z0 > 0.0)) throw InputError("s11_to_y: z0 must be > 0");
  const Complex den = 1.0 + s;
  if (std::abs(den) == 0.0) throw SingularityError("s11_to_y: S11 = -1 (ideal short) has no admittance");
  return (1.0 - s) / (z0 * den);
}

Complex y_to_s11(Complex y, double z0) {
  if (!(z0 > 0.0)) throw InputError("y_to_s11: z0 must be > 0");
  const Complex den = 1.0 + y * z0;
  if (std::abs(den) == 0.0) throw SingularityError("y_to_s11: Y = -1/z0 has no reflection");
  return (1.0 - y * z0) / den;
}

mbvd::AdmittanceTrace to_admittance(const TouchstoneFile& file) {
  mbvd::AdmittanceTrace t;
  for (std::size_t i = 0; i < file.size(); ++i) {
    t.frequencies.push_back(file.hz(i));
    t.admittance.push_back(s11_to_y(file.s11(i), file.z0));
  }
  return t;
}

Complex ErrorBox::measure(Complex actual) const {
  const Complex den = 1.0 - e11 * actual;
  if (std::abs(den) == 0.0) throw SingularityError("error box: 1 - e11 G vanishes");
  return e00 + e10e01 * actual / den;
}

namespace {

Complex offset_factor(const StandardDefinition& d, double f) {
  const double w = 2.0 * std::numbers::pi * f;
  const double loss_db = 2.0 * d.loss_db_per_sqrt_ghz * std::sqrt(f / 1e9);
  return std::polar(std::pow(10.0, -loss_db / 20.0), -2.0 * w * d.offset_delay_s);
}

double poly(const std::vector<double>& c, double f) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * f + *it;
  return v;
}

}  // namespace

Complex CalKit::short_gamma(double f, double z0) const {
  const Complex zl{0.0, 2.0 * std::numbers::pi * f * poly(short_std.reactance_poly, f)};
  return (zl - z0) / (zl + z0) * offset_factor(short_std, f);
}

Complex CalKit::open_gamma(double f, double z0) const {
  const Complex yl{0.0, 2.0 * std::numbers::pi * f * poly(open_std.reactance_poly, f)};
  return (1.0 - yl * z0) / (1.0 + yl * z0) * offset_factor(open_std, f);
}

Complex CalKit::load_gamma(double f, double) const { return Complex{0.0, 0.0} * offset_factor(load_std, f); }

ErrorBox osl_solve(const OslMeasurement& m, Complex short_actual, Complex open_actual, Complex load_actual,
                   std::size_t index) {
  const std::array<Complex, 3> meas{m.short_m, m.open_m, m.load_m};
  const std::array<Complex, 3> act{short_actual, open_actual, load_actual};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (meas[i] == meas[j]) throw CalibrationError("two standards measured identical", index);
      if (act[i] == act[j]) throw CalibrationError("two standard definitions coincide", index);
    }
  }
  // m = e00 + G m e11 - G de, linear in (e00, e11, de).
  Eigen::Matrix3cd a;
  Eigen::Vector3cd b;
  for (int i = 0; i < 3; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = act[static_cast<std::size_t>(i)] * meas[static_cast<std::size_t>(i)];
    a(i, 2) = -act[static_cast<std::size_t>(i)];
    b(i) = meas[static_cast<std::size_t>(i)];
  }
  const Eigen::FullPivLU<Eigen::Matrix3cd> lu(a);
  if (!lu.isInvertible()) throw CalibrationError("degenerate calibration system", index);
  const Eigen::Vector3cd x = lu.solve(b);
  ErrorBox box;
  box.e00 = x(0);
  box.e11 = x(1);
  box.e10e01 = x(0) * x(1) - x(2);
  if (std::abs(box.e10e01) == 0.0 || !std::isfinite(std::abs(box.e10e01))) {
    throw CalibrationError("calibration yields zero reflection tracking", index);
  }
  return box;
}

std::vector<ErrorBox> osl_solve(const TouchstoneFile& short_file, const TouchstoneFile& open_file,
                                const TouchstoneFile& load_file, const CalKit& kit) {
  const std::size_t n = short_file.points.size();
  if (open_file.points.size() != n || load_file.points.size() != n) {
    throw InputError("calibration standards have different point counts");
  }
  std::vector<ErrorBox> boxes;
  boxes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = short_file.hz(i);
    if (open_file.hz(i) != f || load_file.hz(i) != f) {
      throw CalibrationError("calibration standards are on different frequency grids", i);
    }
    const double z0 = short_file.z0;
    boxes.push_back(osl_solve({short_file.s11(i), open_file.s11(i), load_file.s11(i)},
                              kit.short_gamma(f, z0), kit.open_gamma(f, z0), kit.load_gamma(f, z0), i));
  }
  return boxes;
}

Complex apply_correction(const ErrorBox& box, Complex s_meas) {
  const Complex d = s_meas - box.e00;
  const Complex den = box.e10e01 + box.e11 * d;
  if (std::abs(den) <= 1e-300) throw SingularityError("correction: singular error-box denominator");
  return d / den;
}

TouchstoneFile apply_correction(std::span<const ErrorBox> boxes, const TouchstoneFile& file,
                                const std::vector<double>& box_frequencies) {
  if (boxes.size() != file.points.size() || box_frequencies.size() != boxes.size()) {
    throw InputError("correction: calibration and measurement point counts differ");
  }
  TouchstoneFile out = file;
  out.points.clear();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double f = file.hz(i);
    if (box_frequencies[i] != f) {
      throw CalibrationError("calibration and measurement frequency grids differ", i);
    }
    out.points.push_back(file.points[i]);
    const auto [a, b] = encode(file.format, apply_correction(boxes[i], file.s11(i)));
    out.points.back().a = a;
    out.points.back().b = b;
  }
  return out;
}

}  // namespace lwr::rf
