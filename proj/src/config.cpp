// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/config.hpp"

#include "patchfdtd/cavity_model.hpp"
#include "patchfdtd/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace patchfdtd
{

const std::vector<GridPreset> &grid_presets()
{
  static const std::vector<GridPreset> presets{
    {"coarse", 20.0, 1.0, 0.99},
    {"standard", 30.0, 2.0, 0.99},
    {"fine", 40.0, 4.0, 0.99},
  };
  return presets;
}

const GridPreset &find_preset(const std::string &name)
{
  for (const auto &p : grid_presets())
    if (p.name == name)
      return p;
  throw ValidationError("simulation.preset", "unknown preset '" + name + "' (coarse, standard, fine)");
}

void apply_preset(SimulationSettings &s, const std::string &preset)
{
  const GridPreset &p = find_preset(preset);
  s.preset = p.name;
  s.grid.cells_per_wavelength = p.cells_per_wavelength;
  s.grid.min_feature_cells = p.min_feature_cells;
  s.grid.courant = p.courant;
}

const char *to_string(SweepMetric m)
{
  switch (m)
  {
  case SweepMetric::MinRlDb:
    return "min_rl_db";
  case SweepMetric::MaxGainDbi:
    return "max_gain_dbi";
  case SweepMetric::FRes:
    return "f_res";
  }
  return "unknown";
}

std::vector<double> FrequencyPlan::list() const
{
  if (!(start > 0.0) || !(stop > start) || !(step > 0.0))
    throw ValidationError("frequencies", "need 0 < start < stop and step > 0");
  std::vector<double> out;
  const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long k = 0; k <= count; ++k)
    out.push_back(start + static_cast<double>(k) * step);
  return out;
}

// ---------------------------------------------------------------------------
// Fixtures

namespace
{

struct FixtureParams
{
  SimpleUParams simple;
  ModifiedUParams modified;
  RectPatchParams rect;
  bool inset_given = false;
};

RectPatchParams default_rect()
{
  RectPatchParams r;
  const auto dims = cavity::design_patch(2.5e9, r.eps_r, r.substrate_height);
  r.patch_width = dims.width;
  r.patch_length = dims.length;
  r.probe_inset = 0.3 * dims.length;
  r.band = {2.25e9, 2.75e9};
  return r;
}

using Slot = std::function<double &(FixtureParams &)>;

std::vector<std::pair<std::string, Slot>> simple_slots(bool modified)
{
  auto base = [modified](FixtureParams &f) -> SimpleUParams & { return modified ? f.modified.base : f.simple; };
  std::vector<std::pair<std::string, Slot>> s;
  auto add = [&](const char *path, double SimpleUParams::*m) {
    s.emplace_back(path, [base, m](FixtureParams &f) -> double & { return base(f).*m; });
  };
  add("stack.substrate_height", &SimpleUParams::substrate_height);
  add("stack.eps_r", &SimpleUParams::eps_r);
  add("stack.loss_tangent", &SimpleUParams::loss_tangent);
  add("stack.ground_thickness", &SimpleUParams::ground_thickness);
  add("patch.width", &SimpleUParams::patch_width);
  add("patch.length", &SimpleUParams::patch_length);
  add("feed.length", &SimpleUParams::feed_length);
  add("feed.width", &SimpleUParams::feed_width);
  add("feed.inset", &SimpleUParams::feed_inset);
  add("slot.arm_length", &SimpleUParams::arm_length);
  add("slot.arm_width", &SimpleUParams::arm_width);
  add("slot.base_length", &SimpleUParams::base_length);
  add("slot.base_width", &SimpleUParams::base_width);
  add("slot.offset", &SimpleUParams::slot_offset);
  add("slot.center_x", &SimpleUParams::slot_center_x);
  add("board.margin", &SimpleUParams::board_margin);
  add("port.impedance", &SimpleUParams::port_impedance);
  if (modified)
    for (int k = 0; k < 7; ++k)
    {
      const std::string p = "stub[" + std::to_string(k + 1) + "]";
      s.emplace_back(p + ".width", [k](FixtureParams &f) -> double & { return f.modified.stubs[k].width; });
      s.emplace_back(p + ".depth", [k](FixtureParams &f) -> double & { return f.modified.stubs[k].depth; });
    }
  return s;
}

std::vector<std::pair<std::string, Slot>> rect_slots()
{
  std::vector<std::pair<std::string, Slot>> s;
  auto add = [&](const char *path, double RectPatchParams::*m) {
    s.emplace_back(path, [m](FixtureParams &f) -> double & { return f.rect.*m; });
  };
  add("stack.substrate_height", &RectPatchParams::substrate_height);
  add("stack.eps_r", &RectPatchParams::eps_r);
  add("stack.loss_tangent", &RectPatchParams::loss_tangent);
  add("patch.width", &RectPatchParams::patch_width);
  add("patch.length", &RectPatchParams::patch_length);
  add("probe.inset", &RectPatchParams::probe_inset);
  add("board.margin", &RectPatchParams::board_margin);
  add("port.impedance", &RectPatchParams::port_impedance);
  return s;
}

std::vector<std::pair<std::string, Slot>> slots_for(const std::string &fixture)
{
  if (fixture == "simple_u")
    return simple_slots(false);
  if (fixture == "modified_u")
    return simple_slots(true);
  if (fixture == "rect_patch")
    return rect_slots();
  throw ValidationError("design", "unknown fixture '" + fixture + "' (simple_u, modified_u, rect_patch)");
}

FixtureParams default_params()
{
  FixtureParams f;
  f.rect = default_rect();
  return f;
}

}  // namespace

const std::vector<std::string> &fixture_names()
{
  static const std::vector<std::string> names{"simple_u", "modified_u", "rect_patch"};
  return names;
}

std::vector<std::string> fixture_parameters(const std::string &fixture)
{
  std::vector<std::string> out;
  for (const auto &s : slots_for(fixture))
    out.push_back(s.first);
  return out;
}

double fixture_default(const std::string &fixture, const std::string &path)
{
  FixtureParams f = default_params();
  for (auto &s : slots_for(fixture))
    if (s.first == path)
      return s.second(f);
  throw ValidationError(path, "not a parameter of fixture '" + fixture + "'");
}

AntennaDesign build_fixture(const FixtureRef &ref, const std::optional<Band> &band)
{
  FixtureParams f = default_params();
  auto slots = slots_for(ref.name);
  for (const auto &[path, value] : ref.params)
  {
    bool found = false;
    for (auto &s : slots)
      if (s.first == path)
      {
        s.second(f) = value;
        found = true;
        break;
      }
    if (!found)
      throw ValidationError(path, "not a parameter of fixture '" + ref.name + "'");
  }
  AntennaDesign d;
  if (ref.name == "simple_u")
  {
    if (band)
      f.simple.band = *band;
    d = build_simple_u_patch(f.simple);
  }
  else if (ref.name == "modified_u")
  {
    if (band)
      f.modified.base.band = *band;
    d = build_modified_u_patch(f.modified);
  }
  else
  {
    if (!ref.params.count("probe.inset"))
      f.rect.probe_inset = 0.3 * f.rect.patch_length;
    if (band)
      f.rect.band = *band;
    d = build_rect_patch(f.rect);
    d.name = "rect_patch";
  }
  validate(d);
  return d;
}

RunConfig fixture_config(const std::string &fixture, const std::string &preset)
{
  RunConfig c;
  c.fixture = FixtureRef{fixture, {}};
  c.design = build_fixture(*c.fixture);
  apply_preset(c.simulation, preset);
  return c;
}

// ---------------------------------------------------------------------------
// Parsing

namespace
{

struct Value
{
  enum Kind
  {
    String,
    Number,
    Bool,
    Array
  } kind = Number;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<double> arr;
  int line = 0;
};

struct Section
{
  std::string name;  // "" for the top level
  bool array_item = false;
  int line = 0;
  std::vector<std::pair<std::string, Value>> entries;
};

[[noreturn]] void parse_error(int line, const std::string &msg)
{
  throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string &text, double &out)
{
  if (text.empty())
    return false;
  const char *b = text.data();
  const char *e = b + text.size();
  if (*b == '+')
    ++b;
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

// Removes a trailing comment that is not inside a string.
std::string strip_comment(const std::string &line)
{
  bool in_str = false;
  for (std::size_t k = 0; k < line.size(); ++k)
  {
    const char c = line[k];
    if (in_str && c == '\\')
      ++k;
    else if (c == '"')
      in_str = !in_str;
    else if (c == '#' && !in_str)
      return line.substr(0, k);
  }
  return line;
}

Value parse_value(const std::string &text, int line)
{
  Value v;
  v.line = line;
  if (text.empty())
    parse_error(line, "missing value");
  if (text[0] == '"')
  {
    v.kind = Value::String;
    std::size_t k = 1;
    for (; k < text.size() && text[k] != '"'; ++k)
    {
      if (text[k] == '\\')
      {
        if (++k >= text.size())
          parse_error(line, "unterminated string");
        const char c = text[k];
        if (c == 'n')
          v.str += '\n';
        else if (c == 't')
          v.str += '\t';
        else if (c == '"' || c == '\\')
          v.str += c;
        else
          parse_error(line, "unknown escape sequence");
      }
      else
        v.str += text[k];
    }
    if (k >= text.size())
      parse_error(line, "unterminated string");
    if (!trim(text.substr(k + 1)).empty())
      parse_error(line, "unexpected text after string");
    return v;
  }
  if (text == "true" || text == "false")
  {
    v.kind = Value::Bool;
    v.flag = text == "true";
    return v;
  }
  if (text[0] == '[')
  {
    if (text.back() != ']')
      parse_error(line, "unterminated array");
    v.kind = Value::Array;
    const std::string inner = trim(text.substr(1, text.size() - 2));
    if (inner.empty())
      return v;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ','))
    {
      double x = 0.0;
      if (!parse_number(trim(item), x))
        parse_error(line, "array items must be numbers");
      v.arr.push_back(x);
    }
    return v;
  }
  v.kind = Value::Number;
  if (!parse_number(text, v.num))
    parse_error(line, "invalid value '" + text + "'");
  return v;
}

std::vector<Section> tokenize(const std::string &text)
{
  std::vector<Section> sections(1);
  std::set<std::string> seen_tables;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool any = false;
  while (std::getline(in, raw))
  {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty())
      continue;
    any = true;
    if (s[0] == '[')
    {
      Section sec;
      sec.line = line;
      if (s.size() >= 4 && s.compare(0, 2, "[[") == 0)
      {
        if (s.compare(s.size() - 2, 2, "]]") != 0)
          parse_error(line, "malformed section header");
        sec.name = trim(s.substr(2, s.size() - 4));
        sec.array_item = true;
      }
      else
      {
        if (s.back() != ']')
          parse_error(line, "malformed section header");
        sec.name = trim(s.substr(1, s.size() - 2));
        if (!seen_tables.insert(sec.name).second)
          parse_error(line, "duplicate section [" + sec.name + "]");
      }
      if (sec.name.empty())
        parse_error(line, "empty section name");
      sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      parse_error(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"')
      key = key.substr(1, key.size() - 2);
    if (key.empty())
      parse_error(line, "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '[' || c == ']' || c == '-'))
        parse_error(line, "invalid character in key '" + key + "'");
    Section &cur = sections.back();
    for (const auto &e : cur.entries)
      if (e.first == key)
        parse_error(line, "duplicate key '" + key + "'");
    cur.entries.emplace_back(key, parse_value(trim(s.substr(eq + 1)), line));
  }
  if (!any)
    throw Error(ErrorKind::Config, "line 1: empty configuration");
  return sections;
}

// Typed access to one section with tracking of consumed keys.
class Reader
{
public:
  explicit Reader(const Section &s) : s_(s) {}

  const Value *find(const std::string &key)
  {
    for (const auto &e : s_.entries)
      if (e.first == key)
      {
        used_.insert(key);
        return &e.second;
      }
    return nullptr;
  }

  bool number(const std::string &key, double &out)
  {
    const Value *v = find(key);
    if (!v)
      return false;
    if (v->kind != Value::Number)
      parse_error(v->line, "'" + key + "' must be a number");
    out = v->num;
    return true;
  }

  template <class Int>
  bool integer(const std::string &key, Int &out)
  {
    double x = 0.0;
    if (!number(key, x))
      return false;
    if (x != std::floor(x) || std::abs(x) > 1e15)
      parse_error(find(key)->line, "'" + key + "' must be an integer");
    out = static_cast<Int>(x);
    return true;
  }

  bool string(const std::string &key, std::string &out)
  {
    const Value *v = find(key);
    if (!v)
      return false;
    if (v->kind != Value::String)
      parse_error(v->line, "'" + key + "' must be a string");
    out = v->str;
    return true;
  }

  bool boolean(const std::string &key, bool &out)
  {
    const Value *v = find(key);
    if (!v)
      return false;
    if (v->kind != Value::Bool)
      parse_error(v->line, "'" + key + "' must be true or false");
    out = v->flag;
    return true;
  }

  bool array(const std::string &key, std::vector<double> &out)
  {
    const Value *v = find(key);
    if (!v)
      return false;
    if (v->kind != Value::Array)
      parse_error(v->line, "'" + key + "' must be an array of numbers");
    out = v->arr;
    return true;
  }

  // Everything not consumed is an unknown key.
  void finish() const
  {
    for (const auto &e : s_.entries)
      if (!used_.count(e.first))
        parse_error(e.second.line, "unknown key '" + e.first + "'" +
                                     (s_.name.empty() ? std::string(" at top level") : " in [" + s_.name + "]"));
  }

  const Section &section() const { return s_; }

private:
  const Section &s_;
  std::set<std::string> used_;
};

void require(bool ok, const Section &s, const std::string &key)
{
  if (!ok)
    parse_error(s.line, "missing '" + key + "' in [" + s.name + "]");
}

}  // namespace

ParsedConfig parse_config(const std::string &text)
{
  const std::vector<Section> sections = tokenize(text);
  ParsedConfig out;
  RunConfig &rc = out.run;

  Reader top(sections[0]);
  std::string design_kind;
  if (!top.string("design", design_kind))
    parse_error(1, "missing top-level 'design' (fixture name or \"custom\")");
  std::string name;
  const bool has_name = top.string("name", name);
  top.finish();
  const bool custom = design_kind == "custom";
  if (!custom)
    slots_for(design_kind);  // rejects unknown fixture names

  const Section *params = nullptr, *stack = nullptr, *port = nullptr, *band = nullptr, *sim = nullptr,
                *source = nullptr, *freqs = nullptr, *ff = nullptr, *outputs = nullptr, *sweep = nullptr;
  std::vector<const Section *> rects;
  for (std::size_t k = 1; k < sections.size(); ++k)
  {
    const Section &s = sections[k];
    if (s.array_item)
    {
      if (s.name != "rect")
        parse_error(s.line, "unknown array section [[" + s.name + "]]");
      rects.push_back(&s);
      continue;
    }
    const Section **slot = nullptr;
    if (s.name == "params")
      slot = &params;
    else if (s.name == "stack")
      slot = &stack;
    else if (s.name == "port")
      slot = &port;
    else if (s.name == "band")
      slot = &band;
    else if (s.name == "simulation")
      slot = &sim;
    else if (s.name == "source")
      slot = &source;
    else if (s.name == "frequencies")
      slot = &freqs;
    else if (s.name == "farfield")
      slot = &ff;
    else if (s.name == "outputs")
      slot = &outputs;
    else if (s.name == "sweep")
      slot = &sweep;
    else
      parse_error(s.line, "unknown section [" + s.name + "]");
    *slot = &s;
  }

  std::optional<Band> band_value;
  if (band)
  {
    Reader r(*band);
    Band b;
    require(r.number("f_lo", b.f_lo), *band, "f_lo");
    require(r.number("f_hi", b.f_hi), *band, "f_hi");
    r.finish();
    band_value = b;
  }

  if (custom)
  {
    if (params)
      parse_error(params->line, "[params] applies to fixtures only");
    if (!stack || !port || rects.empty())
      parse_error(1, "a custom design needs [stack], [port] and at least one [[rect]]");
    AntennaDesign &d = rc.design;
    d.name = has_name ? name : "custom";
    {
      Reader r(*stack);
      d.stack.substrate.name = "substrate";
      r.string("substrate_name", d.stack.substrate.name);
      require(r.number("eps_r", d.stack.substrate.rel_permittivity), *stack, "eps_r");
      require(r.number("loss_tangent", d.stack.substrate.loss_tangent), *stack, "loss_tangent");
      require(r.number("substrate_height", d.stack.substrate_height), *stack, "substrate_height");
      r.number("ground_thickness", d.stack.ground_thickness);
      require(r.number("board_x0", d.stack.board.x0), *stack, "board_x0");
      require(r.number("board_y0", d.stack.board.y0), *stack, "board_y0");
      require(r.number("board_width", d.stack.board.width), *stack, "board_width");
      require(r.number("board_depth", d.stack.board.depth), *stack, "board_depth");
      r.finish();
    }
    for (const Section *s : rects)
    {
      Reader r(*s);
      Rect2D rect;
      require(r.number("x0", rect.x0), *s, "x0");
      require(r.number("y0", rect.y0), *s, "y0");
      require(r.number("width", rect.width), *s, "width");
      require(r.number("height", rect.height), *s, "height");
      std::string op = "add";
      r.string("op", op);
      if (op == "add")
        rect.op = RectOp::Add;
      else if (op == "cut")
        rect.op = RectOp::Cut;
      else
        parse_error(s->line, "rect op must be \"add\" or \"cut\"");
      r.string("label", rect.label);
      r.finish();
      d.layout.rects.push_back(rect);
    }
    {
      Reader r(*port);
      require(r.number("x", d.port.x), *port, "x");
      require(r.number("y", d.port.y), *port, "y");
      std::string axis = "y";
      r.string("axis", axis);
      if (axis == "x")
        d.port.axis = Axis2D::X;
      else if (axis == "y")
        d.port.axis = Axis2D::Y;
      else
        parse_error(port->line, "port axis must be \"x\" or \"y\"");
      r.number("impedance", d.port.reference_impedance);
      r.number("width", d.port.width);
      r.finish();
    }
    if (band_value)
      d.analysis_band = *band_value;
    validate(d);
  }
  else
  {
    if (stack || port || !rects.empty())
      parse_error((stack ? stack : port ? port : rects.front())->line,
                  "fixture designs take overrides in [params], not explicit geometry");
    FixtureRef ref{design_kind, {}};
    if (params)
    {
      const auto allowed = fixture_parameters(design_kind);
      for (const auto &[key, value] : params->entries)
      {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
          parse_error(value.line, "unknown parameter '" + key + "' for fixture " + design_kind);
        if (value.kind != Value::Number)
          parse_error(value.line, "'" + key + "' must be a number");
        ref.params[key] = value.num;
      }
    }
    rc.design = build_fixture(ref, band_value);
    if (has_name)
      rc.design.name = name;
    rc.fixture = ref;
  }

  SimulationSettings &ss = rc.simulation;
  apply_preset(ss, "standard");
  if (sim)
  {
    Reader r(*sim);
    std::string preset;
    if (r.string("preset", preset))
      apply_preset(ss, preset);
    r.number("cells_per_wavelength", ss.grid.cells_per_wavelength);
    r.number("min_feature_cells", ss.grid.min_feature_cells);
    r.number("courant", ss.grid.courant);
    r.number("f_max", ss.grid.f_max);
    r.number("cell_budget", ss.grid.cell_budget);
    r.number("cell_size", ss.grid.cell_size);
    r.integer("huygens_gap", ss.grid.huygens_gap);
    r.integer("inplane_air_cells", ss.grid.inplane_air_cells);
    r.integer("min_substrate_cells", ss.grid.min_substrate_cells);
    r.integer("cpml_thickness", ss.cpml.thickness);
    r.number("cpml_order", ss.cpml.order);
    r.number("cpml_sigma_ratio", ss.cpml.sigma_max_ratio);
    r.number("cpml_kappa_max", ss.cpml.kappa_max);
    r.number("cpml_alpha_max", ss.cpml.alpha_max);
    r.integer("max_steps", ss.max_steps);
    r.number("energy_threshold", ss.energy_threshold);
    std::string precision;
    if (r.string("precision", precision))
    {
      if (precision == "single")
        ss.precision = Precision::Single;
      else if (precision == "double")
        ss.precision = Precision::Double;
      else
        throw ValidationError("simulation.precision", "must be \"single\" or \"double\"");
    }
    r.boolean("allow_truncated", ss.allow_truncated);
    r.finish();
  }
  ss.grid.cpml_cells = ss.cpml.thickness;
  if (ss.max_steps < 1)
    throw ValidationError("simulation.max_steps", "must be >= 1");
  if (!(ss.energy_threshold > 0.0 && ss.energy_threshold < 1.0))
    throw ValidationError("simulation.energy_threshold", "must lie in (0, 1)");
  if (!(ss.grid.courant > 0.0 && ss.grid.courant <= 1.0))
    throw ValidationError("simulation.courant", "must lie in (0, 1]");
  if (!(ss.grid.cells_per_wavelength >= 10.0))
    throw ValidationError("simulation.cells_per_wavelength", "must be >= 10");
  if (!(ss.grid.min_feature_cells >= 1.0))
    throw ValidationError("simulation.min_feature_cells", "must be >= 1");
  validate(ss.cpml);

  if (source)
  {
    Reader r(*source);
    r.number("f0", ss.source.f0);
    r.number("bandwidth", ss.source.bandwidth);
    r.number("delay", ss.source.delay);
    r.number("amplitude", ss.source.amplitude);
    r.finish();
  }
  validate(ss.source);

  if (freqs)
  {
    Reader r(*freqs);
    r.number("start", rc.frequencies.start);
    r.number("stop", rc.frequencies.stop);
    r.number("step", rc.frequencies.step);
    r.finish();
  }
  rc.frequencies.list();

  if (ff)
  {
    Reader r(*ff);
    r.integer("band_points", rc.farfield.band_points);
    r.number("extra_step", rc.farfield.extra_step);
    r.number("angle_step_deg", rc.farfield.angle_step_deg);
    r.finish();
  }
  if (rc.farfield.band_points < 0)
    throw ValidationError("farfield.band_points", "must be >= 0");
  if (!(rc.farfield.extra_step >= 0.0))
    throw ValidationError("farfield.extra_step", "must be >= 0");
  if (!(rc.farfield.angle_step_deg > 0.0 && rc.farfield.angle_step_deg <= 30.0) ||
      std::abs(180.0 / rc.farfield.angle_step_deg - std::round(180.0 / rc.farfield.angle_step_deg)) > 1e-9)
    throw ValidationError("farfield.angle_step_deg", "must divide 180 and lie in (0, 30]");

  if (outputs)
  {
    Reader r(*outputs);
    r.boolean("s1p", rc.outputs.s1p);
    r.boolean("rl_csv", rc.outputs.rl_csv);
    r.boolean("pattern_csv", rc.outputs.pattern_csv);
    r.boolean("summary_json", rc.outputs.summary_json);
    r.boolean("geometry_pgm", rc.outputs.geometry_pgm);
    r.boolean("run_log", rc.outputs.run_log);
    r.finish();
  }

  if (sweep)
  {
    Reader r(*sweep);
    SweepConfig sw;
    require(r.string("parameter", sw.parameter), *sweep, "parameter");
    require(r.array("values", sw.values), *sweep, "values");
    std::string metric = "min_rl_db";
    r.string("metric", metric);
    if (metric == "min_rl_db")
      sw.metric = SweepMetric::MinRlDb;
    else if (metric == "max_gain_dbi")
      sw.metric = SweepMetric::MaxGainDbi;
    else if (metric == "f_res")
      sw.metric = SweepMetric::FRes;
    else
      throw ValidationError("sweep.metric", "must be min_rl_db, max_gain_dbi or f_res");
    r.finish();
    if (sw.values.size() < 2)
      throw ValidationError("sweep.values", "need at least two values");
    if (!rc.fixture)
      throw ValidationError("sweep.parameter", "sweeps need a fixture design");
    const auto allowed = fixture_parameters(rc.fixture->name);
    if (std::find(allowed.begin(), allowed.end(), sw.parameter) == allowed.end())
      throw ValidationError("sweep.parameter",
                            "'" + sw.parameter + "' is not a parameter of fixture " + rc.fixture->name);
    out.sweep = sw;
  }
  return out;
}

ParsedConfig load_config(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Io, "cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace
{

std::string num(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  // Keep it a float literal in the eyes of a reader.
  return s;
}

std::string quote(const std::string &s)
{
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"' || c == '\\')
      out += '\\';
    if (c == '\n')
    {
      out += "\\n";
      continue;
    }
    if (c == '\t')
    {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

const char *boolean(bool b) { return b ? "true" : "false"; }

void write_design_body(std::ostringstream &o, const AntennaDesign &d)
{
  const auto &st = d.stack;
  o << "\n[stack]\n";
  o << "substrate_name = " << quote(st.substrate.name) << "\n";
  o << "eps_r = " << num(st.substrate.rel_permittivity) << "\n";
  o << "loss_tangent = " << num(st.substrate.loss_tangent) << "\n";
  o << "substrate_height = " << num(st.substrate_height) << "\n";
  o << "ground_thickness = " << num(st.ground_thickness) << "\n";
  o << "board_x0 = " << num(st.board.x0) << "\n";
  o << "board_y0 = " << num(st.board.y0) << "\n";
  o << "board_width = " << num(st.board.width) << "\n";
  o << "board_depth = " << num(st.board.depth) << "\n";
  for (const auto &r : d.layout.rects)
  {
    o << "\n[[rect]]\n";
    o << "label = " << quote(r.label) << "\n";
    o << "op = " << (r.op == RectOp::Add ? "\"add\"" : "\"cut\"") << "\n";
    o << "x0 = " << num(r.x0) << "\n";
    o << "y0 = " << num(r.y0) << "\n";
    o << "width = " << num(r.width) << "\n";
    o << "height = " << num(r.height) << "\n";
  }
  o << "\n[port]\n";
  o << "x = " << num(d.port.x) << "\n";
  o << "y = " << num(d.port.y) << "\n";
  o << "axis = " << (d.port.axis == Axis2D::X ? "\"x\"" : "\"y\"") << "\n";
  o << "impedance = " << num(d.port.reference_impedance) << "\n";
  o << "width = " << num(d.port.width) << "\n";
}

void write_band(std::ostringstream &o, const Band &b)
{
  o << "\n[band]\n";
  o << "f_lo = " << num(b.f_lo) << "\n";
  o << "f_hi = " << num(b.f_hi) << "\n";
}

}  // namespace

std::string serialize_design(const AntennaDesign &d)
{
  std::ostringstream o;
  o << "design = \"custom\"\n";
  o << "name = " << quote(d.name) << "\n";
  write_design_body(o, d);
  write_band(o, d.analysis_band);
  return o.str();
}

std::string serialize(const RunConfig &c, bool keep_fixture)
{
  std::ostringstream o;
  if (keep_fixture && c.fixture)
  {
    o << "design = " << quote(c.fixture->name) << "\n";
    o << "name = " << quote(c.design.name) << "\n";
    if (!c.fixture->params.empty())
    {
      o << "\n[params]\n";
      // Canonical order is the fixture's parameter order.
      for (const auto &p : fixture_parameters(c.fixture->name))
      {
        const auto it = c.fixture->params.find(p);
        if (it != c.fixture->params.end())
          o << p << " = " << num(it->second) << "\n";
      }
    }
  }
  else
  {
    o << "design = \"custom\"\n";
    o << "name = " << quote(c.design.name) << "\n";
    write_design_body(o, c.design);
  }
  write_band(o, c.design.analysis_band);

  const SimulationSettings &s = c.simulation;
  o << "\n[simulation]\n";
  o << "preset = " << quote(s.preset) << "\n";
  o << "cells_per_wavelength = " << num(s.grid.cells_per_wavelength) << "\n";
  o << "min_feature_cells = " << num(s.grid.min_feature_cells) << "\n";
  o << "courant = " << num(s.grid.courant) << "\n";
  o << "f_max = " << num(s.grid.f_max) << "\n";
  o << "cell_budget = " << num(s.grid.cell_budget) << "\n";
  o << "cell_size = " << num(s.grid.cell_size) << "\n";
  o << "huygens_gap = " << s.grid.huygens_gap << "\n";
  o << "inplane_air_cells = " << s.grid.inplane_air_cells << "\n";
  o << "min_substrate_cells = " << s.grid.min_substrate_cells << "\n";
  o << "cpml_thickness = " << s.cpml.thickness << "\n";
  o << "cpml_order = " << num(s.cpml.order) << "\n";
  o << "cpml_sigma_ratio = " << num(s.cpml.sigma_max_ratio) << "\n";
  o << "cpml_kappa_max = " << num(s.cpml.kappa_max) << "\n";
  o << "cpml_alpha_max = " << num(s.cpml.alpha_max) << "\n";
  o << "max_steps = " << s.max_steps << "\n";
  o << "energy_threshold = " << num(s.energy_threshold) << "\n";
  o << "precision = " << (s.precision == Precision::Single ? "\"single\"" : "\"double\"") << "\n";
  o << "allow_truncated = " << boolean(s.allow_truncated) << "\n";

  o << "\n[source]\n";
  o << "f0 = " << num(s.source.f0) << "\n";
  o << "bandwidth = " << num(s.source.bandwidth) << "\n";
  o << "delay = " << num(s.source.delay) << "\n";
  o << "amplitude = " << num(s.source.amplitude) << "\n";

  o << "\n[frequencies]\n";
  o << "start = " << num(c.frequencies.start) << "\n";
  o << "stop = " << num(c.frequencies.stop) << "\n";
  o << "step = " << num(c.frequencies.step) << "\n";

  o << "\n[farfield]\n";
  o << "band_points = " << c.farfield.band_points << "\n";
  o << "extra_step = " << num(c.farfield.extra_step) << "\n";
  o << "angle_step_deg = " << num(c.farfield.angle_step_deg) << "\n";

  o << "\n[outputs]\n";
  o << "s1p = " << boolean(c.outputs.s1p) << "\n";
  o << "rl_csv = " << boolean(c.outputs.rl_csv) << "\n";
  o << "pattern_csv = " << boolean(c.outputs.pattern_csv) << "\n";
  o << "summary_json = " << boolean(c.outputs.summary_json) << "\n";
  o << "geometry_pgm = " << boolean(c.outputs.geometry_pgm) << "\n";
  o << "run_log = " << boolean(c.outputs.run_log) << "\n";
  return o.str();
}

std::string serialize(const ParsedConfig &c, bool keep_fixture)
{
  std::string out = serialize(c.run, keep_fixture);
  if (c.sweep)
  {
    std::ostringstream o;
    o << "\n[sweep]\n";
    o << "parameter = " << quote(c.sweep->parameter) << "\n";
    o << "values = [";
    for (std::size_t k = 0; k < c.sweep->values.size(); ++k)
      o << (k ? ", " : "") << num(c.sweep->values[k]);
    o << "]\n";
    o << "metric = " << quote(to_string(c.sweep->metric)) << "\n";
    out += o.str();
  }
  return out;
}

std::string config_hash(const RunConfig &config)
{
  RunConfig c = config;
  c.outputs = OutputSet{};
  c.fixture.reset();
  const std::string text = std::string("patchfdtd-results-v1\n") + serialize(c, false);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text)
  {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace patchfdtd
