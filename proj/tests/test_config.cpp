// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/config.hpp"
#include "patchfdtd/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <initializer_list>
#include <random>
#include <string>

using namespace patchfdtd;

namespace
{

std::string message_of(const std::string &text)
{
  try
  {
    parse_config(text);
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

std::string field_of(const std::string &text)
{
  try
  {
    parse_config(text);
  }
  catch (const ValidationError &e)
  {
    return e.field();
  }
  catch (const Error &)
  {
    return "<no field>";
  }
  return "";
}

bool contains(const std::string &s, const std::string &part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("presets")
{
  const auto &p = grid_presets();
  REQUIRE(p.size() == 3u);
  CHECK(find_preset("coarse").cells_per_wavelength == 20.0);
  CHECK(find_preset("standard").cells_per_wavelength == 30.0);
  CHECK(find_preset("standard").min_feature_cells == 2.0);
  CHECK(find_preset("fine").cells_per_wavelength == 40.0);
  CHECK(find_preset("fine").min_feature_cells == 4.0);
  for (const auto &g : p)
    CHECK(g.courant == 0.99);
  CHECK_THROWS_AS(find_preset("ultra"), ValidationError);
}

TEST_CASE("minimal fixture configuration takes the defaults")
{
  const ParsedConfig c = parse_config("design = \"simple_u\"\n");
  CHECK(c.run.fixture.has_value());
  CHECK(c.run.fixture->name == "simple_u");
  CHECK(c.run.design == build_simple_u_patch());
  CHECK(c.run.simulation.preset == "standard");
  CHECK(c.run.simulation.grid.cells_per_wavelength == 30.0);
  CHECK(c.run.frequencies.start == 1e9);
  CHECK(c.run.frequencies.stop == 7e9);
  CHECK(c.run.frequencies.step == 5e6);
  CHECK(c.run.frequencies.list().size() == 1201u);
  CHECK_FALSE(c.sweep.has_value());
  CHECK(c.run == fixture_config("simple_u"));
}

TEST_CASE("fixture overrides, band and settings")
{
  const std::string text = R"(# comment line
design = "modified_u"
name = "thick"   # trailing comment

[params]
stack.substrate_height = 3.2e-3
stub[4].width = 1.5e-3

[band]
f_lo = 3.9e9
f_hi = 4.6e9

[simulation]
preset = "coarse"
courant = 0.9
precision = "double"
max_steps = 5000
allow_truncated = true

[source]
f0 = 4.5e9

[farfield]
band_points = 3
angle_step_deg = 5

[outputs]
pattern_csv = false
)";
  const ParsedConfig c = parse_config(text);
  const RunConfig &r = c.run;
  CHECK(r.design.name == "thick");
  CHECK(r.design.stack.substrate_height == 3.2e-3);
  CHECK(r.fixture->params.at("stub[4].width") == 1.5e-3);
  CHECK(r.design.analysis_band == Band{3.9e9, 4.6e9});
  CHECK(r.simulation.preset == "coarse");
  CHECK(r.simulation.grid.cells_per_wavelength == 20.0);
  CHECK(r.simulation.grid.courant == 0.9);
  CHECK(r.simulation.precision == Precision::Double);
  CHECK(r.simulation.max_steps == 5000);
  CHECK(r.simulation.allow_truncated);
  CHECK(r.simulation.source.f0 == 4.5e9);
  CHECK(r.farfield.band_points == 3);
  CHECK(r.farfield.angle_step_deg == 5.0);
  CHECK_FALSE(r.outputs.pattern_csv);
  CHECK(r.outputs.s1p);

  ModifiedUParams m;
  m.base.substrate_height = 3.2e-3;
  m.stubs[3].width = 1.5e-3;
  AntennaDesign expect = build_modified_u_patch(m);
  expect.analysis_band = {3.9e9, 4.6e9};
  expect.name = "thick";
  CHECK(r.design.layout == expect.layout);
}

TEST_CASE("custom designs")
{
  const std::string text = R"(design = "custom"
name = "square"

[stack]
eps_r = 4.4
loss_tangent = 0.02
substrate_height = 1.6e-3
board_x0 = -0.01
board_y0 = -0.01
board_width = 0.05
board_depth = 0.05

[[rect]]
x0 = 0
y0 = 0
width = 0.03
height = 0.03

[[rect]]
op = "cut"
x0 = 0.01
y0 = 0.01
width = 0.005
height = 0.005

[port]
x = 0.015
y = 0.005
axis = "y"
impedance = 50

[band]
f_lo = 2e9
f_hi = 3e9
)";
  const ParsedConfig c = parse_config(text);
  CHECK_FALSE(c.run.fixture.has_value());
  const AntennaDesign &d = c.run.design;
  CHECK(d.name == "square");
  REQUIRE(d.layout.rects.size() == 2u);
  CHECK(d.layout.rects[1].op == RectOp::Cut);
  CHECK(d.stack.substrate.rel_permittivity == 4.4);
  CHECK(layout_area(d.layout) == doctest::Approx(0.03 * 0.03 - 0.005 * 0.005));
  CHECK(parse_config(serialize(c)).run == c.run);
}

TEST_CASE("syntax errors carry the line number")
{
  CHECK(contains(message_of(""), "line 1: empty configuration"));
  CHECK(contains(message_of("design = \"simple_u\"\nfoo\n"), "line 2"));
  CHECK(contains(message_of("design = \"simple_u\"\n[simulation\n"), "line 2: malformed section header"));
  CHECK(contains(message_of("design = \"simple_u\"\n\n[simulation]\ncourant = 0.9\ncourant = 0.8\n"),
                 "line 5: duplicate key 'courant'"));
  CHECK(contains(message_of("design = \"simple_u\"\n[band]\n[band]\n"), "line 3: duplicate section [band]"));
  CHECK(contains(message_of("design = \"simple_u\"\nname = \"unterminated\n"), "line 2"));
  CHECK(contains(message_of("design = \"simple_u\"\n[simulation]\ncourant = fast\n"), "line 3"));
  CHECK(contains(message_of("name = \"x\"\n"), "design"));
}

TEST_CASE("unknown sections and keys are rejected")
{
  CHECK(contains(message_of("design = \"simple_u\"\n[simulations]\n"), "line 2: unknown section [simulations]"));
  CHECK(contains(message_of("design = \"simple_u\"\n[simulation]\ncourrant = 0.9\n"), "line 3: unknown key 'courrant'"));
  CHECK(contains(message_of("design = \"simple_u\"\ncolour = \"red\"\n"), "unknown key 'colour'"));
  CHECK(contains(message_of("design = \"simple_u\"\n[params]\nslot.arm_lenght = 0.02\n"),
                 "line 3: unknown parameter 'slot.arm_lenght'"));
  CHECK(contains(message_of("design = \"rect_patch\"\n[params]\nstub[1].width = 0.001\n"), "unknown parameter"));
  CHECK(contains(message_of("design = \"simple_u\"\n[stack]\neps_r = 3\n"), "[params]"));
  CHECK(contains(message_of("design = \"hexagon\"\n"), "unknown fixture"));
}

TEST_CASE("out-of-range values name the field")
{
  const std::string head = "design = \"simple_u\"\n";
  CHECK(field_of(head + "[simulation]\ncourant = 1.5\n") == "simulation.courant");
  CHECK(field_of(head + "[simulation]\ncells_per_wavelength = 8\n") == "simulation.cells_per_wavelength");
  CHECK(field_of(head + "[simulation]\nprecision = \"half\"\n") == "simulation.precision");
  CHECK(field_of(head + "[simulation]\npreset = \"ultra\"\n") == "simulation.preset");
  CHECK(field_of(head + "[simulation]\ncpml_thickness = 2\n") == "simulation.cpml_thickness");
  CHECK(field_of(head + "[simulation]\nmax_steps = 0\n") == "simulation.max_steps");
  CHECK(field_of(head + "[farfield]\nangle_step_deg = 7\n") == "farfield.angle_step_deg");
  CHECK(field_of(head + "[params]\nstack.substrate_height = -1e-3\n") == "stack.substrate_height");
  CHECK(field_of(head + "[params]\nslot.arm_width = 0\n") == "slot.arm_width");
  CHECK(field_of(head + "[band]\nf_lo = 5e9\nf_hi = 4e9\n") == "band.f_hi");
  CHECK(field_of(head + "[source]\nbandwidth = -1\n") == "source.bandwidth");
  CHECK(field_of(head + "[frequencies]\nstart = 7e9\nstop = 1e9\n") == "frequencies");
}

TEST_CASE("sweep section")
{
  const std::string text = "design = \"simple_u\"\n[sweep]\nparameter = \"stack.substrate_height\"\n"
                           "values = [2.0e-3, 2.4e-3, 2.8e-3]\nmetric = \"max_gain_dbi\"\n";
  const ParsedConfig c = parse_config(text);
  REQUIRE(c.sweep.has_value());
  CHECK(c.sweep->parameter == "stack.substrate_height");
  CHECK(c.sweep->values == std::vector<double>{2.0e-3, 2.4e-3, 2.8e-3});
  CHECK(c.sweep->metric == SweepMetric::MaxGainDbi);
  CHECK(parse_config(serialize(c)).sweep == c.sweep);

  const std::string head = "design = \"simple_u\"\n[sweep]\n";
  CHECK(field_of(head + "parameter = \"stack.substrate_height\"\nvalues = [1e-3]\n") == "sweep.values");
  CHECK(field_of(head + "parameter = \"stub[1].width\"\nvalues = [1e-3, 2e-3]\n") == "sweep.parameter");
  CHECK(field_of(head + "parameter = \"patch.width\"\nvalues = [0.04, 0.05]\nmetric = \"vswr\"\n") ==
        "sweep.metric");
}

TEST_CASE("serialize then parse is the identity on every fixture")
{
  for (const auto &name : fixture_names())
    for (const std::string preset : {"coarse", "standard", "fine"})
    {
      const RunConfig c = fixture_config(name, preset);
      CHECK(parse_config(serialize(c, true)).run == c);
      // the explicit form resolves to the same design and settings
      const RunConfig e = parse_config(serialize(c, false)).run;
      CHECK_FALSE(e.fixture.has_value());
      CHECK(e.design == c.design);
      CHECK(e.simulation == c.simulation);
      CHECK(serialize(e) == serialize(c, false));
    }
}

TEST_CASE("round trip holds for random fixture overrides")
{
  std::mt19937_64 rng(20260514);
  std::uniform_real_distribution<double> scale(0.9, 1.1);
  for (const auto &name : fixture_names())
  {
    const auto params = fixture_parameters(name);
    for (int trial = 0; trial < 20; ++trial)
    {
      FixtureRef ref{name, {}};
      for (const auto &p : params)
        if (rng() % 4 == 0 && p != "feed.inset" && p != "slot.offset" && p != "slot.center_x" &&
            p != "stack.loss_tangent" && p != "stack.ground_thickness")
          ref.params[p] = fixture_default(name, p) * scale(rng);
      RunConfig c = fixture_config(name, "coarse");
      try
      {
        c.design = build_fixture(ref);
      }
      catch (const Error &)
      {
        continue;  // a perturbation may produce an inconsistent layout
      }
      c.fixture = ref;
      c.simulation.grid.courant = 0.5 + 0.49 * scale(rng) / 1.1;
      c.simulation.source.f0 = 4.25e9 * scale(rng);
      const std::string text = serialize(c);
      const RunConfig back = parse_config(text).run;
      CHECK(back == c);
      CHECK(serialize(back) == text);
      CHECK(config_hash(back) == config_hash(c));
    }
  }
}

TEST_CASE("hash ignores outputs and tracks everything that changes results")
{
  const RunConfig base = fixture_config("simple_u");
  const std::string h = config_hash(base);
  CHECK(h.size() == 16u);
  CHECK(h == config_hash(fixture_config("simple_u")));

  RunConfig c = base;
  c.outputs.pattern_csv = false;
  c.outputs.run_log = false;
  CHECK(config_hash(c) == h);

  c = base;
  c.simulation.source.f0 = 4.3e9;
  CHECK(config_hash(c) != h);
  c = base;
  c.simulation.grid.courant = 0.98;
  CHECK(config_hash(c) != h);
  c = base;
  c.farfield.band_points = 5;
  CHECK(config_hash(c) != h);
  CHECK(config_hash(fixture_config("simple_u", "coarse")) != h);
  CHECK(config_hash(fixture_config("modified_u")) != h);
}

TEST_CASE("fixture parameter tables")
{
  const auto su = fixture_parameters("simple_u");
  const auto mu = fixture_parameters("modified_u");
  const auto rp = fixture_parameters("rect_patch");
  CHECK(std::find(su.begin(), su.end(), "stack.substrate_height") != su.end());
  CHECK(std::find(mu.begin(), mu.end(), "stub[7].depth") != mu.end());
  CHECK(std::find(su.begin(), su.end(), "stub[1].width") == su.end());
  CHECK(std::find(rp.begin(), rp.end(), "probe.inset") != rp.end());
  CHECK(fixture_default("simple_u", "patch.width") == 47.43e-3);
  CHECK(fixture_default("modified_u", "stub[4].width") == 2.0e-3);
  CHECK_THROWS_AS(fixture_default("simple_u", "stub[1].width"), ValidationError);
  CHECK(build_fixture({"rect_patch", {}}).name == "rect_patch");
}

TEST_CASE("load_config reports unreadable files as I/O errors")
{
  try
  {
    load_config("/nonexistent/dir/config.toml");
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
