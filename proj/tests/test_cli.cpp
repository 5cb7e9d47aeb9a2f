// Config parsing, serialization formats, and CLI exit-code contract.

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chns/cli.hpp"
#include "chns/errors.hpp"
#include "harness.hpp"

using namespace chns;
using harness::qoi;
using harness::record;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "chns_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool throws_mentioning(const std::string& text, const std::string& needle) {
  try {
    parse_config_text(text);
  } catch (const ValidationError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

void test_config_parsing() {
  RunConfig cfg = parse_config_text(
      "# comment line\n"
      "grid.nx = 20   # trailing comment\n"
      "grid.ny=24\n"
      "  physics.nu =  0.07\n"
      "physics.kernel.beta = auto\n"
      "physics.kernel.sigma = 0.25\n"
      "time.dt = 0.0078125\n"
      "time.t_final = 0.125\n"
      "init.phi0.type = tanh_disk\n"
      "cost.lambda_u = 0.02\n"
      "control.box_min = -3\n"
      "control.box_max = 3\n"
      "output.directory = somewhere\n");
  record("config values land where addressed",
         cfg.nx == 20 && cfg.ny == 24 && cfg.nu == 0.07 && cfg.kernel_beta == -1.0 &&
             cfg.kernel_sigma == 0.25 && cfg.phi0.type == "tanh_disk" && cfg.lambda_u == 0.02 &&
             cfg.box_min == -3.0 && cfg.out_dir == "somewhere");
  record("defaults survive for untouched keys", cfg.alpha_u == 1.0 && cfg.opt_max_iters == 50);

  record("unknown key rejected by name", throws_mentioning("grid.nz = 4\n", "grid.nz"));
  record("malformed number rejected by key", throws_mentioning("physics.nu = fast\n", "physics.nu"));
  record("invariant violation names the key", throws_mentioning("physics.nu = -1\n", "physics.nu"));
  record("missing equals sign rejected", throws_mentioning("grid.nx 12\n", "key = value"));
  record("bad profile type rejected", throws_mentioning("init.phi0.type = blob\n", "init.phi0.type"));

  bool threw = false;
  try {
    RunConfig c2;
    c2.dt = 0.3;
    c2.t_final = 0.5;
    config_nsteps(c2);
  } catch (const ValidationError&) {
    threw = true;
  }
  record("non-integer step count rejected", threw);
  RunConfig c3;
  record("step count from horizon", config_nsteps(c3) == 32);
}

void test_initial_profiles() {
  RunConfig cfg;
  Grid2D g = config_grid(cfg);

  cfg.phi0.type = "tanh_interface";
  ScalarField f = build_phi0(cfg, g);
  double lo = 1e9, hi = -1e9;
  for (double v : f.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  record("interface profile spans the two phases", lo < -0.9 && hi > 0.9 && lo >= -1.0 && hi <= 1.0);

  cfg.phi0.type = "tanh_disk";
  ScalarField d = build_phi0(cfg, g);
  record("disk profile positive at center, negative at corner",
         d.at(g.nx / 2, g.ny / 2) > 0.9 && d.at(0, 0) < -0.9);

  cfg.phi0.type = "constant";
  cfg.phi0.value = -0.3;
  ScalarField c = build_phi0(cfg, g);
  record("constant profile honors value", max_abs(c) == 0.3 && c.v[0] == -0.3);

  cfg.u0.type = "vortex";
  cfg.u0.amplitude = 2.0;
  VectorField v2 = build_u0(cfg, g);
  cfg.u0.amplitude = 1.0;
  VectorField v1 = build_u0(cfg, g);
  double err = 0.0;
  for (std::size_t k = 0; k < v1.x.size(); ++k) {
    err = std::max(err, std::fabs(v2.x[k] - 2.0 * v1.x[k]));
    err = std::max(err, std::fabs(v2.y[k] - 2.0 * v1.y[k]));
  }
  record("vortex amplitude scales linearly", err < 1e-14 && max_abs(v1) > 0.0);
}

void test_format_roundtrip() {
  const double samples[] = {0.0,     -0.0,       1.0 / 3.0,          1e-300, 2.5e300,
                            1.0,     -1.0,       1.0000000000000002, M_PI,   -1.2345678912345678e-7,
                            6.25e-2, 1234567.75, 8.98846567431158e307};
  bool ok = true;
  for (double x : samples) {
    const double back = std::strtod(format_g17(x).c_str(), nullptr);
    ok = ok && std::memcmp(&back, &x, sizeof x) == 0;
  }
  record("17-digit format round-trips bitwise", ok);
}

void test_csv_writer() {
  fs::path p = temp_dir() / "diag.csv";
  std::vector<DiagnosticsRow> rows = {{0.0, 1.5, 0.25, 0.0, 0.0, 0.0},
                                      {0.125, 1.25, 0.25, 3.5, 0.5, 0.01}};
  write_diagnostics_csv(rows, p.string());
  std::string text = slurp(p);
  record("csv header exact",
         text.rfind("t,energy,mass,grad_u_sq,grad_mu_sq,cost\n", 0) == 0);
  int lines = 0;
  for (char ch : text) lines += ch == '\n';
  record("csv one line per row plus header", lines == 3);

  write_diagnostics_csv(rows, p.string());
  record("csv rewrite byte-identical", slurp(p) == text);
}

void test_vtk_writer() {
  Grid2D g = make_grid(8, 8, 1.0, 1.0);
  fs::path p = temp_dir() / "field.vtk";

  ScalarField f(g, ScalarBc::NeumannZero);
  write_field_vtk(f, "phi", p.string());
  std::string text = slurp(p);
  record("vtk structured points header",
         text.find("DATASET STRUCTURED_POINTS") != std::string::npos &&
             text.find("DIMENSIONS 8 8 1") != std::string::npos &&
             text.find("ORIGIN 0 0 0") != std::string::npos &&
             text.find("SPACING 0.125 0.125 1") != std::string::npos &&
             text.find("POINT_DATA 64") != std::string::npos &&
             text.find("SCALARS phi double 1") != std::string::npos &&
             text.find("LOOKUP_TABLE default") != std::string::npos);
  int zeros = 0;
  std::istringstream ss(text.substr(text.find("LOOKUP_TABLE default")));
  std::string tok;
  ss >> tok >> tok;  // consume the two header words
  double val;
  while (ss >> val) zeros += val == 0.0;
  record("vtk scalar payload complete", zeros == 64);

  VectorField v(g, VectorBc::NoSlip);
  v.x[g.idx(3, 2)] = 1.0 / 3.0;
  fs::path pv = temp_dir() / "vec.vtk";
  write_field_vtk(v, "u", pv.string());
  std::string vt = slurp(pv);
  record("vtk vector block with zero third component",
         vt.find("VECTORS u double") != std::string::npos &&
             vt.find("0.33333333333333331 0 0") != std::string::npos);

  // reread the scalar payload for a value round-trip
  ScalarField fr(g, ScalarBc::NeumannZero);
  for (std::size_t k = 0; k < fr.v.size(); ++k) fr.v[k] = std::sin(static_cast<double>(k));
  write_field_vtk(fr, "phi", p.string());
  std::istringstream rs(slurp(p).substr(slurp(p).find("LOOKUP_TABLE default")));
  rs >> tok >> tok;
  bool exact = true;
  for (std::size_t k = 0; k < fr.v.size(); ++k) {
    double x;
    rs >> x;
    exact = exact && x == fr.v[k];
  }
  record("vtk values round-trip exactly", exact);
}

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"chns"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

void test_cli_exit_codes() {
  record("no subcommand is a usage error", cli({}) == 64);
  record("unknown subcommand is a usage error", cli({"frobnicate"}) == 64);
  record("unknown flag is a usage error", cli({"simulate", "--wat"}) == 64);
  record("missing flag value is a usage error", cli({"simulate", "--config"}) == 64);

  fs::path dir = temp_dir();
  fs::path missing = dir / "nope.cfg";
  record("missing config file is a validation failure",
         cli({"assumptions-check", "--config", missing.string().c_str()}) == 1);

  fs::path bad = dir / "bad.cfg";
  std::ofstream(bad) << "grid.nx = 4\n";
  record("invalid config is a validation failure",
         cli({"assumptions-check", "--config", bad.string().c_str()}) == 1);

  fs::path beta0 = dir / "beta0.cfg";
  std::ofstream(beta0) << "physics.kernel.beta = 0\ngrid.nx = 16\ngrid.ny = 16\n";
  record("failed assumption gate exits 1",
         cli({"assumptions-check", "--config", beta0.string().c_str()}) == 1);

  fs::path okc = dir / "ok.cfg";
  std::ofstream(okc) << "grid.nx = 16\ngrid.ny = 16\n";
  record("default-scaled assumption gate exits 0",
         cli({"assumptions-check", "--config", okc.string().c_str()}) == 0);

  fs::path badcap = dir / "badcap.cfg";
  std::ofstream(badcap) << "grid.nx = 16\ngrid.ny = 16\ntime.max_iter_factor = 0\n";
  record("nonpositive iteration cap is a validation failure",
         cli({"assumptions-check", "--config", badcap.string().c_str()}) == 1);

  // A huge dt makes the phase Helmholtz operator nearly the singular Neumann
  // Laplacian, and a budget of ceil(0.05 * 256) = 13 iterations cannot push the
  // residual to 1e-30, so the solver has to give up rather than return junk.
  fs::path hard = dir / "hard.cfg";
  std::ofstream(hard) << "grid.nx = 16\ngrid.ny = 16\ntime.dt = 100\ntime.t_final = 100\n"
                      << "time.linear_tol = 1e-30\ntime.max_iter_factor = 0.05\n";
  fs::path hout = dir / "hard_out";
  record("unreachable solver tolerance exits 2",
         cli({"simulate", "--config", hard.string().c_str(), "--out", hout.string().c_str()}) == 2);
}

void test_cli_simulate_outputs() {
  fs::path dir = temp_dir();
  fs::path cfgp = dir / "sim.cfg";
  std::ofstream(cfgp) << "grid.nx = 16\ngrid.ny = 16\ntime.dt = 0.015625\n"
                      << "time.t_final = 0.0625\ninit.phi0.type = tanh_disk\n"
                      << "init.u0.type = vortex\noutput.dump_every = 2\n";
  fs::path o1 = dir / "run1", o2 = dir / "run2";

  record("simulate exits 0",
         cli({"simulate", "--config", cfgp.string().c_str(), "--out", o1.string().c_str()}) == 0);
  record("simulate writes diagnostics and dumps",
         fs::exists(o1 / "diagnostics.csv") && fs::exists(o1 / "phi_000000.vtk") &&
             fs::exists(o1 / "u_000004.vtk"));

  cli({"simulate", "--config", cfgp.string().c_str(), "--out", o2.string().c_str()});
  record("repeat simulate byte-identical csv",
         slurp(o1 / "diagnostics.csv") == slurp(o2 / "diagnostics.csv"));

  // zero run: energy column constant, monotone time column
  fs::path zcfg = dir / "zero.cfg";
  std::ofstream(zcfg) << "grid.nx = 16\ngrid.ny = 16\ntime.dt = 0.015625\n"
                      << "time.t_final = 0.0625\ninit.phi0.type = zero\ninit.u0.type = zero\n";
  fs::path oz = dir / "zero_out";
  cli({"simulate", "--config", zcfg.string().c_str(), "--out", oz.string().c_str()});
  std::istringstream z(slurp(oz / "diagnostics.csv"));
  std::string header, line;
  std::getline(z, header);
  bool monotone_t = true, const_energy = true;
  double prev_t = -1.0;
  std::string first_energy;
  while (std::getline(z, line)) {
    std::istringstream ls(line);
    std::string t, e;
    std::getline(ls, t, ',');
    std::getline(ls, e, ',');
    if (first_energy.empty()) first_energy = e;
    monotone_t = monotone_t && std::strtod(t.c_str(), nullptr) > prev_t;
    prev_t = std::strtod(t.c_str(), nullptr);
    const_energy = const_energy && e == first_energy;
  }
  record("zero run: constant energy, monotone time", monotone_t && const_energy);
}

} // namespace

int main() {
  test_config_parsing();
  test_initial_profiles();
  test_format_roundtrip();
  test_csv_writer();
  test_vtk_writer();
  test_cli_exit_codes();
  test_cli_simulate_outputs();
  return harness::finish("cli and serialization");
}
