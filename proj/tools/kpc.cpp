// kpc: command-line front end over the scenario files.
//   kpc <eval|singular|residual|rogue|transform|limit> --config FILE --out DIR
// Exit status: 0 ok, 1 bad input (config, validation, IO), 2 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kpc/kpc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::size_t threads = 0;
  double fd_step = 0.0;
};

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw kpc::IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  kpc::detail::write_file(path.string(), [&](std::ostream& os) { os << text; });
}

std::string frame_name(std::size_t frame, const char* stem, std::size_t variant, const char* ext) {
  char buf[64];
  if (variant == 0)
    std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, frame, ext);
  else
    std::snprintf(buf, sizeof buf, "%s_%04zu_%zu.%s", stem, frame, variant, ext);
  return buf;
}

void write_index(const fs::path& dir, const std::vector<double>& times) {
  std::ostringstream os;
  os << "frame,t\n";
  for (std::size_t i = 0; i < times.size(); ++i) os << i << ',' << kpc::format_double(times[i]) << '\n';
  write_text(dir / "index.csv", os.str());
}

// Cells cut away by the scenario's restriction are set to the display floor.
kpc::ScalarField apply_restriction(const kpc::ScenarioConfig& c, const kpc::SolutionSpec& spec,
                                   kpc::ScalarField F, double t, std::size_t threads) {
  using Kind = kpc::Restriction::Kind;
  const auto& r = c.restrict;
  if (r.kind == Kind::None) return F;
  const double floor = c.regularization == kpc::Regularization::None ? 0.0 : kpc::kRegularizedFloor;
  const kpc::Vec2 point{r.point[0], r.point[1]};
  if (r.kind == Kind::HalfPlane)
    return kpc::restrict_to_component(
        F, kpc::half_plane_mask(c.grid, point, {r.normal[0], r.normal[1]}), 1, floor);
  const auto mask = kpc::component_mask(spec, c.grid, t, threads);
  auto cell = [](double v, double lo, double d, std::size_t n) {
    const double i = std::floor((v - lo) / d);
    return static_cast<std::size_t>(std::clamp(i, 0.0, static_cast<double>(n - 1)));
  };
  const std::size_t k = c.grid.index(cell(point.x, c.grid.x_min, c.grid.dx(), c.grid.nx),
                                     cell(point.y, c.grid.y_min, c.grid.dy(), c.grid.ny));
  if (mask.labels[k] == 0)
    throw kpc::OnSingularSet("restrict.point lies on the singular set at t = " + std::to_string(t));
  return kpc::restrict_to_component(F, mask, mask.labels[k], floor);
}

int run_eval(const kpc::ScenarioConfig& c, const Options& o) {
  const auto spec = c.solution();
  const auto times = c.times.values();
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const auto f = kpc::field_f_grid(spec, c.grid, times[ti], o.threads);
    const auto F = apply_restriction(c, spec, kpc::display_field(f, c.regularization, c.clip),
                                     times[ti], o.threads);
    std::size_t n_csv = 0, n_pgm = 0;
    for (const auto& req : c.outputs) {
      if (req.format == "csv") {
        const fs::path p = fs::path(o.out) / frame_name(ti, "frame", n_csv++, "csv");
        kpc::detail::write_file(p.string(), [&](std::ostream& os) { kpc::write_csv(os, f, F); });
      } else {
        const fs::path p = fs::path(o.out) / frame_name(ti, "frame", n_pgm++, "pgm");
        const auto r = kpc::export_pgm(req.field == "f" ? f : F, p.string(), req.range);
        if (r.degenerate)
          std::cerr << "warning: " << p.string() << ": degenerate range, image written as mid-gray\n";
      }
    }
  }
  write_index(o.out, times);
  return 0;
}

int run_singular(const kpc::ScenarioConfig& c, const Options& o) {
  const auto spec = c.solution();
  const auto times = c.times.values();
  json frames = json::array();
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const auto trace = kpc::scan_singular_curve(spec, c.grid, times[ti], o.threads);
    const auto comps = kpc::component_mask(spec, c.grid, times[ti], o.threads);
    const fs::path p = fs::path(o.out) / frame_name(ti, "trace", 0, "csv");
    kpc::detail::write_file(p.string(), [&](std::ostream& os) { kpc::write_trace_csv(os, trace); });
    frames.push_back({{"frame", ti},
                      {"t", times[ti]},
                      {"segments", trace.segments.size()},
                      {"vertices", trace.vertex_count()},
                      {"components", comps.count}});
  }
  write_index(o.out, times);
  write_text(fs::path(o.out) / "singular.json", kpc::dump({{"frames", frames}}));
  return 0;
}

int run_residual(const kpc::ScenarioConfig& c, const Options& o) {
  const auto spec = c.solution();
  const double h = o.fd_step > 0.0 ? o.fd_step : c.verification.fd_step;
  json reports = json::array();
  for (double t : c.times.values()) {
    const auto rep =
        kpc::residual_scan(spec, c.grid, t, h, c.verification.exclusion_radius, o.threads);
    json j = kpc::to_json(rep);
    j["t"] = t;
    reports.push_back(j);
  }
  write_text(fs::path(o.out) / "residual.json", kpc::dump({{"reports", reports}}));
  return 0;
}

int run_rogue(const kpc::ScenarioConfig& c, const Options& o) {
  const auto spec = c.solution();
  const auto& r = c.rogue;
  const auto series =
      kpc::time_series_max(spec, c.grid, c.times.values(), r.exclusion_radius, o.threads);
  kpc::detail::write_file((fs::path(o.out) / "series.csv").string(),
                          [&](std::ostream& os) { kpc::write_series_csv(os, series); });
  auto events = kpc::detect_transient(series, r.background_window, r.ratio_threshold);
  json ev = json::array();
  for (auto& e : events) {
    kpc::attach_tops(e, spec, c.grid, r.exclusion_radius, o.threads);
    ev.push_back(kpc::to_json(e));
  }
  json troughs = json::array();
  for (double t : r.trough_times) {
    json row = {{"t", t}};
    try {
      const auto tp =
          kpc::trough_points(spec, c.grid, t, r.exclusion_radius, r.min_separation, o.threads);
      json pts = json::array();
      for (const auto& p : tp) pts.push_back({{"x", p.location.x}, {"y", p.location.y}, {"depth", p.depth}});
      row["points"] = pts;
      row["separation"] = kpc::trough_separation(tp);
    } catch (const kpc::FewerThanTwoTroughs& e) {
      row["error"] = e.what();
    }
    troughs.push_back(row);
  }
  write_text(fs::path(o.out) / "events.json",
             kpc::dump({{"events", ev}, {"troughs", troughs}}));
  return 0;
}

int run_transform(const kpc::ScenarioConfig& c, const Options& o) {
  const auto spec = c.solution();
  const auto fluid = c.fluid_or_default();
  const double a2 = kpc::alpha_squared(fluid);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream os;
  os << "x,y,t,x_phys,y_phys,t_phys,z_phys,f,eta,eta_m,u,w\n";
  for (const auto& pt : c.transform.points) {
    const auto ph = kpc::to_physical(pt, fluid, a2);
    double f = kpc::kSingularValue, fx = nan;
    try {
      f = kpc::field_f(spec, pt);
      fx = kpc::f_x(spec, pt, c.transform.fx_path,
                    o.fd_step > 0.0 ? o.fd_step : 1e-3);
    } catch (const kpc::NumericalError&) {
    }
    for (double z : c.transform.depths) {
      const double w = std::isnan(fx) ? nan : kpc::velocity_z(fx, z, fluid, a2);
      os << kpc::format_double(pt.x) << ',' << kpc::format_double(pt.y) << ','
         << kpc::format_double(pt.t) << ',' << kpc::format_double(ph.x) << ','
         << kpc::format_double(ph.y) << ',' << kpc::format_double(ph.t) << ','
         << kpc::format_double(z) << ',' << kpc::format_double(f) << ','
         << kpc::format_double(kpc::elevation(f, fluid, a2)) << ','
         << kpc::format_double(kpc::elevation_m(f, fluid, a2)) << ','
         << kpc::format_double(kpc::velocity_x(f, fluid, a2)) << ',' << kpc::format_double(w)
         << '\n';
    }
  }
  write_text(fs::path(o.out) / "transform.csv", os.str());
  write_text(fs::path(o.out) / "transform.json",
             kpc::dump({{"alpha_squared", a2},
                        {"sign_case", a2 > 0.0 ? "alpha^2 > 0" : "alpha^2 < 0"}}));
  return 0;
}

int run_limit(const kpc::ScenarioConfig& c, const Options& o) {
  if (c.family != kpc::Family::Trigonometric || c.spectral.size() != 1)
    throw kpc::ValidationError("family", "limit needs a single trigonometric mode");
  const auto rows = kpc::soliton_limit_check(c.spectral[0], c.alpha, c.limit.eps, c.limit.probes);
  kpc::detail::write_file((fs::path(o.out) / "limit.csv").string(),
                          [&](std::ostream& os) { kpc::write_limit_csv(os, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact KP solution fields: evaluation, verification and export"};
  app.require_subcommand(1, 1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "scenario JSON file")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (0: KPC_THREADS or all cores)");
    sub->add_option("--fd-step", opt.fd_step, "finite-difference step override");
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const kpc::ScenarioConfig&, const Options&);
  };
  const Cmd cmds[] = {
      {"eval", "field frames as CSV/PGM", run_eval},
      {"singular", "singular-curve traces", run_singular},
      {"residual", "KP residual report", run_residual},
      {"rogue", "extreme series and transient events", run_rogue},
      {"transform", "physical-coordinate report", run_transform},
      {"limit", "soliton-pair degeneration table", run_limit},
  };
  for (const auto& c : cmds) add_common(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto config = kpc::parse_config(read_text(opt.config));
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec) throw kpc::IoError(opt.out, ec.message());
    for (const auto& c : cmds)
      if (app.got_subcommand(c.name)) return c.run(config, opt);
  } catch (const kpc::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const kpc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
