#include "irnav/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "irnav/service.hpp"

namespace irnav {

namespace {

struct Options {
  std::string session = "irnav-session";
  PhantomSpec phantom;
  std::string problem_file;
  std::optional<int> k;
  std::optional<double> fraction;
  std::uint64_t cluster_seed = 42;
  bool clear_clusters = false;
  double delta = 0.04;
  std::optional<double> scale;
  double step = 0.04;
  int point_id = -1;
  std::string front = "sdp";
  bool clustered = false;
  bool csv = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string kind;
  std::string input;
  std::string output;
  double tol = 1e-8;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::string vec(const Vector& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

void print_front(std::ostream& out, const ParetoDb& db) {
  out << db.kind << " front: " << db.points.size() << " points, " << db.solve_count << " scalarized solves";
  if (db.failed_solves) out << " (" << db.failed_solves << " failed)";
  out << ", gap " << fmt(db.quality_gap) << " (delta " << fmt(db.delta) << ")";
  if (!db.levels.empty()) out << ", " << db.levels.size() << " levels";
  out << '\n';
  for (const auto& p : db.points) {
    out << "  #" << p.id << ' ' << vec(p.objectives) << " r=" << fmt(p.decision.r) << " rank=" << p.decision.rank << ' '
        << to_string(p.origin) << '\n';
  }
}

int solve_command(const Options& o, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw ParseError("cannot open " + o.input);
  json report;
  if (o.kind == "lp") {
    LpOptions opts;
    opts.tol = o.tol;
    report = report_to_json(builtin_backend()->solve_lp(read_lp_text(in), opts));
  } else {
    SdpOptions opts;
    opts.tol = o.tol;
    report = report_to_json(builtin_backend()->solve_sdp(read_sdp_text(in), opts));
  }
  if (o.output.empty()) {
    out << report.dump() << '\n';
  } else {
    std::ofstream f(o.output);
    if (!f) throw std::runtime_error("cannot write " + o.output);
    f << report.dump() << '\n';
  }
  return 0;
}

int dispatch(CLI::App& app, const Options& o, std::ostream& out) {
  auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
  if (!sub) throw ValidationError("missing subcommand; see --help");
  const std::string cmd = sub->get_name();
  if (cmd == "solve") return solve_command(o, out);

  Session session(o.session);
  if (cmd == "phantom") {
    if (!o.problem_file.empty()) {
      session.set_problem(load_problem(o.problem_file));
    } else {
      session.make_phantom(o.phantom);
    }
    const ProblemModel& m = session.problem();
    out << "problem: " << m.num_voxels << " voxels, " << m.num_beamlets << " beamlets, " << m.structures.size()
        << " structures, hash " << problem_hash(m) << '\n';
    for (const auto& s : m.structures) {
      out << "  " << s.name << ": " << s.voxel_indices.size() << " voxels, bounds [" << fmt(s.lower_bound) << ", "
          << fmt(s.upper_bound) << "]\n";
    }
    const QcqpInstance& q = session.qcqp();
    out << "qcqp: " << q.num_rows() << " rows, " << q.num_vars() << " variables, lifted dimension " << session.sdp().dim
        << '\n';
    return 0;
  }
  if (cmd == "cluster") {
    if (o.clear_clusters) {
      session.clear_clusters();
      out << "cluster map removed\n";
      return 0;
    }
    if (o.k.has_value() == o.fraction.has_value()) throw ValidationError("cluster: give exactly one of --k or --fraction");
    ClusterRequest req{o.k, o.fraction, o.cluster_seed};
    const ClusterMap cmap = session.cluster(req);
    for (const auto& s : cmap.structures) out << s.structure << ": " << s.voxels.size() << " voxels -> " << s.k << " clusters\n";
    out << "working instance " << session.working_hash() << " (" << session.qcqp().num_rows() << " rows)\n";
    return 0;
  }
  if (cmd == "front-sdp") {
    if (o.scale) session.set_scale(*o.scale);
    print_front(out, session.compute_sdp_front(o.delta));
    return 0;
  }
  if (cmd == "front-iter") {
    print_front(out, session.compute_iter_front(o.step, o.delta));
    return 0;
  }
  if (cmd == "front-worstcase") {
    print_front(out, session.compute_worstcase_front(o.delta));
    return 0;
  }
  if (cmd == "project") {
    const ProjectionResult r = session.project(o.point_id, o.front);
    json doc = to_json(r);
    doc["point_id"] = o.point_id;
    session.save_artifact("projection_" + std::to_string(o.point_id) + ".json", doc);
    out << "point #" << o.point_id << ": r_sdp " << fmt(r.r_sdp) << " -> r " << fmt(r.output.r) << " (loss "
        << fmt(r.r_loss) << "), binding row " << (r.binding_row < 0 ? std::string("none") : std::to_string(r.binding_row))
        << ", objectives " << vec(r.output.objective_values) << ", residual " << fmt(r.max_residual) << '\n';
    if (r.warning) out << "warning: " << r.message << '\n';
    return 0;
  }
  if (cmd == "verify") {
    const json doc = session.verify(o.point_id, o.front);
    session.save_artifact("verify_" + std::to_string(o.point_id) + ".json", doc);
    out << "point #" << o.point_id << ": " << doc["verdict"]["level"].get<std::string>() << " (eps "
        << doc["verdict"]["eps"].dump() << ", " << doc["verdict"]["lp_solves"].get<int>() << " LP solves)\n"
        << "  " << doc["verdict"]["evidence"].get<std::string>() << '\n';
    return 0;
  }
  if (cmd == "dvh") {
    const auto curves = session.dvh(o.point_id, o.clustered, o.front);
    json arr = json::array();
    for (const auto& c : curves) arr.push_back(to_json(c));
    const std::string stem = "dvh_" + std::to_string(o.point_id) + (o.clustered ? "_clustered" : "");
    session.save_artifact(stem + ".json", {{"point_id", o.point_id}, {"clustered", o.clustered}, {"curves", arr}});
    if (o.csv) {
      out << dvh_csv(curves);
    } else {
      for (const auto& c : curves) {
        // D95-style summary: dose received by at least 95% of the structure.
        double d95 = 0.0;
        for (int i = 0; i < c.dose_grid.size(); ++i) {
          if (c.volume_fraction[i] >= 0.95) d95 = c.dose_grid[i];
        }
        out << c.structure << ": D95 ~ " << fmt(d95, 4) << " Gy\n";
      }
    }
    return 0;
  }
  if (cmd == "report") {
    const json rep = session.report();
    session.save_artifact("report.json", rep);
    out << "instance " << rep["problem_hash"].get<std::string>() << '\n';
    for (const auto& [name, f] : rep["fronts"].items()) {
      out << "  " << name << ": " << f["points"] << " points, " << f["solve_count"] << " solves, gap "
          << f["quality_gap"].dump() << (f["stale"].get<bool>() ? " (stale)" : "") << '\n';
    }
    if (rep.contains("comparison")) {
      const auto& c = rep["comparison"];
      out << "solve counts: SDP front " << c["sdp_solves"] << " vs iterative-r " << c["iter_solves"] << " over "
          << c["iter_levels"] << " levels (ratio " << fmt(c["ratio"].get<double>(), 3) << ")\n";
    }
    if (rep.contains("theorem_suite")) {
      out << "theorem suite: " << rep["theorem_suite"]["checks"].size() << " checks, "
          << rep["theorem_suite"]["failures"] << " failures\n";
    }
    return 0;
  }
  if (cmd == "serve") {
    auto shared = std::make_shared<Session>(std::move(session));
    Service service(shared);
    if (!service.bind(o.host, o.port)) throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
    out << "serving session " << o.session << " on http://" << o.host << ':' << o.port << "/api/v1\n" << std::flush;
    service.run();
    return 0;
  }
  throw ValidationError("unknown subcommand " + cmd);
}

int fail(std::ostream& out, int code, const std::string& kind, const std::string& what) {
  out << json{{"error", what}, {"kind", kind}, {"code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Inverse-robust fluence optimization: SDP relaxation fronts, projection and navigation", "irnav"};
  app.add_option("--session", o.session, "Session directory")->capture_default_str();
  app.require_subcommand(1);

  auto* ph = app.add_subcommand("phantom", "Generate a synthetic phantom (or import a problem file) into the session");
  ph->add_option("--grid", o.phantom.grid, "Voxels per side")->capture_default_str();
  ph->add_option("--beamlets", o.phantom.beamlets, "Number of beamlets")->capture_default_str();
  ph->add_option("--angles", o.phantom.angles, "Beam directions (0 = automatic)")->capture_default_str();
  ph->add_option("--seed", o.phantom.seed, "Random seed")->capture_default_str();
  ph->add_option("--uncertainty", o.phantom.uncertainty, "Uncertainty the bounds are fitted to")->capture_default_str();
  ph->add_option("--from", o.problem_file, "Import this problem JSON instead of generating");

  auto* cl = app.add_subcommand("cluster", "Cluster voxels of constrained structures");
  cl->add_option("--k", o.k, "Clusters per structure");
  cl->add_option("--fraction", o.fraction, "Clusters as a fraction of each structure's voxels");
  cl->add_option("--seed", o.cluster_seed, "k-means seed")->capture_default_str();
  cl->add_flag("--clear", o.clear_clusters, "Remove the cluster map");

  auto* fs = app.add_subcommand("front-sdp", "Sandwich the front of the SDP relaxation");
  fs->add_option("--delta", o.delta, "Normalized quality gap")->capture_default_str();
  fs->add_option("--scale", o.scale, "Relative uncertainty of the dose matrix");

  auto* fi = app.add_subcommand("front-iter", "Baseline: sandwich level-r LPs for r = 0, step, ..., 1");
  fi->add_option("--step", o.step, "Level increment")->capture_default_str();
  fi->add_option("--delta", o.delta, "Normalized quality gap per level")->capture_default_str();

  auto* fw = app.add_subcommand("front-worstcase", "Sandwich the front at r = 1");
  fw->add_option("--delta", o.delta, "Normalized quality gap")->capture_default_str();

  for (auto* s : {app.add_subcommand("project", "Project an SDP point onto the QCQP feasible set"),
                  app.add_subcommand("verify", "Check efficiency of a (projected) point by LP re-solves"),
                  app.add_subcommand("dvh", "Dose-volume histograms of a (projected) point")}) {
    s->add_option("--point-id", o.point_id, "Point id in the front")->required();
    s->add_option("--front", o.front, "sdp, iter or worstcase")->capture_default_str();
    if (s->get_name() == "dvh") {
      s->add_flag("--clustered", o.clustered, "Histogram over super-voxels");
      s->add_flag("--csv", o.csv, "Print CSV instead of a summary");
    }
  }

  auto* sv = app.add_subcommand("serve", "Serve the navigation API");
  sv->add_option("--port", o.port, "TCP port")->capture_default_str();
  sv->add_option("--host", o.host, "Bind address")->capture_default_str();

  app.add_subcommand("report", "Solve counts, gaps and theorem checks");

  auto* so = app.add_subcommand("solve", "Solve one LP or SDP in the irnav text format (external backend protocol)");
  so->add_option("--kind", o.kind, "lp or sdp")->required()->check(CLI::IsMember({"lp", "sdp"}));
  so->add_option("--input", o.input, "Problem file")->required();
  so->add_option("--output", o.output, "Report JSON (stdout when empty)");
  so->add_option("--tol", o.tol, "Solver tolerance")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(out, 2, "usage", e.what());
  }

  try {
    return dispatch(app, o, out);
  } catch (const ConflictError& e) {
    return fail(out, 3, "conflict", e.what());
  } catch (const ParseError& e) {
    return fail(out, 2, "parse", e.what());
  } catch (const ValidationError& e) {
    return fail(out, 2, "validation", e.what());
  } catch (const SolverError& e) {
    return fail(out, 4, "solver", e.what());
  } catch (const std::exception& e) {
    return fail(out, 1, "internal", e.what());
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace irnav
