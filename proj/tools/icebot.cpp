// icebot command line: serve, replay, benchmark, report, export-roadmap.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "icebot/benchmark.hpp"
#include "icebot/error.hpp"
#include "icebot/metrics.hpp"
#include "icebot/server.hpp"
#include "icebot/session.hpp"
#include "json.hpp"

using namespace icebot;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (c.seed) cfg.actuation.rng_seed = *c.seed;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

void add_common(CLI::App* app, Common& c, const char* out_help) {
  app->add_option("--config", c.config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override the actuation/sensor rng seed");
  app->add_option("--out", c.out, out_help);
}

int serve(const Common& c, std::optional<unsigned short> port, const std::string& address, const std::string& roadmap_path,
          const std::string& session_log, const std::string& trajectory_log) {
  const RunConfig cfg = load_config(c);
  ServerOptions opts;
  opts.address = address;
  opts.port = port.value_or(static_cast<unsigned short>(cfg.port));
  opts.session_log_path = session_log;
  opts.trajectory_log_path = trajectory_log;
  opts.handle_signals = true;
  Roadmap map = roadmap_path.empty() ? Roadmap(cfg.epsilon) : Roadmap::load(roadmap_path);
  Server server(cfg, std::move(map), opts);
  server.start();
  std::printf("listening on %s:%u (ws /ops, GET /views /roadmap/stats /health)\n", address.c_str(), server.port());
  std::fflush(stdout);
  server.wait();
  server.stop();
  const Roadmap final_map = server.roadmap();
  const auto s = final_map.stats();
  std::printf("stopped: %zu vertices, %zu edges, %zu views\n", s.vertex_count, s.edge_count, s.view_count);
  if (!c.out.empty()) {
    final_map.save(c.out);
    std::printf("roadmap written to %s\n", c.out.c_str());
  }
  return 0;
}

int run_replay(const Common& c, const std::string& log_path) {
  const RunConfig cfg = load_config(c);
  const ReplayResult r = replay(slurp(log_path), cfg);
  const auto s = r.roadmap.stats();
  std::printf("replayed %s: %zu vertices, %zu edges, %zu views, %zu recoveries\n", log_path.c_str(), s.vertex_count,
              s.edge_count, s.view_count, r.outcomes.size());
  if (r.report) std::printf("\n%s", r.report->to_text().c_str());
  if (!c.out.empty()) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    r.roadmap.save((dir / "roadmap.json").string());
    write_file(dir / "trajectory.jsonl", r.trajectory_log);
    if (r.report) {
      write_file(dir / "report.json", r.report->to_json());
      write_file(dir / "report.txt", r.report->to_text());
    }
    std::printf("outputs written to %s\n", dir.string().c_str());
  }
  return 0;
}

int run_benchmark(const Common& c, std::size_t states, std::size_t queries, double epsilon) {
  const BenchmarkResult r = benchmark(states, c.seed.value_or(1), queries, epsilon);
  ordered_json j;
  j["n_states"] = r.n_states;
  j["vertex_count"] = r.stats.vertex_count;
  j["edge_count"] = r.stats.edge_count;
  j["view_count"] = r.stats.view_count;
  j["queries"] = r.queries;
  j["build_time_s"] = r.build_time;
  j["mean_query_time_s"] = r.mean_query_time;
  j["p99_query_time_s"] = r.p99_query_time;
  j["max_query_time_s"] = r.max_query_time;
  std::printf("states %zu: %zu vertices / %zu edges, build %.3f s, query mean %.3f ms, p99 %.3f ms, max %.3f ms\n",
              r.n_states, r.stats.vertex_count, r.stats.edge_count, r.build_time, r.mean_query_time * 1e3,
              r.p99_query_time * 1e3, r.max_query_time * 1e3);
  if (!c.out.empty()) write_file(c.out, j.dump(2) + "\n");
  return 0;
}

int run_report(const Common& c, const std::string& src_path, const std::string& dst_path,
               const std::string& samples_path) {
  ordered_json doc;
  if (!src_path.empty() || !dst_path.empty()) {
    if (src_path.empty() || dst_path.empty()) throw Error(ErrorCode::InvalidArgument, "--src and --dst go together");
    const LabeledPointSet src = LabeledPointSet::load(src_path), dst = LabeledPointSet::load(dst_path);
    const Registration reg = rigid_register(src, dst);
    std::printf("registration %s -> %s over %zu shared points\n", src.frame_name.c_str(), dst.frame_name.c_str(),
                reg.matched.size());
    std::printf("  FRE (RMS) %.4f mm\n", reg.fre);
    ordered_json residuals = ordered_json::object();
    for (const auto& name : reg.matched) {
      const double r = tip_position_error(reg.transform.apply(src.points.at(name)), dst.points.at(name));
      residuals[name] = r;
      std::printf("  %-20s residual %.4f mm\n", name.c_str(), r);
    }
    const auto& R = reg.transform.rotation;
    const auto& t = reg.transform.translation;
    doc["registration"] = {
        {"source_frame", src.frame_name},
        {"target_frame", dst.frame_name},
        {"matched", reg.matched},
        {"fre_mm", reg.fre},
        {"rotation", {{R(0, 0), R(0, 1), R(0, 2)}, {R(1, 0), R(1, 1), R(1, 2)}, {R(2, 0), R(2, 1), R(2, 2)}}},
        {"translation", {t.x(), t.y(), t.z()}},
        {"residuals_mm", residuals},
    };
  }
  if (!samples_path.empty()) {
    const RecoveryReport report = build_report(load_error_samples(samples_path));
    std::printf("\n%s", report.to_text().c_str());
    doc["report"] = ordered_json::parse(report.to_json());
  }
  if (doc.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to report: give --src/--dst and/or --samples");
  if (!c.out.empty()) write_file(c.out, doc.dump(2) + "\n");
  return 0;
}

int export_roadmap(const Common& c, const std::string& input) {
  if (c.out.empty()) throw Error(ErrorCode::InvalidArgument, "export-roadmap needs --out");
  const std::string text = slurp(input);
  // a session log starts with its header record; anything else must be a roadmap
  const bool is_log = text.rfind("{\"type\":\"header\"", 0) == 0;
  const Roadmap map = is_log ? replay(text, load_config(c)).roadmap : Roadmap::from_json(text);
  map.save(c.out);
  const auto s = map.stats();
  std::printf("%zu vertices, %zu edges, %zu views -> %s\n", s.vertex_count, s.edge_count, s.view_count, c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"icebot: roadmap-based catheter view recovery"};
  app.require_subcommand(1);

  Common serve_opts, replay_opts, bench_opts, report_opts, export_opts;

  auto* serve_cmd = app.add_subcommand("serve", "run the control loop with the WebSocket/HTTP gateway");
  add_common(serve_cmd, serve_opts, "write the final roadmap here on shutdown");
  std::optional<unsigned short> port;
  std::string address = "127.0.0.1", roadmap_in, session_log, trajectory_log;
  serve_cmd->add_option("--port", port, "listening port, default from the config (0 picks one)");
  serve_cmd->add_option("--address", address, "listening address");
  serve_cmd->add_option("--roadmap", roadmap_in, "start from a saved roadmap")->check(CLI::ExistingFile);
  serve_cmd->add_option("--session-log", session_log, "record the session for replay");
  serve_cmd->add_option("--trajectory-log", trajectory_log, "per-tick EM trajectory log");

  auto* replay_cmd = app.add_subcommand("replay", "re-execute a recorded session log");
  add_common(replay_cmd, replay_opts, "directory for roadmap.json, trajectory.jsonl, report.{json,txt}");
  std::string log_path;
  replay_cmd->add_option("session", log_path, "session log (JSONL)")->required()->check(CLI::ExistingFile);

  auto* bench_cmd = app.add_subcommand("benchmark", "time recovery queries on a random-walk roadmap");
  add_common(bench_cmd, bench_opts, "write the timings as JSON");
  std::size_t states = 8000, queries = 100;
  double epsilon = 1.0;
  bench_cmd->add_option("--states", states, "number of observations")->check(CLI::Range(2, 10000000));
  bench_cmd->add_option("--queries", queries, "number of timed queries")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--epsilon", epsilon, "roadmap density")->check(CLI::PositiveNumber);

  auto* report_cmd = app.add_subcommand("report", "register point sets and tabulate recovery errors");
  add_common(report_cmd, report_opts, "write the results as JSON");
  std::string src, dst, samples;
  report_cmd->add_option("--src", src, "moving point set (JSON)")->check(CLI::ExistingFile);
  report_cmd->add_option("--dst", dst, "fixed point set (JSON)")->check(CLI::ExistingFile);
  report_cmd->add_option("--samples", samples, "error samples (JSON)")->check(CLI::ExistingFile);

  auto* export_cmd = app.add_subcommand("export-roadmap", "write the roadmap of a session log or roadmap file");
  add_common(export_cmd, export_opts, "roadmap file to write");
  std::string export_in;
  export_cmd->add_option("input", export_in, "session log or roadmap file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(serve_opts, port, address, roadmap_in, session_log, trajectory_log);
    if (*replay_cmd) return run_replay(replay_opts, log_path);
    if (*bench_cmd) return run_benchmark(bench_opts, states, queries, epsilon);
    if (*report_cmd) return run_report(report_opts, src, dst, samples);
    if (*export_cmd) return export_roadmap(export_opts, export_in);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
