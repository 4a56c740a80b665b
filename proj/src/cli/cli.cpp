#include "lrtng/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "lrtng/benchmarks.hpp"
#include "lrtng/errors.hpp"
#include "lrtng/format.hpp"
#include "lrtng/io.hpp"
#include "lrtng/reachtube.hpp"

namespace lrtng::cli {
namespace {

namespace fs = std::filesystem;

// Installs a logger writing to `err` for the duration of one invocation.
class LogScope {
 public:
  explicit LogScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("lrtng", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LRTNG_LOG")) {
      const auto level = spdlog::level::from_str(env);
      // from_str maps unknown names to "off"; only accept real ones.
      if (level != spdlog::level::off || std::string_view(env) == "off") logger->set_level(level);
    }
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

// A parse error with the file it came from, "file:line:col: message".
class FileParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
auto from_file(const std::string& path, F&& load) {
  try {
    return load(path);
  } catch (const ParseError& e) {
    throw FileParseError(path + ":" + e.what());
  }
}

Vector parse_list(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto x = parse_double(cell);
    if (!x) throw UsageError(std::string("bad number '") + cell + "' in " + what);
    v.push_back(*x);
  }
  if (v.empty()) throw UsageError(std::string(what) + " is empty");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_order(int order) {
  if (order != 1 && order != 2 && order != 4) {
    throw UsageError("order " + std::to_string(order) + " is not supported; allowed orders are 1, 2, 4");
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

TubeFormat format_for(const std::string& flag, const std::string& path) {
  if (flag == "json") return TubeFormat::Json;
  if (flag == "csv") return TubeFormat::Csv;
  if (!flag.empty()) throw UsageError("format must be csv or json");
  return fs::path(path).extension() == ".json" ? TubeFormat::Json : TubeFormat::Csv;
}

std::string compact(double x) {
  std::ostringstream s;
  s << std::setprecision(3) << x;
  return s.str();
}

struct Streamed {
  RunSummary summary;
  std::size_t written = 0;
};

// Runs and streams every `every`-th slice plus the last one into `writer`.
Streamed stream_run(const OdeSystem& sys, RunConfig cfg, TubeWriter* writer, const std::string& model_name) {
  const std::size_t every = cfg.output_every;
  // The writer keeps what is needed; the summary keeps only the ends.
  cfg.output_every = std::numeric_limits<std::size_t>::max();
  Streamed out;
  std::optional<ReachsetStep> pending;
  std::optional<std::size_t> time_index = cfg.time_index ? cfg.time_index : sys.time_index();
  auto emit = [&](const ReachsetStep& s) {
    if (writer) writer->write(to_record(s, time_index));
    ++out.written;
  };
  out.summary = run(sys, cfg, [&](const ReachsetStep& s) {
    if (s.index % every == 0) {
      emit(s);
      pending.reset();
    } else {
      pending = s;
    }
  });
  if (pending) emit(*pending);
  if (writer) {
    RunInfo info;
    info.model = model_name;
    info.order = cfg.order;
    info.dt = cfg.dt;
    info.horizon = cfg.horizon;
    info.time_index = out.summary.time_index;
    info.average_volume = out.summary.average_volume;
    info.average_reachset_volume = out.summary.average_reachset_volume;
    info.steps = out.summary.computed_steps;
    info.completed = out.summary.completed;
    info.failure_time = out.summary.failure_time;
    info.failure = out.summary.failure;
    writer->finish(info);
  }
  return out;
}

std::string summary_line(const RunSummary& s) {
  return "AV=" + format_double(s.average_volume) + " steps=" + std::to_string(s.computed_steps) +
         " completed=" + (s.completed ? "true" : "false");
}

struct RunArgs {
  std::string model, init, center, radius, time_var, out, format;
  double dt = 0.0, horizon = 0.0, blowup = 0.0;
  int order = 0;
  std::size_t every = 1;
  bool no_intersect = false;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* horizon_opt = nullptr;
  CLI::Option* order_opt = nullptr;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const OdeSystem sys = from_file(a.model, [](const std::string& p) { return load_model(p); });
  InitSpec spec;
  if (!a.init.empty()) spec = from_file(a.init, [](const std::string& p) { return load_init(p); });
  if (!a.center.empty()) spec.center = parse_list(a.center, "--center");
  if (!a.radius.empty()) spec.radius = parse_list(a.radius, "--radius");
  if (a.dt_opt->count()) spec.dt = a.dt;
  if (a.horizon_opt->count()) spec.horizon = a.horizon;
  if (a.order_opt->count()) spec.order = a.order;
  if (!spec.center) throw UsageError("no initial center; pass --center or --init");
  if (!spec.radius) throw UsageError("no initial radius; pass --radius or --init");
  if (!spec.horizon) throw UsageError("no horizon; pass --horizon or set T in the init file");

  RunConfig cfg;
  cfg.order = spec.order.value_or(1);
  check_order(cfg.order);
  cfg.dt = spec.dt.value_or(0.01);
  cfg.horizon = *spec.horizon;
  if (spec.center->size() != static_cast<Eigen::Index>(sys.dim())) {
    throw UsageError("center has " + std::to_string(spec.center->size()) + " components, model has " +
                     std::to_string(sys.dim()));
  }
  cfg.initial = make_initial_set(*spec.center, *spec.radius);
  for (std::size_t j : cfg.initial.floored) spdlog::info("radius of x{} raised to {}", j + 1, kRadiusFloor);
  if (!a.time_var.empty()) {
    std::string k = a.time_var;
    if (!k.empty() && (k[0] == 'x' || k[0] == 'X')) k.erase(0, 1);
    const auto v = parse_double(k);
    if (!v || *v < 1 || *v > static_cast<double>(sys.dim()) || *v != std::floor(*v)) {
      throw UsageError("--time-var must name a state 1.." + std::to_string(sys.dim()));
    }
    cfg.time_index = static_cast<std::size_t>(*v) - 1;
  }
  if (a.every == 0) throw UsageError("--every must be positive");
  cfg.output_every = a.every;
  cfg.blowup_threshold = a.blowup;
  cfg.intersect = !a.no_intersect;

  const TubeFormat format = format_for(a.format, a.out);
  std::ofstream file;
  std::ostream* sink = nullptr;
  if (a.out == "-") {
    sink = &out;
  } else if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw UsageError("cannot write " + a.out);
    sink = &file;
  }
  std::unique_ptr<TubeWriter> writer;
  if (sink) writer = make_writer(*sink, format, sys.dim());

  const Streamed r = stream_run(sys, cfg, writer.get(), sys.name());
  // Keep stdout parseable when the tube itself goes there.
  (a.out == "-" ? err : out) << summary_line(r.summary) << '\n';
  if (!r.summary.completed) {
    err << "error: run stopped at t=" << format_double(r.summary.failure_time.value_or(0.0)) << ": "
        << r.summary.failure << '\n';
    return kNumeric;
  }
  return kOk;
}

struct BenchArgs {
  std::vector<std::string> only, weights;
  std::string out, format;
  int order = 0;
  double horizon = 0.0;
  std::size_t jobs = 1, every = 1;
  CLI::Option* order_opt = nullptr;
  CLI::Option* horizon_opt = nullptr;
};

struct BenchRow {
  Benchmark bm;
  RunConfig cfg;
  std::optional<RunSummary> summary;
  std::string error;
  double seconds = 0.0;
};

bool matches(const Benchmark& bm, const std::string& key) {
  return lower(bm.name) == lower(key) || lower(bm.label) == lower(key);
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.order_opt->count()) check_order(a.order);
  if (a.horizon_opt->count() && !(a.horizon > 0.0)) throw UsageError("--horizon must be positive");
  if (a.jobs == 0) throw UsageError("--jobs must be positive");
  if (a.every == 0) throw UsageError("--every must be positive");

  std::vector<Benchmark> all = builtin_benchmarks();
  std::vector<bool> has_weights(all.size(), false);
  for (const std::string& w : a.weights) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw UsageError("--weights expects NAME=FILE, got '" + w + "'");
    const std::string key = w.substr(0, eq), path = w.substr(eq + 1);
    auto it = std::find_if(all.begin(), all.end(), [&](const Benchmark& bm) { return bm.neural && matches(bm, key); });
    if (it == all.end()) throw UsageError("no neural benchmark named '" + key + "'");
    const WeightSet weights = from_file(path, [](const std::string& p) { return load_weights(p); });
    *it = it->name == "cartpole-ltc" ? ltc_cartpole(weights) : neural_ode_cartpole(weights);
    has_weights[static_cast<std::size_t>(it - all.begin())] = true;
  }
  for (const std::string& key : a.only) {
    if (std::none_of(all.begin(), all.end(), [&](const Benchmark& bm) { return matches(bm, key); })) {
      throw UsageError("unknown benchmark '" + key + "'");
    }
  }

  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const Benchmark& bm = all[k];
    const bool picked =
        a.only.empty() || std::any_of(a.only.begin(), a.only.end(), [&](const std::string& s) { return matches(bm, s); });
    if (!picked) continue;
    if (bm.neural && !has_weights[k]) {
      if (!a.only.empty()) err << "note: skipping " << bm.name << " (no weights; pass --weights " << bm.name << "=FILE)\n";
      continue;
    }
    BenchRow row{bm, {}, std::nullopt, "", 0.0};
    row.cfg.dt = bm.defaults.dt;
    row.cfg.horizon = a.horizon_opt->count() ? a.horizon : bm.defaults.horizon;
    row.cfg.order = a.order_opt->count() ? a.order : bm.defaults.order;
    row.cfg.initial = bm.initial;
    row.cfg.output_every = a.every;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    err << "note: nothing to run\n";
    return kOk;
  }
  if (!a.out.empty()) fs::create_directories(a.out);
  const TubeFormat format = format_for(a.format, a.format == "json" ? "x.json" : "x.csv");

  // Models share nothing mutable; each worker fills only its own rows.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      BenchRow& row = rows[k];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        std::ofstream file;
        std::unique_ptr<TubeWriter> writer;
        if (!a.out.empty()) {
          file.open(fs::path(a.out) / (row.bm.name + (format == TubeFormat::Json ? ".json" : ".csv")));
          if (!file) throw UsageError("cannot write into " + a.out);
          writer = make_writer(file, format, row.bm.system.dim());
        }
        row.summary = stream_run(row.bm.system, row.cfg, writer.get(), row.bm.name).summary;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(a.jobs, rows.size()); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::vector<std::string>> table{{"model", "n", "dt", "T", "r", "order", "AV", "ref AV", "time[s]", "status"}};
  std::size_t failed = 0;
  for (const BenchRow& row : rows) {
    const bool ok = row.summary && row.summary->completed;
    if (!ok) ++failed;
    std::string status = "completed";
    if (!row.summary) {
      status = "Fail (" + row.error + ")";
    } else if (!ok) {
      status = "Fail at t=" + compact(row.summary->failure_time.value_or(0.0));
    }
    std::ostringstream secs;
    secs << std::fixed << std::setprecision(2) << row.seconds;
    table.push_back({row.bm.label + " " + row.bm.name, std::to_string(row.bm.system.dim()), compact(row.cfg.dt),
                     compact(row.cfg.horizon), compact(row.bm.initial.radii.maxCoeff()), std::to_string(row.cfg.order),
                     row.summary ? compact(row.summary->average_volume) : "-",
                     row.bm.reference_av ? compact(*row.bm.reference_av) : "-", secs.str(), status});
  }
  std::vector<std::size_t> width(table[0].size(), 0);
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << r[c] << (c + 1 < r.size() ? "  " : "\n");
    }
  }
  return failed == rows.size() ? kNumeric : kOk;
}

int cmd_list(const std::string& format, std::ostream& out) {
  const auto all = builtin_benchmarks();
  if (format == "json") {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const Benchmark& bm : all) {
      nlohmann::ordered_json e;
      e["name"] = bm.name;
      e["label"] = bm.label;
      e["dim"] = bm.system.dim();
      e["dt"] = bm.defaults.dt;
      e["horizon"] = bm.defaults.horizon;
      e["order"] = bm.defaults.order;
      e["center"] = std::vector<double>(bm.initial.center.begin(), bm.initial.center.end());
      e["radius"] = std::vector<double>(bm.initial.radii.begin(), bm.initial.radii.end());
      e["time_var"] = bm.system.time_index() ? nlohmann::ordered_json(*bm.system.time_index() + 1)
                                             : nlohmann::ordered_json(nullptr);
      e["needs_weights"] = bm.neural;
      e["reference_av"] = bm.reference_av ? nlohmann::ordered_json(*bm.reference_av) : nlohmann::ordered_json(nullptr);
      list.push_back(e);
    }
    out << list.dump(2) << '\n';
    return kOk;
  }
  if (!format.empty() && format != "text") throw UsageError("format must be text or json");
  for (const Benchmark& bm : all) {
    out << std::left << std::setw(26) << (bm.name + " (" + std::to_string(bm.system.dim()) + ")") << std::setw(5)
        << bm.label << "dt=" << format_double(bm.defaults.dt) << " T=" << format_double(bm.defaults.horizon)
        << " r=" << format_double(bm.initial.radii.maxCoeff()) << " order=" << bm.defaults.order
        << (bm.neural ? " (needs weights)" : "") << '\n';
  }
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LogScope log(err);
  CLI::App app{"Reachtubes of nonlinear ODEs with optimal ellipsoidal metrics", "lrtng"};
  app.require_subcommand(1);

  RunArgs ra;
  CLI::App* run_cmd = app.add_subcommand("run", "Compute a reachtube for a model file");
  run_cmd->add_option("--model", ra.model, "Model file")->required();
  run_cmd->add_option("--init", ra.init, "Initial-set file (center, radius, dt, T, order)");
  run_cmd->add_option("--center", ra.center, "Initial center, comma separated");
  run_cmd->add_option("--radius", ra.radius, "Initial radius, one value or one per state");
  ra.dt_opt = run_cmd->add_option("--dt", ra.dt, "Time step (default 0.01)");
  ra.horizon_opt = run_cmd->add_option("--horizon,-T", ra.horizon, "Time horizon");
  ra.order_opt = run_cmd->add_option("--order", ra.order, "Runge-Kutta order: 1, 2 or 4");
  run_cmd->add_option("--time-var", ra.time_var, "State that is the time variable (K or xK, 1-based)");
  run_cmd->add_option("--out", ra.out, "Tube output file, '-' for standard output");
  run_cmd->add_option("--format", ra.format, "csv or json (default from the --out extension)");
  run_cmd->add_option("--every", ra.every, "Write every N-th slice (first and last always)");
  run_cmd->add_option("--blowup-threshold", ra.blowup, "Box volume that ends the run (default 1e6 x initial)");
  run_cmd->add_flag("--no-intersect", ra.no_intersect, "Use the ellipsoid hull alone");

  BenchArgs ba;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run the built-in benchmark suite");
  bench_cmd->add_option("--only", ba.only, "Benchmarks by name or label");
  ba.order_opt = bench_cmd->add_option("--order", ba.order, "Runge-Kutta order for every model");
  ba.horizon_opt = bench_cmd->add_option("--horizon,-T", ba.horizon, "Override every model's horizon");
  bench_cmd->add_option("--out", ba.out, "Directory for per-model tubes");
  bench_cmd->add_option("--format", ba.format, "Tube format in --out: csv or json");
  bench_cmd->add_option("--every", ba.every, "Write every N-th slice");
  bench_cmd->add_option("--weights", ba.weights, "Controller weights as NAME=FILE");
  bench_cmd->add_option("--jobs,-j", ba.jobs, "Models run concurrently");

  std::string list_format;
  CLI::App* list_cmd = app.add_subcommand("list-models", "List the built-in benchmarks");
  list_cmd->add_option("--format", list_format, "text or json");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(ra, out, err);
    if (*bench_cmd) return cmd_bench(ba, out, err);
    return cmd_list(list_format, out);
  } catch (const FileParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace lrtng::cli
