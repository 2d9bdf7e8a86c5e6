// lazykdp: build and analyze edge bundles, plan, and run benchmarks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <lazykdp/lazykdp.hpp>

namespace fs = std::filesystem;
using namespace lazykdp;

namespace
{
struct Options
{
  std::optional<uint64_t> seed;

  std::string config;
  std::string bundle;
  std::string out;
  std::string annotated_out;
  std::optional<uint64_t> perturbations;

  std::string start;
  std::string goal;
  std::optional<double> budget;
  std::optional<double> goal_radius;
  std::optional<uint64_t> max_iterations;
  std::string planner = "lazyboe";

  std::string out_dir;
  std::string in_dir;
  std::optional<uint64_t> n_problems;
  std::vector<std::string> planners;
  bool parallel = false;
};

RunConfig LoadConfig(const Options& o)
{
  RunConfig cfg = o.config.empty() ? DefaultRunConfig() : LoadRunConfig(o.config);
  if (o.seed)
  {
    cfg.OverrideSeed(*o.seed);
  }
  return cfg;
}

BundleExpectation ExpectationFor(const Scene& scene)
{
  return BundleExpectation{scene.RobotDigest(), scene.WorldDigest()};
}

JointVector ParseJointCsv(const std::string& text, const int dof, const char* what)
{
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ','))
  {
    try
    {
      size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size())
      {
        throw std::invalid_argument(cell);
      }
    }
    catch (const std::exception&)
    {
      throw std::invalid_argument(std::string(what) + ": not a number: '" + cell + "'");
    }
  }
  if (static_cast<int>(values.size()) != dof)
  {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(dof) +
                                " comma-separated angles, got " +
                                std::to_string(values.size()));
  }
  return Eigen::Map<const JointVector>(values.data(), dof);
}

void PrintBundleInfo(const EdgeBundle& b, std::ostream& out)
{
  const BundleMetadata& m = b.metadata();
  const GenerationConfig& g = m.generation;
  out << "schema_version  " << m.schema_version << '\n'
      << "edges           " << b.size() << '\n'
      << "dof             " << (b.empty() ? 0 : b.edge(0).q0.size()) << '\n'
      << "theta           " << b.theta() << '\n'
      << "robot_digest    " << std::hex << m.robot_digest << '\n'
      << "world_digest    " << m.world_digest << std::dec << '\n'
      << "steps           " << g.steps_min << ".." << g.steps_max << " (segment "
      << g.segment_len << ", dt " << g.dt << ")\n"
      << "max_accel_jump  " << g.max_accel_jump << '\n'
      << "rng_seed        " << g.rng_seed << '\n';
  if (!m.annotation.annotated)
  {
    out << "annotated       no\n";
    return;
  }
  double select = 0.0;
  for (const Edge& e : b.edges())
  {
    select += PSelect(e);
  }
  out << "annotated       yes (p " << m.annotation.perturbations << ", theta "
      << m.annotation.theta << ", seed " << m.annotation.rng_seed << ")\n"
      << "mean p_select   " << (b.empty() ? 0.0 : select / double(b.size())) << '\n';
}

int BundleBuild(const Options& o)
{
  const RunConfig cfg = LoadConfig(o);
  BuildStats stats;
  const EdgeBundle bundle = BuildBundle(cfg.scene, cfg.generation, &stats);
  SaveBundle(bundle, o.out);
  std::cout << "wrote " << bundle.size() << " edges to " << o.out << " after "
            << stats.attempts << " attempts\n";
  for (const auto& [reason, count] : stats.rejections)
  {
    std::cout << "  rejected " << ToString(reason) << ": " << count << '\n';
  }
  return 0;
}

int BundleInfo(const Options& o)
{
  PrintBundleInfo(LoadBundle(o.bundle), std::cout);
  return 0;
}

int BundleAnalyze(const Options& o)
{
  RunConfig cfg = LoadConfig(o);
  if (o.perturbations)
  {
    cfg.perturbation.perturbations = *o.perturbations;
  }
  const EdgeBundle raw = LoadBundle(o.bundle, ExpectationFor(cfg.scene));
  std::vector<PerturbationReport> reports;
  const EdgeBundle annotated = AnnotateBundle(raw, cfg.scene, cfg.perturbation, &reports);
  const std::string target = o.annotated_out.empty() ? o.bundle : o.annotated_out;
  SaveBundle(annotated, target);

  std::ofstream csv(o.out);
  if (!csv)
  {
    throw std::runtime_error("cannot open " + o.out + " for writing");
  }
  csv << "edge_id,p_lazy_prop,p_collision,max_end_error\n"
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (size_t i = 0; i < annotated.size(); ++i)
  {
    const Edge& e = annotated.edge(i);
    csv << e.id << ',' << e.p_lazy_prop << ',' << e.p_collision << ','
        << reports[i].max_end_error << '\n';
  }
  std::cout << "annotated " << annotated.size() << " edges with p = "
            << cfg.perturbation.perturbations << "; bundle written to " << target
            << ", summary to " << o.out << '\n';
  return 0;
}

int RunPlan(const Options& o)
{
  RunConfig cfg = LoadConfig(o);
  const EdgeBundle bundle = LoadBundle(o.bundle, ExpectationFor(cfg.scene));
  if (o.planner == "lazyboe" && !bundle.metadata().annotation.annotated)
  {
    std::cerr << "warning: bundle is not annotated; every edge will be simulated\n";
  }
  const int dof = cfg.scene.model.Dof();
  Query q;
  q.start = ParseJointCsv(o.start, dof, "--start");
  q.goal = GoalRegion{ParseJointCsv(o.goal, dof, "--goal"),
                      o.goal_radius.value_or(cfg.planner.goal_radius)};
  q.time_budget = o.budget.value_or(cfg.planner.time_budget);
  q.rng_seed = cfg.planner.rng_seed;
  q.max_iterations = o.max_iterations.value_or(cfg.planner.max_iterations);

  const NamedPlanner planner = MakePlanner(o.planner, bundle, cfg.scene, cfg.planner);
  const PlannerOutcome out = planner.run(q);
  std::cout << "planner " << planner.name << ": " << out.solutions.size()
            << " solution(s), " << out.simulated_edges << " simulated edges\n";
  if (out.solutions.empty())
  {
    std::cout << "no solution within the budget\n";
    return 0;
  }
  const Trajectory& best = out.solutions.back();
  const double jump = planner.name == "lazyboe" || planner.name == "boe"
                          ? bundle.metadata().generation.max_accel_jump
                          : KinodynamicConfig::From(bundle.metadata().generation).max_accel_jump;
  const TrajectoryCheck check = ValidateTrajectory(cfg.scene, jump, best, q);
  std::cout << "first solution after " << out.solution_times.front() << " s; best cost "
            << best.cost << " rad over " << best.waypoints.size() << " waypoints\n"
            << "revalidation: " << (check.ok ? "pass" : "FAIL: " + check.reason) << '\n';
  if (!o.out.empty())
  {
    WriteTrajectoryCsv(best, fs::path(o.out));
    std::cout << "trajectory written to " << o.out << '\n';
  }
  return check.ok ? 0 : 1;
}

int BenchRun(const Options& o)
{
  RunConfig cfg = LoadConfig(o);
  BenchmarkSettings& b = cfg.benchmark;
  if (o.n_problems) b.n_problems = *o.n_problems;
  if (o.budget) b.time_budget = *o.budget;
  if (o.max_iterations) b.max_iterations = *o.max_iterations;
  if (!o.planners.empty()) b.planners = o.planners;
  b.parallel = b.parallel || o.parallel;

  EdgeBundle bundle;
  if (!o.bundle.empty())
  {
    bundle = LoadBundle(o.bundle, ExpectationFor(cfg.scene));
  }
  else
  {
    std::cout << "building " << cfg.generation.n_edges << " edges and annotating with p = "
              << cfg.perturbation.perturbations << " (not timed)\n";
    bundle = AnnotateBundle(BuildBundle(cfg.scene, cfg.generation), cfg.scene,
                            cfg.perturbation);
  }
  std::vector<NamedPlanner> planners;
  for (const auto& name : b.planners)
  {
    planners.push_back(MakePlanner(name, bundle, cfg.scene, cfg.planner));
  }
  Rng rng(Substream(b.rng_seed, StreamDomain::kProblems, 0));
  const auto problems = GenerateProblems(cfg.scene, b.n_problems, cfg.planner.goal_radius, rng);
  std::cout << "running " << planners.size() << " planner(s) on " << problems.size()
            << " problems, " << b.time_budget << " s each"
            << (b.parallel ? " (parallel: timings unreliable)" : "") << '\n';
  const auto records =
      RunBenchmark(planners, problems, b.time_budget, b.parallel, b.max_iterations);
  const std::string reference = planners.empty() ? "" : planners.front().name;
  EmitReport(records, CompareAgainst(records, reference), o.out_dir);
  std::ofstream(fs::path(o.out_dir) / "config.json") << RunConfigToJson(cfg).dump(2) << '\n';
  std::cout << "report written to " << o.out_dir << '\n';
  return 0;
}

int BenchReport(const Options& o)
{
  const fs::path dir = o.in_dir;
  std::ifstream in(dir / "records.csv");
  if (!in)
  {
    throw std::runtime_error("cannot open " + (dir / "records.csv").string());
  }
  const auto records = ReadRecordsCsv(in);
  in.close();
  if (records.empty())
  {
    throw std::runtime_error("no records in " + (dir / "records.csv").string());
  }
  const auto order = PlannerOrder(records);
  const auto rows = CompareAgainst(records, order.front());
  EmitReport(records, rows, dir);

  std::printf("%-10s %6s %12s %12s %12s %8s\n", "planner", "runs", "median_time",
              "median_cost", "mean_sols", "success");
  for (const auto& p : order)
  {
    const auto times = MetricSample(records, p, Metric::kTime);
    const auto costs = MetricSample(records, p, Metric::kCost);
    const auto sols = MetricSample(records, p, Metric::kSolutions);
    const auto succ = MetricSample(records, p, Metric::kSuccess);
    std::printf("%-10s %6zu %12s %12s %12.3f %7.0f%%\n", p.c_str(), succ.size(),
                times.empty() ? "-" : std::to_string(Median(times)).c_str(),
                costs.empty() ? "-" : std::to_string(Median(costs)).c_str(), Mean(sols),
                100.0 * Mean(succ));
  }
  for (const auto& r : rows)
  {
    std::printf("%-25s %s vs %-8s U=%-8g p=%-10.4g %s\n", MetricName(r.metric),
                r.planner_a.c_str(), r.planner_b.c_str(), r.result.u_statistic,
                r.result.p_value, r.result.marker.c_str());
  }
  return 0;
}
}  // namespace

int main(int argc, char** argv)
{
  Options o;
  CLI::App app{"Lazy kinodynamic planning over precomputed edge bundles"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Override every seed in the config");

  auto* bundle = app.add_subcommand("bundle", "Build, inspect or analyze edge bundles");
  bundle->require_subcommand(1);
  auto* build = bundle->add_subcommand("build", "Generate a bundle of validated rollouts");
  build->add_option("--config", o.config, "Run config (JSON)")->check(CLI::ExistingFile);
  build->add_option("--out", o.out, "Bundle file to write")->required();

  auto* info = bundle->add_subcommand("info", "Print bundle metadata");
  info->add_option("file", o.bundle, "Bundle file")->required();

  auto* analyze =
      bundle->add_subcommand("analyze", "Estimate per-edge lazy and collision probabilities");
  analyze->add_option("--bundle", o.bundle, "Bundle file (annotated in place)")->required();
  analyze->add_option("--config", o.config, "Run config (JSON)")->check(CLI::ExistingFile);
  analyze->add_option("--out", o.out, "CSV summary to write")->required();
  analyze->add_option("--p", o.perturbations, "Perturbations per edge");
  analyze->add_option("--annotated-out", o.annotated_out,
                      "Write the annotated bundle here instead of in place");

  auto* plan = app.add_subcommand("plan", "Solve one query");
  plan->add_option("--bundle", o.bundle, "Annotated bundle file")->required();
  plan->add_option("--config", o.config, "Run config (JSON)")->check(CLI::ExistingFile);
  plan->add_option("--start", o.start, "Start angles, comma separated")->required();
  plan->add_option("--goal", o.goal, "Goal centre angles, comma separated")->required();
  plan->add_option("--goal-radius", o.goal_radius, "Goal region radius (rad)");
  plan->add_option("--budget", o.budget, "Time budget (s)");
  plan->add_option("--max-iterations", o.max_iterations, "Iteration cap (0 = none)");
  plan->add_option("--planner", o.planner, "lazyboe|boe|rrt|sst0.5|sst1|sst2");
  plan->add_option("--out", o.out, "Trajectory CSV for the best solution");

  auto* bench = app.add_subcommand("bench", "Benchmark sweeps and reports");
  bench->require_subcommand(1);
  auto* run = bench->add_subcommand("run", "Run every planner on generated problems");
  run->add_option("--config", o.config, "Run config (JSON)")->check(CLI::ExistingFile);
  run->add_option("--out-dir", o.out_dir, "Report directory")->required();
  run->add_option("--bundle", o.bundle, "Reuse an annotated bundle instead of building one");
  run->add_option("--problems", o.n_problems, "Number of problems");
  run->add_option("--budget", o.budget, "Time budget per run (s)");
  run->add_option("--max-iterations", o.max_iterations, "Iteration cap per run (0 = none)");
  run->add_option("--planners", o.planners, "Planner names")->delimiter(',');
  run->add_flag("--parallel", o.parallel, "Run cells concurrently (timings unreliable)");

  auto* report = bench->add_subcommand("report", "Recompute summaries from records.csv");
  report->add_option("--in", o.in_dir, "Report directory")->required()->check(
      CLI::ExistingDirectory);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try
  {
    if (*build) return BundleBuild(o);
    if (*info) return BundleInfo(o);
    if (*analyze) return BundleAnalyze(o);
    if (*plan) return RunPlan(o);
    if (*run) return BenchRun(o);
    if (*report) return BenchReport(o);
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
