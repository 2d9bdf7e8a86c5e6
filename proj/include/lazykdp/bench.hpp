#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "config.hpp"
#include "stats.hpp"

namespace lazykdp
{
struct BenchmarkRecord
{
  std::string planner;
  uint64_t problem_id = 0;
  std::optional<double> time_to_initial_solution;
  std::optional<double> final_cost;
  bool success = false;
  uint64_t n_solutions = 0;
  uint64_t seed = 0;
  /// Edges simulated during the run; informational.
  uint64_t simulated_edges = 0;

  bool Consistent() const
  {
    return success == (n_solutions >= 1) &&
           success == time_to_initial_solution.has_value() &&
           success == final_cost.has_value();
  }
};

class ProblemGenerationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// n random start/goal pairs; both endpoints collision-free and within limits,
/// and the start strictly outside the goal region.
inline std::vector<Query> GenerateProblems(const Scene& scene, const size_t n,
                                           const double goal_radius, Rng& rng,
                                           const uint64_t attempts_per_problem = 1000)
{
  if (n < 1)
  {
    throw std::invalid_argument("GenerateProblems: n must be >= 1");
  }
  const int m = scene.model.Dof();
  const auto sample = [&](JointVector& q) -> bool {
    for (int i = 0; i < m; ++i)
    {
      q[i] = rng.Uniform(scene.limits.q_min[i], scene.limits.q_max[i]);
    }
    return Within(q, scene.limits.q_min, scene.limits.q_max) &&
           !StateInCollision(scene.model, scene.world, q);
  };
  std::vector<Query> problems;
  const uint64_t budget = attempts_per_problem * n;
  uint64_t attempts = 0;
  JointVector start(m), goal(m);
  while (problems.size() < n)
  {
    if (attempts++ >= budget)
    {
      throw ProblemGenerationError("GenerateProblems: attempt budget exhausted after " +
                                   std::to_string(problems.size()) + " problems");
    }
    if (!sample(start) || !sample(goal) || (goal - start).norm() <= goal_radius)
    {
      continue;
    }
    Query q;
    q.start = start;
    q.goal = GoalRegion{goal, goal_radius};
    q.rng_seed = problems.size();
    problems.push_back(std::move(q));
  }
  return problems;
}

/// Uniform view of any planner's output.
struct PlannerOutcome
{
  std::vector<Trajectory> solutions;
  std::vector<double> solution_times;
  uint64_t simulated_edges = 0;
};

struct NamedPlanner
{
  std::string name;
  std::function<PlannerOutcome(const Query&)> run;
};

inline const std::vector<std::string>& KnownPlanners()
{
  static const std::vector<std::string> names = {"lazyboe", "boe",  "rrt",
                                                 "sst0.5",  "sst1", "sst2"};
  return names;
}

/// Binds a planner name to the shared fixtures. The bundle must outlive the
/// returned callable.
inline NamedPlanner MakePlanner(const std::string& name, const EdgeBundle& bundle,
                                const Scene& scene, const PlannerSettings& settings)
{
  const KinodynamicConfig kino = KinodynamicConfig::From(bundle.metadata().generation);
  const double sst_radius =
      settings.sst_selection_radius > 0.0 ? settings.sst_selection_radius : bundle.theta();
  const auto from_plan = [](PlanResult r) {
    return PlannerOutcome{std::move(r.solutions), std::move(r.solution_times),
                          r.stats.simulated_edges};
  };
  const auto from_baseline = [](BaselineResult r) {
    return PlannerOutcome{std::move(r.solutions), std::move(r.solution_times),
                          r.stats.simulated_edges};
  };
  if (name == "lazyboe")
  {
    PlannerConfig config;
    config.greedy_probability = settings.greedy_probability;
    return {name, [&bundle, &scene, config, from_plan](const Query& q) {
              return from_plan(Plan(bundle, scene, q, config));
            }};
  }
  if (name == "boe")
  {
    return {name, [&bundle, &scene, from_plan](const Query& q) {
              return from_plan(PlanBoe(bundle, scene, q));
            }};
  }
  if (name == "rrt")
  {
    return {name, [&scene, kino, from_baseline](const Query& q) {
              return from_baseline(PlanRrt(scene, q, kino));
            }};
  }
  const std::map<std::string, double> sst_ratios = {
      {"sst0.5", 0.5}, {"sst1", 1.0}, {"sst2", 2.0}};
  if (const auto it = sst_ratios.find(name); it != sst_ratios.end())
  {
    const SstConfig sst = SstConfig::FromRatio(sst_radius, it->second);
    return {name, [&scene, kino, sst, from_baseline](const Query& q) {
              return from_baseline(PlanSst(scene, q, kino, sst));
            }};
  }
  throw std::invalid_argument("unknown planner '" + name +
                              "' (expected lazyboe|boe|rrt|sst0.5|sst1|sst2)");
}

/// Runs one planner on one problem and converts the outcome into a record.
/// Exceptions become failed records.
inline BenchmarkRecord RunCell(const NamedPlanner& planner, const Query& problem,
                               const uint64_t problem_id)
{
  BenchmarkRecord rec;
  rec.planner = planner.name;
  rec.problem_id = problem_id;
  rec.seed = problem.rng_seed;
  try
  {
    PlannerOutcome out = planner.run(problem);
    rec.simulated_edges = out.simulated_edges;
    rec.n_solutions = out.solutions.size();
    rec.success = rec.n_solutions > 0;
    if (rec.success)
    {
      rec.time_to_initial_solution = out.solution_times.front();
      rec.final_cost = out.solutions.back().cost;
    }
  }
  catch (const std::exception&)
  {
    rec = BenchmarkRecord{planner.name, problem_id, std::nullopt, std::nullopt,
                          false, 0, problem.rng_seed, 0};
  }
  return rec;
}

/// One record per (planner, problem), planner-major. The budget overrides each
/// query's time budget; bundle construction is never timed here.
inline std::vector<BenchmarkRecord> RunBenchmark(
    const std::vector<NamedPlanner>& planners, std::vector<Query> problems,
    const double budget, const bool parallel = false,
    const uint64_t max_iterations = 0)
{
  for (auto& q : problems)
  {
    q.time_budget = budget;
    q.max_iterations = max_iterations;
  }
  std::vector<BenchmarkRecord> records(planners.size() * problems.size());
  const auto cell = [&](const size_t i) {
    const size_t p = i / problems.size();
    const size_t k = i % problems.size();
    records[i] = RunCell(planners[p], problems[k], k);
  };
  if (parallel)
  {
    ParallelFor(records.size(), cell);
  }
  else
  {
    for (size_t i = 0; i < records.size(); ++i)
    {
      cell(i);
    }
  }
  return records;
}

// --- Reports -----------------------------------------------------------------

inline constexpr const char* kRecordsHeader =
    "planner,problem_id,seed,success,n_solutions,time_to_initial_solution,"
    "final_cost,simulated_edges";

inline void WriteRecordsCsv(const std::vector<BenchmarkRecord>& records,
                            std::ostream& out)
{
  out << kRecordsHeader << '\n'
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : records)
  {
    out << r.planner << ',' << r.problem_id << ',' << r.seed << ','
        << (r.success ? 1 : 0) << ',' << r.n_solutions << ',';
    if (r.time_to_initial_solution)
    {
      out << *r.time_to_initial_solution;
    }
    out << ',';
    if (r.final_cost)
    {
      out << *r.final_cost;
    }
    out << ',' << r.simulated_edges << '\n';
  }
}

inline std::vector<BenchmarkRecord> ReadRecordsCsv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader)
  {
    throw std::runtime_error("records CSV: unexpected header");
  }
  std::vector<BenchmarkRecord> records;
  while (std::getline(in, line))
  {
    if (line.empty())
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
    {
      fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',')
    {
      fields.emplace_back();
    }
    if (fields.size() != 8)
    {
      throw std::runtime_error("records CSV: malformed row '" + line + "'");
    }
    BenchmarkRecord r;
    r.planner = fields[0];
    r.problem_id = std::stoull(fields[1]);
    r.seed = std::stoull(fields[2]);
    r.success = fields[3] == "1";
    r.n_solutions = std::stoull(fields[4]);
    if (!fields[5].empty())
    {
      r.time_to_initial_solution = std::stod(fields[5]);
    }
    if (!fields[6].empty())
    {
      r.final_cost = std::stod(fields[6]);
    }
    r.simulated_edges = std::stoull(fields[7]);
    records.push_back(std::move(r));
  }
  return records;
}

enum class Metric
{
  kTime,
  kCost,
  kSolutions,
  kSuccess,
};

inline const char* MetricName(const Metric m)
{
  switch (m)
  {
    case Metric::kTime: return "time_to_initial_solution";
    case Metric::kCost: return "final_cost";
    case Metric::kSolutions: return "n_solutions";
    case Metric::kSuccess: return "success";
  }
  return "?";
}

/// Sample of one metric for one planner. Failed runs are excluded from time
/// and cost and contribute zero solutions.
inline std::vector<double> MetricSample(const std::vector<BenchmarkRecord>& records,
                                        const std::string& planner,
                                        const Metric metric)
{
  std::vector<double> sample;
  for (const auto& r : records)
  {
    if (r.planner != planner)
    {
      continue;
    }
    switch (metric)
    {
      case Metric::kTime:
        if (r.time_to_initial_solution) sample.push_back(*r.time_to_initial_solution);
        break;
      case Metric::kCost:
        if (r.final_cost) sample.push_back(*r.final_cost);
        break;
      case Metric::kSolutions:
        sample.push_back(static_cast<double>(r.n_solutions));
        break;
      case Metric::kSuccess:
        sample.push_back(r.success ? 1.0 : 0.0);
        break;
    }
  }
  return sample;
}

inline std::vector<std::string> PlannerOrder(const std::vector<BenchmarkRecord>& records)
{
  std::vector<std::string> order;
  for (const auto& r : records)
  {
    if (std::find(order.begin(), order.end(), r.planner) == order.end())
    {
      order.push_back(r.planner);
    }
  }
  return order;
}

struct SignificanceRow
{
  Metric metric;
  std::string planner_a;
  std::string planner_b;
  SignificanceResult result;
};

/// Mann-Whitney comparisons of `reference` against every other planner on
/// time, cost and solution count. Pairs with an empty sample are skipped.
inline std::vector<SignificanceRow> CompareAgainst(
    const std::vector<BenchmarkRecord>& records, const std::string& reference)
{
  std::vector<SignificanceRow> rows;
  for (const Metric metric : {Metric::kTime, Metric::kCost, Metric::kSolutions})
  {
    const auto a = MetricSample(records, reference, metric);
    for (const auto& other : PlannerOrder(records))
    {
      if (other == reference)
      {
        continue;
      }
      const auto b = MetricSample(records, other, metric);
      if (a.empty() || b.empty())
      {
        continue;
      }
      rows.push_back({metric, reference, other, MannWhitney(a, b)});
    }
  }
  return rows;
}

namespace detail
{
inline std::string Fmt(const double v)
{
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

/// Static box plot (min, quartiles, median, max) per planner.
inline std::string BoxPlotSvg(const std::vector<std::string>& planners,
                              const std::vector<std::vector<double>>& samples,
                              const std::string& title)
{
  constexpr double kWidth = 120.0, kHeight = 320.0, kTop = 40.0, kBottom = 60.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples)
  {
    for (const double v : s)
    {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo))
  {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi <= lo)
  {
    hi = lo + 1.0;
  }
  const double plot_h = kHeight - kTop - kBottom;
  const auto y = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };
  const auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
  };
  std::ostringstream svg;
  const double width = 60.0 + kWidth * static_cast<double>(planners.size());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << kHeight << "\">\n"
      << "<text x=\"10\" y=\"20\" font-size=\"14\">" << title << "</text>\n"
      << "<text x=\"5\" y=\"" << Fmt(y(hi)) << "\" font-size=\"10\">" << Fmt(hi)
      << "</text>\n<text x=\"5\" y=\"" << Fmt(y(lo)) << "\" font-size=\"10\">"
      << Fmt(lo) << "</text>\n";
  for (size_t p = 0; p < planners.size(); ++p)
  {
    const double cx = 60.0 + kWidth * (static_cast<double>(p) + 0.5);
    svg << "<text x=\"" << cx - 25 << "\" y=\"" << kHeight - 20
        << "\" font-size=\"11\">" << planners[p] << "</text>\n";
    const auto& s = samples[p];
    if (s.empty())
    {
      continue;
    }
    const double q1 = quantile(s, 0.25), q2 = quantile(s, 0.5),
                 q3 = quantile(s, 0.75);
    const double mn = *std::min_element(s.begin(), s.end());
    const double mx = *std::max_element(s.begin(), s.end());
    svg << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << Fmt(y(mx))
        << "\" y2=\"" << Fmt(y(mn)) << "\" stroke=\"black\"/>\n"
        << "<rect x=\"" << cx - 25 << "\" width=\"50\" y=\"" << Fmt(y(q3))
        << "\" height=\"" << Fmt(std::max(1.0, y(q1) - y(q3)))
        << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n"
        << "<line x1=\"" << cx - 25 << "\" x2=\"" << cx + 25 << "\" y1=\""
        << Fmt(y(q2)) << "\" y2=\"" << Fmt(y(q2))
        << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::ofstream OpenForWrite(const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}
}  // namespace detail

/// Writes records.csv, summary.csv, significance.csv and one box-plot SVG per
/// metric into dir.
///
///   summary.csv:      planner,metric,n,median,mean
///   significance.csv: metric,planner_a,planner_b,u_statistic,p_value,marker
inline void EmitReport(const std::vector<BenchmarkRecord>& records,
                       const std::vector<SignificanceRow>& significance,
                       const std::filesystem::path& dir, const bool svg = true)
{
  if (records.empty())
  {
    throw std::invalid_argument("EmitReport: no records");
  }
  std::filesystem::create_directories(dir);
  {
    auto out = detail::OpenForWrite(dir / "records.csv");
    WriteRecordsCsv(records, out);
  }
  const auto planners = PlannerOrder(records);
  const std::vector<Metric> metrics = {Metric::kTime, Metric::kCost,
                                       Metric::kSolutions, Metric::kSuccess};
  {
    auto out = detail::OpenForWrite(dir / "summary.csv");
    out << "planner,metric,n,median,mean\n";
    for (const auto& p : planners)
    {
      for (const Metric metric : metrics)
      {
        const auto s = MetricSample(records, p, metric);
        out << p << ',' << MetricName(metric) << ',' << s.size() << ',';
        if (!s.empty())
        {
          out << detail::Fmt(Median(s)) << ',' << detail::Fmt(Mean(s));
        }
        else
        {
          out << ',';
        }
        out << '\n';
      }
    }
  }
  {
    auto out = detail::OpenForWrite(dir / "significance.csv");
    out << "metric,planner_a,planner_b,u_statistic,p_value,marker\n";
    for (const auto& row : significance)
    {
      out << MetricName(row.metric) << ',' << row.planner_a << ','
          << row.planner_b << ',' << detail::Fmt(row.result.u_statistic) << ','
          << detail::Fmt(row.result.p_value) << ',' << row.result.marker << '\n';
    }
  }
  if (svg)
  {
    for (const Metric metric : {Metric::kTime, Metric::kCost, Metric::kSolutions})
    {
      std::vector<std::vector<double>> samples;
      for (const auto& p : planners)
      {
        samples.push_back(MetricSample(records, p, metric));
      }
      auto out = detail::OpenForWrite(dir / (std::string(MetricName(metric)) + ".svg"));
      out << detail::BoxPlotSvg(planners, samples, MetricName(metric));
    }
  }
}
}  // namespace lazykdp
