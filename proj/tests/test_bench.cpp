#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

namespace lazykdp
{
namespace
{
namespace fs = std::filesystem;

NamedPlanner Fixed(const std::string& name, PlannerOutcome outcome)
{
  return {name, [outcome](const Query&) { return outcome; }};
}

Trajectory WithCost(const double cost)
{
  Trajectory t;
  t.cost = cost;
  return t;
}

BenchmarkRecord Record(const std::string& planner, const uint64_t id,
                       const std::optional<double> time, const uint64_t solutions,
                       const std::optional<double> cost)
{
  BenchmarkRecord r;
  r.planner = planner;
  r.problem_id = id;
  r.seed = id;
  r.success = solutions > 0;
  r.n_solutions = solutions;
  r.time_to_initial_solution = time;
  r.final_cost = cost;
  r.simulated_edges = 10 * id;
  return r;
}

std::vector<std::vector<std::string>> ReadCsv(const fs::path& p)
{
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
  {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
      cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',')
    {
      cells.emplace_back();
    }
    rows.push_back(cells);
  }
  return rows;
}

class Reports : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("lazykdp_bench_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(GenerateProblems, EmptyWorldNeedsNoRetries)
{
  // Two links: no non-adjacent pair, so nothing at all can collide.
  const Scene scene = testing::OpenScene(
      testing::StandardTwoLink(),
      Limits::Symmetric(JointVector::Constant(2, 2.8), JointVector::Constant(2, 1.0),
                        JointVector::Constant(2, 100.0), JointVector::Constant(2, 50.0)));
  Rng rng(1);
  // One attempt per problem: any rejection would exhaust the budget.
  const auto problems = GenerateProblems(scene, 25, 0.25, rng, 1);
  ASSERT_EQ(problems.size(), 25u);
  for (size_t i = 0; i < problems.size(); ++i)
  {
    const Query& q = problems[i];
    EXPECT_EQ(q.rng_seed, i);
    EXPECT_GT((q.goal.center - q.start).norm(), 0.25);
    EXPECT_TRUE(Within(q.start, scene.limits.q_min, scene.limits.q_max));
  }
}

TEST(GenerateProblems, DefaultWorldEndpointsAreFree)
{
  const Scene scene = testing::DefaultScene();
  Rng rng(2);
  for (const Query& q : GenerateProblems(scene, 50, 0.25, rng))
  {
    EXPECT_FALSE(StateInCollision(scene.model, scene.world, q.start));
    EXPECT_FALSE(StateInCollision(scene.model, scene.world, q.goal.center));
    EXPECT_TRUE(Within(q.goal.center, scene.limits.q_min, scene.limits.q_max));
  }
}

TEST(GenerateProblems, BlockedWorldExhaustsBudget)
{
  Scene scene = testing::DefaultScene();
  scene.world.obstacles = {{{0.0, 0.0}, 5.0}};
  Rng rng(3);
  EXPECT_THROW(GenerateProblems(scene, 5, 0.25, rng), ProblemGenerationError);
  EXPECT_THROW(GenerateProblems(scene, 0, 0.25, rng), std::invalid_argument);
}

TEST(GenerateProblems, SameSeedSameProblems)
{
  const Scene scene = testing::DefaultScene();
  Rng a(4), b(4);
  const auto x = GenerateProblems(scene, 20, 0.25, a);
  const auto y = GenerateProblems(scene, 20, 0.25, b);
  ASSERT_EQ(x.size(), y.size());
  for (size_t i = 0; i < x.size(); ++i)
  {
    EXPECT_EQ(x[i].start, y[i].start);
    EXPECT_EQ(x[i].goal.center, y[i].goal.center);
  }
}

TEST(RunBenchmark, ZeroPlannersGiveNoRecords)
{
  Rng rng(5);
  const auto problems = GenerateProblems(testing::DefaultScene(), 3, 0.25, rng);
  EXPECT_TRUE(RunBenchmark({}, problems, 1.0).empty());
}

TEST(RunBenchmark, EmptyAndThrowingPlannersBecomeFailures)
{
  Rng rng(6);
  const auto problems = GenerateProblems(testing::DefaultScene(), 2, 0.25, rng);
  const NamedPlanner nothing = Fixed("nothing", PlannerOutcome{});
  const NamedPlanner broken{"broken", [](const Query&) -> PlannerOutcome {
                              throw std::runtime_error("boom");
                            }};
  const NamedPlanner good = Fixed("good", PlannerOutcome{{WithCost(3.0), WithCost(2.0)},
                                                         {0.25, 0.75},
                                                         7});
  const auto records = RunBenchmark({nothing, broken, good}, problems, 1.0);
  ASSERT_EQ(records.size(), 6u);
  for (size_t i = 0; i < 4; ++i)
  {
    EXPECT_FALSE(records[i].success);
    EXPECT_FALSE(records[i].time_to_initial_solution.has_value());
    EXPECT_FALSE(records[i].final_cost.has_value());
    EXPECT_EQ(records[i].n_solutions, 0u);
    EXPECT_TRUE(records[i].Consistent());
  }
  EXPECT_EQ(records[0].planner, "nothing");
  EXPECT_EQ(records[2].planner, "broken");
  EXPECT_EQ(records[3].problem_id, 1u);
  const BenchmarkRecord& ok = records[4];
  EXPECT_TRUE(ok.success);
  EXPECT_EQ(ok.n_solutions, 2u);
  EXPECT_EQ(ok.time_to_initial_solution, 0.25);
  EXPECT_EQ(ok.final_cost, 2.0);
  EXPECT_EQ(ok.simulated_edges, 7u);
}

TEST(RunBenchmark, BudgetOverridesEveryQuery)
{
  Rng rng(7);
  const auto problems = GenerateProblems(testing::DefaultScene(), 3, 0.25, rng);
  std::vector<double> seen;
  const NamedPlanner spy{"spy", [&seen](const Query& q) {
                           seen.push_back(q.time_budget);
                           return PlannerOutcome{};
                         }};
  RunBenchmark({spy}, problems, 2.5);
  EXPECT_EQ(seen, std::vector<double>(3, 2.5));
}

TEST(RunBenchmark, FullSweepRecordsAreConsistentAndReproducible)
{
  const Scene scene = testing::DefaultScene();
  GenerationConfig g;
  g.n_edges = 600;
  PerturbationConfig pc;
  pc.perturbations = 30;
  const EdgeBundle bundle = AnnotateBundle(BuildBundle(scene, g), scene, pc);
  std::vector<NamedPlanner> planners;
  for (const auto& name : KnownPlanners())
  {
    planners.push_back(MakePlanner(name, bundle, scene, PlannerSettings{}));
  }
  Rng rng(8);
  const auto problems = GenerateProblems(scene, 4, 0.25, rng);
  const auto a = RunBenchmark(planners, problems, 1e6, false, 400);
  const auto b = RunBenchmark(planners, problems, 1e6, true, 400);
  ASSERT_EQ(a.size(), planners.size() * problems.size());
  ASSERT_EQ(a.size(), b.size());
  bool any_success = false;
  for (size_t i = 0; i < a.size(); ++i)
  {
    EXPECT_TRUE(a[i].Consistent());
    EXPECT_EQ(a[i].planner, planners[i / problems.size()].name);
    EXPECT_EQ(a[i].problem_id, i % problems.size());
    // Timings aside, a rerun (even in parallel) reproduces every record.
    EXPECT_EQ(a[i].success, b[i].success);
    EXPECT_EQ(a[i].n_solutions, b[i].n_solutions);
    EXPECT_EQ(a[i].final_cost, b[i].final_cost);
    EXPECT_EQ(a[i].simulated_edges, b[i].simulated_edges);
    any_success = any_success || a[i].success;
  }
  EXPECT_TRUE(any_success);
}

TEST(MakePlanner, KnownAndUnknownNames)
{
  const Scene scene = testing::DefaultScene();
  GenerationConfig g;
  g.n_edges = 5;
  const EdgeBundle bundle = BuildBundle(scene, g);
  for (const auto& name : KnownPlanners())
  {
    EXPECT_EQ(MakePlanner(name, bundle, scene, PlannerSettings{}).name, name);
  }
  EXPECT_THROW(MakePlanner("prm", bundle, scene, PlannerSettings{}), std::invalid_argument);
}

TEST(RecordsCsv, RoundTrip)
{
  const std::vector<BenchmarkRecord> records = {
      Record("lazyboe", 0, 0.125, 3, 2.5), Record("boe", 1, std::nullopt, 0, std::nullopt),
      Record("rrt", 2, 1.0 / 3.0, 1, 7.0 / 3.0)};
  std::stringstream ss;
  WriteRecordsCsv(records, ss);
  const auto back = ReadRecordsCsv(ss);
  ASSERT_EQ(back.size(), records.size());
  for (size_t i = 0; i < records.size(); ++i)
  {
    EXPECT_EQ(back[i].planner, records[i].planner);
    EXPECT_EQ(back[i].problem_id, records[i].problem_id);
    EXPECT_EQ(back[i].seed, records[i].seed);
    EXPECT_EQ(back[i].success, records[i].success);
    EXPECT_EQ(back[i].n_solutions, records[i].n_solutions);
    EXPECT_EQ(back[i].time_to_initial_solution, records[i].time_to_initial_solution);
    EXPECT_EQ(back[i].final_cost, records[i].final_cost);
    EXPECT_EQ(back[i].simulated_edges, records[i].simulated_edges);
  }
  std::stringstream bad("planner,nope\n");
  EXPECT_THROW(ReadRecordsCsv(bad), std::runtime_error);
}

TEST_F(Reports, SingleRecordGivesOneRow)
{
  EmitReport({Record("lazyboe", 0, 0.5, 2, 3.0)}, {}, dir_, false);
  const auto rows = ReadCsv(dir_ / "records.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].size(), 8u);
  EXPECT_EQ(rows[1][0], "lazyboe");
  EXPECT_FALSE(fs::exists(dir_ / "final_cost.svg"));
  EXPECT_THROW(EmitReport({}, {}, dir_), std::invalid_argument);
}

TEST_F(Reports, SummaryMediansMatchHandComputation)
{
  // Times 0.5, 2, 1, -, 3 -> median 1.5, mean 1.625 over four successes.
  // Solutions 1, 2, 1, 0, 5 -> median 1, mean 1.8.
  // Costs 4, 3, 6, -, 5 -> median 4.5, mean 4.5.
  const std::vector<BenchmarkRecord> records = {
      Record("a", 0, 0.5, 1, 4.0), Record("a", 1, 2.0, 2, 3.0), Record("a", 2, 1.0, 1, 6.0),
      Record("a", 3, std::nullopt, 0, std::nullopt), Record("a", 4, 3.0, 5, 5.0)};
  EmitReport(records, {}, dir_);
  const auto rows = ReadCsv(dir_ / "summary.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"planner", "metric", "n", "median", "mean"}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"a", "time_to_initial_solution", "4", "1.5",
                                               "1.625"}));
  EXPECT_EQ(rows[2], (std::vector<std::string>{"a", "final_cost", "4", "4.5", "4.5"}));
  EXPECT_EQ(rows[3], (std::vector<std::string>{"a", "n_solutions", "5", "1", "1.8"}));
  EXPECT_EQ(rows[4], (std::vector<std::string>{"a", "success", "5", "1", "0.8"}));
  for (const char* svg : {"time_to_initial_solution.svg", "final_cost.svg", "n_solutions.svg"})
  {
    std::ifstream in(dir_ / svg);
    std::string head;
    std::getline(in, head);
    EXPECT_EQ(head.rfind("<svg", 0), 0u) << svg;
  }
}

TEST_F(Reports, SignificanceMarkersPassThrough)
{
  std::vector<BenchmarkRecord> records;
  for (uint64_t i = 0; i < 12; ++i)
  {
    records.push_back(Record("lazyboe", i, 0.1 * double(i + 1), 1 + i % 3, 2.0 + 0.1 * double(i)));
    records.push_back(Record("boe", i, 0.1 * double(i + 7), 1, 2.05 + 0.1 * double(i)));
    records.push_back(Record("rrt", i, 5.0 + double(i), 1, 10.0 + double(i)));
  }
  const auto rows = CompareAgainst(records, "lazyboe");
  ASSERT_EQ(rows.size(), 6u);
  EmitReport(records, rows, dir_, false);
  const auto table = ReadCsv(dir_ / "significance.csv");
  ASSERT_EQ(table.size(), rows.size() + 1);
  for (size_t i = 0; i < rows.size(); ++i)
  {
    const auto& cells = table[i + 1];
    ASSERT_EQ(cells.size(), 6u);
    EXPECT_EQ(cells[0], MetricName(rows[i].metric));
    EXPECT_EQ(cells[1], "lazyboe");
    EXPECT_EQ(cells[2], rows[i].planner_b);
    EXPECT_EQ(cells[5], rows[i].result.marker);
    EXPECT_EQ(cells[5], SignificanceMarker(std::stod(cells[4])));
    const SignificanceResult direct =
        MannWhitney(MetricSample(records, "lazyboe", rows[i].metric),
                    MetricSample(records, rows[i].planner_b, rows[i].metric));
    EXPECT_EQ(rows[i].result.p_value, direct.p_value);
  }
  // Entirely separated costs against rrt.
  EXPECT_EQ(rows[3].planner_b, "rrt");
  EXPECT_EQ(rows[3].result.marker, "****");
}

TEST(MetricSample, FailuresExcludedFromTimeAndCost)
{
  const std::vector<BenchmarkRecord> records = {
      Record("a", 0, 1.0, 2, 3.0), Record("a", 1, std::nullopt, 0, std::nullopt),
      Record("b", 0, 9.0, 1, 9.0)};
  EXPECT_EQ(MetricSample(records, "a", Metric::kTime), std::vector<double>{1.0});
  EXPECT_EQ(MetricSample(records, "a", Metric::kCost), std::vector<double>{3.0});
  EXPECT_EQ(MetricSample(records, "a", Metric::kSolutions), (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(PlannerOrder(records), (std::vector<std::string>{"a", "b"}));
}
}  // namespace
}  // namespace lazykdp
