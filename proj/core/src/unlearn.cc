// Copyright 2026 The RR-Unlearn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rr/unlearn.h"

#include <charconv>
#include <cmath>
#include <future>
#include <sstream>

#include <fmt/format.h>

#include "rr/files.h"

namespace rr {

std::vector<double> DefaultGrid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0, 3.0, 5.0}; }

void ValidateRule(const SelectionRule& rule) {
  if (!(rule.forget_ratio > 0.0 && rule.forget_ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "forget_ratio must lie in (0, 1)");
  }
  if (!(rule.utility_floor > 0.0 && rule.utility_floor <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "utility_floor must lie in (0, 1]");
  }
  if (rule.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "candidate grid is empty");
  for (std::size_t i = 0; i < rule.grid.size(); ++i) {
    const double w = rule.grid[i];
    if (!std::isfinite(w) || w <= 0.0 || (i > 0 && w <= rule.grid[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "candidate grid must be positive, finite and strictly ascending");
    }
  }
}

std::string_view StepActionName(StepAction action) {
  return action == StepAction::kSubtractForget ? "subtract_forget" : "add_retain";
}

StepAction ParseStepAction(std::string_view name) {
  if (name == "subtract_forget") return StepAction::kSubtractForget;
  if (name == "add_retain") return StepAction::kAddRetain;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown step action '{}'", name));
}

std::string_view StopReasonName(StopReason reason) {
  switch (reason) {
    case StopReason::kCompleted: return "completed";
    case StopReason::kTargetsReached: return "targets_reached";
    case StopReason::kNoFeasibleWeight: return "no_feasible_weight";
  }
  return "unknown";
}

std::vector<Probe> ProbeGrid(const WeightState& state, const WeightTerm& term,
                             const std::vector<double>& grid, const Evaluator& evaluator) {
  std::vector<std::future<TradeoffPoint>> pending;
  pending.reserve(grid.size());
  for (double w : grid) {
    WeightTerm t = term;
    t.weight = w;
    pending.push_back(std::async(std::launch::async, [&evaluator, plan = state.With(t)] {
      return evaluator.Evaluate(plan);
    }));
  }
  std::vector<Probe> probes;
  probes.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) probes.push_back({grid[i], pending[i].get()});
  return probes;
}

namespace {

bool MuClauseOne(const TradeoffPoint& prev, const TradeoffPoint& p, double ratio) {
  return p.s <= ratio * prev.s;
}

bool MuClauseTwo(const TradeoffPoint& prev, const TradeoffPoint& p) {
  return (prev.s - p.s) > (prev.u - p.u);
}

WeightTerm MakeTerm(int sign, std::shared_ptr<const AdapterDelta> delta, const std::string& path) {
  if (!delta) throw Error(ErrorCode::kInvalidArgument, "adapter delta is null");
  return WeightTerm{sign, 0.0, std::move(delta), path};
}

}  // namespace

Selection SelectMu(const WeightState& state, std::shared_ptr<const AdapterDelta> forget_delta,
                   const std::string& adapter_path, const TradeoffPoint& prev,
                   const SelectionRule& rule, const Evaluator& evaluator) {
  ValidateRule(rule);
  Selection sel;
  sel.probes =
      ProbeGrid(state, MakeTerm(-1, std::move(forget_delta), adapter_path), rule.grid, evaluator);
  for (const Probe& p : sel.probes) {
    if (MuClauseOne(prev, p.point, rule.forget_ratio)) {
      sel.weight = p.weight;
      sel.point = p.point;
      return sel;
    }
  }
  for (const Probe& p : sel.probes) {
    if (MuClauseTwo(prev, p.point)) {
      sel.weight = p.weight;
      sel.point = p.point;
      return sel;
    }
  }
  // First maximum wins, so ties keep the smaller weight.
  const Probe* best = &sel.probes.front();
  auto net = [&](const Probe& p) { return (prev.s - p.point.s) - (prev.u - p.point.u); };
  for (const Probe& p : sel.probes) {
    if (net(p) > net(*best)) best = &p;
  }
  throw NoFeasibleWeightError(
      fmt::format("no subtraction weight reaches s <= {} * {:.6g} or gains more forgetting than "
                  "utility; best candidate mu = {:.6g}",
                  rule.forget_ratio, prev.s, best->weight),
      *best, sel.probes);
}

Selection SelectLambda(const WeightState& state, std::shared_ptr<const AdapterDelta> retain_delta,
                       const std::string& adapter_path, const TradeoffPoint& prev,
                       const SelectionRule& rule, const Evaluator& evaluator) {
  ValidateRule(rule);
  Selection sel;
  sel.probes =
      ProbeGrid(state, MakeTerm(+1, std::move(retain_delta), adapter_path), rule.grid, evaluator);
  for (const Probe& p : sel.probes) {
    if (p.point.u >= rule.utility_floor * prev.u) {
      sel.weight = p.weight;
      sel.point = p.point;
      return sel;
    }
  }
  const Probe* best = &sel.probes.front();
  for (const Probe& p : sel.probes) {
    if (p.point.u > best->point.u) best = &p;
  }
  sel.weight = best->weight;
  sel.point = best->point;
  sel.utility_floor_missed = true;
  return sel;
}

std::string FormatLog(const IterationLog& log) {
  std::string out = "step,action,weight,s,u\n";
  for (const LogEntry& e : log) {
    out += fmt::format("{},{},{:.6g},{:.6g},{:.6g}\n", e.step, StepActionName(e.action), e.weight,
                       e.point.s, e.point.u);
  }
  return out;
}

void EmitLog(const IterationLog& log, const std::filesystem::path& path) {
  WriteTextFile(path, FormatLog(log));
}

namespace {

double ParseNumber(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("log line {}: bad number '{}'", line, field));
  }
  return v;
}

}  // namespace

IterationLog ParseLog(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != "step,action,weight,s,u") {
    throw Error(ErrorCode::kInvalidArgument, "log is missing the step,action,weight,s,u header");
  }
  IterationLog log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != 5) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("log line {}: expected 5 fields", lineno));
    }
    LogEntry e;
    e.step = static_cast<int>(ParseNumber(f[0], lineno));
    e.action = ParseStepAction(f[1]);
    e.weight = ParseNumber(f[2], lineno);
    e.point = {ParseNumber(f[3], lineno), ParseNumber(f[4], lineno)};
    log.push_back(e);
  }
  return log;
}

TradeoffPoint MuReference(const TradeoffPoint& initial, const IterationLog& log, std::size_t index) {
  return index == 0 ? initial : log.at(index - 1).point;
}

TradeoffPoint LambdaReference(const TradeoffPoint& initial, const IterationLog& log,
                              std::size_t index) {
  // log[index - 1] is the preceding subtraction; its reference is the point
  // before it.
  if (index == 0) throw Error(ErrorCode::kInvalidArgument, "a log cannot start with add_retain");
  return MuReference(initial, log, index - 1);
}

std::vector<std::string> CheckRuleCompliance(const TradeoffPoint& initial, const IterationLog& log,
                                             const SelectionRule& rule) {
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const LogEntry& e = log[i];
    const StepAction expected = i % 2 == 0 ? StepAction::kSubtractForget : StepAction::kAddRetain;
    if (e.action != expected) {
      issues.push_back(fmt::format("step {}: expected {}, got {}", e.step,
                                   StepActionName(expected), StepActionName(e.action)));
      continue;
    }
    if (i > 0 && e.step <= log[i - 1].step) {
      issues.push_back(fmt::format("step {}: steps must strictly increase", e.step));
    }
    if (e.action == StepAction::kSubtractForget) {
      const TradeoffPoint prev = MuReference(initial, log, i);
      if (!MuClauseOne(prev, e.point, rule.forget_ratio) && !MuClauseTwo(prev, e.point)) {
        issues.push_back(fmt::format(
            "step {}: mu = {:.6g} gives s = {:.6g}, u = {:.6g} against s = {:.6g}, u = {:.6g}; "
            "neither clause holds",
            e.step, e.weight, e.point.s, e.point.u, prev.s, prev.u));
      }
    } else {
      const TradeoffPoint prev = LambdaReference(initial, log, i);
      if (e.point.u < rule.utility_floor * prev.u && !e.utility_floor_missed) {
        issues.push_back(fmt::format(
            "step {}: lambda = {:.6g} gives u = {:.6g} < {} * {:.6g} without the floor flag",
            e.step, e.weight, e.point.u, rule.utility_floor, prev.u));
      }
    }
  }
  return issues;
}

std::vector<TradeoffPoint> ReplayPoints(const WeightState& state, const Evaluator& evaluator) {
  std::vector<TradeoffPoint> points;
  WeightState prefix{state.base_ref, {}, 0};
  for (const WeightTerm& t : state.terms) {
    prefix = prefix.With(t);
    points.push_back(evaluator.Evaluate(prefix));
  }
  return points;
}

namespace {

struct Runner {
  const ModelSignature& sig;
  const UnlearnOptions& options;
  const Trainer& trainer;
  const Evaluator& evaluator;
  UnlearnResult result;

  std::pair<std::shared_ptr<const AdapterDelta>, std::string> Train(
      const std::string& dataset, Objective objective, const std::string& name) {
    TrainHyper hyper = options.hyper;
    hyper.adapter_name = name;
    AdapterDelta delta = trainer.Train(result.state, dataset, objective, hyper);
    delta.name = name;
    Validate(delta, sig);
    std::string path;
    if (!options.adapter_dir.empty()) {
      const std::filesystem::path dir = options.adapter_dir / name;
      WriteAdapter(delta, dir);
      path = dir.string();
    }
    return {std::make_shared<const AdapterDelta>(std::move(delta)), path};
  }

  void Record(StepAction action, int sign, const std::shared_ptr<const AdapterDelta>& delta,
              const std::string& path, double weight, const TradeoffPoint& point, bool floor_missed,
              bool fallback) {
    result.state = result.state.With({sign, weight, delta, path});
    LogEntry e;
    e.step = static_cast<int>(result.log.size());
    e.action = action;
    e.weight = weight;
    e.point = point;
    e.utility_floor_missed = floor_missed;
    e.fallback_used = fallback;
    result.log.push_back(e);
    if (!options.log_path.empty()) EmitLog(result.log, options.log_path);
  }

  // False when the run has to stop on an infeasible weight.
  bool Subtract(const std::string& dataset, const std::string& name, const TradeoffPoint& prev) {
    auto [delta, path] = Train(dataset, Objective::kForgetFit, name);
    try {
      Selection sel = SelectMu(result.state, delta, path, prev, options.rule, evaluator);
      Record(StepAction::kSubtractForget, -1, delta, path, sel.weight, sel.point, false, false);
      return true;
    } catch (const NoFeasibleWeightError& e) {
      result.suggestion = e.suggestion();
      if (!options.override_infeasible) {
        result.stop = StopReason::kNoFeasibleWeight;
        return false;
      }
      Record(StepAction::kSubtractForget, -1, delta, path, e.suggestion().weight,
             e.suggestion().point, false, true);
      return true;
    }
  }

  bool TargetsMet() const {
    if (!options.targets || result.log.empty()) return false;
    const TradeoffPoint& p = result.log.back().point;
    return p.s <= options.targets->s && p.u >= options.targets->u;
  }
};

}  // namespace

UnlearnResult RunIterations(const ModelSignature& sig, const std::string& base_ref,
                            const std::string& forget_dataset, const std::string& retain_dataset,
                            const UnlearnOptions& options, const Trainer& trainer,
                            const Evaluator& evaluator) {
  ValidateRule(options.rule);
  if (options.iterations < 0) throw Error(ErrorCode::kInvalidArgument, "T must be >= 0");
  Runner run{sig, options, trainer, evaluator, {}};
  run.result.state = Compose(sig, base_ref, {});
  run.result.initial = evaluator.Evaluate(run.result.state);
  if (!options.log_path.empty()) EmitLog(run.result.log, options.log_path);

  if (!run.Subtract(forget_dataset, "forget_0", run.result.initial)) return std::move(run.result);
  for (int i = 1; i <= options.iterations; ++i) {
    if (run.TargetsMet()) {
      run.result.stop = StopReason::kTargetsReached;
      return std::move(run.result);
    }
    const IterationLog& log = run.result.log;
    const TradeoffPoint lambda_prev = LambdaReference(run.result.initial, log, log.size());
    auto [retain, retain_path] =
        run.Train(retain_dataset, Objective::kRetainFit, fmt::format("retain_{}", i));
    Selection sel =
        SelectLambda(run.result.state, retain, retain_path, lambda_prev, options.rule, evaluator);
    run.Record(StepAction::kAddRetain, +1, retain, retain_path, sel.weight, sel.point,
               sel.utility_floor_missed, false);
    if (!run.Subtract(forget_dataset, fmt::format("forget_{}", i), sel.point)) {
      return std::move(run.result);
    }
  }
  return std::move(run.result);
}

}  // namespace rr
