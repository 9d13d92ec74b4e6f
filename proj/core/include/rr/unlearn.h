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

#ifndef RR_UNLEARN_H_
#define RR_UNLEARN_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rr/adapters.h"
#include "rr/backends.h"
#include "rr/error.h"

namespace rr {

// {0.1, 0.2, 0.3, 0.4, 0.5, 1, 2, 3, 5}
std::vector<double> DefaultGrid();

struct SelectionRule {
  double forget_ratio = 0.1;
  double utility_floor = 0.95;
  std::vector<double> grid = DefaultGrid();
};

// kInvalidArgument unless 0 < forget_ratio < 1, 0 < utility_floor <= 1 and
// the grid is non-empty, positive, finite and strictly ascending.
void ValidateRule(const SelectionRule& rule);

enum class StepAction { kSubtractForget, kAddRetain };
std::string_view StepActionName(StepAction action);  // subtract_forget, add_retain
StepAction ParseStepAction(std::string_view name);   // kInvalidArgument

struct Probe {
  double weight = 0.0;
  TradeoffPoint point;
};

struct Selection {
  double weight = 0.0;
  TradeoffPoint point;
  std::vector<Probe> probes;  // every grid point, ascending
  bool utility_floor_missed = false;
};

// Raised by SelectMu when neither clause holds anywhere on the grid.
// suggestion maximizes (prev.s - s) - (prev.u - u).
class NoFeasibleWeightError : public Error {
 public:
  NoFeasibleWeightError(const std::string& message, Probe suggestion, std::vector<Probe> probes)
      : Error(ErrorCode::kNoFeasibleWeight, message),
        suggestion_(suggestion),
        probes_(std::move(probes)) {}
  const Probe& suggestion() const { return suggestion_; }
  const std::vector<Probe>& probes() const { return probes_; }

 private:
  Probe suggestion_;
  std::vector<Probe> probes_;
};

// Candidates are evaluated concurrently; the evaluator must be reentrant.
std::vector<Probe> ProbeGrid(const WeightState& state, const WeightTerm& term,
                             const std::vector<double>& grid, const Evaluator& evaluator);

// Smallest mu with s <= forget_ratio * prev.s, else the smallest with
// (prev.s - s) > (prev.u - u).
Selection SelectMu(const WeightState& state, std::shared_ptr<const AdapterDelta> forget_delta,
                   const std::string& adapter_path, const TradeoffPoint& prev,
                   const SelectionRule& rule, const Evaluator& evaluator);

// Smallest lambda with u >= utility_floor * prev.u, else the argmax-u lambda
// with utility_floor_missed set.
Selection SelectLambda(const WeightState& state, std::shared_ptr<const AdapterDelta> retain_delta,
                       const std::string& adapter_path, const TradeoffPoint& prev,
                       const SelectionRule& rule, const Evaluator& evaluator);

struct LogEntry {
  int step = 0;
  StepAction action = StepAction::kSubtractForget;
  double weight = 0.0;
  TradeoffPoint point;
  bool utility_floor_missed = false;
  bool fallback_used = false;  // mu forced through an infeasible step
};
using IterationLog = std::vector<LogEntry>;

// CSV with header step,action,weight,s,u; numbers at 6 significant digits.
std::string FormatLog(const IterationLog& log);
void EmitLog(const IterationLog& log, const std::filesystem::path& path);  // kIoError
IterationLog ParseLog(std::string_view csv);                               // kInvalidArgument

// The reference point each rule is measured against. mu_i compares with the
// point just before its subtraction; lambda_i compares with the point before
// the preceding forget subtraction, i.e. the utility that subtraction cost.
TradeoffPoint MuReference(const TradeoffPoint& initial, const IterationLog& log, std::size_t index);
TradeoffPoint LambdaReference(const TradeoffPoint& initial, const IterationLog& log,
                              std::size_t index);

// One message per violation; empty when the log follows the rules: first
// step subtracts, actions alternate, steps increase, every mu meets a clause
// and every lambda meets the floor or is flagged.
std::vector<std::string> CheckRuleCompliance(const TradeoffPoint& initial, const IterationLog& log,
                                             const SelectionRule& rule);

// Re-evaluates the plan after each term; one point per term.
std::vector<TradeoffPoint> ReplayPoints(const WeightState& state, const Evaluator& evaluator);

struct UnlearnOptions {
  int iterations = 1;  // T
  SelectionRule rule;
  std::optional<TradeoffPoint> targets;  // stop once s <= targets.s and u >= targets.u
  TrainHyper hyper;                      // adapter_name is set per step
  bool override_infeasible = false;
  std::filesystem::path adapter_dir;  // empty keeps adapters in memory only
  std::filesystem::path log_path;     // rewritten after every step when set
};

enum class StopReason { kCompleted, kTargetsReached, kNoFeasibleWeight };
std::string_view StopReasonName(StopReason reason);

struct UnlearnResult {
  WeightState state;
  TradeoffPoint initial;
  IterationLog log;
  StopReason stop = StopReason::kCompleted;
  std::optional<Probe> suggestion;  // set when stopped on an infeasible mu
};

// Step 0 subtracts a forget adapter trained on the base; each iteration then
// adds a retain adapter and subtracts a fresh forget adapter, both trained on
// the current plan. Trainer failures propagate after the partial log has been
// written to log_path.
UnlearnResult RunIterations(const ModelSignature& sig, const std::string& base_ref,
                            const std::string& forget_dataset, const std::string& retain_dataset,
                            const UnlearnOptions& options, const Trainer& trainer,
                            const Evaluator& evaluator);

}  // namespace rr

#endif  // RR_UNLEARN_H_
