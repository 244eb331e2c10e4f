// Copyright 2026 The tiger-retrieval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Central finite-difference oracle for Tape gradients, evaluated in double.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tiger/params.hpp"

namespace tiger {

// Free-form named parameter set, for checking ad-hoc functions.
template <class T>
struct NamedParams {
  std::map<std::string, BasicTensor<T>> tensors;

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    for (auto& [name, t] : self.tensors) f(prefix + name, t);
  }
};

struct ParamFdResult {
  std::string name;
  std::size_t size = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct FdReport {
  std::vector<ParamFdResult> params;
  std::size_t coordinates = 0;
  double max_abs_err = 0.0;
  // Relative error over coordinates whose analytic gradient is at least
  // `small_grad` in magnitude; the rest contribute to max_small_abs_err.
  double max_rel_err = 0.0;
  double max_small_abs_err = 0.0;
  double small_grad = 1e-6;

  bool within(double rel_tol, double abs_tol) const {
    return max_rel_err <= rel_tol && max_small_abs_err <= abs_tol;
  }
};

// Compares backward() against (f(p + h·e_i) - f(p - h·e_i)) / 2h for every
// coordinate of every parameter in `params`.
//
// `build(binder, params)` must bind nothing itself and return a scalar loss;
// all tensors of `params` are bound before it runs. Throws OracleError when two
// evaluations at the base point disagree.
template <class P, class Build>
FdReport finite_diff_check(Build&& build, const P& params, double h,
                           double small_grad = 1e-6) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");

  auto evaluate = [&](const P& p) {
    Tape<double> tape;
    Binder<double> b(tape, false);
    b.bind_all(p);
    return build(b, p).value().item();
  };

  GradMap<double> analytic;
  {
    Tape<double> tape;
    Binder<double> b(tape, true);
    b.bind_all(params);
    analytic = tape.backward(build(b, params));
  }

  const double base = evaluate(params);
  if (evaluate(params) != base) {
    throw OracleError("finite_diff_check: function is not deterministic");
  }

  P work = params;
  std::vector<std::pair<std::string, BasicTensor<double>*>> slots;
  visit_params(work, [&](const std::string& name, BasicTensor<double>& t) {
    slots.emplace_back(name, &t);
  });

  FdReport report;
  report.small_grad = small_grad;
  for (auto& [name, tensor] : slots) {
    const auto it = analytic.find(name);
    if (it == analytic.end()) {
      throw StructuralError("finite_diff_check: no gradient for '" + name + "'");
    }
    ParamFdResult r;
    r.name = name;
    r.size = tensor->size();
    for (std::size_t i = 0; i < tensor->size(); ++i) {
      const double orig = (*tensor)[i];
      (*tensor)[i] = orig + h;
      const double fp = evaluate(work);
      (*tensor)[i] = orig - h;
      const double fm = evaluate(work);
      (*tensor)[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = it->second[i];
      const double abs_err = std::abs(a - numeric);
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      if (std::abs(a) < small_grad) {
        report.max_small_abs_err = std::max(report.max_small_abs_err, abs_err);
      } else {
        const double rel = abs_err / std::abs(a);
        report.max_rel_err = std::max(report.max_rel_err, rel);
        if (rel >= r.max_rel_err) {
          r.max_rel_err = rel;
          r.worst_index = i;
          r.analytic_at_worst = a;
          r.numeric_at_worst = numeric;
        }
      }
      r.max_abs_err = std::max(r.max_abs_err, abs_err);
      ++report.coordinates;
    }
    report.params.push_back(std::move(r));
  }
  return report;
}

}  // namespace tiger
