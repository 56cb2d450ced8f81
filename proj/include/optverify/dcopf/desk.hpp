// Copyright 2026 The optverify Authors
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

// Hand-set desk cases. The same data ships as data/*.json.

#pragma once

#include <string>

#include "optverify/dcopf/case.hpp"

namespace optverify {

inline DcopfCase desk_case_1bus() {
  DcopfCase k;
  k.buses = 1;
  k.lines = 0;
  k.c = Eigen::VectorXd::Constant(1, 10.0);
  k.h = Eigen::MatrixXd::Zero(0, 1);
  k.f_bar = Eigen::VectorXd::Zero(0);
  k.p_lo = Eigen::VectorXd::Zero(1);
  k.p_hi = Eigen::VectorXd::Constant(1, 3.0);
  k.d_ref = Eigen::VectorXd::Constant(1, 1.0);
  k.m_th = 100.0;
  k.validate();
  return k;
}

// Cheap generator at bus 0 behind a 0.6 MW line.
inline DcopfCase desk_case_2bus() {
  DcopfCase k;
  k.buses = 2;
  k.lines = 1;
  k.c = Eigen::Vector2d(10.0, 30.0);
  k.h = Eigen::MatrixXd(1, 2);
  k.h << 1.0, 0.0;
  k.f_bar = Eigen::VectorXd::Constant(1, 0.6);
  k.p_lo = Eigen::VectorXd::Zero(2);
  k.p_hi = Eigen::VectorXd::Constant(2, 2.0);
  k.d_ref = Eigen::Vector2d(0.5, 1.0);
  k.m_th = 200.0;
  k.validate();
  return k;
}

// Triangle with equal reactances, slack at bus 2; lines 0-1, 0-2, 1-2.
inline DcopfCase desk_case_3bus() {
  DcopfCase k;
  k.buses = 3;
  k.lines = 3;
  k.c = Eigen::Vector3d(10.0, 20.0, 35.0);
  k.h = Eigen::MatrixXd(3, 3);
  k.h << 1.0 / 3.0, -1.0 / 3.0, 0.0,
         2.0 / 3.0, 1.0 / 3.0, 0.0,
         1.0 / 3.0, 2.0 / 3.0, 0.0;
  k.f_bar = Eigen::Vector3d(0.5, 0.8, 0.8);
  k.p_lo = Eigen::VectorXd::Zero(3);
  k.p_hi = Eigen::VectorXd::Constant(3, 1.5);
  k.d_ref = Eigen::Vector3d(0.4, 0.8, 0.9);
  k.m_th = 150.0;
  k.validate();
  return k;
}

inline DcopfCase desk_case(const std::string& name) {
  if (name == "1bus") return desk_case_1bus();
  if (name == "2bus") return desk_case_2bus();
  if (name == "3bus") return desk_case_3bus();
  throw ModelError("unknown desk case '" + name + "'");
}

}  // namespace optverify
