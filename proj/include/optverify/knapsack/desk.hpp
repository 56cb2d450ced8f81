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

#pragma once

#include "optverify/knapsack/case.hpp"

namespace optverify {

// Five items with integer weights; the same data ships as data/knapsack5.json.
inline KnapsackCase desk_knapsack5() {
  KnapsackCase k;
  k.v = Eigen::VectorXd(5);
  k.v << 12.0, 9.0, 7.0, 5.0, 3.0;
  k.w = Eigen::VectorXd(5);
  k.w << 4.0, 3.0, 3.0, 2.0, 1.0;
  k.l = 8.0;
  k.validate();
  return k;
}

}  // namespace optverify
