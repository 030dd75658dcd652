// Copyright 2026 The scikg Authors
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

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "scikg/rng.hpp"

using scikg::Rng;

TEST_SUITE_BEGIN("rng");

TEST_CASE("raw stream matches the standard engine") {
  Rng rng(42);
  std::mt19937_64 ref(42);
  for (int i = 0; i < 100; ++i) CHECK(rng.next_u64() == ref());
}

TEST_CASE("next_double is the pinned 53-bit derivation") {
  Rng rng(7);
  std::mt19937_64 ref(7);
  for (int i = 0; i < 200; ++i) {
    double expected = static_cast<double>(ref() >> 11) * 0x1.0p-53;
    double got = rng.next_double();
    CHECK(got == expected);
    CHECK(got >= 0.0);
    CHECK(got < 1.0);
  }
}

TEST_CASE("identical seeds replay identical draws") {
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) {
    CHECK(a.next_double() == b.next_double());
    CHECK(a.below(17) == b.below(17));
    CHECK(a.normal() == b.normal());
    CHECK(a.coin() == b.coin());
  }
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto x = rng.below(5);
    CHECK(x < 5);
    seen.insert(x);
  }
  CHECK(seen.size() == 5);
  CHECK(Rng(1).below(1) == 0);
}

TEST_CASE("normal draws have plausible moments") {
  Rng rng(2024);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("forked streams are deterministic and mutually distinct") {
  Rng base(5);
  Rng f0 = base.fork(0);
  Rng f0again = Rng(5).fork(0);
  CHECK(f0.next_u64() == f0again.next_u64());

  // Forking never advances the parent.
  Rng parent(5);
  std::uint64_t before = Rng(5).next_u64();
  parent.fork(3);
  CHECK(parent.next_u64() == before);

  std::set<std::uint64_t> first_draws;
  for (std::uint64_t s = 0; s < 64; ++s) first_draws.insert(base.fork(s).next_u64());
  CHECK(first_draws.size() == 64);

  // Streams from different parents differ too.
  CHECK(Rng(5).fork(0).next_u64() != Rng(6).fork(0).next_u64());
}

TEST_SUITE_END();
