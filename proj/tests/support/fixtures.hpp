#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "miwols/dataset.hpp"
#include "miwols/rng.hpp"

namespace fixture {

using miwols::Index;

// Dataset with one fully observed column "C" and one binary partial "X".
// Entries of x that are negative are missing.
inline miwols::Dataset small(std::initializer_list<double> y, std::initializer_list<double> z,
                             std::initializer_list<double> c, std::initializer_list<double> x) {
  miwols::Dataset d;
  const Index n = static_cast<Index>(y.size());
  d.y = Eigen::Map<const miwols::Vector>(y.begin(), n);
  d.z = Eigen::Map<const miwols::Vector>(z.begin(), n);
  d.c = Eigen::Map<const miwols::Vector>(c.begin(), n);
  d.c_names = {"C"};
  miwols::PartialConfounder px{"X", miwols::Vector::Zero(n), miwols::Mask::Constant(n, false), false, {}};
  Index i = 0;
  for (double v : x) {
    if (v >= 0) {
      px.values[i] = v;
      px.observed[i] = true;
    }
    ++i;
  }
  d.x.push_back(px);
  return d;
}

// Random dataset with a smooth propensity and a continuous outcome.
inline miwols::Dataset random(Index n, std::uint64_t seed, double missing = 0.3) {
  miwols::Philox4x32 rng(seed, 7);
  miwols::Dataset d;
  d.y.resize(n);
  d.z.resize(n);
  d.c.resize(n, 2);
  d.c_names = {"C1", "C2"};
  miwols::PartialConfounder px{"X", miwols::Vector::Zero(n), miwols::Mask::Constant(n, false), false, {}};
  for (Index i = 0; i < n; ++i) {
    const double c1 = rng.normal();
    const double c2 = rng.bernoulli(0.4) ? 1.0 : 0.0;
    const double x = rng.normal();
    const bool obs = !rng.bernoulli(missing);
    const double lin = -0.3 + 0.6 * c1 - 0.5 * c2 + (obs ? 0.4 * x : 0.2);
    const double z = rng.bernoulli(1.0 / (1.0 + std::exp(-lin))) ? 1.0 : 0.0;
    d.c(i, 0) = c1;
    d.c(i, 1) = c2;
    if (obs) {
      px.values[i] = x;
      px.observed[i] = true;
    }
    d.z[i] = z;
    d.y[i] = 1.0 - 1.5 * z + 0.8 * c1 + 0.5 * c2 + (obs ? 0.7 * x : 0.3) + rng.normal();
  }
  d.x.push_back(px);
  return d;
}

inline miwols::ModelSpec full_spec() {
  miwols::ModelSpec s;
  s.treatment_terms = {"@H"};
  s.treatment_free_terms = {"@H"};
  s.blip_terms = {"intercept"};
  return s;
}

}  // namespace fixture
