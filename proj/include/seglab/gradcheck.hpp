#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "seglab/graph.hpp"
#include "seglab/rng.hpp"

namespace seglab {

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

struct GradCheckReport {
  std::size_t coords_checked = 0;
  double max_error = 0.0;
  bool pass = false;
  GradCheckEntry worst;
};

// Central differences against the backward pass. When a parameter set has
// more coordinates than max_coords, a random subset is probed; both gradients
// below 1e-8 in magnitude count as agreeing exactly.
inline GradCheckReport finite_diff_check(Graph& g, const std::string& loss_id,
                                         const std::map<std::string, Tensor>& feeds,
                                         Rng rng, double tolerance = 1e-4,
                                         std::size_t max_coords = 200,
                                         double epsilon = 1e-5) {
  const int loss = g.must_find(loss_id);
  g.forward(feeds);
  g.backward(loss);

  struct Coord {
    int param;
    std::size_t index;
  };
  std::vector<Coord> coords;
  std::size_t total = 0;
  for (int p : g.params()) total += g.node(p).value.numel();
  if (total <= max_coords) {
    for (int p : g.params())
      for (std::size_t i = 0; i < g.node(p).value.numel(); ++i)
        coords.push_back({p, i});
  } else {
    // Sample distinct flat offsets over the concatenated parameter vector.
    std::vector<std::size_t> chosen;
    std::map<std::size_t, bool> seen;
    while (chosen.size() < max_coords) {
      std::size_t k = rng.next_below(total);
      if (!seen.count(k)) {
        seen[k] = true;
        chosen.push_back(k);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    std::size_t base = 0, ci = 0;
    for (int p : g.params()) {
      const std::size_t n = g.node(p).value.numel();
      while (ci < chosen.size() && chosen[ci] < base + n) {
        coords.push_back({p, chosen[ci] - base});
        ++ci;
      }
      base += n;
    }
  }

  std::vector<double> analytic(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    analytic[i] = g.grad(coords[i].param)[coords[i].index];

  GradCheckReport rep;
  rep.coords_checked = coords.size();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    Tensor& pv = g.param_value(coords[i].param);
    const double saved = pv[coords[i].index];
    pv[coords[i].index] = saved + epsilon;
    g.forward(feeds);
    const double plus = g.value(loss)[0];
    pv[coords[i].index] = saved - epsilon;
    g.forward(feeds);
    const double minus = g.value(loss)[0];
    pv[coords[i].index] = saved;

    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic[i];
    double err = 0.0;
    if (std::abs(a) >= 1e-8 || std::abs(numeric) >= 1e-8)
      err = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
    if (err >= rep.max_error) {
      rep.max_error = err;
      rep.worst = {g.node(coords[i].param).id, coords[i].index, a, numeric, err};
    }
  }
  g.forward(feeds);  // leave values consistent with unperturbed parameters
  rep.pass = rep.max_error < tolerance;
  return rep;
}

}  // namespace seglab
