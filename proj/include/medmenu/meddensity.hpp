#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/formula.hpp"
#include "medmenu/glm.hpp"

namespace medmenu {

/// One factor of the mediator density: M_k given covariates and earlier
/// mediators. Binary mediators get a logit model, others a gaussian model
/// with constant variance.
struct MediatorFactor {
  std::string mediator;
  bool binary = false;
  FittedModel model;
};

/// Product of per-mediator conditionals, in the mediator order of the
/// dataset roles.
struct FactorizedDensity {
  std::vector<MediatorFactor> factors;

  bool all_binary() const;
};

/// Fits one model per mediator on the (weighted) sample. `specs` must contain
/// one formula per mediator, in the role order; formula k may use covariates
/// and mediators 1..k-1 only.
FactorizedDensity fit_density(const std::vector<FormulaSpec>& specs, const Dataset& ds, const SampleView& sample);

/// Joint density (binary: probability mass) of the observed mediators given
/// the conditioning variables, one value per row of the view.
std::vector<double> density_at(const FactorizedDensity& density, const SampleView& sample);

/// Draws `draws` mediator vectors per row of the view, sequentially through
/// the factors. Returns a frame with view.size()*draws rows (draw-major: all
/// units for draw 0, then draw 1, ...), other columns copied. The stream for
/// (row, draw) depends only on (seed, dataset row, draw).
Frame simulate(const FactorizedDensity& density, const SampleView& sample, int draws, std::uint64_t seed);

/// Exact enumeration for all-binary mediators: one block of view.size() rows
/// per mediator configuration, with the configuration's probability per row.
struct MediatorLattice {
  Frame frame;                 // configurations x rows, configuration-major
  std::vector<double> weight;  // P(config | conditioning) per stacked row
  std::size_t configurations = 0;
};
MediatorLattice enumerate_binary(const FactorizedDensity& density, const SampleView& sample);

}  // namespace medmenu
