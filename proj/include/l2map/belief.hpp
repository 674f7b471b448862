#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "l2map/types.hpp"

namespace l2map {

/// Log-odds saturation bound. Posteriors stay within ~2e-9 of certainty.
inline constexpr double kLogOddsMax = 20.0;

double clamp_logodds(double l);

/// Caps a sensor accuracy of 1 to the largest value the clamp can represent,
/// so a perfect sensor saturates cells instead of being rejected.
double effective_accuracy(double accuracy);

/// Occupancy probability 1 - 1/(1+e^l) of a (clamped) log-odds value.
double logodds_to_prob(double l);
double prob_to_logodds(double p);

/// ln(accuracy / (1 - accuracy)) rounded to a multiple of 2^-40.
double sensor_evidence(double accuracy);

/// One recursive Bayes filter step for a symmetric binary sensor with the
/// given accuracy. The prior-odds term is zero (uniform prior).
double update_cell(double l, bool reading, double accuracy);

/// Binary entropy in nats with 0 ln 0 = 0.
double cell_entropy(double p);

/// Probability that the sensor reports "occupied" for a cell with belief p.
double reading_probability(double p, double accuracy);

/// Bayes posterior of a cell with belief p after observing `reading`.
double posterior_probability(double p, bool reading, double accuracy);

/// Expected entropy of one cell after one noisy reading of it.
double expected_posterior_entropy(double p, double accuracy);

/// Factorized occupancy belief over a square grid, stored as log-odds.
class BeliefGrid {
 public:
  BeliefGrid() = default;
  explicit BeliefGrid(int side, double initial_logodds = 0.0);

  int side() const { return side_; }
  std::size_t cell_count() const { return logodds_.size(); }

  bool contains(Cell c) const { return c.row >= 0 && c.row < side_ && c.col >= 0 && c.col < side_; }

  double logodds(Cell c) const { return logodds_[index(c)]; }
  double prob(Cell c) const { return logodds_to_prob(logodds(c)); }
  double entropy(Cell c) const { return cell_entropy(prob(c)); }

  /// Stores a clamped value. Throws on out-of-grid cells.
  void set_logodds(Cell c, double l);

  std::span<const double> raw() const { return logodds_; }

  /// Applies every reading of `obs`. Throws std::out_of_range (leaving the
  /// belief untouched) when any cell is outside the grid.
  void apply(const Observation& obs, double accuracy);

  double total_entropy() const;

  bool operator==(const BeliefGrid&) const = default;

 private:
  std::size_t index(Cell c) const;

  int side_ = 0;
  std::vector<double> logodds_;
};

BeliefGrid apply_observation(BeliefGrid belief, const Observation& obs, double accuracy);
double total_entropy(const BeliefGrid& belief);

/// Two-channel pose-centered view of the belief: channel 0 holds occupancy
/// probabilities, channel 1 their point-wise entropies. Cells outside the map
/// read as certainly occupied.
struct FeatureTensor {
  int side = 0;  // 2N - 1
  std::vector<double> values;  // [channel][row][col], channel-major

  static constexpr int kChannels = 2;

  double at(int channel, int row, int col) const {
    return values[(static_cast<std::size_t>(channel) * side + row) * side + col];
  }
  double& at(int channel, int row, int col) {
    return values[(static_cast<std::size_t>(channel) * side + row) * side + col];
  }
  std::size_t size() const { return values.size(); }
};

/// Unscaled centered belief C and entropy map H(C) (values in [0,1] and
/// [0, ln 2]).
FeatureTensor centered_raw(const BeliefGrid& belief, Cell pose);

/// Same as above for a row-major side x side matrix of occupancy
/// probabilities.
FeatureTensor centered_raw(std::span<const double> probs, int side, Cell pose);

/// centered_raw rescaled to [-1, 1]: beliefs by v -> 2v - 1, entropies by
/// v -> 2v / ln 2 - 1.
FeatureTensor centered_features(const BeliefGrid& belief, Cell pose);

}  // namespace l2map
