#include "l2map/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace l2map {

namespace {

void check_accuracy(double accuracy) {
  if (!(accuracy > 0.0 && accuracy < 1.0)) {
    throw std::invalid_argument("sensor accuracy must lie in (0,1), got " + std::to_string(accuracy));
  }
}

}  // namespace

double clamp_logodds(double l) { return std::clamp(l, -kLogOddsMax, kLogOddsMax); }

double effective_accuracy(double accuracy) {
  static const double cap = 1.0 - 1.0 / (1.0 + std::exp(kLogOddsMax));
  return std::min(accuracy, cap);
}

double logodds_to_prob(double l) { return 1.0 - 1.0 / (1.0 + std::exp(clamp_logodds(l))); }

double prob_to_logodds(double p) { return clamp_logodds(std::log(p) - std::log1p(-p)); }

double sensor_evidence(double accuracy) {
  check_accuracy(accuracy);
  // Rounded to a multiple of 2^-40: sums of up to thousands of +/- terms
  // within the clamp range are then exact, so update order cannot matter.
  constexpr double kQuantum = 0x1.0p40;
  return std::round(std::log(accuracy / (1.0 - accuracy)) * kQuantum) / kQuantum;
}

double update_cell(double l, bool reading, double accuracy) {
  const double evidence = sensor_evidence(accuracy);
  return clamp_logodds(reading ? l + evidence : l - evidence);
}

double cell_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double reading_probability(double p, double accuracy) {
  return p * accuracy + (1.0 - p) * (1.0 - accuracy);
}

double posterior_probability(double p, bool reading, double accuracy) {
  const double hit = reading ? accuracy : 1.0 - accuracy;
  const double joint = p * hit;
  return joint / (joint + (1.0 - p) * (1.0 - hit));
}

double expected_posterior_entropy(double p, double accuracy) {
  check_accuracy(accuracy);
  const double p1 = reading_probability(p, accuracy);
  return p1 * cell_entropy(posterior_probability(p, true, accuracy)) +
         (1.0 - p1) * cell_entropy(posterior_probability(p, false, accuracy));
}

BeliefGrid::BeliefGrid(int side, double initial_logodds) : side_(side) {
  if (side <= 0) throw std::invalid_argument("belief side must be positive");
  logodds_.assign(static_cast<std::size_t>(side) * side, clamp_logodds(initial_logodds));
}

std::size_t BeliefGrid::index(Cell c) const {
  if (!contains(c)) {
    throw std::out_of_range("cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                            ") outside " + std::to_string(side_) + "x" + std::to_string(side_) + " grid");
  }
  return static_cast<std::size_t>(c.row) * side_ + c.col;
}

void BeliefGrid::set_logodds(Cell c, double l) { logodds_[index(c)] = clamp_logodds(l); }

void BeliefGrid::apply(const Observation& obs, double accuracy) {
  check_accuracy(accuracy);
  const double evidence = sensor_evidence(accuracy);
  for (const auto& r : obs.readings) index(r.cell);
  for (const auto& r : obs.readings) {
    auto& l = logodds_[index(r.cell)];
    l = clamp_logodds(r.occupied ? l + evidence : l - evidence);
  }
}

double BeliefGrid::total_entropy() const {
  double sum = 0.0;
  for (double l : logodds_) sum += cell_entropy(logodds_to_prob(l));
  return sum;
}

BeliefGrid apply_observation(BeliefGrid belief, const Observation& obs, double accuracy) {
  belief.apply(obs, accuracy);
  return belief;
}

double total_entropy(const BeliefGrid& belief) { return belief.total_entropy(); }

FeatureTensor centered_raw(std::span<const double> probs, int side, Cell pose) {
  if (side <= 0 || probs.size() != static_cast<std::size_t>(side) * side) {
    throw std::invalid_argument("probability matrix does not match its side length");
  }
  const auto inside = [side](Cell c) { return c.row >= 0 && c.row < side && c.col >= 0 && c.col < side; };
  if (!inside(pose)) throw std::out_of_range("pose outside the belief grid");
  FeatureTensor out;
  out.side = 2 * side - 1;
  out.values.assign(static_cast<std::size_t>(FeatureTensor::kChannels) * out.side * out.side, 0.0);
  // Padding reads as certainly occupied: probability 1, entropy 0.
  for (int r = 0; r < out.side; ++r) {
    for (int c = 0; c < out.side; ++c) {
      const Cell src{pose.row - (side - 1) + r, pose.col - (side - 1) + c};
      if (inside(src)) {
        const double p = probs[static_cast<std::size_t>(src.row) * side + src.col];
        out.at(0, r, c) = p;
        out.at(1, r, c) = cell_entropy(p);
      } else {
        out.at(0, r, c) = 1.0;
      }
    }
  }
  return out;
}

FeatureTensor centered_raw(const BeliefGrid& belief, Cell pose) {
  std::vector<double> probs(belief.cell_count());
  std::transform(belief.raw().begin(), belief.raw().end(), probs.begin(), logodds_to_prob);
  return centered_raw(probs, belief.side(), pose);
}

FeatureTensor centered_features(const BeliefGrid& belief, Cell pose) {
  FeatureTensor out = centered_raw(belief, pose);
  const std::size_t plane = static_cast<std::size_t>(out.side) * out.side;
  for (std::size_t i = 0; i < plane; ++i) {
    out.values[i] = 2.0 * out.values[i] - 1.0;
    out.values[plane + i] = std::clamp(2.0 * out.values[plane + i] / std::numbers::ln2 - 1.0, -1.0, 1.0);
  }
  return out;
}

}  // namespace l2map
