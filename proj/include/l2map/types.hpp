#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace l2map {

struct Cell {
  int row = 0;
  int col = 0;

  bool operator==(const Cell&) const = default;
};

/// Robot position on the grid. Orientation is not modelled.
using Pose = Cell;

enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr int kActionCount = 4;
inline constexpr std::array<Action, kActionCount> kActions = {Action::Up, Action::Down, Action::Left,
                                                              Action::Right};

constexpr Cell shifted(Cell c, Action a) {
  switch (a) {
    case Action::Up:
      return {c.row - 1, c.col};
    case Action::Down:
      return {c.row + 1, c.col};
    case Action::Left:
      return {c.row, c.col - 1};
    case Action::Right:
      return {c.row, c.col + 1};
  }
  return c;
}

constexpr std::string_view action_name(Action a) {
  switch (a) {
    case Action::Up:
      return "up";
    case Action::Down:
      return "down";
    case Action::Left:
      return "left";
    case Action::Right:
      return "right";
  }
  return "?";
}

struct Reading {
  Cell cell;
  bool occupied = false;

  bool operator==(const Reading&) const = default;
};

/// One sensing event: a reading for each distinct sensed cell.
struct Observation {
  std::vector<Reading> readings;

  bool operator==(const Observation&) const = default;
};

}  // namespace l2map
