#ifndef HDQN_KEYDOOR_HPP
#define HDQN_KEYDOOR_HPP

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdqn/core.hpp"

namespace hdqn {

struct Cell {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(const Cell&, const Cell&) = default;
};

enum class EntityKind { agent, key, door, skull, ladder_bl, ladder_br };

inline constexpr std::array<EntityKind, 6> kAllEntityKinds = {
    EntityKind::agent, EntityKind::key, EntityKind::door,
    EntityKind::skull, EntityKind::ladder_bl, EntityKind::ladder_br};

inline std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::agent: return "agent";
    case EntityKind::key: return "key";
    case EntityKind::door: return "door";
    case EntityKind::skull: return "skull";
    case EntityKind::ladder_bl: return "ladder_bl";
    case EntityKind::ladder_br: return "ladder_br";
  }
  return "?";
}

struct Entity {
  EntityKind kind = EntityKind::agent;
  Cell position;
  bool alive = true;
};

/// Malformed ASCII map. `row` is the 0-based map row, or -1 for whole-map
/// problems (missing entities and the like).
class LayoutError : public std::invalid_argument {
 public:
  LayoutError(int row, const std::string& what) : std::invalid_argument(what), row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

/// Static description of a key-door room.
///
/// Map grammar, one string per row, all rows the same width:
///   `#` wall, `.` floor, `A` agent spawn, `K` key, `D` door,
///   `L` ladder landmark (exactly two; the left one is ladder_bl),
///   `S` skull patrol cell (two or more contiguous cells in one row).
/// Every non-`#` character is walkable floor. Cells outside the map are walls.
struct KeyDoorLayout {
  int width = 0;
  int height = 0;
  std::vector<bool> walls;
  Cell spawn;
  Cell key;
  Cell door;
  Cell ladder_bl;
  Cell ladder_br;
  int patrol_row = 0;
  int patrol_begin = 0;
  int patrol_length = 0;
  int step_limit = 500;

  bool wall(Cell c) const {
    if (c.x < 0 || c.y < 0 || c.x >= width || c.y >= height) return true;
    return walls[static_cast<std::size_t>(c.y * width + c.x)];
  }

  static KeyDoorLayout parse(const std::vector<std::string>& rows, int step_limit = 500) {
    if (rows.empty()) throw LayoutError(-1, "map is empty");
    KeyDoorLayout layout;
    layout.width = static_cast<int>(rows.front().size());
    layout.height = static_cast<int>(rows.size());
    layout.step_limit = step_limit;
    if (layout.width == 0) throw LayoutError(0, "map row is empty");
    if (step_limit <= 0) throw LayoutError(-1, "step limit must be positive");
    layout.walls.assign(static_cast<std::size_t>(layout.width * layout.height), false);

    std::optional<Cell> spawn, key, door;
    std::vector<Cell> ladders, skull;
    for (int y = 0; y < layout.height; ++y) {
      const auto& row = rows[static_cast<std::size_t>(y)];
      if (static_cast<int>(row.size()) != layout.width) {
        throw LayoutError(y, "map row width " + std::to_string(row.size()) + " differs from first row width " +
                                 std::to_string(layout.width));
      }
      for (int x = 0; x < layout.width; ++x) {
        const Cell c{x, y};
        auto unique = [&](std::optional<Cell>& slot, const char* name) {
          if (slot) throw LayoutError(y, std::string("duplicate ") + name + " in map");
          slot = c;
        };
        switch (row[static_cast<std::size_t>(x)]) {
          case '#': layout.walls[static_cast<std::size_t>(y * layout.width + x)] = true; break;
          case '.': break;
          case 'A': unique(spawn, "spawn 'A'"); break;
          case 'K': unique(key, "key 'K'"); break;
          case 'D': unique(door, "door 'D'"); break;
          case 'L': ladders.push_back(c); break;
          case 'S': skull.push_back(c); break;
          default:
            throw LayoutError(y, std::string("unknown map character '") + row[static_cast<std::size_t>(x)] + "'");
        }
      }
    }
    if (!spawn) throw LayoutError(-1, "map has no spawn 'A'");
    if (!key) throw LayoutError(-1, "map has no key 'K'");
    if (!door) throw LayoutError(-1, "map has no door 'D'");
    if (ladders.size() != 2) throw LayoutError(-1, "map must contain exactly two ladders 'L'");
    if (skull.size() < 2) throw LayoutError(-1, "skull patrol 'S' must span at least two cells");
    for (const auto& c : skull) {
      if (c.y != skull.front().y) throw LayoutError(c.y, "skull patrol cells must share one row");
    }
    for (std::size_t i = 1; i < skull.size(); ++i) {
      if (skull[i].x != skull[i - 1].x + 1) throw LayoutError(skull[i].y, "skull patrol cells must be contiguous");
    }
    std::sort(ladders.begin(), ladders.end(), [](Cell a, Cell b) { return a.x < b.x; });
    if (ladders[0].x == ladders[1].x) throw LayoutError(-1, "ladders must sit in different columns");
    layout.spawn = *spawn;
    layout.key = *key;
    layout.door = *door;
    layout.ladder_bl = ladders[0];
    layout.ladder_br = ladders[1];
    layout.patrol_row = skull.front().y;
    layout.patrol_begin = skull.front().x;
    layout.patrol_length = static_cast<int>(skull.size());
    return layout;
  }

  /// 12x9 room: spawn top-center, door top-right, key bottom-left,
  /// six-cell skull patrol along the bottom row, ladders at both sides.
  static const std::vector<std::string>& default_map() {
    static const std::vector<std::string> rows = {
        "############",
        "#....A....D#",
        "#..........#",
        "#..........#",
        "#..........#",
        "#L........L#",
        "#..........#",
        "#K.SSSSSS..#",
        "############",
    };
    return rows;
  }

  static KeyDoorLayout standard() { return parse(default_map()); }
};

/// Full dynamic state of the key-door room.
struct KeyDoorState {
  Cell agent_pos;
  int skull_offset = 0;  // index along the patrol segment
  bool skull_moving_left = false;
  bool has_key = false;
  int steps_elapsed = 0;
};

/// Deterministic gridworld with a key, a door and a patrolling skull.
///
/// Actions: 0 up, 1 down, 2 left, 3 right. Each step the agent moves (walls
/// block), then the skull advances one cell and turns around at the ends of
/// its segment. Picking up the key pays +100; entering the door holding the
/// key pays +300 and ends the episode. Touching the skull, or running out the
/// step limit, ends the episode without reward.
class KeyDoorEnv {
 public:
  static constexpr std::size_t kActions = 4;
  static constexpr double kKeyReward = 100.0;
  static constexpr double kDoorReward = 300.0;

  KeyDoorEnv() : KeyDoorEnv(KeyDoorLayout::standard()) {}
  explicit KeyDoorEnv(KeyDoorLayout layout) : layout_(std::move(layout)) { reset_state(); }

  const KeyDoorLayout& layout() const { return layout_; }

  std::size_t state_count() const {
    return static_cast<std::size_t>(layout_.width * layout_.height * layout_.patrol_length) * 2 * 2;
  }
  std::size_t action_count() const { return kActions; }

  StateId reset(RngStream&) {
    reset_state();
    return state();
  }

  StepOutcome step(ActionId a, RngStream&) {
    require(!terminal_, "KeyDoorEnv::step: episode is terminal; reset first");
    require(a.index < kActions, "KeyDoorEnv::step: action out of range");

    static constexpr std::array<Cell, 4> kMoves = {Cell{0, -1}, Cell{0, 1}, Cell{-1, 0}, Cell{1, 0}};
    const Cell move = kMoves[a.index];
    const Cell target{s_.agent_pos.x + move.x, s_.agent_pos.y + move.y};
    if (!layout_.wall(target)) s_.agent_pos = target;

    const Cell skull_before = skull_cell();
    advance_skull();
    ++s_.steps_elapsed;

    StepOutcome out{};
    if (s_.agent_pos == skull_before || s_.agent_pos == skull_cell()) {
      terminal_ = true;
    } else {
      if (!s_.has_key && s_.agent_pos == layout_.key) {
        s_.has_key = true;
        out.extrinsic_reward = kKeyReward;
      } else if (s_.has_key && s_.agent_pos == layout_.door) {
        out.extrinsic_reward = kDoorReward;
        terminal_ = true;
      }
      if (s_.steps_elapsed >= layout_.step_limit) terminal_ = true;
    }
    out.terminal = terminal_;
    out.next_state = state();
    return out;
  }

  StateId state() const { return encode(s_); }
  bool terminal() const { return terminal_; }
  const KeyDoorState& full_state() const { return s_; }

  Cell skull_cell() const { return Cell{layout_.patrol_begin + s_.skull_offset, layout_.patrol_row}; }

  std::vector<Entity> entities() const {
    return {
        Entity{EntityKind::agent, s_.agent_pos, true},
        Entity{EntityKind::key, layout_.key, !s_.has_key},
        Entity{EntityKind::door, layout_.door, true},
        Entity{EntityKind::skull, skull_cell(), true},
        Entity{EntityKind::ladder_bl, layout_.ladder_bl, true},
        Entity{EntityKind::ladder_br, layout_.ladder_br, true},
    };
  }

  StateId encode(const KeyDoorState& s) const {
    std::size_t id = static_cast<std::size_t>(s.agent_pos.y * layout_.width + s.agent_pos.x);
    id = id * static_cast<std::size_t>(layout_.patrol_length) + static_cast<std::size_t>(s.skull_offset);
    id = id * 2 + (s.skull_moving_left ? 1 : 0);
    id = id * 2 + (s.has_key ? 1 : 0);
    return StateId{id};
  }

  /// Inverse of encode, minus steps_elapsed (reported as 0).
  KeyDoorState decode(StateId id) const {
    require(id.index < state_count(), "KeyDoorEnv::decode: state out of range");
    std::size_t i = id.index;
    KeyDoorState s;
    s.has_key = (i % 2) == 1;
    i /= 2;
    s.skull_moving_left = (i % 2) == 1;
    i /= 2;
    s.skull_offset = static_cast<int>(i % static_cast<std::size_t>(layout_.patrol_length));
    i /= static_cast<std::size_t>(layout_.patrol_length);
    s.agent_pos = Cell{static_cast<int>(i) % layout_.width, static_cast<int>(i) / layout_.width};
    return s;
  }

 private:
  void reset_state() {
    s_ = KeyDoorState{layout_.spawn, 0, false, false, 0};
    terminal_ = false;
  }

  void advance_skull() {
    s_.skull_offset += s_.skull_moving_left ? -1 : 1;
    if (s_.skull_offset == 0 || s_.skull_offset == layout_.patrol_length - 1) {
      s_.skull_moving_left = !s_.skull_moving_left;
    }
  }

  KeyDoorLayout layout_;
  KeyDoorState s_;
  bool terminal_ = false;
};

}  // namespace hdqn

#endif  // HDQN_KEYDOOR_HPP
