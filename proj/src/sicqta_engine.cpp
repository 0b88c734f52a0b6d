#include "sicsim/sicqta_engine.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <ostream>
#include <stdexcept>

namespace sicsim {

int popcount64(std::uint64_t mask) { return std::popcount(mask); }

std::vector<int> mask_to_ids(std::uint64_t mask) {
  std::vector<int> ids;
  for (int i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) ids.push_back(i);
  }
  return ids;
}

Bits Bits::from_string(const std::string& s) {
  Bits b;
  if (s.size() > 30) throw std::invalid_argument("bit string longer than 30 bits");
  for (char c : s) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("bit string may contain only '0' and '1'");
    b.value = (b.value << 1) | static_cast<std::uint32_t>(c - '0');
    ++b.len;
  }
  return b;
}

std::string Bits::to_string() const {
  std::string s(static_cast<std::size_t>(len), '0');
  for (int i = 0; i < len; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>('0' + bit(i));
  return s;
}

std::string to_string(SlotOutcome outcome) {
  switch (outcome) {
    case SlotOutcome::idle: return "idle";
    case SlotOutcome::success: return "success";
    case SlotOutcome::collision: return "collision";
  }
  return "?";
}

namespace {

// Occupancy digit for the label; occupancies above 9 are parenthesized to
// keep the string unambiguous.
std::string label_digit(int occupancy) {
  if (occupancy <= 9) return std::string(1, static_cast<char>('0' + occupancy));
  return "(" + std::to_string(occupancy) + ")";
}

struct Walk {
  const std::vector<Address>& active;
  int u;
  std::uint64_t resolved = 0;
  std::vector<SlotRecord> slots;
  std::vector<std::uint64_t> residual;  // parallel to slots; nonzero only for collisions
  std::vector<DecodeEvent> events;
  std::string label;
  int non_idle = 0;

  explicit Walk(const std::vector<Address>& a, int depth) : active(a), u(depth) {}

  std::uint64_t match(const Bits& prefix) const {
    if (prefix.len == 0) return (active.size() == 64) ? ~0ull : ((1ull << active.size()) - 1);
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if ((active[i].value >> (u - prefix.len)) == prefix.value)
        mask |= 1ull << i;
    }
    return mask;
  }

  void decode(int user, int slot_index, bool via_sic) {
    resolved |= 1ull << user;
    events.push_back({slot_index, user});
    if (via_sic) slots[static_cast<std::size_t>(slot_index)].recovered_by_sic |= 1ull << user;
  }

  // Subtract every resolved user from every collision slot's residual; each
  // residual that shrinks to a single packet decodes it, credited to the
  // slot with the fewest transmitters (earliest on ties).  Iterate until no
  // residual changes.
  void cascade() {
    for (;;) {
      for (std::size_t i = 0; i < slots.size(); ++i) residual[i] &= ~resolved;
      // user -> (transmitter count, slot index) of the best crediting slot
      std::map<int, std::pair<int, int>> singletons;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].outcome != SlotOutcome::collision) continue;
        if (popcount64(residual[i]) != 1) continue;
        const int user = mask_to_ids(residual[i])[0];
        const std::pair<int, int> rank{popcount64(slots[i].transmitters),
                                       static_cast<int>(i)};
        auto it = singletons.find(user);
        if (it == singletons.end() || rank < it->second) singletons[user] = rank;
      }
      if (singletons.empty()) return;
      for (const auto& [user, rank] : singletons) decode(user, rank.second, true);
    }
  }

  void run() {
    struct Frame {
      Bits prefix;
      bool parent_real = true;
      bool is_right = false;
    };
    std::vector<Frame> stack;
    stack.push_back({Bits{}, true, false});

    while (!stack.empty()) {
      const Frame frame = stack.back();
      stack.pop_back();

      bool transmit = true;
      if (frame.is_right) {
        const std::uint64_t remaining = match(frame.prefix) & ~resolved;
        if (remaining == 0) continue;  // nothing left under this prefix
        // A right sibling's outcome is implied (its population is the
        // parent's remainder) when the parent slot was actually observed, or
        // when the observed parent is further up and the left sibling is
        // known to be empty.  In those cases descend without a query.
        const bool left_sibling_empty =
            match(Bits{frame.prefix.value ^ 1u, frame.prefix.len}) == 0;
        const bool descend_without_slot = frame.parent_real || left_sibling_empty;
        transmit = !descend_without_slot;
        if (!transmit) {
          if (frame.prefix.len < u) {
            stack.push_back({frame.prefix.child(1), false, true});
            stack.push_back({frame.prefix.child(0), false, false});
          }
          continue;
        }
      }

      // Issue the query: resolved users no longer answer.
      const std::uint64_t tx = match(frame.prefix) & ~resolved;
      const int slot_index = static_cast<int>(slots.size());
      SlotRecord record;
      record.query = frame.prefix;
      record.transmitters = tx;
      const int occupancy = popcount64(tx);
      if (occupancy == 0) {
        record.outcome = SlotOutcome::idle;
        slots.push_back(record);
        residual.push_back(0);
        continue;
      }
      label += label_digit(occupancy);
      ++non_idle;
      if (occupancy == 1) {
        record.outcome = SlotOutcome::success;
        slots.push_back(record);
        residual.push_back(0);
        decode(mask_to_ids(tx)[0], slot_index, false);
        cascade();
        continue;
      }
      record.outcome = SlotOutcome::collision;
      slots.push_back(record);
      residual.push_back(tx);
      if (frame.prefix.len >= u)
        throw std::logic_error("collision among full-length addresses");
      stack.push_back({frame.prefix.child(1), true, true});
      stack.push_back({frame.prefix.child(0), true, false});
    }
  }
};

}  // namespace

ResolutionTrace run_tree(const std::vector<Address>& active, int u) {
  if (u < 1 || u > 30) throw std::invalid_argument("address size u must be in [1, 30]");
  if (active.empty()) throw std::invalid_argument("active set must be non-empty");
  if (active.size() > 64) throw std::invalid_argument("at most 64 active users supported");
  for (const Address& a : active) {
    if (a.len != u)
      throw std::invalid_argument("address '" + a.to_string() + "' does not have length u");
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t j = i + 1; j < active.size(); ++j) {
      if (active[i] == active[j])
        throw std::invalid_argument("duplicate address '" + active[i].to_string() + "'");
    }
  }

  Walk walk(active, u);
  walk.run();

  ResolutionTrace trace;
  trace.slots = std::move(walk.slots);
  trace.resolved = walk.resolved;
  trace.slots_used = static_cast<int>(trace.slots.size());
  trace.non_idle_slots = walk.non_idle;
  trace.label = std::move(walk.label);
  trace.events = std::move(walk.events);
  return trace;
}

double throughput_of_trace(const ResolutionTrace& trace) {
  if (trace.slots_used == 0) return 0.0;
  return static_cast<double>(popcount64(trace.resolved)) /
         static_cast<double>(trace.slots_used);
}

DecodeChain decode_chain_of_trace(const ResolutionTrace& trace) {
  DecodeChain chain;
  std::uint64_t resolved_so_far = 0;
  std::map<std::uint64_t, int> decodes_per_set;
  for (const DecodeEvent& event : trace.events) {
    const SlotRecord& slot = trace.slots[static_cast<std::size_t>(event.slot_index)];
    DecodeStep step;
    step.slot_index = event.slot_index;
    step.user = event.user;
    step.slot_set = slot.transmitters;
    step.cancelled = (slot.transmitters & resolved_so_far) | (1ull << event.user);
    step.repeat_count = 0;
    for (const SlotRecord& other : trace.slots) {
      if (other.outcome != SlotOutcome::idle && other.transmitters == slot.transmitters)
        ++step.repeat_count;
    }
    if (++decodes_per_set[slot.transmitters] > 1)
      throw std::logic_error("multiple decodes credited to one repeated slot group");
    resolved_so_far |= 1ull << event.user;
    chain.push_back(step);
  }
  return chain;
}

void export_trace(const ResolutionTrace& trace, std::ostream& out) {
  const auto join_ids = [](std::uint64_t mask) {
    std::string s;
    for (int id : mask_to_ids(mask)) {
      if (!s.empty()) s += ';';
      s += std::to_string(id);
    }
    return s;
  };
  for (const SlotRecord& slot : trace.slots) {
    out << slot.query.to_string() << ',' << join_ids(slot.transmitters) << ','
        << to_string(slot.outcome) << ',' << join_ids(slot.recovered_by_sic) << '\n';
  }
}

}  // namespace sicsim
