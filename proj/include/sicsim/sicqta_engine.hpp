#pragma once

// Query-tree collision resolution with successive interference cancellation.
// The receiver queries address prefixes depth-first (bit 0 first).  Each
// decoded packet is subtracted from every earlier collision slot; a residual
// that shrinks to a single packet decodes it without a new transmission, and
// queries whose remaining population is empty (or whose outcome is already
// implied) are skipped without spending a slot.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sicsim {

// A fixed-width bit string, used both for device addresses (length u) and
// for query prefixes (length 0..u).  Bit 0 is the most significant bit.
struct Bits {
  std::uint32_t value = 0;
  int len = 0;

  static Bits from_string(const std::string& s);  // throws on non-binary chars
  std::string to_string() const;
  int bit(int i) const { return static_cast<int>((value >> (len - 1 - i)) & 1u); }
  Bits child(int b) const {
    return Bits{(value << 1) | static_cast<std::uint32_t>(b), len + 1};
  }
  bool operator==(const Bits&) const = default;
};

using Address = Bits;
using Query = Bits;

enum class SlotOutcome { idle, success, collision };

std::string to_string(SlotOutcome outcome);

struct SlotRecord {
  Query query;
  std::uint64_t transmitters = 0;      // bitmask over user indices
  SlotOutcome outcome = SlotOutcome::idle;
  std::uint64_t recovered_by_sic = 0;  // users recovered from this slot by cancellation
};

struct DecodeEvent {
  int slot_index = 0;
  int user = 0;
};

struct ResolutionTrace {
  std::vector<SlotRecord> slots;    // every issued query, idle slots included
  std::uint64_t resolved = 0;       // bitmask of resolved users
  int slots_used = 0;               // == slots.size(), idle slots included
  int non_idle_slots = 0;
  std::string label;                // occupancies of non-idle slots, in order
  std::vector<DecodeEvent> events;  // decode order (direct and cancellation)
};

// Resolve all active users (addresses of length u, all distinct).  Users are
// identified by their index in `active`.  Deterministic; throws
// std::invalid_argument on duplicate addresses, wrong lengths, more than 64
// users, or u outside [1, 30].
ResolutionTrace run_tree(const std::vector<Address>& active, int u);

// Packets resolved per slot spent.
double throughput_of_trace(const ResolutionTrace& trace);

struct DecodeStep {
  int slot_index = 0;          // slot the user was decoded from
  int user = 0;
  std::uint64_t slot_set = 0;  // S: transmitters of that slot
  std::uint64_t cancelled = 0; // C at this step, target included
  int repeat_count = 1;        // slots sharing the same transmitter set
};
using DecodeChain = std::vector<DecodeStep>;

// Decoding steps in decode order, each annotated with the transmitter set of
// its slot, the cancellation set in effect, and the number of slots carrying
// an identical transmitter set (independent decoding attempts of the same
// packet mix).
DecodeChain decode_chain_of_trace(const ResolutionTrace& trace);

// Line-oriented export: one slot per line, `query,transmitters,outcome,
// sic_recovered`; sets are ';'-joined user indices, the root query is the
// empty string.
void export_trace(const ResolutionTrace& trace, std::ostream& out);

int popcount64(std::uint64_t mask);
std::vector<int> mask_to_ids(std::uint64_t mask);

}  // namespace sicsim
