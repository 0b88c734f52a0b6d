#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/sicqta_engine.hpp"

using namespace sicsim;

namespace {

std::vector<Address> addresses(const std::vector<std::string>& strs) {
  std::vector<Address> out;
  for (const auto& s : strs) out.push_back(Address::from_string(s));
  return out;
}

std::vector<std::string> queries_of(const ResolutionTrace& trace) {
  std::vector<std::string> out;
  for (const auto& slot : trace.slots) out.push_back(slot.query.to_string());
  return out;
}

std::vector<SlotOutcome> outcomes_of(const ResolutionTrace& trace) {
  std::vector<SlotOutcome> out;
  for (const auto& slot : trace.slots) out.push_back(slot.outcome);
  return out;
}

std::uint64_t mask_of(const std::vector<int>& ids) {
  std::uint64_t mask = 0;
  for (int id : ids) mask |= (1ull << id);
  return mask;
}

// All size-M subsets of the 2^u addresses, for exhaustive property checks.
void for_each_config(int M, int u, const std::function<void(const std::vector<Address>&)>& fn) {
  const int n = 1 << u;
  std::vector<int> idx(M);
  for (int i = 0; i < M; ++i) idx[i] = i;
  while (true) {
    std::vector<Address> active;
    for (int i : idx) active.push_back(Address{static_cast<std::uint32_t>(i), u});
    fn(active);
    int pos = M - 1;
    while (pos >= 0 && idx[pos] == n - M + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < M; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

TEST_CASE("bit strings") {
  const Bits b = Bits::from_string("101");
  CHECK(b.len == 3);
  CHECK(b.value == 5);
  CHECK(b.bit(0) == 1);
  CHECK(b.bit(1) == 0);
  CHECK(b.bit(2) == 1);
  CHECK(b.to_string() == "101");
  CHECK(b.child(0).to_string() == "1010");
  CHECK(b.child(1).to_string() == "1011");
  CHECK(Bits::from_string("").len == 0);
  CHECK_THROWS_AS(Bits::from_string("10x"), std::invalid_argument);
}

TEST_CASE("golden trace: four users filling both subtrees") {
  const auto trace = run_tree(addresses({"000", "001", "100", "101"}), 3);

  CHECK(queries_of(trace) ==
        std::vector<std::string>{"", "0", "00", "000", "10", "100"});
  CHECK(outcomes_of(trace) ==
        std::vector<SlotOutcome>{SlotOutcome::collision, SlotOutcome::collision,
                                 SlotOutcome::collision, SlotOutcome::success,
                                 SlotOutcome::collision, SlotOutcome::success});
  CHECK(trace.slots[0].transmitters == mask_of({0, 1, 2, 3}));
  CHECK(trace.slots[1].transmitters == mask_of({0, 1}));
  CHECK(trace.slots[2].transmitters == mask_of({0, 1}));
  CHECK(trace.slots[3].transmitters == mask_of({0}));
  CHECK(trace.slots[4].transmitters == mask_of({2, 3}));
  CHECK(trace.slots[5].transmitters == mask_of({2}));

  CHECK(trace.label == "422121");
  CHECK(trace.slots_used == 6);
  CHECK(trace.non_idle_slots == 6);
  CHECK(trace.resolved == mask_of({0, 1, 2, 3}));

  REQUIRE(trace.events.size() == 4);
  CHECK(trace.events[0].slot_index == 3);
  CHECK(trace.events[0].user == 0);
  CHECK(trace.events[1].slot_index == 1);  // earliest of the two {0,1} slots
  CHECK(trace.events[1].user == 1);
  CHECK(trace.events[2].slot_index == 5);
  CHECK(trace.events[2].user == 2);
  CHECK(trace.events[3].slot_index == 4);
  CHECK(trace.events[3].user == 3);

  CHECK(trace.slots[1].recovered_by_sic == mask_of({1}));
  CHECK(trace.slots[4].recovered_by_sic == mask_of({3}));
  CHECK(trace.slots[0].recovered_by_sic == 0);

  CHECK(throughput_of_trace(trace) == doctest::Approx(4.0 / 6.0));

  const DecodeChain chain = decode_chain_of_trace(trace);
  REQUIRE(chain.size() == 4);
  // (slot, user, S, C, repeats) per decode, in decode order.
  CHECK(chain[0].slot_index == 3);
  CHECK(chain[0].slot_set == mask_of({0}));
  CHECK(chain[0].cancelled == mask_of({0}));
  CHECK(chain[0].repeat_count == 1);
  CHECK(chain[1].slot_index == 1);
  CHECK(chain[1].slot_set == mask_of({0, 1}));
  CHECK(chain[1].cancelled == mask_of({0, 1}));
  CHECK(chain[1].repeat_count == 2);  // slots 1 and 2 carry the same mix
  CHECK(chain[2].slot_index == 5);
  CHECK(chain[2].slot_set == mask_of({2}));
  CHECK(chain[2].cancelled == mask_of({2}));
  CHECK(chain[2].repeat_count == 1);
  CHECK(chain[3].slot_index == 4);
  CHECK(chain[3].slot_set == mask_of({2, 3}));
  CHECK(chain[3].cancelled == mask_of({2, 3}));
  CHECK(chain[3].repeat_count == 1);
}

TEST_CASE("golden trace: two users in one subtree") {
  const auto trace = run_tree(addresses({"000", "001"}), 3);
  CHECK(queries_of(trace) == std::vector<std::string>{"", "0", "00", "000"});
  CHECK(outcomes_of(trace) ==
        std::vector<SlotOutcome>{SlotOutcome::collision, SlotOutcome::collision,
                                 SlotOutcome::collision, SlotOutcome::success});
  CHECK(trace.label == "2221");
  CHECK(trace.slots_used == 4);
  REQUIRE(trace.events.size() == 2);
  CHECK(trace.events[0].slot_index == 3);
  CHECK(trace.events[0].user == 0);
  CHECK(trace.events[1].slot_index == 0);  // cancellation credited to the earliest slot
  CHECK(trace.events[1].user == 1);
  CHECK(trace.slots[0].recovered_by_sic == mask_of({1}));

  const DecodeChain chain = decode_chain_of_trace(trace);
  REQUIRE(chain.size() == 2);
  CHECK(chain[1].slot_set == mask_of({0, 1}));
  CHECK(chain[1].cancelled == mask_of({0, 1}));
  CHECK(chain[1].repeat_count == 3);  // three identical {0,1} slots
}

TEST_CASE("golden trace: free skip after cancellation") {
  const auto trace = run_tree(addresses({"110", "111"}), 3);
  CHECK(queries_of(trace) == std::vector<std::string>{"", "0", "10", "110"});
  CHECK(outcomes_of(trace) ==
        std::vector<SlotOutcome>{SlotOutcome::collision, SlotOutcome::idle,
                                 SlotOutcome::idle, SlotOutcome::success});
  CHECK(trace.label == "21");
  CHECK(trace.slots_used == 4);
  CHECK(trace.non_idle_slots == 2);
  CHECK(trace.resolved == mask_of({0, 1}));
}

TEST_CASE("golden trace: skipped query depends on sibling occupancy") {
  const auto trace = run_tree(addresses({"100", "110", "111"}), 3);
  CHECK(queries_of(trace) ==
        std::vector<std::string>{"", "0", "10", "11", "110"});
  CHECK(outcomes_of(trace) ==
        std::vector<SlotOutcome>{SlotOutcome::collision, SlotOutcome::idle,
                                 SlotOutcome::success, SlotOutcome::collision,
                                 SlotOutcome::success});
  CHECK(trace.label == "3121");
  REQUIRE(trace.events.size() == 3);
  CHECK(trace.events[0].slot_index == 2);
  CHECK(trace.events[0].user == 0);
  CHECK(trace.events[1].slot_index == 4);
  CHECK(trace.events[1].user == 1);
  CHECK(trace.events[2].slot_index == 3);
  CHECK(trace.events[2].user == 2);
  CHECK(trace.slots[3].recovered_by_sic == mask_of({2}));
}

TEST_CASE("single user resolves in one slot") {
  const auto trace = run_tree(addresses({"000"}), 3);
  CHECK(trace.slots_used == 1);
  CHECK(trace.label == "1");
  CHECK(trace.slots[0].outcome == SlotOutcome::success);
  CHECK(throughput_of_trace(trace) == doctest::Approx(1.0));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(run_tree(addresses({"000", "000"}), 3), std::invalid_argument);
  CHECK_THROWS_AS(run_tree(addresses({"00"}), 3), std::invalid_argument);
  CHECK_THROWS_AS(run_tree({}, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_tree(addresses({"0"}), 31), std::invalid_argument);
}

TEST_CASE("trace export format") {
  const auto trace = run_tree(addresses({"000", "001"}), 3);
  std::ostringstream os;
  export_trace(trace, os);
  CHECK(os.str() ==
        ",0;1,collision,1\n"
        "0,0;1,collision,\n"
        "00,0;1,collision,\n"
        "000,0,success,\n");
}

TEST_CASE("label census at depth 3") {
  std::set<std::string> labels2, labels3, labels4;
  for_each_config(2, 3, [&](const std::vector<Address>& a) {
    labels2.insert(run_tree(a, 3).label);
  });
  for_each_config(3, 3, [&](const std::vector<Address>& a) {
    labels3.insert(run_tree(a, 3).label);
  });
  for_each_config(4, 3, [&](const std::vector<Address>& a) {
    labels4.insert(run_tree(a, 3).label);
  });
  CHECK(labels2 == std::set<std::string>{"21", "221", "2221"});
  CHECK(labels3 ==
        std::set<std::string>{"311", "3121", "321", "3221", "3311", "3321"});
  CHECK(labels4 == std::set<std::string>{"41121", "4121", "4211", "42121",
                                         "42211", "422121", "4311", "4321",
                                         "44211"});
  // No tree configuration of four users produces "4111": decode chains for
  // that label have to be synthesized from its shape.
  CHECK(labels4.count("4111") == 0);
}

TEST_CASE("walk invariants over every configuration") {
  for (int u = 2; u <= 4; ++u) {
    for (int M = 1; M <= std::min(6, 1 << u); ++M) {
      for_each_config(M, u, [&](const std::vector<Address>& active) {
        const auto trace = run_tree(active, u);

        // Everyone resolves, exactly once, within the slot budget.
        CHECK(trace.resolved == (M == 64 ? ~0ull : (1ull << M) - 1));
        CHECK(static_cast<int>(trace.events.size()) == M);
        CHECK(trace.slots_used <= (1 << (u + 1)));
        CHECK(trace.slots_used == static_cast<int>(trace.slots.size()));

        // Transmitter sets are exactly the prefix-matching users.
        int non_idle = 0;
        for (const auto& slot : trace.slots) {
          std::uint64_t expect = 0;
          for (std::size_t i = 0; i < active.size(); ++i) {
            const auto& q = slot.query;
            bool match = true;
            for (int b = 0; b < q.len; ++b) {
              if (active[i].bit(b) != q.bit(b)) { match = false; break; }
            }
            // A user leaves the channel once resolved before this slot.
            if (match) expect |= (1ull << i);
          }
          if (slot.outcome != SlotOutcome::idle) ++non_idle;
          // Occupancy consistent with the outcome.
          const int occ = popcount64(slot.transmitters);
          if (slot.outcome == SlotOutcome::idle) CHECK(occ == 0);
          if (slot.outcome == SlotOutcome::success) CHECK(occ == 1);
          if (slot.outcome == SlotOutcome::collision) CHECK(occ >= 2);
          CHECK((slot.transmitters & ~expect) == 0);  // only matching users transmit
        }
        CHECK(non_idle == trace.non_idle_slots);

        // Label matches the non-idle occupancies.
        std::string label;
        for (const auto& slot : trace.slots) {
          if (slot.outcome == SlotOutcome::idle) continue;
          const int occ = popcount64(slot.transmitters);
          if (occ <= 9) label += static_cast<char>('0' + occ);
          else label += "(" + std::to_string(occ) + ")";
        }
        CHECK(label == trace.label);

        // Deterministic and idempotent.
        const auto again = run_tree(active, u);
        CHECK(again.label == trace.label);
        CHECK(again.slots_used == trace.slots_used);
        CHECK(again.resolved == trace.resolved);
      });
    }
  }
}

TEST_CASE("throughput accounting") {
  const auto trace = run_tree(addresses({"110", "111"}), 3);
  // 2 users over 4 slots, idle slots included.
  CHECK(throughput_of_trace(trace) == doctest::Approx(0.5));
}

TEST_CASE("decode chain covers every user exactly once") {
  for_each_config(4, 3, [&](const std::vector<Address>& active) {
    const auto trace = run_tree(active, 3);
    const auto chain = decode_chain_of_trace(trace);
    REQUIRE(chain.size() == 4);
    std::uint64_t seen = 0;
    std::uint64_t cancelled_so_far = 0;
    for (const auto& step : chain) {
      CHECK((seen & (1ull << step.user)) == 0);
      seen |= (1ull << step.user);
      // C = (S intersect resolved-so-far) union {user}.
      const std::uint64_t expect_c =
          (step.slot_set & cancelled_so_far) | (1ull << step.user);
      CHECK(step.cancelled == expect_c);
      CHECK((step.cancelled & ~step.slot_set) == 0);
      CHECK((step.cancelled & (1ull << step.user)) != 0);
      cancelled_so_far |= (1ull << step.user);
      CHECK(step.repeat_count >= 1);
    }
    CHECK(seen == mask_of({0, 1, 2, 3}));
  });
}
