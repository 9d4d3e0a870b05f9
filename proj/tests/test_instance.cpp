#include "doctest.h"

#include "safebet/instance.hpp"

using namespace safebet;

TEST_CASE("call/return transfer classification") {
    const int owner = 9;
    // Call to the owner: new instance that may inherit.
    CHECK(classify_transfer(OpKind::Call, 1, owner, owner) ==
          TransferClass{true, true, false, false});
    // Call elsewhere: new instance, no inheritance.
    CHECK(classify_transfer(OpKind::Call, 1, 2, owner) == TransferClass{true, false, false, false});
    // Return from the owner: retain the caller's instance.
    CHECK(classify_transfer(OpKind::Return, owner, 1, owner) ==
          TransferClass{false, false, true, false});
    // Return from anywhere else: new instance and purge.
    CHECK(classify_transfer(OpKind::Return, 2, 1, owner) ==
          TransferClass{true, false, false, true});
    // No owner register set: every return purges.
    CHECK(classify_transfer(OpKind::Return, 2, 1, std::nullopt).purge);
}

TEST_CASE("decode counter is speculative and never rolls back") {
    InstanceTracker t(1, std::nullopt);
    CHECK(t.decode_current() == 1);
    bool ovf = false;
    CHECK(t.decode_transfer(ovf) == 2);
    const InstID cp = t.checkpoint();
    CHECK(t.decode_transfer(ovf) == 3);
    CHECK(t.decode_transfer(ovf) == 4);
    t.restore(cp);  // squash: current rewinds, the counter does not
    CHECK(t.decode_current() == 2);
    CHECK(t.decode_transfer(ovf) == 5);
    CHECK_FALSE(ovf);
}

TEST_CASE("counter overflow wraps at 22 bits") {
    InstanceTracker t(1, std::nullopt);
    bool ovf = false;
    for (std::uint32_t i = 0; i < kInstMask - 1; ++i) {
        t.decode_transfer(ovf);
        CHECK_FALSE(ovf);
    }
    t.decode_transfer(ovf);
    CHECK(ovf);
    CHECK(t.decode_current() == 0);
}

TEST_CASE("commit-side stack and shadow") {
    const int V = 1, O = 2;
    InstanceTracker t(V, O);
    CHECK(t.depth() == 1);
    CHECK(t.match_context().committed_tos == 1);

    t.commit_transfer(OpKind::Call, V, O, 7);
    CHECK(t.depth() == 2);
    CHECK(t.shadow() == 2);
    MatchContext m = t.match_context();
    CHECK(m.committed_tos == 7);
    CHECK(m.lbtos == 1);
    CHECK(m.tos_is_owner);

    // Return from owner retains the caller frame.
    t.commit_transfer(OpKind::Return, O, V, 8);
    CHECK(t.depth() == 1);
    CHECK(t.match_context().committed_tos == 1);
    CHECK_FALSE(t.match_context().lbtos.has_value());

    // Return from a non-owner region purges everything.
    t.commit_transfer(OpKind::Call, V, 3, 9);
    t.commit_transfer(OpKind::Return, 3, V, 10);
    CHECK(t.depth() == 1);
    CHECK(t.shadow() == 1);
    CHECK(t.match_context().committed_tos == 10);
}

TEST_CASE("depth overflow drops the bottom frame and forces purge on unwind") {
    InstanceTracker t(1, 2, 3);  // depth limit 3
    t.commit_transfer(OpKind::Call, 1, 2, 11);
    t.commit_transfer(OpKind::Call, 2, 1, 12);
    CHECK(t.depth() == 3);
    t.commit_transfer(OpKind::Call, 1, 2, 13);  // bottom frame pushed out
    CHECK(t.depth() == 3);
    CHECK(t.shadow() == 4);  // logical depth keeps counting

    // Unwinding past the dropped frame cannot trust the stack: purge.
    t.commit_transfer(OpKind::Return, 2, 1, 14);
    CHECK(t.depth() == 2);
    CHECK(t.shadow() == 3);
    t.commit_transfer(OpKind::Return, 2, 1, 15);
    CHECK(t.depth() == 1);
    // shadow != stack depth now resolved by the purge path
    t.commit_transfer(OpKind::Return, 2, 1, 16);
    CHECK(t.depth() == 1);
    CHECK(t.shadow() == 1);
    CHECK(t.match_context().committed_tos == 16);
}

TEST_CASE("dump format") {
    InstanceTracker t(1, 2);
    t.commit_transfer(OpKind::Call, 1, 2, 5);
    CHECK(t.dump() == "inst ctr=1 shadow=2 stack=[(1,1),(2,5)] owner=2");
}
