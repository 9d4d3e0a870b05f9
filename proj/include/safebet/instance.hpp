#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safebet/smact.hpp"
#include "safebet/trace.hpp"

namespace safebet {

// What a committed region-crossing call/return does to the instance state.
struct TransferClass {
    bool new_instance = false;
    bool inherit = false;
    bool retain = false;
    bool purge = false;

    bool operator==(const TransferClass&) const = default;
};

// Inter-region call/return rules. `from != to` is the caller's job.
TransferClass classify_transfer(OpKind kind, int from, int to, std::optional<int> owner);

struct InstanceFrame {
    int region = 0;
    InstID inst = 0;

    bool operator==(const InstanceFrame&) const = default;
};

struct MatchContext {
    InstID current = 0;  // speculative, decode-side
    std::optional<InstID> lbtos;
    bool tos_is_owner = false;
    InstID committed_tos = 0;
};

// Instance counter, shadow counter, instance stack, and owner register.
// The counter increments speculatively at decode and never rolls back;
// the stack moves only at commit.
class InstanceTracker {
public:
    InstanceTracker(int initial_region, std::optional<int> owner, std::uint32_t depth_limit = 64);

    // Decode side. Returns the new speculative instID; sets `overflow`
    // when the 22-bit counter wraps (caller must flush the SMACT).
    InstID decode_transfer(bool& overflow);
    InstID decode_current() const { return current_; }

    // Squash recovery: the current-instID register is checkpointed per
    // in-flight branch; the counter itself never decrements.
    InstID checkpoint() const { return current_; }
    void restore(InstID saved) { current_ = saved; }

    // Commit side. `decode_inst` is the instID minted when this transfer
    // was decoded.
    void commit_transfer(OpKind kind, int from, int to, InstID decode_inst);

    void set_owner(int region) { owner_ = region; }
    std::optional<int> owner() const { return owner_; }

    MatchContext match_context() const;
    std::uint32_t depth() const { return static_cast<std::uint32_t>(stack_.size()); }
    std::uint32_t shadow() const { return shadow_; }
    const std::vector<InstanceFrame>& stack() const { return stack_; }
    std::string dump() const;

private:
    void push(InstanceFrame frame);

    InstID counter_;  // last issued instID
    InstID current_;  // decode-side speculative instID
    std::uint32_t shadow_;
    std::vector<InstanceFrame> stack_;
    std::optional<int> owner_;
    std::uint32_t depth_limit_;
};

}  // namespace safebet
