#include "safebet/instance.hpp"

#include <sstream>

namespace safebet {

TransferClass classify_transfer(OpKind kind, int from, int to, std::optional<int> owner) {
    TransferClass c;
    if (kind == OpKind::Call) {
        c.new_instance = true;
        c.inherit = owner && *owner == to;
        return c;
    }
    // Return.
    if (owner && *owner == from) {
        c.retain = true;
        return c;
    }
    c.new_instance = true;
    c.purge = true;
    return c;
}

InstanceTracker::InstanceTracker(int initial_region, std::optional<int> owner,
                                 std::uint32_t depth_limit)
    : counter_(1), current_(1), shadow_(1), owner_(owner), depth_limit_(depth_limit) {
    stack_.push_back({initial_region, 1});
}

InstID InstanceTracker::decode_transfer(bool& overflow) {
    counter_ = (counter_ + 1) & kInstMask;
    overflow = counter_ == 0;
    current_ = counter_;
    return counter_;
}

void InstanceTracker::push(InstanceFrame frame) {
    if (stack_.size() >= depth_limit_)
        stack_.erase(stack_.begin());  // bottom frame pushed out
    stack_.push_back(frame);
}

void InstanceTracker::commit_transfer(OpKind kind, int from, int to, InstID decode_inst) {
    const TransferClass c = classify_transfer(kind, from, to, owner_);
    if (kind == OpKind::Call) {
        push({to, decode_inst});
        ++shadow_;
        return;
    }
    // Returns. Retaining needs a trustworthy frame below TOS; if the stack
    // has run down to its last frame (deeper frames were bottom-dropped or
    // never existed), the target instance is unknown: new-instance semantics.
    if (c.retain && stack_.size() >= 2) {
        stack_.pop_back();
        --shadow_;
        return;
    }
    // Purge (or forced-new on underflow): discontinue inheritance entirely.
    stack_.clear();
    stack_.push_back({to, decode_inst});
    shadow_ = 1;
}

MatchContext InstanceTracker::match_context() const {
    MatchContext m;
    m.current = current_;
    if (!stack_.empty()) {
        m.committed_tos = stack_.back().inst;
        m.tos_is_owner = owner_ && *owner_ == stack_.back().region;
        if (stack_.size() >= 2) m.lbtos = stack_[stack_.size() - 2].inst;
    }
    return m;
}

std::string InstanceTracker::dump() const {
    std::ostringstream out;
    out << "inst ctr=" << counter_ << " shadow=" << shadow_ << " stack=[";
    for (std::size_t i = 0; i < stack_.size(); ++i)
        out << (i ? "," : "") << '(' << stack_[i].region << ',' << stack_[i].inst << ')';
    out << "] owner=" << (owner_ ? std::to_string(*owner_) : "-");
    return out.str();
}

}  // namespace safebet
