#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace safebet {

using Addr = std::uint64_t;

// Code regions are aligned to and sized as one region block (1 GB by default).
inline constexpr std::uint64_t kRegionShift = 30;
inline constexpr std::uint64_t kRegionBytes = 1ull << kRegionShift;

struct Region {
    int id = 0;
    Addr base = 0;
    bool is_owner = false;

    bool operator==(const Region&) const = default;
};

// Half-open data range [lo, hi) assigned to one region's sandbox.
struct DataRange {
    Addr lo = 0;
    Addr hi = 0;
    int region = 0;

    bool operator==(const DataRange&) const = default;
};

struct SecretRange {
    Addr addr = 0;
    std::uint64_t len = 0;

    bool operator==(const SecretRange&) const = default;
};

enum class OpKind { Load, Store, Branch, Call, Return, Alu, Fence, Directive };

const char* op_kind_name(OpKind k);

enum class DirectiveKind { Malloc, Free, SetOwner };

struct Directive {
    DirectiveKind kind = DirectiveKind::Malloc;
    std::uint64_t size = 0;  // malloc
    Addr addr = 0;           // free
    int region = 0;          // set-owner

    bool operator==(const Directive&) const = default;
};

struct BranchInfo {
    bool predicted_taken = false;
    bool actual_taken = false;
    std::uint32_t resolve_after = 1;

    bool mispredicted() const { return predicted_taken != actual_taken; }
    bool operator==(const BranchInfo&) const = default;
};

struct MicroOp {
    std::uint64_t seq = 0;
    OpKind kind = OpKind::Alu;
    Addr pc = 0;
    std::optional<Addr> eff_addr;
    std::uint32_t access_size = 0;
    std::vector<int> src_regs;
    std::optional<int> dst_reg;
    std::optional<BranchInfo> branch;
    bool wrong_path = false;
    bool secret_tag = false;
    std::optional<Directive> directive;

    bool is_transfer() const { return kind == OpKind::Call || kind == OpKind::Return; }
    bool is_memory() const { return kind == OpKind::Load || kind == OpKind::Store; }
    bool operator==(const MicroOp&) const = default;
};

struct TraceHeader {
    std::vector<Region> regions;
    std::optional<int> owner;
    std::vector<DataRange> data;
    std::vector<SecretRange> secrets;

    bool secret_contains(Addr a) const;
    bool data_contains(Addr a) const;
    bool operator==(const TraceHeader&) const = default;
};

struct Trace {
    TraceHeader header;
    std::vector<MicroOp> ops;

    bool operator==(const Trace&) const = default;
};

struct ParseError : std::runtime_error {
    ParseError(int line_no, const std::string& msg);
    int line = 0;
};

// Line-oriented trace format; see README for the grammar.
Trace parse_trace(std::istream& in);
Trace parse_trace_string(const std::string& text);
Trace parse_trace_file(const std::string& path);
std::string serialize_trace(const Trace& t);

// Pure upper-bit slicing of pc into the declared region map. Throws
// std::out_of_range when pc falls outside every declared region.
int region_of(Addr pc, const std::vector<Region>& regions);

// Structural invariant checks on a parsed or constructed trace.
// Empty result means the trace is well formed.
std::vector<std::string> validate_trace(const Trace& t);

// Append-style construction with automatic seq numbering, used by the
// scenario generators and tests.
class TraceBuilder {
public:
    TraceHeader& header() { return trace_.header; }

    void region(int id, Addr base, bool owner = false);
    void data(Addr lo, Addr hi, int region);
    void secret(Addr addr, std::uint64_t len);

    MicroOp& alu(Addr pc, std::vector<int> srcs = {}, std::optional<int> dst = {});
    MicroOp& load(Addr pc, Addr ea, std::uint32_t size, std::vector<int> srcs = {},
                  std::optional<int> dst = {});
    MicroOp& store(Addr pc, Addr ea, std::uint32_t size, std::vector<int> srcs = {});
    MicroOp& branch(Addr pc, BranchInfo info, std::vector<int> srcs = {});
    MicroOp& transfer(OpKind kind, Addr pc);
    MicroOp& malloc_directive(std::uint64_t size);
    MicroOp& free_directive(Addr addr);
    MicroOp& set_owner_directive(int region);

    Trace take() { return std::move(trace_); }
    const Trace& peek() const { return trace_; }

private:
    MicroOp& append(MicroOp op);
    Trace trace_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace safebet
