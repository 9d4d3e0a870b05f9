#include "safebet/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace safebet {

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::Load: return "load";
        case OpKind::Store: return "store";
        case OpKind::Branch: return "branch";
        case OpKind::Call: return "call";
        case OpKind::Return: return "return";
        case OpKind::Alu: return "alu";
        case OpKind::Fence: return "fence";
        case OpKind::Directive: return "directive";
    }
    return "?";
}

bool TraceHeader::secret_contains(Addr a) const {
    for (const auto& s : secrets)
        if (a >= s.addr && a < s.addr + s.len) return true;
    return false;
}

bool TraceHeader::data_contains(Addr a) const {
    for (const auto& d : data)
        if (a >= d.lo && a < d.hi) return true;
    return false;
}

ParseError::ParseError(int line_no, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}

int region_of(Addr pc, const std::vector<Region>& regions) {
    const Addr block = pc >> kRegionShift;
    for (const auto& r : regions)
        if ((r.base >> kRegionShift) == block) return r.id;
    throw std::out_of_range("pc outside every declared region");
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

std::uint64_t parse_u64(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(s, &pos, 0);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad number '" + s + "'");
    }
}

int parse_reg(const std::string& s, int line) {
    if (s.size() < 2 || s[0] != 'r') throw ParseError(line, "bad register '" + s + "'");
    return static_cast<int>(parse_u64(s.substr(1), line));
}

std::optional<OpKind> kind_from_name(const std::string& s) {
    static const std::pair<const char*, OpKind> table[] = {
        {"load", OpKind::Load},     {"store", OpKind::Store}, {"branch", OpKind::Branch},
        {"call", OpKind::Call},     {"return", OpKind::Return}, {"alu", OpKind::Alu},
        {"fence", OpKind::Fence},
    };
    for (const auto& [name, k] : table)
        if (s == name) return k;
    return std::nullopt;
}

std::string hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

Trace parse_trace(std::istream& in) {
    Trace t;
    std::string line;
    int line_no = 0;
    std::uint64_t last_seq = 0;
    bool any_op = false;

    auto region_declared = [&](int id) {
        return std::any_of(t.header.regions.begin(), t.header.regions.end(),
                           [&](const Region& r) { return r.id == id; });
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.empty()) continue;

        if (toks[0] == "#region") {
            if (toks.size() < 3) throw ParseError(line_no, "#region needs <id> <base-hex>");
            Region r;
            r.id = static_cast<int>(parse_u64(toks[1], line_no));
            r.base = parse_u64(toks[2], line_no);
            r.is_owner = toks.size() > 3 && toks[3] == "owner";
            if (r.base % kRegionBytes != 0)
                throw ParseError(line_no, "region base not 1-GB aligned");
            if (region_declared(r.id)) throw ParseError(line_no, "duplicate region id");
            t.header.regions.push_back(r);
            if (r.is_owner) t.header.owner = r.id;
            continue;
        }
        if (toks[0] == "#data") {
            if (toks.size() != 4) throw ParseError(line_no, "#data needs <lo> <hi> <region>");
            DataRange d;
            d.lo = parse_u64(toks[1], line_no);
            d.hi = parse_u64(toks[2], line_no);
            d.region = static_cast<int>(parse_u64(toks[3], line_no));
            if (!region_declared(d.region))
                throw ParseError(line_no, "undeclared region " + toks[3]);
            if (d.hi <= d.lo) throw ParseError(line_no, "empty data range");
            t.header.data.push_back(d);
            continue;
        }
        if (toks[0] == "#secret") {
            if (toks.size() != 3) throw ParseError(line_no, "#secret needs <addr> <len>");
            t.header.secrets.push_back({parse_u64(toks[1], line_no), parse_u64(toks[2], line_no)});
            continue;
        }
        if (toks[0] == "!") {
            if (toks.size() < 2) throw ParseError(line_no, "empty directive");
            MicroOp op;
            op.kind = OpKind::Directive;
            op.seq = any_op ? last_seq + 1 : 0;
            Directive d;
            if (toks[1] == "malloc" && toks.size() == 3) {
                d.kind = DirectiveKind::Malloc;
                d.size = parse_u64(toks[2], line_no);
            } else if (toks[1] == "free" && toks.size() == 3) {
                d.kind = DirectiveKind::Free;
                d.addr = parse_u64(toks[2], line_no);
            } else if (toks[1] == "set-owner" && toks.size() == 3) {
                d.kind = DirectiveKind::SetOwner;
                d.region = static_cast<int>(parse_u64(toks[2], line_no));
                if (!region_declared(d.region))
                    throw ParseError(line_no, "undeclared region " + toks[2]);
            } else {
                throw ParseError(line_no, "unknown directive '" + toks[1] + "'");
            }
            op.directive = d;
            last_seq = op.seq;
            any_op = true;
            t.ops.push_back(std::move(op));
            continue;
        }

        // Op line: <seq> <kind> pc=<hex> [fields...]
        if (toks.size() < 3) throw ParseError(line_no, "malformed op line");
        MicroOp op;
        op.seq = parse_u64(toks[0], line_no);
        auto k = kind_from_name(toks[1]);
        if (!k) throw ParseError(line_no, "unknown op kind '" + toks[1] + "'");
        op.kind = *k;
        for (std::size_t i = 2; i < toks.size(); ++i) {
            const std::string& f = toks[i];
            if (f.rfind("pc=", 0) == 0) {
                op.pc = parse_u64(f.substr(3), line_no);
            } else if (f.rfind("ea=", 0) == 0) {
                auto comma = f.find(',');
                if (comma == std::string::npos) throw ParseError(line_no, "ea needs <hex>,<size>");
                op.eff_addr = parse_u64(f.substr(3, comma - 3), line_no);
                op.access_size = static_cast<std::uint32_t>(parse_u64(f.substr(comma + 1), line_no));
            } else if (f.rfind("src=", 0) == 0) {
                std::string rest = f.substr(4);
                std::size_t start = 0;
                while (start <= rest.size()) {
                    auto comma = rest.find(',', start);
                    auto end = comma == std::string::npos ? rest.size() : comma;
                    op.src_regs.push_back(parse_reg(rest.substr(start, end - start), line_no));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            } else if (f.rfind("dst=", 0) == 0) {
                op.dst_reg = parse_reg(f.substr(4), line_no);
            } else if (f == "br") {
                if (i + 3 >= toks.size()) throw ParseError(line_no, "br needs pred/actual/resolve");
                BranchInfo b;
                auto flag = [&](const std::string& s, const char* key) -> bool {
                    std::string prefix = std::string(key) + "=";
                    if (s.rfind(prefix, 0) != 0 || s.size() != prefix.size() + 1 ||
                        (s.back() != 't' && s.back() != 'n'))
                        throw ParseError(line_no, "bad br field '" + s + "'");
                    return s.back() == 't';
                };
                b.predicted_taken = flag(toks[i + 1], "pred");
                b.actual_taken = flag(toks[i + 2], "actual");
                const std::string& rf = toks[i + 3];
                if (rf.rfind("resolve=", 0) != 0) throw ParseError(line_no, "br needs resolve=");
                b.resolve_after = static_cast<std::uint32_t>(parse_u64(rf.substr(8), line_no));
                op.branch = b;
                i += 3;
            } else if (f == "wp") {
                op.wrong_path = true;
            } else if (f == "secret") {
                op.secret_tag = true;
            } else {
                throw ParseError(line_no, "unknown field '" + f + "'");
            }
        }
        if (op.is_memory() && !op.eff_addr)
            throw ParseError(line_no, "load/store without ea");
        if (any_op && op.seq <= last_seq)
            throw ParseError(line_no, "seq not monotone");
        try {
            region_of(op.pc, t.header.regions);
        } catch (const std::out_of_range&) {
            throw ParseError(line_no, "pc " + hex(op.pc) + " in undeclared region");
        }
        last_seq = op.seq;
        any_op = true;
        t.ops.push_back(std::move(op));
    }

    // A wrong-path run that no branch can ever resolve would hang a pipeline.
    bool have_misp = false;
    for (const auto& op : t.ops) {
        if (op.wrong_path && !have_misp)
            throw ParseError(0, "wrong_path run not opened by a mispredicted branch");
        if (!op.wrong_path)
            have_misp = op.branch && op.branch->mispredicted();
    }
    return t;
}

Trace parse_trace_string(const std::string& text) {
    std::istringstream iss(text);
    return parse_trace(iss);
}

Trace parse_trace_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    return parse_trace(f);
}

std::string serialize_trace(const Trace& t) {
    std::ostringstream out;
    for (const auto& r : t.header.regions) {
        out << "#region " << r.id << ' ' << hex(r.base);
        if (r.is_owner) out << " owner";
        out << '\n';
    }
    for (const auto& d : t.header.data)
        out << "#data " << hex(d.lo) << ' ' << hex(d.hi) << ' ' << d.region << '\n';
    for (const auto& s : t.header.secrets)
        out << "#secret " << hex(s.addr) << ' ' << s.len << '\n';
    for (const auto& op : t.ops) {
        if (op.kind == OpKind::Directive) {
            const Directive& d = *op.directive;
            switch (d.kind) {
                case DirectiveKind::Malloc: out << "! malloc " << d.size; break;
                case DirectiveKind::Free: out << "! free " << hex(d.addr); break;
                case DirectiveKind::SetOwner: out << "! set-owner " << d.region; break;
            }
            out << '\n';
            continue;
        }
        out << op.seq << ' ' << op_kind_name(op.kind) << " pc=" << hex(op.pc);
        if (op.eff_addr) out << " ea=" << hex(*op.eff_addr) << ',' << op.access_size;
        if (!op.src_regs.empty()) {
            out << " src=";
            for (std::size_t i = 0; i < op.src_regs.size(); ++i)
                out << (i ? "," : "") << 'r' << op.src_regs[i];
        }
        if (op.dst_reg) out << " dst=r" << *op.dst_reg;
        if (op.branch)
            out << " br pred=" << (op.branch->predicted_taken ? 't' : 'n')
                << " actual=" << (op.branch->actual_taken ? 't' : 'n')
                << " resolve=" << op.branch->resolve_after;
        if (op.wrong_path) out << " wp";
        if (op.secret_tag) out << " secret";
        out << '\n';
    }
    return out.str();
}

std::vector<std::string> validate_trace(const Trace& t) {
    std::vector<std::string> diags;
    auto diag = [&](std::uint64_t seq, const std::string& msg) {
        diags.push_back("op " + std::to_string(seq) + ": " + msg);
    };

    bool shadow_open = false;  // inside a mispredict shadow
    for (const auto& op : t.ops) {
        if (op.kind == OpKind::Directive) {
            if (op.wrong_path) diag(op.seq, "directive on the wrong path");
            continue;
        }
        try {
            region_of(op.pc, t.header.regions);
        } catch (const std::out_of_range&) {
            diag(op.seq, "pc outside declared regions");
        }
        if (op.wrong_path && !shadow_open)
            diag(op.seq, "wrong_path op with no preceding mispredicted branch");
        if (!op.wrong_path) {
            // Committed memory ops must land in declared data space.
            if (op.is_memory() && op.eff_addr && !t.header.data_contains(*op.eff_addr))
                diag(op.seq, "committed access outside declared data space");
            shadow_open = op.branch && op.branch->mispredicted();
        }
    }
    return diags;
}

void TraceBuilder::region(int id, Addr base, bool owner) {
    trace_.header.regions.push_back({id, base, owner});
    if (owner) trace_.header.owner = id;
}

void TraceBuilder::data(Addr lo, Addr hi, int reg) {
    trace_.header.data.push_back({lo, hi, reg});
}

void TraceBuilder::secret(Addr addr, std::uint64_t len) {
    trace_.header.secrets.push_back({addr, len});
}

MicroOp& TraceBuilder::append(MicroOp op) {
    op.seq = next_seq_++;
    trace_.ops.push_back(std::move(op));
    return trace_.ops.back();
}

MicroOp& TraceBuilder::alu(Addr pc, std::vector<int> srcs, std::optional<int> dst) {
    MicroOp op;
    op.kind = OpKind::Alu;
    op.pc = pc;
    op.src_regs = std::move(srcs);
    op.dst_reg = dst;
    return append(std::move(op));
}

MicroOp& TraceBuilder::load(Addr pc, Addr ea, std::uint32_t size, std::vector<int> srcs,
                            std::optional<int> dst) {
    MicroOp op;
    op.kind = OpKind::Load;
    op.pc = pc;
    op.eff_addr = ea;
    op.access_size = size;
    op.src_regs = std::move(srcs);
    op.dst_reg = dst;
    return append(std::move(op));
}

MicroOp& TraceBuilder::store(Addr pc, Addr ea, std::uint32_t size, std::vector<int> srcs) {
    MicroOp op;
    op.kind = OpKind::Store;
    op.pc = pc;
    op.eff_addr = ea;
    op.access_size = size;
    op.src_regs = std::move(srcs);
    return append(std::move(op));
}

MicroOp& TraceBuilder::branch(Addr pc, BranchInfo info, std::vector<int> srcs) {
    MicroOp op;
    op.kind = OpKind::Branch;
    op.pc = pc;
    op.branch = info;
    op.src_regs = std::move(srcs);
    return append(std::move(op));
}

MicroOp& TraceBuilder::transfer(OpKind kind, Addr pc) {
    MicroOp op;
    op.kind = kind;
    op.pc = pc;
    return append(std::move(op));
}

MicroOp& TraceBuilder::malloc_directive(std::uint64_t size) {
    MicroOp op;
    op.kind = OpKind::Directive;
    op.directive = Directive{DirectiveKind::Malloc, size, 0, 0};
    return append(std::move(op));
}

MicroOp& TraceBuilder::free_directive(Addr addr) {
    MicroOp op;
    op.kind = OpKind::Directive;
    op.directive = Directive{DirectiveKind::Free, 0, addr, 0};
    return append(std::move(op));
}

MicroOp& TraceBuilder::set_owner_directive(int region) {
    MicroOp op;
    op.kind = OpKind::Directive;
    op.directive = Directive{DirectiveKind::SetOwner, 0, 0, region};
    return append(std::move(op));
}

}  // namespace safebet
