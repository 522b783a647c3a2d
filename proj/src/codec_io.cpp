#include "xq/codec_io.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace xq {

namespace {

constexpr char kCodebookMagic[4] = {'X', 'Q', 'C', 'B'};
constexpr char kStreamMagic[4] = {'X', 'Q', 'C', 'S'};
constexpr uint8_t kFormatVersion = 1;

void put_u8(std::string& out, uint8_t v) {
    out.push_back(static_cast<char>(v));
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_f32(std::string& out, double v) {
    put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
}

// Sequential reader with offset-precise truncation errors.
class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    size_t offset() const { return offset_; }

    std::string_view take(size_t n, const char* what) {
        if (bytes_.size() - offset_ < n) {
            throw FormatError(std::string("truncated ") + what +
                              " at offset " + std::to_string(offset_));
        }
        std::string_view out = bytes_.substr(offset_, n);
        offset_ += n;
        return out;
    }

    uint8_t u8(const char* what) {
        return static_cast<uint8_t>(take(1, what)[0]);
    }

    uint16_t u16(const char* what) {
        std::string_view b = take(2, what);
        return static_cast<uint16_t>(static_cast<uint8_t>(b[0]) |
                                     (static_cast<uint8_t>(b[1]) << 8));
    }

    uint32_t u32(const char* what) {
        std::string_view b = take(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
        }
        return v;
    }

    double f32(const char* what) {
        return static_cast<double>(std::bit_cast<float>(u32(what)));
    }

    void expect_end() {
        if (offset_ != bytes_.size()) {
            throw FormatError("trailing bytes at offset " +
                              std::to_string(offset_));
        }
    }

private:
    std::string_view bytes_;
    size_t offset_ = 0;
};

void check_magic(Reader& r, const char (&magic)[4], const char* what) {
    size_t at = r.offset();
    std::string_view m = r.take(4, "header");
    if (std::memcmp(m.data(), magic, 4) != 0) {
        throw FormatError(std::string("bad ") + what + " magic at offset " +
                          std::to_string(at));
    }
    at = r.offset();
    uint8_t version = r.u8("header");
    if (version != kFormatVersion) {
        throw FormatError("unsupported format version " +
                          std::to_string(version) + " at offset " +
                          std::to_string(at));
    }
}

}  // namespace

std::string serialize_codebook(const Codebook& cb) {
    std::string out;
    out.append(kCodebookMagic, 4);
    put_u8(out, kFormatVersion);
    out.append(3, '\0');
    put_u32(out, static_cast<uint32_t>(cb.size()));
    put_u32(out, static_cast<uint32_t>(cb.dim()));
    for (double v : cb.entries()) {
        put_f32(out, v);
    }
    return out;
}

Codebook parse_codebook(std::string_view bytes) {
    Reader r(bytes);
    check_magic(r, kCodebookMagic, "codebook");
    r.take(3, "header");
    uint32_t size = r.u32("header");
    uint32_t dim = r.u32("header");
    if (size == 0 || dim == 0) {
        throw FormatError("codebook header declares a zero dimension");
    }
    std::vector<double> entries;
    entries.reserve(static_cast<size_t>(size) * dim);
    for (uint64_t i = 0; i < static_cast<uint64_t>(size) * dim; ++i) {
        entries.push_back(r.f32("codebook entries"));
    }
    r.expect_end();
    return {static_cast<int>(size), static_cast<int>(dim),
            std::move(entries)};
}

std::string serialize_stream(const CodeStream& s) {
    if (s.variant.size() > 0xFFFF) {
        throw ValueError("variant name too long");
    }
    if (s.schedule.empty() || s.schedule.size() > 0xFF) {
        throw ValueError("schedule length must lie in [1,255]");
    }
    if (s.branches == 0 || s.active_steps == 0 ||
        s.active_steps > s.schedule.size()) {
        throw ValueError("inconsistent stream branch/step counts");
    }
    if (s.codes.size() != s.branches) {
        throw ShapeError("stream carries " + std::to_string(s.codes.size()) +
                         " branch code sets for " +
                         std::to_string(s.branches) + " branches");
    }
    std::string out;
    out.append(kStreamMagic, 4);
    put_u8(out, kFormatVersion);
    put_u16(out, static_cast<uint16_t>(s.variant.size()));
    out.append(s.variant);
    put_u16(out, s.side);
    put_u8(out, static_cast<uint8_t>(s.schedule.size()));
    for (uint16_t side : s.schedule) {
        put_u16(out, side);
    }
    put_u8(out, s.branches);
    put_u8(out, s.active_steps);
    for (const BranchCodes& branch : s.codes) {
        if (branch.steps.size() != s.active_steps) {
            throw ShapeError("branch step count does not match active steps");
        }
        for (size_t i = 0; i < branch.steps.size(); ++i) {
            const CodeGrid& cg = branch.steps[i];
            int side = s.schedule[i];
            if (cg.height != side || cg.width != side ||
                cg.codes.size() != static_cast<size_t>(side) * side) {
                throw ShapeError("code grid " + std::to_string(i) +
                                 " does not match its scheduled resolution");
            }
            for (uint32_t code : cg.codes) {
                put_u32(out, code);
            }
        }
    }
    return out;
}

CodeStream parse_stream(std::string_view bytes) {
    Reader r(bytes);
    check_magic(r, kStreamMagic, "stream");
    CodeStream s;
    uint16_t name_len = r.u16("header");
    std::string_view name = r.take(name_len, "variant name");
    s.variant.assign(name);
    parse_variant(s.variant);  // rejects names outside the grammar
    s.side = r.u16("header");
    uint8_t sched_len = r.u8("header");
    if (sched_len == 0) {
        throw FormatError("stream declares an empty schedule");
    }
    for (int i = 0; i < sched_len; ++i) {
        uint16_t side = r.u16("schedule");
        if (side == 0 || (!s.schedule.empty() && side < s.schedule.back())) {
            throw FormatError("schedule entry " + std::to_string(i) +
                              " is not nondecreasing and positive");
        }
        s.schedule.push_back(side);
    }
    if (s.schedule.back() != s.side) {
        throw FormatError("schedule does not end at the declared grid side");
    }
    s.branches = r.u8("header");
    s.active_steps = r.u8("header");
    if (s.branches == 0 || s.active_steps == 0 ||
        s.active_steps > sched_len) {
        throw FormatError("inconsistent stream branch/step counts");
    }
    for (int b = 0; b < s.branches; ++b) {
        BranchCodes branch;
        for (int i = 0; i < s.active_steps; ++i) {
            int side = s.schedule[i];
            CodeGrid cg;
            cg.height = side;
            cg.width = side;
            cg.codes.reserve(static_cast<size_t>(side) * side);
            for (int p = 0; p < side * side; ++p) {
                cg.codes.push_back(r.u32("code block"));
            }
            branch.steps.push_back(std::move(cg));
        }
        s.codes.push_back(std::move(branch));
    }
    r.expect_end();
    return s;
}

namespace {

std::string load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path + " for reading");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failure on " + path);
    }
    return bytes;
}

void store_file(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp + " for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("write failure on " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path + ": " +
                      ec.message());
    }
}

}  // namespace

void write_codebook(const std::string& path, const Codebook& cb) {
    store_file(path, serialize_codebook(cb));
}

Codebook read_codebook(const std::string& path) {
    return parse_codebook(load_file(path));
}

void write_stream(const std::string& path, const CodeStream& s) {
    store_file(path, serialize_stream(s));
}

CodeStream read_stream(const std::string& path) {
    return parse_stream(load_file(path));
}

CodeStream make_stream(const HierarchySpec& spec, int side,
                       const QuantOutcome& outcome) {
    CodeStream s;
    s.variant = format_variant(spec);
    s.side = static_cast<uint16_t>(side);
    ScaleSchedule schedule = effective_schedule(spec, side);
    for (int sd : schedule.sides()) {
        s.schedule.push_back(static_cast<uint16_t>(sd));
    }
    s.branches = static_cast<uint8_t>(spec.product_branches);
    s.active_steps = static_cast<uint8_t>(outcome.active_steps);
    s.codes = outcome.branches;
    return s;
}

uint64_t stream_bits(const CodeStream& s, const HierarchySpec& spec,
                     const std::vector<Codebook>& codebooks, int dim) {
    std::vector<int> dims = branch_dims(spec, codebooks, dim);
    uint64_t total = 0;
    for (size_t p = 0; p < dims.size(); ++p) {
        const Codebook* cb =
                spec.leaf == LeafKind::VQ ? &codebooks[p] : nullptr;
        int bits = leaf_code_bits(spec.leaf, dims[p], cb);
        for (int i = 0; i < s.active_steps; ++i) {
            uint64_t side = s.schedule[i];
            total += side * side * static_cast<uint64_t>(bits);
        }
    }
    return total;
}

}  // namespace xq
