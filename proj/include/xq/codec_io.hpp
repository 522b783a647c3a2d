#pragma once

#include <string>
#include <string_view>

#include "xq/hierarchy.hpp"

namespace xq {

/// In-memory image of an encoded stream file. Codes are stored per branch,
/// per active residual step, at the step's native resolution.
struct CodeStream {
    std::string variant;                 // canonical grammar name
    uint16_t side = 0;                   // full grid side K
    std::vector<uint16_t> schedule;      // full N-step schedule
    uint8_t branches = 0;                // P
    uint8_t active_steps = 0;            // n <= N
    std::vector<BranchCodes> codes;      // `branches` entries, n steps each
};

// Byte-level serialization. Multi-byte integers are little-endian; equal
// in-memory values always serialize to equal bytes.
std::string serialize_codebook(const Codebook& cb);
Codebook parse_codebook(std::string_view bytes);

std::string serialize_stream(const CodeStream& s);
CodeStream parse_stream(std::string_view bytes);

// File wrappers. Writers go through a temp file and rename on success, so a
// failure never leaves a partial output behind.
void write_codebook(const std::string& path, const Codebook& cb);
Codebook read_codebook(const std::string& path);
void write_stream(const std::string& path, const CodeStream& s);
CodeStream read_stream(const std::string& path);

/// Builds the stream image for an encode outcome.
CodeStream make_stream(const HierarchySpec& spec, int side,
                       const QuantOutcome& outcome);

/// Information content of the stored codes:
/// P branches x sum over active steps of s_i^2 x bits-per-code, where a VQ
/// code costs ceil(log2 J) bits and a binary leaf code costs d_p bits.
uint64_t stream_bits(const CodeStream& s, const HierarchySpec& spec,
                     const std::vector<Codebook>& codebooks, int dim);

}  // namespace xq
