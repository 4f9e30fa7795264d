#pragma once

#include <iosfwd>
#include <string>

#include "memlb/harness.hpp"
#include "memlb/instance.hpp"
#include "memlb/ovg.hpp"

namespace memlb {

// Sign-matrix text format: header line "d n scale", then n lines of d
// characters from {+,-}.
void write_sign_matrix_text(std::ostream& os, const SignMatrix& m, double scale);
std::pair<SignMatrix, double> read_sign_matrix_text(std::istream& is);

// Bit-packed binary alternative: row-major, 1 bit per entry ('+' = 1),
// little-endian within bytes, zero-padded per row.
void write_sign_matrix_packed(std::ostream& os, const SignMatrix& m);
SignMatrix read_sign_matrix_packed(std::istream& is, int d, int n);

// Instance file: structured text with d, n, N, k, gamma, eta, rho, scale,
// seed, the A block in sign format, and the V block (N sign rows with an
// implicit 1/sqrt(d) scale). Round-trips bit-exactly.
void write_instance(std::ostream& os, const HardInstance& inst);
HardInstance read_instance(std::istream& is);
void save_instance(const std::string& path, const HardInstance& inst);
HardInstance load_instance(const std::string& path);

// Run record as JSON lines: one line per query with fields
// step, x, value, branch, informative, state_bits.
void write_run_record(std::ostream& os, const RunRecord& record);
std::string run_summary_line(const RunRecord& record, double reference,
                             double epsilon);

// Game transcript as structured text (message as a hex bit string, float
// arrays for queries/responses/returned vectors, verdict list).
void write_transcript(std::ostream& os, const GameTranscript& t);
GameTranscript read_transcript(std::istream& is);

// Doubles formatted so they parse back to the identical bit pattern.
std::string format_double(double v);

}  // namespace memlb
