#pragma once

#include <cstdint>

#include "xom/asm_program.hpp"

namespace xom::rewriter {

struct RewriteReport {
    std::uint64_t loads_rewritten = 0;
    std::uint64_t tables_rewritten = 0;
    std::uint64_t bytes_before = 0;
    std::uint64_t bytes_after = 0;
    std::uint64_t islands_remaining = 0;
};

/// Replace every literal load (`ldr rd, =C` and `ldr rd, Lpool`) with
/// `movw rd, #lo` plus, when the high half is nonzero, `movt rd, #hi`.
/// Pool words whose label ends up unreferenced are deleted along with the
/// label. Throws UnsupportedLiteralError for symbolic or unresolvable pool
/// entries.
AsmProgram remove_load_constants(const AsmProgram& prog);

/// Replace each pc-based tbb/tbh and its inline table of label entries
/// with an explicit dispatch over the consumed index register followed by
/// one b.w per table entry:
///     add rI, rI, rI      @ scale the index by 4 in two doublings
///     add rI, rI, rI
///     orr rI, rI, #3      @ +2 skips the bx, +1 keeps the Thumb bit
///     add rI, pc          @ pc reads as this instruction + 4
///     bx  rI
///   .Ltramp<n>:
///     b.w <entry 0> ...
/// Throws UnsupportedTableError for non-pc bases, empty or non-label
/// tables, and tables whose label is referenced elsewhere.
AsmProgram remove_jump_tables(const AsmProgram& prog);

/// Count constant islands still embedded in the code stream (data
/// directives plus remaining pc-relative literal loads) and fill the size
/// fields with the program's accounted byte size. The rewritten counters
/// stay zero here; rewrite_program fills them from before/after deltas.
RewriteReport verify_no_islands(const AsmProgram& prog);

struct RewriteResult {
    AsmProgram program;
    RewriteReport report;
};

/// remove_load_constants then remove_jump_tables, with a composed report.
RewriteResult rewrite_program(const AsmProgram& prog);

} // namespace xom::rewriter
