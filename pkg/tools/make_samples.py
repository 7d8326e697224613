#!/usr/bin/env python3
"""Regenerate the shipped sample inputs under src/pmuspill/data/.

Everything here is deterministic: running it twice gives byte-identical
files. The event catalog uses Skylake-client event names and encodings; the
instruction database mimics the uops.info XML layout with synthetic records.

    python3 tools/make_samples.py [--out DIR] [--check]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from xml.sax.saxutils import quoteattr

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from pmuspill.catalog import InstrFilter, load_instruction_set  # noqa: E402

N_RAW = 14546
N_VALID = 3069
Q = 0.15
FIRST_SEED = 42

# kind codes: V:<kind> speculative structural, VT speculative tagged,
# S:<kind> retirement structural, T retirement tagged, U unmodeled
EVENTS = [
    ("LD_BLOCKS.STORE_FORWARD", 0x03, 0x02, "U", "Loads blocked by overlapping with store buffer"),
    ("LD_BLOCKS.NO_SR", 0x03, 0x08, "U", "Split loads blocked due to resource unavailability"),
    ("LD_BLOCKS_PARTIAL.ADDRESS_ALIAS", 0x07, 0x01, "U", "False dependencies in MOB due to partial address compare"),
    ("DTLB_LOAD_MISSES.MISS_CAUSES_A_WALK", 0x08, 0x01, "VT", "Load misses in all DTLB levels that cause page walks"),
    ("DTLB_LOAD_MISSES.WALK_COMPLETED", 0x08, 0x0E, "S:DTLB_WALK", "Load miss in all TLB levels causes a completed page walk"),
    ("DTLB_LOAD_MISSES.WALK_PENDING", 0x08, 0x10, "U", "Counts 1 per cycle for each PMH busy with a load page walk"),
    ("DTLB_LOAD_MISSES.STLB_HIT", 0x08, 0x20, "U", "Loads that miss the DTLB and hit the STLB"),
    ("INT_MISC.RECOVERY_CYCLES", 0x0D, 0x01, "V:RECOVERY_CYCLES", "Core cycles the allocator was stalled due to recovery from earlier clear event"),
    ("INT_MISC.CLEAR_RESTEER_CYCLES", 0x0D, 0x80, "V:RESTEER_CYCLES", "Cycles the issue-stage is waiting for front-end to fetch from resteered path"),
    ("UOPS_ISSUED.ANY", 0x0E, 0x01, "S:UOP_EXECUTED", "Uops that the RAT issues to the RS"),
    ("UOPS_ISSUED.VECTOR_WIDTH_MISMATCH", 0x0E, 0x02, "T", "Blend uops inserted for mixed-width vector operands"),
    ("UOPS_ISSUED.SLOW_LEA", 0x0E, 0x20, "T", "Uops issued for slow LEA forms"),
    ("ARITH.DIVIDER_ACTIVE", 0x14, 0x01, "T", "Cycles when the divide unit is busy"),
    ("L2_RQSTS.DEMAND_DATA_RD_MISS", 0x24, 0x21, "S:L2_MISS", "Demand data read requests that missed L2"),
    ("L2_RQSTS.RFO_MISS", 0x24, 0x22, "S:L2_MISS", "RFO requests that miss L2"),
    ("L2_RQSTS.CODE_RD_MISS", 0x24, 0x24, "S:L2_MISS", "L2 cache misses when fetching instructions"),
    ("L2_RQSTS.ALL_DEMAND_MISS", 0x24, 0x27, "S:L2_MISS", "Demand requests that miss L2"),
    ("L2_RQSTS.PF_MISS", 0x24, 0x38, "U", "Requests from the L1/L2/L3 prefetchers that miss L2"),
    ("L2_RQSTS.MISS", 0x24, 0x3F, "S:L2_MISS", "All requests that miss L2"),
    ("L2_RQSTS.DEMAND_DATA_RD_HIT", 0x24, 0x41, "U", "Demand data read requests that hit L2"),
    ("L2_RQSTS.RFO_HIT", 0x24, 0x42, "U", "RFO requests that hit L2"),
    ("L2_RQSTS.CODE_RD_HIT", 0x24, 0x44, "U", "L2 cache hits when fetching instructions"),
    ("L2_RQSTS.PF_HIT", 0x24, 0xD8, "U", "Prefetcher requests that hit L2"),
    ("L2_RQSTS.ALL_DEMAND_DATA_RD", 0x24, 0xE1, "U", "Demand data read requests to L2"),
    ("L2_RQSTS.ALL_RFO", 0x24, 0xE2, "U", "RFO requests to L2"),
    ("L2_RQSTS.ALL_CODE_RD", 0x24, 0xE4, "U", "L2 code requests"),
    ("L2_RQSTS.ALL_DEMAND_REFERENCES", 0x24, 0xE7, "U", "Demand requests to L2"),
    ("L2_RQSTS.ALL_PF", 0x24, 0xF8, "U", "Requests from the prefetchers to L2"),
    ("L2_RQSTS.REFERENCES", 0x24, 0xFF, "U", "All L2 requests"),
    ("LONGEST_LAT_CACHE.MISS", 0x2E, 0x41, "S:LLC_MISS", "Core-originated cacheable requests that miss L3"),
    ("LONGEST_LAT_CACHE.REFERENCE", 0x2E, 0x4F, "U", "Core-originated cacheable requests that refer to L3"),
    ("CPU_CLK_UNHALTED.THREAD_P", 0x3C, 0x00, "S:CORE_CYCLES", "Thread cycles when thread is not in halt state"),
    ("CPU_CLK_UNHALTED.REF_XCLK", 0x3C, 0x01, "U", "Core crystal clock cycles when the thread is unhalted"),
    ("CPU_CLK_UNHALTED.ONE_THREAD_ACTIVE", 0x3C, 0x02, "U", "Core crystal clock cycles when this thread is unhalted and the other is halted"),
    ("L1D_PEND_MISS.PENDING", 0x48, 0x01, "S:L1D_MISS_PENDING_CYCLES", "L1D miss outstanding duration in cycles"),
    ("L1D_PEND_MISS.FB_FULL", 0x48, 0x02, "U", "Cycles a demand request was blocked due to fill buffers unavailability"),
    ("DTLB_STORE_MISSES.MISS_CAUSES_A_WALK", 0x49, 0x01, "S:DTLB_WALK", "Store misses in all DTLB levels that cause page walks"),
    ("DTLB_STORE_MISSES.WALK_COMPLETED", 0x49, 0x0E, "S:DTLB_WALK", "Store misses in all TLB levels causing a completed page walk"),
    ("DTLB_STORE_MISSES.WALK_PENDING", 0x49, 0x10, "U", "Counts 1 per cycle for each PMH busy with a store page walk"),
    ("DTLB_STORE_MISSES.STLB_HIT", 0x49, 0x20, "U", "Stores that miss the DTLB and hit the STLB"),
    ("LOAD_HIT_PRE.SW_PF", 0x4C, 0x01, "U", "Demand load dispatches that hit L1D fill buffer allocated for software prefetch"),
    ("EPT.WALK_PENDING", 0x4F, 0x10, "U", "Cycles when the PMH is busy with EPT walks"),
    ("L1D.REPLACEMENT", 0x51, 0x01, "S:L1D_MISS", "L1D data line replacements"),
    ("TX_MEM.ABORT_CONFLICT", 0x54, 0x01, "U", "Transactional aborts due to a data conflict"),
    ("TX_MEM.ABORT_CAPACITY", 0x54, 0x02, "U", "Transactional aborts due to capacity"),
    ("TX_MEM.ABORT_HLE_STORE_TO_ELIDED_LOCK", 0x54, 0x04, "U", "HLE aborts due to a non-release store to an elided lock"),
    ("TX_MEM.ABORT_HLE_ELISION_BUFFER_NOT_EMPTY", 0x54, 0x08, "U", "HLE aborts due to elision buffer not empty"),
    ("TX_MEM.ABORT_HLE_ELISION_BUFFER_MISMATCH", 0x54, 0x10, "U", "HLE aborts due to elision buffer mismatch"),
    ("TX_MEM.ABORT_HLE_ELISION_BUFFER_UNSUPPORTED_ALIGNMENT", 0x54, 0x20, "U", "HLE aborts due to unsupported alignment"),
    ("TX_MEM.HLE_ELISION_BUFFER_FULL", 0x54, 0x40, "U", "Times HLE lock could not be elided due to a full elision buffer"),
    ("PARTIAL_RAT_STALLS.SCOREBOARD", 0x59, 0x01, "VT", "Cycles where the pipeline is stalled due to serializing operations"),
    ("TX_EXEC.MISC1", 0x5D, 0x01, "U", "Unfriendly TSX abort triggered by a flowmarker"),
    ("TX_EXEC.MISC2", 0x5D, 0x02, "U", "Unfriendly TSX abort triggered by a vzeroupper"),
    ("TX_EXEC.MISC3", 0x5D, 0x04, "U", "Unfriendly TSX abort triggered by a nest count overflow"),
    ("TX_EXEC.MISC4", 0x5D, 0x08, "U", "RTM region detected inside HLE"),
    ("TX_EXEC.MISC5", 0x5D, 0x10, "U", "HLE region detected inside RTM"),
    ("RS_EVENTS.EMPTY_CYCLES", 0x5E, 0x01, "VT", "Cycles when Reservation Station (RS) is empty for the thread"),
    ("OFFCORE_REQUESTS_OUTSTANDING.DEMAND_DATA_RD", 0x60, 0x01, "S:OFFCORE_REQUEST", "Offcore outstanding demand data read transactions"),
    ("OFFCORE_REQUESTS_OUTSTANDING.DEMAND_CODE_RD", 0x60, 0x02, "S:OFFCORE_REQUEST", "Offcore outstanding code read transactions"),
    ("OFFCORE_REQUESTS_OUTSTANDING.DEMAND_RFO", 0x60, 0x04, "S:OFFCORE_REQUEST", "Offcore outstanding RFO store transactions"),
    ("OFFCORE_REQUESTS_OUTSTANDING.ALL_DATA_RD", 0x60, 0x08, "S:OFFCORE_REQUEST", "Offcore outstanding cacheable data read transactions"),
    ("OFFCORE_REQUESTS_OUTSTANDING.L3_MISS_DEMAND_DATA_RD", 0x60, 0x10, "U", "Offcore outstanding demand data reads that missed L3"),
    ("IDQ.MITE_UOPS", 0x79, 0x04, "U", "Uops delivered to IDQ from the MITE path"),
    ("IDQ.DSB_UOPS", 0x79, 0x08, "U", "Uops delivered to IDQ from the DSB path"),
    ("IDQ.MS_DSB_CYCLES", 0x79, 0x10, "U", "Cycles when uops initiated by DSB are delivered while MS is busy"),
    ("IDQ.ALL_DSB_CYCLES_4_UOPS", 0x79, 0x18, "U", "Cycles the DSB delivers 4 uops"),
    ("IDQ.MS_MITE_UOPS", 0x79, 0x20, "VT", "Uops initiated by MITE and delivered to IDQ while MS is busy"),
    ("IDQ.ALL_MITE_CYCLES_4_UOPS", 0x79, 0x24, "U", "Cycles the MITE path delivers 4 uops"),
    ("IDQ.MS_CYCLES", 0x79, 0x30, "VT", "Cycles when uops are being delivered to IDQ while MS is busy"),
    ("ICACHE_16B.IFDATA_STALL", 0x80, 0x04, "U", "Cycles where a code fetch is stalled due to an L1 instruction cache miss"),
    ("ICACHE_64B.IFTAG_HIT", 0x83, 0x01, "V:IFETCH_TAG_HIT", "Instruction fetch tag lookups that hit in the instruction cache"),
    ("ICACHE_64B.IFTAG_MISS", 0x83, 0x02, "U", "Instruction fetch tag lookups that miss in the instruction cache"),
    ("ICACHE_64B.IFTAG_STALL", 0x83, 0x04, "V:IFETCH_TAG_STALL", "Cycles where a code fetch is stalled due to an L1 instruction cache tag miss"),
    ("ITLB_MISSES.MISS_CAUSES_A_WALK", 0x85, 0x01, "VT", "Misses at all ITLB levels that cause page walks"),
    ("ITLB_MISSES.WALK_COMPLETED", 0x85, 0x0E, "S:ITLB_WALK", "Code misses in all ITLB levels causing a completed page walk"),
    ("ITLB_MISSES.WALK_PENDING", 0x85, 0x10, "VT", "Page Miss Handler is busy with a page walk for an instruction fetch"),
    ("ITLB_MISSES.STLB_HIT", 0x85, 0x20, "U", "Instruction fetch misses in the ITLB that hit the STLB"),
    ("ILD_STALL.LCP", 0x87, 0x01, "VT", "Stalls caused by changing prefix length of the instruction"),
    ("IDQ_UOPS_NOT_DELIVERED.CORE", 0x9C, 0x01, "U", "Uops not delivered to the back-end while it was not stalled"),
    ("UOPS_DISPATCHED_PORT.PORT_0", 0xA1, 0x01, "T", "Cycles per thread when uops are executed in port 0"),
    ("UOPS_DISPATCHED_PORT.PORT_1", 0xA1, 0x02, "T", "Cycles per thread when uops are executed in port 1"),
    ("UOPS_DISPATCHED_PORT.PORT_2", 0xA1, 0x04, "T", "Cycles per thread when uops are executed in port 2"),
    ("UOPS_DISPATCHED_PORT.PORT_3", 0xA1, 0x08, "T", "Cycles per thread when uops are executed in port 3"),
    ("UOPS_DISPATCHED_PORT.PORT_4", 0xA1, 0x10, "T", "Cycles per thread when uops are executed in port 4"),
    ("UOPS_DISPATCHED_PORT.PORT_5", 0xA1, 0x20, "T", "Cycles per thread when uops are executed in port 5"),
    ("UOPS_DISPATCHED_PORT.PORT_6", 0xA1, 0x40, "T", "Cycles per thread when uops are executed in port 6"),
    ("UOPS_DISPATCHED_PORT.PORT_7", 0xA1, 0x80, "T", "Cycles per thread when uops are executed in port 7"),
    ("RESOURCE_STALLS.ANY", 0xA2, 0x01, "V:RESOURCE_STALL_CYCLES", "Resource-related stall cycles"),
    ("RESOURCE_STALLS.SB", 0xA2, 0x08, "U", "Cycles stalled due to no store buffers available"),
    ("CYCLE_ACTIVITY.CYCLES_L2_MISS", 0xA3, 0x01, "U", "Cycles while L2 cache miss demand load is outstanding"),
    ("CYCLE_ACTIVITY.STALLS_TOTAL", 0xA3, 0x04, "U", "Total execution stalls"),
    ("CYCLE_ACTIVITY.STALLS_L2_MISS", 0xA3, 0x05, "U", "Execution stalls while L2 cache miss demand load is outstanding"),
    ("CYCLE_ACTIVITY.CYCLES_L1D_MISS", 0xA3, 0x08, "VT", "Cycles while L1 cache miss demand load is outstanding"),
    ("CYCLE_ACTIVITY.STALLS_L1D_MISS", 0xA3, 0x0C, "U", "Execution stalls while L1 cache miss demand load is outstanding"),
    ("CYCLE_ACTIVITY.CYCLES_MEM_ANY", 0xA3, 0x10, "VT", "Cycles while memory subsystem has an outstanding load"),
    ("CYCLE_ACTIVITY.STALLS_MEM_ANY", 0xA3, 0x14, "VT", "Execution stalls while memory subsystem has an outstanding load"),
    ("EXE_ACTIVITY.EXE_BOUND_0_PORTS", 0xA6, 0x01, "VT", "Cycles where no uops were executed"),
    ("EXE_ACTIVITY.1_PORTS_UTIL", 0xA6, 0x02, "U", "Cycles total of 1 uop is executed on all ports"),
    ("EXE_ACTIVITY.2_PORTS_UTIL", 0xA6, 0x04, "U", "Cycles total of 2 uops are executed on all ports"),
    ("EXE_ACTIVITY.3_PORTS_UTIL", 0xA6, 0x08, "U", "Cycles total of 3 uops are executed on all ports"),
    ("EXE_ACTIVITY.4_PORTS_UTIL", 0xA6, 0x10, "U", "Cycles total of 4 uops are executed on all ports"),
    ("EXE_ACTIVITY.BOUND_ON_STORES", 0xA6, 0x40, "U", "Cycles where the store buffer was full and no outstanding load"),
    ("LSD.UOPS", 0xA8, 0x01, "U", "Uops delivered by the LSD"),
    ("DSB2MITE_SWITCHES.PENALTY_CYCLES", 0xAB, 0x02, "U", "DSB-to-MITE switch true penalty cycles"),
    ("ITLB.ITLB_FLUSH", 0xAE, 0x01, "U", "Flushing of the instruction TLB"),
    ("OFFCORE_REQUESTS.DEMAND_DATA_RD", 0xB0, 0x01, "S:OFFCORE_REQUEST", "Demand data read requests sent to uncore"),
    ("OFFCORE_REQUESTS.DEMAND_CODE_RD", 0xB0, 0x02, "S:OFFCORE_REQUEST", "Demand code read requests sent to uncore"),
    ("OFFCORE_REQUESTS.DEMAND_RFO", 0xB0, 0x04, "S:OFFCORE_REQUEST", "Demand RFO requests sent to uncore"),
    ("OFFCORE_REQUESTS.ALL_DATA_RD", 0xB0, 0x08, "S:OFFCORE_REQUEST", "Data read requests sent to uncore"),
    ("OFFCORE_REQUESTS.L3_MISS_DEMAND_DATA_RD", 0xB0, 0x10, "U", "Demand data read requests that missed L3"),
    ("OFFCORE_REQUESTS.ALL_REQUESTS", 0xB0, 0x80, "S:OFFCORE_REQUEST", "Any memory transaction that reached the SQ"),
    ("UOPS_EXECUTED.THREAD", 0xB1, 0x01, "S:UOP_EXECUTED", "Uops executed on the thread"),
    ("UOPS_EXECUTED.CORE", 0xB1, 0x02, "U", "Uops executed on the core"),
    ("UOPS_EXECUTED.X87", 0xB1, 0x10, "T", "x87 uops dispatched"),
    ("OFFCORE_REQUESTS_BUFFER.SQ_FULL", 0xB2, 0x01, "U", "Offcore requests buffer cannot take more entries"),
    ("OFFCORE_RESPONSE", 0xB7, 0x01, "U", "Offcore response, qualified by an auxiliary MSR"),
    ("TLB_FLUSH.DTLB_THREAD", 0xBD, 0x01, "U", "DTLB flush attempts of the thread-specific entries"),
    ("TLB_FLUSH.STLB_ANY", 0xBD, 0x20, "U", "STLB flush attempts"),
    ("INST_RETIRED.ANY_P", 0xC0, 0x00, "S:INSTRUCTION_RETIRED", "Instructions retired"),
    ("INST_RETIRED.PREC_DIST", 0xC0, 0x01, "U", "Precise instruction retired event with reduced skid"),
    ("OTHER_ASSISTS.ANY", 0xC1, 0x3F, "T", "Microcode assists of any type"),
    ("UOPS_RETIRED.RETIRE_SLOTS", 0xC2, 0x02, "U", "Retirement slots used"),
    ("UOPS_RETIRED.MACRO_FUSED", 0xC2, 0x04, "T", "Macro-fused uops retired"),
    ("MACHINE_CLEARS.COUNT", 0xC3, 0x01, "S:MACHINE_CLEAR", "Number of machine clears of any type"),
    ("MACHINE_CLEARS.MEMORY_ORDERING", 0xC3, 0x02, "U", "Machine clears due to memory ordering conflicts"),
    ("MACHINE_CLEARS.SMC", 0xC3, 0x04, "U", "Self-modifying code machine clears"),
    ("BR_INST_RETIRED.ALL_BRANCHES", 0xC4, 0x00, "S:BRANCH_EXECUTED", "All branch instructions retired"),
    ("BR_INST_RETIRED.CONDITIONAL", 0xC4, 0x01, "S:COND_BRANCH_EXECUTED", "Conditional branch instructions retired"),
    ("BR_INST_RETIRED.NEAR_CALL", 0xC4, 0x02, "T", "Direct and indirect near call instructions retired"),
    ("BR_INST_RETIRED.NEAR_RETURN", 0xC4, 0x08, "T", "Return instructions retired"),
    ("BR_INST_RETIRED.NOT_TAKEN", 0xC4, 0x10, "U", "Not taken branch instructions retired"),
    ("BR_INST_RETIRED.NEAR_TAKEN", 0xC4, 0x20, "U", "Taken branch instructions retired"),
    ("BR_INST_RETIRED.FAR_BRANCH", 0xC4, 0x40, "T", "Far branch instructions retired"),
    ("BR_MISP_RETIRED.ALL_BRANCHES", 0xC5, 0x00, "S:BRANCH_MISPREDICTED", "All mispredicted macro branch instructions retired"),
    ("BR_MISP_RETIRED.CONDITIONAL", 0xC5, 0x01, "S:COND_BRANCH_MISPREDICTED", "Mispredicted conditional branch instructions retired"),
    ("BR_MISP_RETIRED.NEAR_CALL", 0xC5, 0x02, "U", "Mispredicted direct and indirect near call instructions retired"),
    ("BR_MISP_RETIRED.NEAR_TAKEN", 0xC5, 0x20, "U", "Mispredicted taken branches retired"),
    ("FRONTEND_RETIRED.ANY", 0xC6, 0x01, "U", "Retired instructions after front-end starvation"),
    ("FP_ARITH_INST_RETIRED.SCALAR_DOUBLE", 0xC7, 0x01, "T", "Scalar double precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.SCALAR_SINGLE", 0xC7, 0x02, "T", "Scalar single precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.128B_PACKED_DOUBLE", 0xC7, 0x04, "T", "128-bit packed double precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.128B_PACKED_SINGLE", 0xC7, 0x08, "T", "128-bit packed single precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.256B_PACKED_DOUBLE", 0xC7, 0x10, "T", "256-bit packed double precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.256B_PACKED_SINGLE", 0xC7, 0x20, "T", "256-bit packed single precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.512B_PACKED_DOUBLE", 0xC7, 0x40, "T", "512-bit packed double precision FP instructions retired"),
    ("FP_ARITH_INST_RETIRED.512B_PACKED_SINGLE", 0xC7, 0x80, "T", "512-bit packed single precision FP instructions retired"),
    ("HLE_RETIRED.START", 0xC8, 0x01, "U", "Times an HLE execution started"),
    ("HLE_RETIRED.COMMIT", 0xC8, 0x02, "U", "Times an HLE execution successfully committed"),
    ("HLE_RETIRED.ABORTED", 0xC8, 0x04, "U", "Times an HLE execution aborted"),
    ("HLE_RETIRED.ABORTED_MEM", 0xC8, 0x08, "U", "HLE aborts due to memory events"),
    ("HLE_RETIRED.ABORTED_TIMER", 0xC8, 0x10, "U", "HLE aborts due to timer expiry"),
    ("HLE_RETIRED.ABORTED_UNFRIENDLY", 0xC8, 0x20, "U", "HLE aborts due to HLE-unfriendly instructions"),
    ("HLE_RETIRED.ABORTED_MEMTYPE", 0xC8, 0x40, "U", "HLE aborts due to incompatible memory type"),
    ("HLE_RETIRED.ABORTED_EVENTS", 0xC8, 0x80, "U", "HLE aborts due to unfriendly events"),
    ("RTM_RETIRED.START", 0xC9, 0x01, "U", "Times an RTM execution started"),
    ("RTM_RETIRED.COMMIT", 0xC9, 0x02, "U", "Times an RTM execution successfully committed"),
    ("RTM_RETIRED.ABORTED", 0xC9, 0x04, "U", "Times an RTM execution aborted"),
    ("RTM_RETIRED.ABORTED_MEM", 0xC9, 0x08, "U", "RTM aborts due to memory events"),
    ("RTM_RETIRED.ABORTED_TIMER", 0xC9, 0x10, "U", "RTM aborts due to timer expiry"),
    ("RTM_RETIRED.ABORTED_UNFRIENDLY", 0xC9, 0x20, "U", "RTM aborts due to HLE-unfriendly instructions"),
    ("RTM_RETIRED.ABORTED_MEMTYPE", 0xC9, 0x40, "U", "RTM aborts due to incompatible memory type"),
    ("RTM_RETIRED.ABORTED_EVENTS", 0xC9, 0x80, "U", "RTM aborts due to unfriendly events"),
    ("FP_ASSIST.ANY", 0xCA, 0x1E, "T", "Cycles with any input or output SSE or x87 FP assist"),
    ("HW_INTERRUPTS.RECEIVED", 0xCB, 0x01, "U", "Hardware interrupts received"),
    ("ROB_MISC_EVENTS.LBR_INSERTS", 0xCC, 0x20, "U", "Increments whenever there is an update to the LBR array"),
    ("MEM_TRANS_RETIRED.LOAD_LATENCY_GT_4", 0xCD, 0x01, "U", "Loads with latency above 4 cycles"),
    ("MEM_INST_RETIRED.STLB_MISS_LOADS", 0xD0, 0x11, "U", "Retired load instructions that miss the STLB"),
    ("MEM_INST_RETIRED.STLB_MISS_STORES", 0xD0, 0x12, "U", "Retired store instructions that miss the STLB"),
    ("MEM_INST_RETIRED.LOCK_LOADS", 0xD0, 0x21, "T", "Retired load instructions with locked access"),
    ("MEM_INST_RETIRED.SPLIT_LOADS", 0xD0, 0x41, "T", "Retired load instructions that split across a cacheline boundary"),
    ("MEM_INST_RETIRED.SPLIT_STORES", 0xD0, 0x42, "T", "Retired store instructions that split across a cacheline boundary"),
    ("MEM_INST_RETIRED.ALL_LOADS", 0xD0, 0x81, "S:LOAD_EXECUTED", "All retired load instructions"),
    ("MEM_INST_RETIRED.ALL_STORES", 0xD0, 0x82, "S:STORE_EXECUTED", "All retired store instructions"),
    ("MEM_LOAD_RETIRED.L1_HIT", 0xD1, 0x01, "S:L1D_HIT", "Retired load instructions with L1 cache hits as data sources"),
    ("MEM_LOAD_RETIRED.L2_HIT", 0xD1, 0x02, "U", "Retired load instructions with L2 cache hits as data sources"),
    ("MEM_LOAD_RETIRED.L3_HIT", 0xD1, 0x04, "U", "Retired load instructions with L3 cache hits as data sources"),
    ("MEM_LOAD_RETIRED.L1_MISS", 0xD1, 0x08, "S:L1D_MISS", "Retired load instructions missed L1 cache as data sources"),
    ("MEM_LOAD_RETIRED.L2_MISS", 0xD1, 0x10, "S:L2_MISS", "Retired load instructions missed L2 cache as data sources"),
    ("MEM_LOAD_RETIRED.L3_MISS", 0xD1, 0x20, "S:LLC_MISS", "Retired load instructions missed L3 cache as data sources"),
    ("MEM_LOAD_RETIRED.FB_HIT", 0xD1, 0x40, "U", "Retired load instructions which missed L1 but hit the fill buffer"),
    ("MEM_LOAD_L3_HIT_RETIRED.XSNP_MISS", 0xD2, 0x01, "U", "L3 hit loads whose cross-core snoop missed"),
    ("MEM_LOAD_L3_HIT_RETIRED.XSNP_HIT", 0xD2, 0x02, "U", "L3 hit loads whose cross-core snoop hit a clean line"),
    ("MEM_LOAD_L3_HIT_RETIRED.XSNP_HITM", 0xD2, 0x04, "U", "L3 hit loads whose cross-core snoop hit a modified line"),
    ("MEM_LOAD_L3_HIT_RETIRED.XSNP_NONE", 0xD2, 0x08, "U", "L3 hit loads without snoops required"),
    ("MEM_LOAD_MISC_RETIRED.UC", 0xD4, 0x04, "U", "Retired instructions with at least one uncacheable load"),
    ("BACLEARS.ANY", 0xE6, 0x01, "U", "Times the front-end is resteered when it finds a branch it did not predict"),
    ("L2_TRANS.L2_WB", 0xF0, 0x40, "U", "L2 writebacks that access the L2 cache"),
    ("L2_LINES_IN.ALL", 0xF1, 0x07, "U", "L2 cache lines filling L2"),
    ("L2_LINES_OUT.SILENT", 0xF2, 0x01, "U", "Clean L2 lines silently dropped by eviction"),
    ("L2_LINES_OUT.NON_SILENT", 0xF2, 0x02, "U", "Modified L2 lines evicted by demand"),
    ("L2_LINES_OUT.USELESS_HWPF", 0xF2, 0x04, "U", "Prefetched L2 lines evicted before use"),
    ("SQ_MISC.SPLIT_LOCK", 0xF4, 0x10, "T", "Cache-line split locked accesses"),
    # instruction-class events (retirement counted)
    ("UOPS_ISSUED.STALL_ON_LOCK", 0x0E, 0x40, "T", "Uops issued while waiting on a lock"),
    ("UOPS_EXECUTED.SSE_UOPS", 0xB1, 0x20, "T", "SSE uops executed"),
    ("UOPS_EXECUTED.AVX_UOPS", 0xB1, 0x40, "T", "AVX uops executed"),
    ("UOPS_EXECUTED.SHUFFLE_UOPS", 0xB1, 0x80, "T", "Shuffle uops executed"),
    ("ARITH.FPU_DIV", 0x14, 0x04, "T", "FP divide operations"),
    ("ARITH.INT_DIV", 0x14, 0x08, "T", "Integer divide operations"),
    ("ARITH.SQRT", 0x14, 0x10, "T", "Square root operations"),
    ("INST_DECODED.DECODERS", 0x55, 0x01, "T", "Instructions decoded by the complex decoder"),
    ("UOPS_RETIRED.STRING_OPS", 0xC2, 0x10, "T", "String operation uops retired"),
    ("UOPS_RETIRED.MS_UOPS", 0xC2, 0x20, "T", "Microcode sequencer uops retired"),
    ("MEM_INST_RETIRED.NT_STORES", 0xD0, 0x84, "T", "Retired non-temporal stores"),
    ("MEM_INST_RETIRED.PREFETCHES", 0xD0, 0x88, "T", "Retired software prefetch instructions"),
    ("FP_ASSIST.X87_OUTPUT", 0xCA, 0x02, "T", "x87 FP assists on output values"),
    ("FP_ASSIST.X87_INPUT", 0xCA, 0x04, "T", "x87 FP assists on input values"),
    ("FP_ASSIST.SIMD_OUTPUT", 0xCA, 0x08, "T", "SIMD FP assists on output values"),
    ("FP_ASSIST.SIMD_INPUT", 0xCA, 0x10, "T", "SIMD FP assists on input values"),
    ("OTHER_ASSISTS.AVX_TO_SSE", 0xC1, 0x08, "T", "Transitions from AVX-256 to legacy SSE when penalty applicable"),
    ("OTHER_ASSISTS.SSE_TO_AVX", 0xC1, 0x10, "T", "Transitions from SSE to AVX-256 when penalty applicable"),
    ("SIMD_INST_RETIRED.PACKED", 0xCE, 0x01, "T", "Retired packed SIMD instructions"),
    ("SIMD_INST_RETIRED.SCALAR", 0xCE, 0x02, "T", "Retired scalar SIMD instructions"),
    ("SIMD_INST_RETIRED.VECTOR", 0xCE, 0x04, "T", "Retired vector integer SIMD instructions"),
    ("X87_INST_RETIRED.ANY", 0xCF, 0x01, "T", "Retired x87 instructions"),
]

# available on other microarchitectures only, but observed working here
AUGMENT = [
    ("BR_MISP_EXEC.ALL_BRANCHES", 0x89, 0xFF, "V:BRANCH_MISPREDICTED", "All near executed branches (not necessarily retired)"),
    ("BR_MISP_EXEC.ALL_CONDITIONAL", 0x89, 0xC1, "V:COND_BRANCH_MISPREDICTED", "Speculative and retired mispredicted macro conditional branches"),
    ("BR_INST_EXEC.NONTAKEN_CONDITIONAL", 0x88, 0x41, "V:COND_NOT_TAKEN_EXECUTED", "Not taken macro-conditional branches"),
]

# -- instruction database ------------------------------------------------------

GPR_FORMS = ["R8, R8", "R16, R16", "R32, R32", "R64, R64", "R8, M8", "R16, M16", "R32, M32",
             "R64, M64", "M8, R8", "M16, R16", "M32, R32", "M64, R64", "R8, I8", "R16, I16",
             "R32, I32", "R64, I32", "M8, I8", "M16, I16", "M32, I32", "M64, I32", "AL, I8",
             "AX, I16", "EAX, I32", "RAX, I32", "R16, I8", "R32, I8", "R64, I8", "M16, I8"]
UNARY_FORMS = ["R8", "R16", "R32", "R64", "M8", "M16", "M32", "M64"]
XMM_FORMS = ["XMM, XMM", "XMM, M128"]
VEX_FORMS = ["XMM, XMM, XMM", "XMM, XMM, M128", "YMM, YMM, YMM", "YMM, YMM, M256"]
EVEX_FORMS = [
    f"{dst}{mask}, {dst}, {src}"
    for dst in ("XMM", "YMM", "ZMM")
    for mask in ("", " {K}", " {K}{z}")
    for src in (dst, "M" + {"XMM": "128", "YMM": "256", "ZMM": "512"}[dst], "M64 {1toN}")
]

EXTENSIONS = {
    "BASE": (["ADC", "ADD", "AND", "CMP", "OR", "SBB", "SUB", "TEST", "XOR", "MOV", "XCHG",
              "CMOVB", "CMOVNZ", "CMOVZ", "CMOVS", "CMOVL", "CMOVLE", "BT", "BTC", "BTR", "BTS",
              "IMUL", "LEA", "MOVSX", "MOVZX", "SHLD", "SHRD", "XADD", "CMPXCHG"], GPR_FORMS),
    "BASE_UNARY": (["DEC", "INC", "NEG", "NOT", "MUL", "DIV", "IDIV", "SETB", "SETNZ", "SETZ",
                    "RCL", "RCR", "ROL", "ROR", "SAR", "SHL", "SHR", "PUSH", "POP", "BSWAP"], UNARY_FORMS),
    "X87": (["FADD", "FSUB", "FMUL", "FDIV", "FLD", "FST", "FSTP", "FCOM", "FCOMP", "FSUBR",
             "FDIVR", "FIADD", "FIMUL", "FILD", "FIST", "FISTP"], ["ST0, ST(i)", "ST(i), ST0", "M32", "M64", "M80"]),
    "MMX": (["PADDB", "PADDW", "PADDD", "PSUBB", "PSUBW", "PSUBD", "PAND", "PANDN", "POR",
             "PXOR", "PCMPEQB", "PCMPEQW", "PMULLW", "PMADDWD", "PUNPCKLBW", "PACKSSWB"], ["MM, MM", "MM, M64"]),
    "SSE": (["ADDPS", "ADDSS", "ANDPS", "ANDNPS", "CMPPS", "DIVPS", "DIVSS", "MAXPS", "MINPS",
             "MOVAPS", "MOVUPS", "MULPS", "MULSS", "ORPS", "RCPPS", "RSQRTPS", "SHUFPS", "SQRTPS",
             "SUBPS", "UNPCKHPS", "UNPCKLPS", "XORPS"], XMM_FORMS),
    "SSE2": (["ADDPD", "ADDSD", "ANDPD", "CMPPD", "CVTDQ2PD", "CVTPD2PS", "DIVPD", "MAXPD",
              "MINPD", "MOVAPD", "MULPD", "PADDQ", "PMULUDQ", "PSHUFD", "PSLLDQ", "PSUBQ",
              "PUNPCKHQDQ", "SQRTPD", "SUBPD", "UNPCKLPD", "XORPD", "PAVGB"], XMM_FORMS),
    "SSE3": (["ADDSUBPD", "ADDSUBPS", "HADDPD", "HADDPS", "HSUBPD", "HSUBPS", "MOVDDUP",
              "MOVSHDUP", "MOVSLDUP", "LDDQU"], XMM_FORMS),
    "SSSE3": (["PABSB", "PABSD", "PABSW", "PALIGNR", "PHADDD", "PHADDW", "PMADDUBSW",
               "PMULHRSW", "PSHUFB", "PSIGNB"], XMM_FORMS),
    "SSE4": (["BLENDPD", "BLENDPS", "DPPD", "DPPS", "INSERTPS", "MPSADBW", "PACKUSDW", "PBLENDW",
              "PCMPEQQ", "PMAXSB", "PMINUD", "PMULDQ", "PMULLD", "PTEST", "ROUNDPD", "ROUNDPS",
              "PCMPESTRI", "PCMPGTQ"], XMM_FORMS),
    "AVX": (["VADDPD", "VADDPS", "VANDPS", "VBLENDPS", "VDIVPD", "VDIVPS", "VMAXPS", "VMINPS",
             "VMULPD", "VMULPS", "VORPS", "VPERMILPS", "VSHUFPS", "VSQRTPS", "VSUBPD", "VSUBPS",
             "VUNPCKHPS", "VXORPS", "VHADDPS", "VDPPS"], VEX_FORMS),
    "AVX2": (["VPADDB", "VPADDD", "VPADDQ", "VPAND", "VPCMPEQB", "VPERMD", "VPMADDWD", "VPMULLD",
              "VPOR", "VPSHUFB", "VPSLLVD", "VPSRLVD", "VPSUBD", "VPXOR", "VPMAXSD", "VPMINSD",
              "VPUNPCKLDQ", "VPSADBW"], VEX_FORMS),
    "FMA": (["VFMADD132PD", "VFMADD132PS", "VFMADD213PD", "VFMADD213PS", "VFMADD231PD",
             "VFMADD231PS", "VFMSUB132PS", "VFNMADD231PD", "VFMSUB231PD", "VFNMSUB213PS"], VEX_FORMS),
    "BMI": (["ANDN", "BEXTR", "BLSI", "BLSMSK", "BLSR", "BZHI", "MULX", "PDEP", "PEXT", "RORX",
             "SARX", "SHLX", "SHRX", "TZCNT", "LZCNT", "POPCNT"], ["R32, R32", "R64, R64", "R32, M32", "R64, M64"]),
    "AES": (["AESDEC", "AESDECLAST", "AESENC", "AESENCLAST", "AESIMC", "PCLMULQDQ"], XMM_FORMS),
    "AVX512F": (["VADDPD", "VADDPS", "VMULPD", "VMULPS", "VSUBPD", "VSUBPS", "VDIVPD", "VDIVPS",
                 "VMAXPD", "VMINPD", "VPADDD", "VPADDQ", "VPANDD", "VPANDQ", "VPORD", "VPORQ",
                 "VPXORD", "VPXORQ", "VPERMD", "VPERMQ", "VPERMPS", "VPERMPD", "VFMADD132PD",
                 "VFMADD213PS", "VFMADD231PD", "VSQRTPD", "VSQRTPS", "VSCALEFPD", "VRNDSCALEPD",
                 "VGETEXPPD", "VPMULLD", "VPMULUDQ", "VPSLLVD", "VPSRAVD", "VPTERNLOGD",
                 "VPTERNLOGQ", "VALIGND", "VALIGNQ", "VBLENDMPD", "VBLENDMPS", "VPCMPD", "VPCMPQ",
                 "VCMPPD", "VCMPPS", "VPMAXSD", "VPMINUD", "VPROLD", "VPRORQ", "VRCP14PD",
                 "VRSQRT14PS", "VFIXUPIMMPD", "VSHUFF32X4", "VSHUFI64X2", "VPERMT2D", "VPERMI2Q",
                 "VEXPANDPD", "VCOMPRESSPS", "VPCONFLICTD", "VPLZCNTQ", "VCVTPD2PS", "VCVTDQ2PD",
                 "VCVTPS2PD", "VPMOVDB", "VPMOVQW", "VPABSD", "VPABSQ", "VPSRLD", "VPSLLQ"], EVEX_FORMS),
    "AVX512BW": (["VPADDB", "VPADDW", "VPSUBB", "VPSUBW", "VPMULLW", "VPMADDWD", "VPSHUFB",
                  "VPCMPEQB", "VPCMPEQW", "VPMAXUB", "VPMINSW", "VPACKSSWB", "VPUNPCKLBW",
                  "VPSADBW", "VPAVGB", "VPMULHRSW", "VPERMW", "VPSLLVW", "VPSRAVW", "VPBLENDMB",
                  "VPBLENDMW", "VPMOVWB", "VPTESTMB", "VPABSB", "VPABSW", "VDBPSADBW",
                  "VPALIGNR", "VPMADDUBSW", "VPCMPB", "VPCMPUW", "VPMULHUW", "VPSRLW"], EVEX_FORMS),
    "AVX512DQ": (["VANDPD", "VANDPS", "VORPD", "VORPS", "VXORPD", "VXORPS", "VPMULLQ",
                  "VCVTPD2QQ", "VCVTQQ2PD", "VCVTPS2QQ", "VRANGEPD", "VRANGEPS", "VREDUCEPD",
                  "VREDUCEPS", "VFPCLASSPD", "VINSERTF64X2", "VEXTRACTI64X2", "VBROADCASTF32X8",
                  "VANDNPD", "VANDNPS", "VCVTTPD2QQ", "VCVTUQQ2PD"], EVEX_FORMS),
    "AVX512CD": (["VPCONFLICTQ", "VPLZCNTD", "VPBROADCASTMB2Q", "VPBROADCASTMW2D"], EVEX_FORMS),
    "AVX512_VNNI": (["VPDPBUSD", "VPDPBUSDS", "VPDPWSSD", "VPDPWSSDS"], EVEX_FORMS),
    "AVX512_IFMA": (["VPMADD52HUQ", "VPMADD52LUQ"], EVEX_FORMS),
    "AVX512_VBMI": (["VPERMB", "VPERMI2B", "VPERMT2B", "VPMULTISHIFTQB"], EVEX_FORMS),
    "SYSTEM": (["HLT", "RDMSR", "WRMSR", "INVD", "WBINVD", "LGDT", "LIDT", "LLDT", "LTR",
                "CLTS", "INVLPG", "IN", "OUT", "CLI", "STI", "SWAPGS", "SYSRET", "MOV_CR",
                "MOV_DR", "RDPMC"], ["", "R32", "R64", "M16", "AL, DX", "DX, AL", "EAX, DX"]),
    "VTX": (["VMCALL", "VMCLEAR", "VMLAUNCH", "VMPTRLD", "VMPTRST", "VMREAD", "VMRESUME",
             "VMWRITE", "VMXOFF", "VMXON", "INVEPT", "INVVPID"], ["", "M64", "R64, M128", "R64, R64"]),
    "SGX": (["ENCLS", "ENCLU", "ENCLV"], ["", "EAX"]),
}

# Extensions the reference machine assembles and runs
FILTER = {
    "allow_extensions": ["BASE", "BASE_UNARY", "X87", "MMX", "SSE", "SSE2", "SSE3", "SSSE3",
                         "SSE4", "AVX", "AVX2", "FMA", "BMI", "AES"],
    "deny_asm": [r"^LOCK ", r"\{disp32\}", r"^REP"],
}


def _hash(*parts) -> int:
    return int.from_bytes(hashlib.blake2b("\x00".join(map(str, parts)).encode(), digest_size=8).digest(), "little")


def _variants(ext: str, mnems: list[str], forms: list[str]):
    for m in mnems:
        for f in forms:
            yield f"{m} ({f})" if f else m


def _instruction_records() -> list[tuple[str, str]]:
    """(extension, asm) pairs: exactly N_VALID pass FILTER, N_RAW in total."""
    allowed = set(FILTER["allow_extensions"])
    base = []
    for ext, (mnems, forms) in EXTENSIONS.items():
        base.extend((ext, a) for a in _variants(ext, mnems, forms))
    # VEX encodings of the legacy SSE instructions
    for ext in ("SSE", "SSE2", "SSE3", "SSSE3", "SSE4"):
        base.extend(("AVX", a) for a in _variants("AVX", ["V" + m for m in EXTENSIONS[ext][0]], VEX_FORMS))
    base = list(dict.fromkeys(base))
    good = [r for r in base if r[0] in allowed]
    bad = [r for r in base if r[0] not in allowed]
    with_mem = [(e, a) for e, a in good if "M" in a.split("(", 1)[-1]]
    # encodings the reference machine rejects
    rejects = [(e, f"LOCK {a}") for e, a in with_mem if e.startswith("BASE")]
    rejects += [(e, f"{a} {{disp32}}") for e, a in with_mem]
    # encoding hints uops.info lists as separate records
    good += [(e, f"{{load}} {a}") for e, a in good if e == "BASE"]
    good += [(e, f"{a} {{disp8}}") for e, a in with_mem if e.startswith("BASE")]
    good += [(e, f"{{store}} {a}") for e, a in with_mem if e == "BASE" and a.split("(", 1)[1].startswith("M")]
    if len(good) < N_VALID:
        raise SystemExit(f"only {len(good)} valid-shaped records; add mnemonics")
    good.sort(key=lambda r: _hash("keep", *r))
    keep = good[:N_VALID]
    spare = bad + rejects
    hints = ["{rn-sae}", "{rd-sae}", "{ru-sae}", "{rz-sae}", "{sae}", "{evex}", "{disp8*N}"]
    evex = [r for r in bad if r[0].startswith("AVX512")]
    for h in hints:
        if len(spare) + len(keep) >= N_RAW:
            break
        spare += [(e, f"{a} {h}") for e, a in evex]
    if len(spare) + len(keep) < N_RAW:
        raise SystemExit("not enough filler records")
    spare.sort(key=lambda r: _hash("spare", *r))
    records = keep + spare[: N_RAW - len(keep)]
    order = list(EXTENSIONS)
    records.sort(key=lambda r: (order.index(r[0]), r[1]))
    assert len(records) == N_RAW, len(records)
    return records


def _write_xml(path: Path, records: list[tuple[str, str]]) -> None:
    lines = ['<?xml version="1.0" encoding="utf-8"?>', "<root>"]
    current = None
    for i, (ext, asm) in enumerate(records):
        if ext != current:
            if current is not None:
                lines.append("  </extension>")
            lines.append(f"  <extension name={quoteattr(ext)}>")
            current = ext
        cat = "SYSTEM" if ext in ("SYSTEM", "VTX", "SGX") else ext.split("_")[0]
        iform = asm.split(" (")[0].replace(" ", "_").replace("{", "").replace("}", "")
        lines.append(
            f"    <instruction asm={quoteattr(asm)} category={quoteattr(cat)} "
            f"iform={quoteattr(iform + '_' + str(i))} extension={quoteattr(ext)}/>"
        )
    lines.append("  </extension>")
    lines.append("</root>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _event_json(rows, tagged: dict[str, list[str]]) -> list[dict]:
    out = []
    for name, code, umask, kind, desc in rows:
        rec = {
            "EventName": name,
            "EventCode": f"0x{code:02X}",
            "UMask": f"0x{umask:02X}",
            "BriefDescription": desc,
            "Category": name.split(".", 1)[0],
        }
        spec = kind.startswith("V")
        rec["Persistence"] = "SPECULATIVE_COUNTED" if spec else "RETIREMENT_COUNTED"
        if kind in ("T", "VT"):
            rec["Instructions"] = tagged[name]
        elif kind == "U":
            rec["Structural"] = "UNMODELED"
        else:
            rec["Structural"] = kind.split(":", 1)[1]
        out.append(rec)
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def generate(out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    names = [e[0] for e in EVENTS + AUGMENT]
    keys = [(e[1], e[2]) for e in EVENTS + AUGMENT]
    assert len(set(names)) == len(names), "duplicate event name"
    assert len(set(keys)) == len(keys), "duplicate (event_code, umask)"
    assert len(EVENTS) == 214, len(EVENTS)

    xml_path = out / "instructions.xml"
    _write_xml(xml_path, _instruction_records())
    _dump(out / "instruction_filter.json", FILTER)

    universe = [e[0] for e in EVENTS + AUGMENT if e[3] in ("T", "VT")]
    seed = FIRST_SEED
    while True:
        classes = load_instruction_set(xml_path, InstrFilter.from_json(FILTER), seed=seed,
                                       universe=universe, q=Q)
        tagged: dict[str, list[str]] = {n: [] for n in universe}
        for c in classes:
            for ev, _ in c.event_signature:
                tagged[ev].append(c.id)
        if all(tagged.values()):
            break
        seed += 1
    assert len(classes) == N_VALID

    _dump(out / "skylake_events.json", _event_json(EVENTS, tagged))
    _dump(out / "skylake_augment.json", _event_json(AUGMENT, tagged))
    manifest = {
        "events": "skylake_events.json",
        "augment": "skylake_augment.json",
        "instructions": "instructions.xml",
        "filter": "instruction_filter.json",
        "seed": seed,
        "q": Q,
        "expected": {"events": len(EVENTS), "augmented_events": len(EVENTS) + len(AUGMENT),
                     "raw_instructions": N_RAW, "valid_instructions": N_VALID},
    }
    _dump(out / "samples.json", manifest)
    return manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "src" / "pmuspill" / "data")
    args = ap.parse_args(argv)
    manifest = generate(args.out)
    print(json.dumps(manifest, indent=1))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
