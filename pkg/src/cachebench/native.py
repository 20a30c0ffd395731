"""C-with-inline-assembly source text for running a case on an ARMv8 device.

Text generation only: nothing here compiles or runs the output.
"""

from __future__ import annotations

from pathlib import Path

from .catalog import Catalog, expand_cases
from .config import MachineConfig, default_machine
from .patterns import ATTACKER, FLUSH, MULTI_THREADED, READ, REMOTE_WRITE, WRITE, ConcreteCase
from .program import BENCH_BASE, DEFAULT_REP, bench_geometry_for, make_layout

READ_SEQ = ("DSB SY", "ISB", "LDR %0, [%1]", "DSB SY", "ISB")
WRITE_SEQ = ("DSB SY", "ISB", "STR %0, [%1]", "DSB SY", "ISB")
FLUSH_SEQ = ("DSB ISH", "ISB", "DC CIVAC, %0", "DSB ISH", "ISB")

_PRELUDE = """\
#define _GNU_SOURCE
#include <pthread.h>
#include <sched.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <sys/mman.h>
#include <time.h>

static volatile int turn;

static void pin(int cpu)
{
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    sched_setaffinity(0, sizeof(set), &set);  /* best effort */
}

static inline uint64_t now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
}

static inline void rd(volatile char *p)
{
    uint64_t v;
    asm volatile("{read}"
                 : "=&r"(v) : "r"(p) : "memory");
}

static inline void wr(volatile char *p)
{
    uint64_t v = 1;
    asm volatile("{write}"
                 : : "r"(v), "r"(p) : "memory");
}

static inline void fl(volatile char *p)
{
    asm volatile("{flush}"
                 : : "r"(p) : "memory");
}

static void wait_turn(int t) { while (turn != t) ; }
"""


def _asm(seq) -> str:
    return "\\n\\t".join(seq)


def _offsets(addrs) -> str:
    return ", ".join(f"0x{a - BENCH_BASE:x}" for a in addrs)


def _step_targets(target: str) -> str:
    return {"u": "U", "inv_u": "U", "a": "A", "inv_a": "A", "alias": "EV", "inv_alias": "EV",
            "nib": "KN", "inv_nib": "KN", "inv_all": "ALL"}[target]


def emit_step(kind: str, target: str, indent: str = "    ") -> str:
    """One step as a loop over its address class."""
    arr = _step_targets(target)
    fn = {READ: "rd", WRITE: "wr", FLUSH: "fl", REMOTE_WRITE: "wr"}[kind]
    return f"{indent}for (int i = 0; i < N_{arr}; i++) {fn}(buf + {arr}[i]);\n"


def emit_native_step_code(case: ConcreteCase, cfg: MachineConfig | None = None, rep: int = DEFAULT_REP) -> str:
    """Complete C source for one concrete case; argv[1] picks the secret candidate (0 a, 1 alias, 2 nib)."""
    cfg = cfg or default_machine()
    geom = bench_geometry_for(case, cfg)
    lay = make_layout(geom.loose(), rep)
    ev = lay.evset_flat()
    all_addr = lay.all_addresses()
    span = max(all_addr) - BENCH_BASE + geom.line_size
    out = [f"/* case {case.case_id}: {' ; '.join(str(s) for s in case.steps)} */\n"]
    out.append(_PRELUDE.replace("{read}", _asm(READ_SEQ)).replace("{write}", _asm(WRITE_SEQ))
               .replace("{flush}", _asm(FLUSH_SEQ)))
    out.append(f"\n#define SPAN 0x{span:x}ul\n#define N_CAND {rep}\n")
    out.append(f"static const uint64_t CAND[3][N_CAND] = {{\n"
               f"    {{{_offsets(lay.a)}}},\n    {{{_offsets(lay.alias)}}},\n    {{{_offsets(lay.nib)}}},\n}};\n")
    for name, addrs in (("A", lay.a), ("EV", ev), ("KN", lay.known_nib), ("ALL", all_addr)):
        body = _offsets(addrs) if addrs else "0"
        out.append(f"#define N_{name} {len(addrs)}\nstatic const uint64_t {name}[{max(1, len(addrs))}] = {{{body}}};\n")
    out.append("#define N_U N_CAND\nstatic const uint64_t *U;\nstatic volatile char *buf;\n"
               "static uint64_t t_step3;\n\n")

    mt = case.scheduling == MULTI_THREADED
    roles = []
    for i, (step, kind) in enumerate(zip(case.steps, case.op_kinds)):
        if step.is_star:
            roles.append((i, "none", None))
        elif kind == REMOTE_WRITE:
            roles.append((i, "remote", step))
        elif mt and step.actor == ATTACKER:
            roles.append((i, "sibling", step))
        else:
            roles.append((i, "local", step))

    for thread, cpu in (("local", 0), ("sibling", 1), ("remote", 2)):
        out.append(f"static void *run_{thread}(void *arg)\n{{\n    (void)arg;\n    pin({cpu});\n")
        for i, role, step in roles:
            if role != thread:
                continue
            timed = i == 2
            out.append(f"    wait_turn({i});\n")
            if timed:
                out.append("    uint64_t t0 = now_ns();\n")
            out.append(emit_step(case.op_kinds[i], step.target))
            if timed:
                out.append("    t_step3 = now_ns() - t0;\n")
            out.append(f"    turn = {i + 1};\n")
        out.append("    return NULL;\n}\n\n")

    out.append("int main(int argc, char **argv)\n{\n"
               "    int cand = argc > 1 ? atoi(argv[1]) : 0;\n"
               "    if (cand < 0 || cand > 2) return 2;\n"
               "    buf = mmap(NULL, SPAN, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);\n"
               "    if (buf == MAP_FAILED) return 1;\n"
               "    U = CAND[cand];\n"
               "    pthread_t th[3];\n")
    for i, role, _ in roles:
        if role == "none":
            out.append(f"    /* step {i + 1}: star, no operation */\n")
    skip = [i for i, role, _ in roles if role == "none"]
    out.append(f"    turn = {skip[-1] + 1 if skip and skip == list(range(len(skip))) else 0};\n")
    out.append("    pthread_create(&th[0], NULL, run_local, NULL);\n"
               "    pthread_create(&th[1], NULL, run_sibling, NULL);\n"
               "    pthread_create(&th[2], NULL, run_remote, NULL);\n"
               "    for (int k = 0; k < 3; k++) pthread_join(th[k], NULL);\n"
               "    printf(\"%llu\\n\", (unsigned long long)t_step3);\n"
               "    munmap((void *)buf, SPAN);\n"
               "    return 0;\n}\n")
    return "".join(out)


def emit_catalog(catalog: Catalog, out_dir, cfg: MachineConfig | None = None,
                 big_little: bool = False, rep: int = DEFAULT_REP) -> list:
    """One .c file per expanded case; returns the written paths in catalog order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = cfg or default_machine()
    paths = []
    for pat in catalog:
        for case in expand_cases(pat, big_little):
            p = out_dir / f"{case.case_id}.c"
            p.write_text(emit_native_step_code(case, cfg, rep))
            paths.append(p)
    return paths
