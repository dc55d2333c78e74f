"""Check a few local sequences by rank-nullity, exactly and modulo two primes.

Run with ``python demos/02_exact_sequences.py``.
"""
from wfcomplex.complexes import catalog_run

for name in ("elseq", "elseqb", "preseq"):
    for mode in ("exact", "modular"):
        res = catalog_run(name, 4 if name == "elseqb" else 3, "disphenoid", mode, seed=1)
        rep = res.reports[0]
        slots = ", ".join(f"{s.label}:{s.dim}" for s in rep.slots)
        print(f"{name:<8} {mode:<8} head kernel {rep.head_kernel}  [{slots}]  {'ok' if res.passed else 'FAILED'}")
