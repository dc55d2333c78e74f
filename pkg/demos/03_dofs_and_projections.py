"""Unisolvent DOFs for the U spaces and the projection they induce.

The U2 projection is applied twice to a random element and to a random
polynomial, showing idempotence and that the DOF values are reproduced.
Run with ``python demos/03_dofs_and_projections.py``.
"""
import random

from wfcomplex import eladofs as E
from wfcomplex.complexes import get_split

S = get_split("disphenoid")
sets = {}
for k in range(4):
    ds = E.build(f"U{k}", 3, S)
    ok, mode = ds.unisolvent("exact", 0)
    sets[k] = ds
    tags = ", ".join(f"{c['tag']}={c['count']}" for c in ds.count_check())
    print(f"U{k}: {len(ds)} DOFs, unisolvent={ok} ({mode})\n    {tags}")

U2 = sets[2]
rng = random.Random(3)
coef = U2.target.field.matrix(U2.target.dim, 1, [rng.randint(-5, 5) for _ in range(U2.target.dim)])
u = U2.target.basis @ coef
Pu = E.project(U2, u)
print("\nU2 projection reproduces an element:", Pu.equals(u))
print("projection is idempotent:", E.project(U2, Pu).equals(Pu))
