"""Worsey-Farin split of the disphenoid and the dimension tables at r=3.

Run with ``python demos/01_split_and_dims.py``.
"""
from wfcomplex import fespaces as FS
from wfcomplex.complexes import domains, get_split

S = get_split("disphenoid")
info = S.to_dict()
print("sub-tetrahedra:", len(S.cells))
print("skeleton counts:", info["skeleton"])
print("face split points:", len(info["face_points"]))

r = 3
for table, kind in (("1", "face"), ("2", "tet"), ("U", "tet")):
    print(f"\ntable {table}, r={r}")
    for row in FS.dims_table(table, r, domains("disphenoid", kind)):
        if row.status == "skipped":
            continue
        print(f"  {row.space:<12} expected {row.expected:>4}  computed {row.computed:>4}  {row.status}")
