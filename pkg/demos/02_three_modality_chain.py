# coding: utf-8

# # A chain of three modalities
#
# With three modalities, M2 depends on M1 and M3 depends on both. Each
# downstream block is replaced by its residual after a reduced-rank fit on
# everything upstream, and the link signal is collected into nuisance blocks.

# %%

import numpy as np

from mvopr import build_transform, builtin_scenario, chain_residualize, simulate_scenario
from mvopr.projection import orthogonality_gap

# %%

data = simulate_scenario(builtin_scenario("s6_chain"), rep_index=0)
chain = data.chain
fits = chain_residualize(chain)
print("selected link ranks:", [f.rank for f in fits])

# %% [markdown]
# `build_transform` re-expresses the link coefficients in terms of the
# residual blocks, takes the SVD of each block's downstream contribution and
# projects the penalised blocks away from the resulting directions.

# %%

td = build_transform(chain, fits)
for name, block, u in zip(chain.names, td.blocks, td.nuisance.u_blocks + [None]):
    cols = 0 if u is None else u.shape[1]
    print(f"{name}: block {block.shape}, nuisance columns {cols}")

# %% [markdown]
# Blocks versus the whole nuisance span: zero up to rounding.

# %%

u = td.nuisance.concatenated
for name, block in zip(chain.names, td.blocks):
    print(name, "%.1e" % orthogonality_gap(block, u))

# %% [markdown]
# Blocks versus each other are *not* orthogonal in a finite sample. With
# n equal to p1 the projected first block spans the whole complement of its
# nuisance directions, so nothing else can be orthogonal to it.

# %%

a, b, c = td.blocks
print("block 1 vs block 2: %.2f" % orthogonality_gap(a, b))
print("block 3 vs block 1: %.2f" % orthogonality_gap(c, a))
print("rank of projected block 1:", np.linalg.matrix_rank(a), "of", a.shape[0])
