# %% [markdown]
# # Grid topology
#
# Sensor ranks fill a ``width x height`` grid row by row, starting at 1.
# Rank 0 is the base station and sits outside the grid. Each sensor talks
# only to the cells directly left, right, above and below it.

# %%
import numpy as np

from gridwsn.topology import GridConfig, classify, directed_edge_count, neighbors_of, render_grid

grid = GridConfig(4, 5)
print(render_grid(grid))

# %% [markdown]
# Rank 7 is an interior cell; rank 1 is a corner and has only two neighbours.

# %%
for rank in (7, 1, 2):
    print(rank, classify(rank, grid), neighbors_of(rank, grid))

# %% [markdown]
# Degree map for the whole grid. Corners have 2 neighbours, edges 3 and the
# interior 4. The sum over all cells is the number of directed links, which
# is also the number of value frames sent per iteration.

# %%
degrees = np.array([len(neighbors_of(r, grid).present()) for r in grid.sensor_ranks()])
print(degrees.reshape(grid.height, grid.width))
print("directed links:", degrees.sum(), "=", directed_edge_count(grid))

# %% [markdown]
# A 10 x 2 layout has no interior at all, so every non-corner cell is an edge.

# %%
wide = GridConfig(10, 2)
print(render_grid(wide))
print({k: sum(classify(r, wide) == k for r in wide.sensor_ranks()) for k in ("corner", "edge", "interior")})
