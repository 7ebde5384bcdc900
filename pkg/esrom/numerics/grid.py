"""
This code contains the Grid class for periodic 1-D finite volume meshes and the difference and mass operators
acting on variable-major degree of freedom vectors
"""

import logging

import numpy as np

from esrom.errors import ContractError

logger = logging.getLogger("esrom")


class Grid:

    def __init__(self, n_cells, domain, n_vars=1, cell_widths=None):
        """
        :param n_cells: Number of cells N
        :param domain: Tuple (a, b) with b > a
        :param n_vars: Number of conserved variables n
        :param cell_widths: Optional length-N vector of positive cell widths summing to b - a; uniform if omitted
        """

        a, b = float(domain[0]), float(domain[1])
        if int(n_cells) < 1:
            raise ContractError("Grid needs at least one cell, got %s" % n_cells)
        if not b > a:
            raise ContractError("Grid domain must satisfy b > a, got (%g, %g)" % (a, b))
        if int(n_vars) < 1:
            raise ContractError("Grid needs at least one variable, got %s" % n_vars)

        self.n_cells = int(n_cells)
        self.n_vars = int(n_vars)
        self.domain = (a, b)

        if cell_widths is None:
            widths = np.full(self.n_cells, (b - a) / self.n_cells)
        else:
            widths = np.asarray(cell_widths, dtype=float).copy()
            if widths.shape != (self.n_cells,):
                raise ContractError("Expected %i cell widths, got shape %s" % (self.n_cells, widths.shape))
            if np.any(widths <= 0.0):
                raise ContractError("Cell widths must be positive")
            if not np.isclose(widths.sum(), b - a, rtol=1e-12, atol=0.0):
                raise ContractError("Cell widths sum to %.17g, expected %.17g" % (widths.sum(), b - a))
        widths.setflags(write=False)
        self.cell_widths = widths

        # Diagonal of Omega_h, cell widths replicated per variable
        mass = np.tile(widths, self.n_vars)
        mass.setflags(write=False)
        self.mass = mass
        self._sqrt_mass = np.sqrt(mass)

        edges = a + np.concatenate(([0.0], np.cumsum(widths)))
        centers = 0.5 * (edges[:-1] + edges[1:])
        centers.setflags(write=False)
        self.cell_centers = centers

    @property
    def n_dof(self):
        return self.n_vars * self.n_cells

    def with_vars(self, n_vars):
        """Same mesh carrying a different number of variables"""
        return Grid(self.n_cells, self.domain, n_vars=n_vars, cell_widths=self.cell_widths)

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.n_dof:
            raise ContractError("Expected leading dimension %i, got %i" % (self.n_dof, y.shape[0]))
        return y

    def blocks(self, y):
        """View a length-N_h vector (or N_h x m array) as (n_vars, N, ...)"""
        y = self._check(y)
        return y.reshape((self.n_vars, self.n_cells) + y.shape[1:])

    def flatten(self, blocks):
        blocks = np.asarray(blocks, dtype=float)
        return blocks.reshape((self.n_dof,) + blocks.shape[2:])

    def apply_delta_v(self, y):
        """Interface to volume differences: out_i = y_i - y_{i-1} per variable block, periodic"""
        yb = self.blocks(y)
        return self.flatten(yb - np.roll(yb, 1, axis=1))

    def apply_delta_i(self, y):
        """Volume to interface differences: out_i = y_{i+1} - y_i per variable block, periodic"""
        yb = self.blocks(y)
        return self.flatten(np.roll(yb, -1, axis=1) - yb)

    def mass_weight(self, y):
        y = self._check(y)
        return y * self.mass.reshape((-1,) + (1,) * (y.ndim - 1))

    def inverse_mass_weight(self, y):
        y = self._check(y)
        return y / self.mass.reshape((-1,) + (1,) * (y.ndim - 1))

    def sqrt_mass_weight(self, y):
        y = self._check(y)
        return y * self._sqrt_mass.reshape((-1,) + (1,) * (y.ndim - 1))

    def inner(self, x, y):
        """Omega_h weighted inner product"""
        return float(np.dot(self._check(x), self.mass_weight(y)))

    def norm(self, y):
        """Omega_h weighted norm"""
        y = self._check(y)
        return float(np.linalg.norm(self._sqrt_mass * y))

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n_vars == other.n_vars and self.n_cells == other.n_cells \
            and self.domain == other.domain and np.array_equal(self.cell_widths, other.cell_widths)

    def __repr__(self):
        return "Grid(n_cells=%i, domain=(%g, %g), n_vars=%i)" % (self.n_cells, self.domain[0], self.domain[1],
                                                                 self.n_vars)
