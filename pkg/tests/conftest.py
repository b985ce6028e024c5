"""Shared helpers: hand-built deployments with controlled geometry."""
import pytest

from oransim.deployment import Cell, Deployment, Ue, serving_cell_for


def build_deployment(cell_specs, ue_specs, num_operators, seed=0):
    """Deployment from explicit specs.

    cell_specs: list of (x, y, owner_operator_id)
    ue_specs:   list of (x, y, home_operator_id, demand_mbps)
    """
    cells = tuple(
        Cell(id=i, owner_operator_id=owner, x=float(x), y=float(y))
        for i, (x, y, owner) in enumerate(cell_specs)
    )
    ues = tuple(
        Ue(
            id=i,
            home_operator_id=home,
            x=float(x),
            y=float(y),
            demand_mbps=float(demand),
            serving_cell_id=serving_cell_for(cells, float(x), float(y)),
        )
        for i, (x, y, home, demand) in enumerate(ue_specs)
    )
    return Deployment(
        cells=cells,
        ues=ues,
        num_operators=num_operators,
        inter_site_distance=500.0,
        seed=seed,
    )


@pytest.fixture
def single_cell_dep():
    """One operator, one cell at the origin, one UE 100 m away."""
    return build_deployment(
        cell_specs=[(0.0, 0.0, 0)],
        ue_specs=[(100.0, 0.0, 0, 5.0)],
        num_operators=1,
    )


@pytest.fixture
def two_operator_dep():
    """Two far-apart cells owned by different operators; one UE per cell.

    UE 0 sits by operator 0's cell, UE 1 by operator 1's. The cells are far
    enough apart (20 km) that neither covers the other's UE.
    """
    return build_deployment(
        cell_specs=[(0.0, 0.0, 0), (20000.0, 0.0, 1)],
        ue_specs=[(100.0, 0.0, 0, 5.0), (20100.0, 0.0, 0, 5.0)],
        num_operators=2,
    )
