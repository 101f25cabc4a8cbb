"""Shared fixtures: the monthly 6-step grid, the barrier shapes used by the tables and a contract factory."""

import pytest

from domain.models import BarrierSpec, Direction, MarketParams, OptionContract, OptionType, TimeGrid

UP_BARRIERS = {
    "T1": (105.0, 108.0, 110.0, 113.0, 115.0, 118.0),
    "T2": (125.0, 122.0, 120.0, 117.0, 115.0, 112.0),
    "T3": (105.0, 110.0, 115.0, 120.0, 115.0, 110.0),
}

DOWN_BARRIERS = {
    "T1": (75.0, 78.0, 80.0, 83.0, 85.0, 88.0),
    "T2": (95.0, 92.0, 90.0, 87.0, 85.0, 83.0),
    "T3": (95.0, 92.0, 90.0, 87.0, 90.0, 92.0),
}


@pytest.fixture
def market():
    return MarketParams(spot=100.0, rate=0.03, vol=0.2)


@pytest.fixture
def monthly_grid():
    return TimeGrid.uniform(0.5, 6)


@pytest.fixture
def make_contract(monthly_grid):
    """Contract on one of the table barrier shapes."""

    def build(option_type: str, shape: str = "T1", strike: float = 100.0, grid: TimeGrid = None):
        kind = OptionType(option_type)
        levels = UP_BARRIERS[shape] if kind.direction is Direction.UP else DOWN_BARRIERS[shape]
        grid = grid or monthly_grid
        return OptionContract(option_type=kind, strike=strike, grid=grid,
                              barrier=BarrierSpec.full(kind.direction, levels[:grid.n]))

    return build


@pytest.fixture
def write_scenario(tmp_path):
    """Write TOML text to a scenario file and return its path."""

    def write(text: str, name: str = "scenario.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
