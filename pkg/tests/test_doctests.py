import doctest

import pytest

import netcalc.curves
import netcalc.decomposition
import netcalc.fluid
import netcalc.network
import netcalc.oracle
import netcalc.stability
import netcalc.tree_analysis


@pytest.mark.parametrize(
    "module",
    [
        netcalc.curves,
        netcalc.network,
        netcalc.decomposition,
        netcalc.tree_analysis,
        netcalc.oracle,
        netcalc.fluid,
        netcalc.stability,
    ],
    ids=lambda m: m.__name__,
)
def test_module_doctests(module):
    result = doctest.testmod(module)
    assert result.failed == 0
