#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Exception types shared across the package."""


class NetcalcError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NetcalcError, ValueError):
    """A network, curve or scenario violates a structural constraint."""


class NotATreeError(NetcalcError):
    """The analysed topology is not a tandem or an in-tree."""


class NotAForestError(NetcalcError):
    """A decomposition was expected to leave a forest but did not."""


class InterestNotAtRootError(NetcalcError):
    """A flow of interest does not cross the analysed root server."""


class LocallyUnstableError(NetcalcError):
    """A server's aggregate input rate reaches or exceeds its service rate."""


class ZeroRateFlowError(NetcalcError):
    """Delay computation requested for a flow with zero arrival rate."""


class OracleSizeError(NetcalcError):
    """Brute-force enumeration rejected because the instance is too large."""


class ScenarioError(NetcalcError):
    """A simulation scenario is inconsistent with the network."""


class UnsupportedTargetError(NetcalcError):
    """The requested performance target is not supported in this context."""
