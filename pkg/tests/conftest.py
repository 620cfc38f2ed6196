"""Shared fixtures: a session-wide reference cache in a temporary directory."""

import os

import pytest

from kappafp.harness import RunConfig, get_reference
from kappafp.kernels import available_backends


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    d = os.environ.get("KAPPAFP_TEST_CACHE")
    if d:
        return d
    return str(tmp_path_factory.mktemp("kappafp-cache"))


@pytest.fixture(scope="session")
def ref3(cache_dir):
    """Fine-grid reference for kappa = 3 at t = 0.2, 2, 10."""
    return get_reference(RunConfig("fd", kappa=3.0, cache_dir=cache_dir))


@pytest.fixture(scope="session")
def ref31(cache_dir):
    """Fine-grid reference for kappa = 31 (unregularised) at t = 0.2, 2, 10."""
    return get_reference(RunConfig("fd", kappa=31.0, cache_dir=cache_dir))


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param
