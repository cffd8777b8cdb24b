"""Shared fixtures: kernel warm-up and a subprocess CLI runner."""

import os
import subprocess
import sys

import numpy as np
import pytest

from bellmi import _kernels
from bellmi.sphere import RandomSource, sample_uniform_sphere


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger one-time JIT compilation so timed sections measure steady state."""
    gen = RandomSource(0).generator()
    xs = sample_uniform_sphere(gen, 8)
    ys = sample_uniform_sphere(gen, 8)
    l1 = sample_uniform_sphere(gen, 8)
    l2 = sample_uniform_sphere(gen, 8)
    _kernels.tb_outcomes(xs, ys, l1, l2)
    _kernels.gg_outcomes(xs, ys, l1, gen.random(8))
    _kernels.agreement_probs(xs, np.full(8, 0.125), l1, l2)
    _kernels.tally(
        np.zeros(8, dtype=np.int64),
        np.zeros(8, dtype=np.int64),
        np.ones(8, dtype=np.int8),
        np.ones(8, dtype=np.int8),
        1,
        1,
    )
    return _kernels.active_backend()


def run_cli(args, env_extra=None, cwd=None):
    """Run the CLI in a subprocess; returns (exit_code, stdout_bytes, stderr)."""
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "bellmi", *args],
        capture_output=True,
        env=env,
        cwd=cwd,
    )
    return proc.returncode, proc.stdout, proc.stderr.decode()
