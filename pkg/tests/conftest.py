import numpy as np
import pytest

from otseg.config import resolve_config
from otseg.synth import SynthSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_video():
    """Short, well separated synthetic video (fast to train on)."""
    return generate(SynthSpec(t_frames=120, k_true=3, d_img=16, d_text=16, min_seg_len=15, seed=3))


@pytest.fixture
def small_config():
    return resolve_config({"k": 3, "train": {"epochs": 3, "latent_dim": 16}})


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion.

    Lines are printed immediately and repeated in the terminal summary so
    they survive output capturing.
    """
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
