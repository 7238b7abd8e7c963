import pytest
import torch
from hypothesis import settings

from mmhar.data import SyntheticSpec, generate_synthetic_dataset

settings.register_profile("mmhar", deadline=None, max_examples=50)
settings.load_profile("mmhar")

torch.set_num_threads(1)

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_spec():
    return SyntheticSpec(num_imu_factors=2, num_video_factors=2, samples_per_class=6, noise_std=0.3,
                         seq_len=64, clip_shape=(4, 8, 8), test_samples_per_class=3)


@pytest.fixture(scope="session")
def tiny_data(tiny_spec):
    return generate_synthetic_dataset(tiny_spec, seed=7)
