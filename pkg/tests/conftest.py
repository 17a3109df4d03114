import pytest

from pricesim import _kernels

KERNEL_NAMES = ("greedy_color_order", "dsatur", "smallest_last_order",
                "min_cost_assignment", "nondominated_mask")

ACCEPTANCE_LINES = []


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = _kernels.BACKENDS[request.param]
    for name in KERNEL_NAMES:
        monkeypatch.setattr(_kernels, name, getattr(impl, name))
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
