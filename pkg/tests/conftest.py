import numpy as np
import pytest

from pinchsim.channel import RadioParams, WaveguideLayout

_ACCEPTANCE = []


@pytest.fixture
def radio():
    return RadioParams.from_frequency(10e9, noise_power=1e-12)


@pytest.fixture
def waveguide():
    return WaveguideLayout([0.0, 0.0, 3.0], [1.0, 0.0, 0.0], 20.0, 1.4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def acceptance():
    """Record an acceptance criterion outcome for the end-of-run summary."""
    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")


_GOOD = """\
frequency_ghz: 10
waveguides:
  - feed_m: [0, 0, 3]
    axis: [1, 0, 0]
    length_m: 20
users_m:
  - [5, 1, 0]
"""

# (name, file text or None, extra argv, expected exit status)
_CLI_CASES = [
    ("ok-validate", _GOOD, ["validate"], 0),
    ("ok-array-gain", _GOOD, ["array-gain", "--n-list", "1:3"], 0),
    ("ok-empty-sweep", _GOOD, ["min-power", "--sinr-db", ""], 0),
    ("bad-yaml", "frequency_ghz: [1, 2\n", ["validate"], 1),
    ("unknown-key", _GOOD + "foo: 1\n", ["validate"], 1),
    ("negative-length", _GOOD.replace("length_m: 20", "length_m: -3"), ["validate"], 1),
    ("missing-users", "frequency_ghz: 10\nwaveguides: []\n", ["validate"], 1),
    ("not-a-mapping", "- 1\n- 2\n", ["validate"], 1),
    ("empty-file", "", ["validate"], 1),
    ("missing-file", None, ["validate"], 1),
    ("bad-n-list", _GOOD, ["array-gain", "--n-list", "a:b"], 1),
    ("zero-antennas", _GOOD, ["array-gain", "--n-list", "0"], 1),
    ("aperture-too-long", _GOOD, ["array-gain", "--n-list", "500"], 1),
    ("bad-system", _GOOD, ["min-power", "--systems", "laser"], 1),
    ("bad-power-model", _GOOD, ["array-gain", "--power-model", "proportional:2"], 1),
    ("no-command", _GOOD, [], 1),
    # a user touching the waveguide makes the free-space distance zero
    ("user-on-waveguide", _GOOD.replace("[5, 1, 0]", "[5, 0, 3]"),
     ["array-gain", "--n-list", "1"], 2),
]


@pytest.fixture
def cli_corpus(tmp_path):
    """Build argv lists for the CLI exit-status corpus."""
    cases = []
    for name, text, argv, status in _CLI_CASES:
        path = tmp_path / f"{name}.yaml"
        if text is not None:
            path.write_text(text)
        if not argv:
            full = []
        elif argv[0] == "validate":
            full = ["validate", str(path)]
        else:
            full = [argv[0], "--scenario", str(path)] + argv[1:]
        cases.append((name, full, status))
    return cases
