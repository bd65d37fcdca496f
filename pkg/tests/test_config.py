import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperns.config import ConfigError, RunConfig, dumps, load, loads, with_overrides

MINIMAL = """
[torus]
trunc_n = 4
[solver]
T = 0.1
dt = 0.01
"""


class TestParsing:
    def test_defaults(self):
        cfg = loads("")
        assert cfg == RunConfig()

    def test_minimal(self):
        cfg = loads(MINIMAL)
        assert cfg.solver.torus.trunc_n == 4 and cfg.solver.steps == 10

    @pytest.mark.parametrize("text,field", [
        ("[solver]\ndt = 0\n", "dt"),
        ("[solver]\ndt = -0.5\n", "dt"),
        ("[solver]\nnu = 0\n", "nu"),
        ("[solver]\nseed = abc\n", "seed"),
        ("[torus]\ntrunc_n = 8\ngrid_N = 10\n", "grid_N"),
        ("[solver]\nbogus = 1\n", "solver.bogus"),
        ("[weird]\nx = 1\n", "weird"),
        ("[run]\ndump_noise = maybe\n", "run.dump_noise"),
        ("not an ini", "file"),
    ])
    def test_errors_name_the_field(self, text, field):
        with pytest.raises(ConfigError) as err:
            loads(text)
        assert err.value.field == field

    def test_optional_values(self):
        cfg = loads("[solver]\nmask_radius = 2.5\n[ou]\nT = 0\n")
        assert cfg.solver.mask_radius == 2.5 and cfg.ou.T == 0.0
        assert loads("[solver]\nmask_radius = none\n").solver.mask_radius is None

    def test_load_file(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text(MINIMAL)
        assert load(p) == loads(MINIMAL)

    def test_overrides(self):
        cfg = with_overrides(loads(MINIMAL), seed=42, dt=None)
        assert cfg.solver.seed == 42 and cfg.solver.dt == 0.01
        with pytest.raises(ConfigError) as err:
            with_overrides(cfg, dt=-1.0)
        assert err.value.field == "dt"


class TestRoundTrip:
    def test_default_round_trip(self):
        assert loads(dumps(RunConfig())) == RunConfig()

    @given(
        nu=st.floats(1e-3, 1e3, allow_nan=False),
        alpha=st.floats(1, 2),
        gamma=st.floats(0, 3),
        steps=st.integers(1, 200),
        dt=st.floats(1e-4, 0.1),
        seed=st.integers(0, 2 ** 63 - 1),
        n=st.integers(1, 16),
        mode=st.sampled_from(["direct", "splitting", "deterministic"]),
        levels=st.lists(st.integers(1, 32), min_size=1, max_size=4),
        eps=st.lists(st.floats(0, 1), max_size=4),
    )
    @settings(max_examples=60, deadline=None)
    def test_parse_serialize_parse(self, nu, alpha, gamma, steps, dt, seed, n, mode, levels, eps):
        text = (f"[torus]\ntrunc_n = {n}\n"
                f"[solver]\nnu = {nu!r}\nalpha = {alpha!r}\ngamma = {gamma!r}\n"
                f"dt = {dt!r}\nT = {steps * dt!r}\nseed = {seed}\nmode = {mode}\n"
                f"[convergence]\nlevels = {', '.join(map(str, levels))}\n"
                f"[uniqueness]\nepsilons = {', '.join(map(repr, eps))}\n")
        try:
            cfg = loads(text)
        except ConfigError:
            return  # T not an exact multiple of dt in floating point
        again = loads(dumps(cfg))
        assert again == cfg
        assert dumps(again) == dumps(cfg)
