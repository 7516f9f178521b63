from fractions import Fraction

import pytest

from jurymech import ModelParams

F2_ARGS = dict(n_plus_1=2, prior_alpha=0.5, p_alpha=2 / 3, p_beta=1 / 3, t_P=1.5, t_J=0.5)
F9_ARGS = dict(n_plus_1=9, prior_alpha=0.5, p_alpha=2 / 3, p_beta=1 / 3, t_P=1.0, t_J=0.05)


def exact_args(args):
    out = dict(args)
    out.update(p_alpha=Fraction(2, 3), p_beta=Fraction(1, 3))
    for key in ("prior_alpha", "t_P", "t_J"):
        out[key] = Fraction(str(out[key]))
    return out


@pytest.fixture
def f2():
    return ModelParams(**F2_ARGS)


@pytest.fixture
def f9():
    return ModelParams(**F9_ARGS)


@pytest.fixture
def f2_exact():
    return ModelParams(**exact_args(F2_ARGS))


@pytest.fixture
def f9_exact():
    return ModelParams(**exact_args(F9_ARGS))
