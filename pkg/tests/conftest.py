import pytest

from deacp import parser as P


BASE_SRC = """
domain -16..15
vars i, j, d, q, r, u, v
actions a, a/1, a/2, b, b/1, b/2, c, c/1, c/2, send/1
comm { a | b = c }
map sigma { i = 11, j = 3 }
"""


@pytest.fixture(scope="session")
def base_spec():
    return P.parse_spec(BASE_SRC)


@pytest.fixture(scope="session")
def ctx(base_spec):
    return base_spec.context()


@pytest.fixture(scope="session")
def small_spec():
    return P.parse_spec(
        """
domain -4..3
vars u, v, h, l
actions a, a/1, a/2, b, b/1, b/2, c, c/1, c/2, send/1
comm { a | b = c }
"""
    )


@pytest.fixture(scope="session")
def small_ctx(small_spec):
    return small_spec.context()


def proc(spec, text):
    return P.parse_process(text, spec)


def cond(spec, text):
    return P.parse_condition(text, spec)
