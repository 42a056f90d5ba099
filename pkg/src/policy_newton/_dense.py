"""Guard that lets matrix-free code paths prove they never build a d-by-d Hessian."""

from contextlib import contextmanager
from contextvars import ContextVar

from .exceptions import DenseHessianForbidden

_forbidden: ContextVar[bool] = ContextVar("dense_hessian_forbidden", default=False)


@contextmanager
def forbid_dense_hessian():
    token = _forbidden.set(True)
    try:
        yield
    finally:
        _forbidden.reset(token)


def dense_hessian_forbidden() -> bool:
    return _forbidden.get()


def check_dense_allowed(what: str) -> None:
    if _forbidden.get():
        raise DenseHessianForbidden(f"{what} would allocate a d x d matrix inside a matrix-free path")
