import numpy as np


def assert_close(actual, desired, **kw):
    """``assert_allclose`` with ``desired`` broadcast to the shape of ``actual``."""
    actual = np.asarray(actual)
    np.testing.assert_allclose(actual, np.broadcast_to(desired, actual.shape), **kw)
