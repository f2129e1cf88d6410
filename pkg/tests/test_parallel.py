import numpy as np
import pytest

from kprocess import ParameterError
from kprocess.parallel import BLOCK_SIZE, run_blocks, stream


def uniforms(rng, m, scale):
    return scale * rng.random(m)


def test_stream_is_keyed():
    a = stream(5, 1, 2).random(4)
    assert np.array_equal(a, stream(5, 1, 2).random(4))
    assert not np.array_equal(a, stream(5, 2, 1).random(4))
    assert not np.array_equal(a, stream(6, 1, 2).random(4))


def test_blocks_concatenate_in_order():
    out = run_blocks(uniforms, 2 * BLOCK_SIZE + 7, 3, (2.0,), key=(1,))
    assert out.shape == (2 * BLOCK_SIZE + 7,)
    assert np.array_equal(out[:BLOCK_SIZE], 2.0 * stream(3, 1, 0).random(BLOCK_SIZE))
    assert np.array_equal(out[-7:], 2.0 * stream(3, 1, 2).random(7))


@pytest.mark.parametrize("jobs", [2, 4])
def test_worker_count_invariant(jobs):
    one = run_blocks(uniforms, 5 * BLOCK_SIZE + 1, 9, (1.0,), jobs=1)
    many = run_blocks(uniforms, 5 * BLOCK_SIZE + 1, 9, (1.0,), jobs=jobs)
    assert one.tobytes() == many.tobytes()


def test_rejects_empty():
    with pytest.raises(ParameterError):
        run_blocks(uniforms, 0, 1, (1.0,))
