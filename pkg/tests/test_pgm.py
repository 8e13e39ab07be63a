import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cutknit.pgm import PgmError, PgmImage, data_to_pixels, parse_pgm, pixels_to_data, write_pgm


def test_minimal_ascii():
    img = parse_pgm(b"P2 1 1 255 128")
    assert img.pixels.tolist() == [[128]] and img.maxval == 255 and img.magic == "P2"


def test_comments_in_header():
    img = parse_pgm(b"P2\n# made by hand\n2 1\n# max\n9\n1 9\n")
    assert img.comments == ("made by hand", "max")
    assert img.pixels.tolist() == [[1, 9]]
    assert b"# made by hand" in write_pgm(img)
    assert b"#" not in write_pgm(img, keep_comments=False)


images = st.tuples(st.integers(1, 8), st.integers(1, 8), st.sampled_from([1, 255, 256, 65535])).flatmap(
    lambda t: st.builds(PgmImage, arrays(np.int64, (t[0], t[1]), elements=st.integers(0, t[2])),
                        st.just(t[2])))


@settings(max_examples=60)
@given(images)
def test_binary_roundtrip_is_byte_identical(img):
    raw = write_pgm(img, "P5")
    back = parse_pgm(raw)
    assert np.array_equal(back.pixels, img.pixels) and back.maxval == img.maxval
    assert write_pgm(back) == raw


@settings(max_examples=30)
@given(images)
def test_ascii_roundtrip(img):
    back = parse_pgm(write_pgm(img, "P2"))
    assert np.array_equal(back.pixels, img.pixels)


def test_sixteen_bit_big_endian():
    raw = b"P5\n2 1\n65535\n" + bytes([0x01, 0x02, 0xFF, 0xFF])
    assert parse_pgm(raw).pixels.tolist() == [[258, 65535]]


@pytest.mark.parametrize("raw", [b"P6 1 1 255\n\x00", b"P5 2 2 255\n\x00\x00", b"P2 2 1 255 3",
                                 b"P5 1 1", b"P2 1 1 255 300", b"P2 1 1 70000 1", b"P2 a 1 255 1"])
def test_malformed_input(raw):
    with pytest.raises(PgmError):
        parse_pgm(raw)


@given(arrays(np.int64, 16, elements=st.integers(0, 255)))
def test_pixel_mapping_inverts(px):
    img = PgmImage(px.reshape(4, 4))
    vals = pixels_to_data(img)
    assert vals.min() >= -1 and vals.max() <= 1
    assert np.array_equal(data_to_pixels(vals, 255).reshape(4, 4), img.pixels)


def test_inverse_mapping_clamps():
    assert data_to_pixels(np.array([-1.5, 2.0]), 255).tolist() == [0, 255]
