import json

import numpy as np
import pytest

from looptrust import (
    GrayImage,
    ImageFormatError,
    InvalidSpecError,
    RingSpec,
    RingZone,
    Role,
    generate,
    load_image,
    load_labeling,
    save_image,
    save_labeling,
)
from looptrust.seeds import child_seed

from oracles import write_png16


def ring_spec(sigma=0.0, mu=(2000.0, 3000.0, 4000.0), width=24, height=24, half=8, thick=3):
    mu0, mu_int, mu_loop = mu
    return RingSpec(
        width=width,
        height=height,
        rings=(RingZone((width // 2, height // 2), half, thick, mu_loop, mu_int),),
        mu_background=mu0,
        sigma=sigma,
    )


class TestGenerate:
    def test_noiseless_ring_exact_values(self):
        img, lab = generate(ring_spec(), seed=0)
        loop = lab.mask_of_role(Role.loop(1))
        interior = lab.mask_of_role(Role.interior(1))
        background = lab.mask_of_role(Role.background())
        assert np.all(img.intensity[loop] == 4000.0)
        assert np.all(img.intensity[interior] == 3000.0)
        assert np.all(img.intensity[background] == 2000.0)
        assert loop.sum() + interior.sum() + background.sum() == 24 * 24

    def test_no_rings_constant(self):
        spec = RingSpec(width=8, height=6, rings=(), mu_background=17.5, sigma=0.0)
        img, lab = generate(spec, seed=3)
        assert np.all(img.intensity == 17.5)
        assert np.all(lab.label == 0)
        assert lab.roles == {0: Role.background()}

    def test_partition_sample_means_near_truth(self):
        img, lab = generate(ring_spec(sigma=50.0), seed=7)
        for role, mu in [
            (Role.background(), 2000.0),
            (Role.interior(1), 3000.0),
            (Role.loop(1), 4000.0),
        ]:
            vals = img.intensity[lab.mask_of_role(role)]
            assert abs(vals.mean() - mu) < 5 * 50.0 / np.sqrt(vals.size)

    def test_deterministic(self):
        a, _ = generate(ring_spec(sigma=120.0), seed=99)
        b, _ = generate(ring_spec(sigma=120.0), seed=99)
        assert np.array_equal(a.intensity, b.intensity)

    def test_partition_consistency_sigma0(self):
        img, lab = generate(ring_spec(), seed=0)
        # grouping pixels by value reproduces the labeling's partition
        for value in np.unique(img.intensity):
            labels = np.unique(lab.label[img.intensity == value])
            assert labels.size == 1

    def test_noise_centering_over_replicates(self):
        spec = ring_spec(sigma=30.0, width=14, height=14, half=4, thick=2)
        _, lab = generate(ring_spec(width=14, height=14, half=4, thick=2), seed=0)
        mus = {Role.background(): 2000.0, Role.interior(1): 3000.0, Role.loop(1): 4000.0}
        sums = {role: 0.0 for role in mus}
        counts = {role: 0 for role in mus}
        reps = 1000
        for r in range(reps):
            img, _ = generate(spec, seed=child_seed(5150, r))
            for role, mu in mus.items():
                vals = img.intensity[lab.mask_of_role(role)]
                sums[role] += float((vals - mu).sum())
                counts[role] += vals.size
        for role in mus:
            assert abs(sums[role] / counts[role]) < 4 * 30.0 / np.sqrt(counts[role])

    def test_labeling_validates(self):
        _, lab = generate(ring_spec(), seed=0)
        lab.validate()

    def test_disk_shape(self):
        spec = RingSpec(
            width=30,
            height=30,
            rings=(RingZone((15, 15), 9, 3, 40.0, 30.0),),
            mu_background=20.0,
            sigma=0.0,
            shape="disk",
        )
        img, lab = generate(spec, seed=0)
        lab.validate()
        assert set(np.unique(img.intensity)) == {20.0, 30.0, 40.0}


class TestSpecValidation:
    def test_overlapping_rings_rejected(self):
        spec = RingSpec(
            width=40,
            height=40,
            rings=(
                RingZone((15, 15), 8, 3, 4000.0, 3000.0),
                RingZone((22, 22), 8, 3, 4000.0, 3000.0),
            ),
            mu_background=2000.0,
            sigma=0.0,
        )
        with pytest.raises(InvalidSpecError, match="overlap"):
            spec.validate()

    def test_border_touching_rejected(self):
        spec = RingSpec(
            width=20,
            height=20,
            rings=(RingZone((9, 9), 9, 3, 4.0, 3.0),),
            mu_background=2.0,
            sigma=0.0,
        )
        with pytest.raises(InvalidSpecError, match="border"):
            spec.validate()

    def test_thickness_bound(self):
        spec = RingSpec(
            width=20,
            height=20,
            rings=(RingZone((10, 10), 4, 4, 4.0, 3.0),),
            mu_background=2.0,
            sigma=0.0,
        )
        with pytest.raises(InvalidSpecError, match="thickness"):
            spec.validate()

    def test_generate_rejects_invalid(self):
        with pytest.raises(InvalidSpecError):
            generate(
                RingSpec(width=10, height=10, rings=(), mu_background=1.0, sigma=-1.0), 0
            )


class TestImageIO:
    def test_minimal_csv_parse(self, tmp_path):
        path = tmp_path / "img.csv"
        path.write_text("1,2\n3,4\n")
        img = load_image(path)
        assert img.width == 2 and img.height == 2
        assert np.array_equal(img.intensity, [[1.0, 2.0], [3.0, 4.0]])

    def test_csv_roundtrip_bit_exact(self, tmp_path):
        img, _ = generate(ring_spec(sigma=333.0), seed=11)
        save_image(img, tmp_path / "img.csv")
        back = load_image(tmp_path / "img.csv")
        assert np.array_equal(back.intensity, img.intensity)

    def test_ragged_rows_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,4,5\n")
        with pytest.raises(ImageFormatError, match="row 1"):
            load_image(path)

    def test_non_numeric_cell_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(ImageFormatError, match="row 1, column 1"):
            load_image(path)

    def test_png_roundtrip(self, tmp_path):
        img, _ = generate(ring_spec(), seed=0)
        save_image(img, tmp_path / "img.png")
        back = load_image(tmp_path / "img.png")
        assert np.array_equal(back.intensity, img.intensity)

    def test_png_against_independent_writer(self, tmp_path):
        arr = np.full((10, 10), 1200, dtype=np.uint16)
        arr[5, 5] = 3778
        write_png16(tmp_path / "ref.png", arr)
        img = load_image(tmp_path / "ref.png")
        assert img.at(5, 5) == 3778.0
        assert np.array_equal(img.intensity, arr.astype(float))

    def test_png_rejects_fractional(self, tmp_path):
        img = GrayImage(np.array([[0.5, 1.0], [2.0, 3.0]]))
        with pytest.raises(ImageFormatError):
            save_image(img, tmp_path / "img.png")

    def test_labeling_roundtrip(self, tmp_path):
        _, lab = generate(ring_spec(), seed=0)
        save_labeling(lab, tmp_path / "labels.csv", tmp_path / "labels.json")
        back = load_labeling(tmp_path / "labels.csv", tmp_path / "labels.json")
        assert np.array_equal(back.label, lab.label)
        assert back.roles == lab.roles
        roles = json.loads((tmp_path / "labels.json").read_text())
        assert roles["0"] == "background" and roles["1"] == "loop:1"


class TestTypes:
    def test_image_invariants(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[1.0]]))
        with pytest.raises(ValueError):
            GrayImage(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_image_immutable(self):
        img, _ = generate(ring_spec(), seed=0)
        with pytest.raises(ValueError):
            img.intensity[0, 0] = 1.0

    def test_role_string_roundtrip(self):
        for role in (Role.background(), Role.loop(2), Role.interior(7)):
            assert Role.from_string(role.to_string()) == role
