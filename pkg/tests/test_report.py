import json
import math

import numpy as np
import pytest

from extremal_harnack.errors import QuadratureFailure
from extremal_harnack.quadrature import gauss_kronrod, integrate_log
from extremal_harnack.report import dumps, records_csv, svg_loglog, write_csv


class TestQuadrature:
    def test_polynomial_exact(self):
        val, err = gauss_kronrod(lambda x: x ** 7 - 3 * x ** 2, 0.0, 2.0)
        assert val == pytest.approx(2 ** 8 / 8 - 8, rel=1e-14)

    def test_reversed(self):
        assert gauss_kronrod(np.cos, 1.0, 0.0)[0] == pytest.approx(-math.sin(1.0))

    def test_singular_log(self):
        # int_a^1 s^(-1/2) ds = 2 - 2 sqrt(a)
        assert integrate_log(lambda s: s ** -0.5, 1e-12, 1.0) == pytest.approx(2 - 2e-6, rel=1e-10)

    def test_kink_at_one(self):
        def g(s):
            return 1 / (s * (1 + np.abs(np.log(s))))
        exact = math.log(1 + math.log(1e3)) + math.log(1 + math.log(1e2))
        assert integrate_log(g, 1e-2, 1e3) == pytest.approx(exact, rel=1e-12)

    def test_nonfinite(self):
        with pytest.raises(QuadratureFailure):
            gauss_kronrod(lambda x: np.where(x < 0.5, np.inf, 1.0), 0.0, 1.0)


class TestWriters:
    def test_json_non_finite(self):
        body = json.loads(dumps({"b": math.inf, "a": np.float64(math.nan), "c": np.arange(2)}))
        assert body == {"a": "nan", "b": "inf", "c": [0, 1]}

    def test_csv_format(self, tmp_path):
        p = write_csv(str(tmp_path / "x.csv"), ["a", "b"], [(0.1, True), (None, "z")])
        lines = open(p).read().splitlines()
        assert lines == ["a,b", "1.0000000000000001e-01,1", ",z"]

    def test_records_flatten(self, tmp_path):
        p = records_csv(str(tmp_path / "r.csv"), [{"v": [1, 2], "k": 3}])
        assert open(p).read().splitlines()[0] == "k,v_0,v_1"

    def test_svg_drops_nonpositive(self, tmp_path):
        p = svg_loglog(str(tmp_path / "p.svg"), [("s", [1, 10, 0], [1, 0.1, 5])], "t<1>")
        text = open(p).read()
        assert text.count("<circle") == 2 and "t&lt;1&gt;" in text
