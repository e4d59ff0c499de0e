import json
import unittest
from dataclasses import dataclass
from enum import Enum

import numpy as np

from cascadenet.compiler import Stage
from cascadenet.cpwl import hat
from cascadenet.encoders import CustomJSONEncoder, dumps
from cascadenet.exceptions import InvariantError


class E(Enum):
    A = "a"


@dataclass
class Point:
    x: float
    y: float


class TestEncoders(unittest.TestCase):
    def test_custom_json_encoder(self):
        data = {
            "e": E.A,
            "stage": Stage.COORDINATE,
            "count": np.int64(3),
            "flag": np.bool_(True),
            "value": np.float64(0.5),
            "array": np.array([[1.0, 2.0]]),
            "point": Point(1.0, 2.0),
            "seed": hat(0.0, 2.0),
        }
        decoded = json.loads(json.dumps(data, cls=CustomJSONEncoder))
        self.assertEqual(decoded["e"], "a")
        self.assertEqual(decoded["stage"], "coordinate")
        self.assertEqual(decoded["count"], 3)
        self.assertIs(decoded["flag"], True)
        self.assertEqual(decoded["array"], [[1.0, 2.0]])
        self.assertEqual(decoded["point"], {"x": 1.0, "y": 2.0})
        self.assertEqual(decoded["seed"]["breakpoints"], [0.0, 1.0, 2.0])

    def test_dumps_is_deterministic(self):
        data = {"b": 1, "a": [0.1, 2]}
        self.assertEqual(dumps(data), dumps(dict(data)))
        self.assertTrue(dumps(data).endswith("\n"))
        self.assertLess(dumps(data).index('"b"'), dumps(data).index('"a"'))

    def test_rejects_nan(self):
        with self.assertRaises(ValueError):
            dumps({"x": float("nan")})

    def test_error_payload(self):
        error = InvariantError("bounds exceeded")
        self.assertEqual(
            error.to_dict(), {"error": {"type": "invariant_error", "message": "bounds exceeded"}},
        )
