import dataclasses
import json
from enum import Enum
from json import JSONEncoder
from typing import Any

import numpy as np


class CustomJSONEncoder(JSONEncoder):
    """JSON encoder for the value types cascadenet emits.

    Extends the standard JSONEncoder to serialize:
    - Enum values to their underlying value
    - numpy scalars to Python numbers and arrays to nested lists
    - dataclass instances to dicts (field order preserved)
    - objects exposing ``to_dict()`` through that method
    """

    def default(self, obj: Any) -> Any:
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if hasattr(obj, 'to_dict'):
            return obj.to_dict()
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return dataclasses.asdict(obj)
        return super().default(obj)


def dumps(data: Any) -> str:
    """Serialize deterministically: fixed key order, indent 2, trailing newline."""
    return json.dumps(data, cls=CustomJSONEncoder, indent=2, allow_nan=False) + "\n"


def write_json(path: str, data: Any) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(dumps(data))
