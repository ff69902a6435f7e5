"""Reference external predictor: answers every query with the last context label.

Speaks the line protocol expected by ExternalPredictor: one JSON request
per stdin line, one JSON reply per stdout line. Echoing the final label
back makes protocol round-trips exactly checkable, and the file doubles
as a template for real out-of-process predictors.

Run as: python -m icreg.echo_predictor
"""

from __future__ import annotations

import json
import sys


def main() -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        context = request.get("context", [])
        value = float(context[-1][1]) if context else 0.0
        sys.stdout.write(json.dumps({"prediction": value}) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
