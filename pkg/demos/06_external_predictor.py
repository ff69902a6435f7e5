"""Bridging to an out-of-process model over the line protocol.

Any executable that reads one JSON prompt per line on stdin and answers
with one JSON number per line can serve predictions. This demo drives
the bundled echo predictor (answers with the last context label), then
wraps a 40-dimensional prompt for a 20-dimensional model with chunk
ensembling: split the features into width-20 chunks, predict each,
average the answers.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from icreg.predict import (
    ExternalPredictorSpec,
    Prompt,
    chunked,
    external_predict,
    predict_average,
)

def main():
    spec = ExternalPredictorSpec(command=(sys.executable, "-m", "icreg.echo_predictor"))
    rng = np.random.default_rng(0)
    prompts = [
        Prompt(rng.normal(size=(4, 3)), np.array([1.0, 2.0, 3.0, 4.0]), rng.normal(size=3)),
        Prompt(rng.normal(size=(2, 3)), np.array([7.5, -1.25]), rng.normal(size=3)),
    ]
    results = external_predict(spec, prompts)
    for i, result in enumerate(results):
        print(f"prompt {i}: echo predictor answered {result.value} "
              f"(last context label, predictor={result.predictor!r})")

    # specs serialize to JSON so experiment configs can reference them
    with tempfile.TemporaryDirectory() as tmp:
        spec_path = Path(tmp) / "echo.json"
        spec_path.write_text(json.dumps({
            "command": [sys.executable, "-m", "icreg.echo_predictor"],
            "timeout_s": 10,
            "input_dim": 20,
        }))
        loaded = ExternalPredictorSpec.from_file(str(spec_path))
        print(f"\nspec file declares input_dim={loaded.input_dim}, "
              f"timeout {loaded.timeout_s}s")

    wide = Prompt(rng.normal(size=(6, 40)), rng.normal(size=6), rng.normal(size=40))
    narrow_model = chunked(predict_average, chunk_dim=20)
    result = narrow_model(wide)
    print(f"\nchunk ensembling: 40-dim prompt -> {len(result.per_chunk)} chunks of 20")
    print(f"per-chunk answers {[round(v, 3) for v in result.per_chunk]} "
          f"-> mean {result.value:.3f}")
    print("(averaging ignores features, so both chunks agree here; a real model differs)")

if __name__ == "__main__":
    main()
