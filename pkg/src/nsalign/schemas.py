"""JSON Schemas (draft 2020-12) for the documents the CLI prints to stdout."""

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_INT = {"type": "integer"}

MANIFEST = {
    "type": "object",
    "required": ["command", "config", "seed", "inputs", "outputs", "version"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "inputs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["path", "sha256"],
                "properties": {
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "outputs": {"type": "array", "items": {"type": "string"}},
        "version": {"type": "string"},
    },
}


def _doc(required, properties):
    props = dict(properties)
    props["manifest"] = MANIFEST
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": list(required) + ["manifest"],
        "properties": props,
    }


COMPARE = _doc(
    ["n", "gnsa", "lnsa_metric", "lnsa_xy", "lnsa_yx", "nsa", "normalizer_x", "normalizer_y"],
    {
        "n": _INT, "gnsa": _NONNEG, "lnsa_metric": _NONNEG, "lnsa_xy": _NONNEG,
        "lnsa_yx": _NONNEG, "nsa": _NONNEG, "normalizer_x": _NONNEG, "normalizer_y": _NONNEG,
        "top_pointwise": {"type": "array", "items": _INT},
    },
)

SUBSET = _doc(
    ["trials", "batch_size", "per_batch_norm", "mean", "full_value", "rel_error", "per_trial"],
    {
        "trials": _INT, "batch_size": _INT, "per_batch_norm": {"type": "boolean"},
        "mean": _NONNEG, "full_value": _NONNEG, "rel_error": _NONNEG,
        "per_trial": {"type": "array", "items": _NONNEG},
    },
)

QUALITY = _doc(
    ["linear_correlation", "triplet_accuracy", "gnsa", "lnsa_at_k", "knn_consistency", "k_used",
     "lnsa_loss_direction"],
    {
        "linear_correlation": {"type": "number", "minimum": -1, "maximum": 1},
        "triplet_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "gnsa": _NONNEG, "lnsa_at_k": _NONNEG, "lnsa_loss_direction": _NONNEG,
        "knn_consistency": {"type": "number", "minimum": 0, "maximum": 1},
        "k_used": _INT,
    },
)

GRADCHECK = _doc(
    ["loss", "max_abs_err", "max_rel_err", "argmax", "n_checked", "n_skipped", "h", "passed"],
    {
        "loss": {"enum": ["GNSA", "LNSA", "NSA"]},
        "max_abs_err": _NONNEG, "max_rel_err": _NONNEG,
        "argmax": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "n_checked": _INT, "n_skipped": _INT, "h": _NONNEG,
        "max_abs_analytic": _NONNEG, "max_abs_numeric": _NONNEG,
        "passed": {"type": "boolean"},
    },
)

REDUCE = _doc(
    ["output", "trace", "epochs", "initial_loss", "final_loss", "final_gnsa", "final_lnsa"],
    {
        "output": {"type": "string"}, "trace": {"type": "string"}, "epochs": _INT,
        "initial_loss": _NONNEG, "final_loss": _NONNEG, "final_gnsa": _NONNEG, "final_lnsa": _NONNEG,
        "seconds": _NONNEG,
    },
)

GENERATE = _doc(
    ["kind", "output", "shape"],
    {
        "kind": {"enum": ["swissroll", "blobs", "spheres"]},
        "output": {"type": "string"},
        "shape": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "sidecar": {"type": "string"},
    },
)

SCHEMAS = {
    "compare": COMPARE,
    "minibatch-study": SUBSET,
    "eval": QUALITY,
    "gradcheck": GRADCHECK,
    "reduce": REDUCE,
    "gen": GENERATE,
}
