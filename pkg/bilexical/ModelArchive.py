import json

import numpy as np

from bilexical.BilinearModel import BilinearModel
from bilexical.errors import FormatError, InvalidArgument, RepresentationMismatch, VersionError
from bilexical.FobosTrainer import TrainConfig, TrainedModel

FORMAT_VERSION = 1
MAGIC = "bilexical-model"
ENCODINGS = ("binary", "text")


def _payload_arrays(model):
    if model.is_dense:
        return [("W", model.W)]
    return [("U", model.U), ("V", model.V)]


def _header(trained, encoding):
    model = trained.model
    return {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "encoding": encoding,
        "form": model.form,
        "n": model.rep_dim,
        "k": model.rank_hint,
        "sparse_storage": model.sparse_storage,
        "regularizer": trained.config.regularizer,
        "tau": trained.config.tau,
        "query_rep": model.query_rep_id,
        "candidate_rep": model.candidate_rep_id,
        "config": trained.config.to_dict(),
        "selected_epoch": trained.selected_epoch,
        "history": trained.history,
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in _payload_arrays(model)],
    }


def save_model(trained, path, encoding="binary"):
    """
    Write a trained model: one JSON header line, then the matrices.

    binary stores little-endian float64; text stores one repr() float per
    line, which parses back to the identical double.
    """
    if not trained.ok:
        raise InvalidArgument(f"cannot save a failed run: {trained.error}")
    if encoding not in ENCODINGS:
        raise InvalidArgument(f"encoding must be one of {ENCODINGS}, got {encoding!r}")
    header = json.dumps(_header(trained, encoding), sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(header + b"\n")
        for _, arr in _payload_arrays(trained.model):
            flat = np.ascontiguousarray(arr, dtype="<f8").ravel()
            if encoding == "binary":
                f.write(flat.tobytes())
            else:
                f.write("".join(repr(float(x)) + "\n" for x in flat).encode("utf-8"))
    return path


def _check_rep(header, key, rep, allow_mismatch):
    if rep is None or header.get(key) is None:
        return
    if header[key] != rep.fingerprint():
        msg = f"{key.replace('_', ' ')} {rep.name!r} does not match the representation the model was trained on"
        if not allow_mismatch:
            raise RepresentationMismatch(msg)
        print(f"Warning: {msg}; loading anyway")


def load_model(path, query_rep=None, candidate_rep=None, allow_mismatch=False):
    """
    Read a model written by save_model.

    Args:
        query_rep, candidate_rep (Representation): When given, their fingerprints
            must match the ones stored in the header
        allow_mismatch (bool): Load despite a fingerprint mismatch

    Raises:
        FormatError: Unreadable header or truncated payload
        VersionError: Archive written by another format version
        RepresentationMismatch: Fingerprint mismatch without allow_mismatch
    """
    with open(path, "rb") as f:
        raw = f.read()
    head, sep, body = raw.partition(b"\n")
    if not sep:
        raise FormatError("missing header line", line=1)
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"unreadable header: {e}", line=1)
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise FormatError("not a bilexical model archive", line=1)
    if header.get("version") != FORMAT_VERSION:
        raise VersionError(f"archive version {header.get('version')} != supported version {FORMAT_VERSION}")

    _check_rep(header, "query_rep", query_rep, allow_mismatch)
    _check_rep(header, "candidate_rep", candidate_rep, allow_mismatch)

    shapes = [(a["name"], tuple(a["shape"])) for a in header["arrays"]]
    sizes = [int(np.prod(shape)) for _, shape in shapes]
    if header.get("encoding") == "text":
        lines = body.decode("utf-8").splitlines()
        if len(lines) != sum(sizes):
            raise FormatError(f"expected {sum(sizes)} values, found {len(lines)}", line=len(lines) + 1)
        try:
            values = np.array([float(x) for x in lines], dtype=np.float64)
        except ValueError:
            raise FormatError("unparsable value in text payload")
    else:
        if len(body) != 8 * sum(sizes):
            raise FormatError(f"payload holds {len(body)} bytes, expected {8 * sum(sizes)}")
        values = np.frombuffer(body, dtype="<f8").astype(np.float64)

    arrays, offset = {}, 0
    for (name, shape), size in zip(shapes, sizes):
        arrays[name] = values[offset:offset + size].reshape(shape)
        offset += size

    ids = {"query_rep_id": header.get("query_rep"), "candidate_rep_id": header.get("candidate_rep")}
    if header["form"] == "dense":
        model = BilinearModel.dense(arrays["W"], sparse_storage=header.get("sparse_storage", False), **ids)
    else:
        model = BilinearModel.factorized(arrays["U"], arrays["V"], **ids)
    return TrainedModel(
        model=model,
        history=header.get("history", []),
        selected_epoch=header.get("selected_epoch", 0),
        config=TrainConfig.from_dict(header["config"]),
    )
