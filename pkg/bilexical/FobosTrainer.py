import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.special import log_softmax, softmax

from bilexical.BilinearModel import BilinearModel, factorize
from bilexical.errors import (
    BilexicalError,
    DimensionError,
    DivergenceError,
    EmptySplit,
    InvalidArgument,
    NumericError,
)
from bilexical.Evaluator import pairwise_accuracy
from bilexical.prox import (
    RANK_TOL,
    REGULARIZERS,
    as_matrix,
    count_nonzero,
    numerical_rank,
    penalty,
    prox,
)
from bilexical.RelationDataset import RelationFeatures

SCHEDULES = ("constant", "inv_sqrt_t")
HISTORY_COLUMNS = ["epoch", "nll", "dev_acc", "rank_or_nnz", "ops"]
# abort once the mean training NLL exceeds this multiple of its initial value
DIVERGENCE_FACTOR = 10.0


@dataclass
class TrainConfig:
    """
    FOBOS training settings.

    Args:
        regularizer (str): "l1", "l2" or "nuclear"
        tau (float): Regularization strength (per training pair, see objective())
        step0 (float): Initial step size; None picks 1 / estimate_curvature()
        schedule (str): "constant" or "inv_sqrt_t" (eta_t = step0 / sqrt(t))
        epochs (int): Passes over the training pairs
        batch_size (int): Pairs per step; None means full batch
        prox_period (int): Steps between prox applications; None means 1 for
            l1/l2 and 10 for nuclear
        seed (int): Shuffling seed
        early_stop_patience (int): Stop after this many epochs without dev
            improvement; 0 never stops early
    """
    regularizer: str = "nuclear"
    tau: float = 0.1
    step0: Optional[float] = None
    schedule: str = "inv_sqrt_t"
    epochs: int = 20
    batch_size: Optional[int] = 100
    prox_period: Optional[int] = None
    seed: int = 0
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.regularizer not in REGULARIZERS:
            raise InvalidArgument(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if not self.tau > 0:
            raise InvalidArgument(f"tau must be positive, got {self.tau}")
        if self.step0 is not None and not self.step0 > 0:
            raise InvalidArgument(f"step0 must be positive, got {self.step0}")
        if self.schedule not in SCHEDULES:
            raise InvalidArgument(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.epochs < 1:
            raise InvalidArgument(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidArgument(f"batch_size must be >= 1, got {self.batch_size}")
        if self.prox_period is not None and self.prox_period < 1:
            raise InvalidArgument(f"prox_period must be >= 1, got {self.prox_period}")
        if self.early_stop_patience < 0:
            raise InvalidArgument(f"early_stop_patience must be >= 0, got {self.early_stop_patience}")

    @property
    def effective_prox_period(self):
        if self.prox_period is not None:
            return self.prox_period
        return 10 if self.regularizer == "nuclear" else 1

    @property
    def label(self):
        return f"{self.regularizer}-tau{self.tau:g}"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known - {"batch"})
        if unknown:
            raise InvalidArgument(f"unknown TrainConfig fields: {unknown}")
        data = dict(data)
        if "batch" in data:
            batch = data.pop("batch")
            data["batch_size"] = None if batch in (None, "full") else int(batch)
        return cls(**data)


@dataclass
class TrainedModel:
    """
    Outcome of one training run.

    history holds one dict per epoch (epoch, nll, objective, dev_acc,
    rank_or_nnz, ops, step); selected_epoch is the 1-based epoch whose model
    is kept. A failed sweep cell has model None and the error message set.
    """
    model: Optional[BilinearModel]
    history: List[dict]
    selected_epoch: int
    config: TrainConfig
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.error is None and self.model is not None

    @property
    def selected(self):
        return self.history[self.selected_epoch - 1]

    @property
    def dev_accuracy(self):
        return self.selected["dev_acc"]

    @property
    def complexity(self):
        """Rank (nuclear) or number of non-zeros (l1, l2) of the selected operator"""
        return self.selected["rank_or_nnz"]

    @property
    def ops(self):
        return self.selected["ops"]

    def history_frame(self):
        return pd.DataFrame(self.history, columns=HISTORY_COLUMNS)

    def write_history(self, path):
        self.history_frame().to_csv(path, index=False)
        return path


def _operator(model):
    if isinstance(model, BilinearModel):
        return model.materialize()
    return as_matrix(model)


def _resolve_batch(features, split):
    batch = features.batch(split) if isinstance(split, str) or split is None else split
    if len(batch) == 0:
        raise EmptySplit(f"no pairs in split {split!r}" if isinstance(split, str) else "empty batch")
    return batch


def _check_shape(W, features):
    if W.shape != (features.rep_dim, features.rep_dim):
        raise DimensionError(f"operator has shape {W.shape}, features need {features.rep_dim}x{features.rep_dim}")


def nll(model, features, split="train"):
    """
    Negative log-likelihood -sum w * log Pr(c | q; W) with the softmax over all of M.

    Args:
        model: BilinearModel or dense operator
        features (RelationFeatures): Feature matrices
        split: Split name or a PairBatch
    """
    W = _operator(model)
    _check_shape(W, features)
    batch = _resolve_batch(features, split)
    scores = (features.Q[batch.q_idx] @ W) @ features.C.T
    logp = log_softmax(scores, axis=1)
    return float(-np.sum(batch.weight * logp[np.arange(len(batch)), batch.c_idx]))


def gradient(model, features, split="train"):
    """
    Gradient of nll: sum over pairs of w * phi(q) (E_{c'~Pr(.|q)}[phi(c')] - phi(c))^T.

    Returns:
        np.ndarray: n x n matrix
    """
    W = _operator(model)
    _check_shape(W, features)
    batch = _resolve_batch(features, split)
    Qb = features.Q[batch.q_idx]
    probs = softmax((Qb @ W) @ features.C.T, axis=1)
    residual = probs @ features.C - features.C[batch.c_idx]
    return (Qb * batch.weight[:, None]).T @ residual


def objective(model, features, split, regularizer, tau, normalize=False):
    """nll + tau * rho(W); with normalize the nll is divided by the total pair weight"""
    batch = _resolve_batch(features, split)
    loss = nll(model, features, batch)
    if normalize:
        loss /= float(np.sum(batch.weight))
    return loss + tau * penalty(_operator(model), regularizer)


def fobos_step(w, grad, eta, regularizer, tau, apply_prox=True, accumulated=None):
    """
    One forward-backward step: w' = w - eta * grad, then prox_reg(w', eta * tau).

    Args:
        accumulated (float): Sum of step sizes since the last prox; when given the
            prox threshold is accumulated * tau instead of eta * tau
    """
    w = as_matrix(w)
    grad = as_matrix(grad)
    if w.shape != grad.shape:
        raise DimensionError(f"operator {w.shape} and gradient {grad.shape} differ in shape")
    if not eta > 0 or not tau > 0:
        raise InvalidArgument(f"eta and tau must be positive, got eta={eta} tau={tau}")
    half = w - eta * grad
    if not apply_prox:
        return half
    lam = tau * (accumulated if accumulated is not None else eta)
    return prox(half, lam, regularizer)


def _query_second_moment(features, batch, normalize):
    Qb = features.Q[batch.q_idx]
    A = (Qb * batch.weight[:, None]).T @ Qb
    if normalize:
        A /= float(np.sum(batch.weight))
    return float(np.linalg.eigvalsh(A)[-1])


def estimate_curvature(features, split="train", normalize=True):
    """
    Largest Hessian eigenvalue of the NLL at W = 0.

    At W = 0 every query sees the uniform distribution over M, so the Hessian
    is the Kronecker product of the weighted query second moment and the
    candidate covariance; its top eigenvalue is the product of theirs.
    """
    batch = _resolve_batch(features, split)
    cov = np.atleast_2d(np.cov(features.C, rowvar=False, bias=True))
    return _query_second_moment(features, batch, normalize) * float(np.linalg.eigvalsh(cov)[-1])


def curvature_bound(features, split="train", normalize=True):
    """
    Global Lipschitz bound on the NLL gradient: lambda_max(sum w phi(q) phi(q)^T)
    times the largest squared distance of a candidate vector from the candidate mean.
    A step of 1 / bound makes full-batch prox-gradient monotone.
    """
    batch = _resolve_batch(features, split)
    centered = features.C - features.C.mean(axis=0)
    radius = float(np.max(np.sum(centered * centered, axis=1)))
    return _query_second_moment(features, batch, normalize) * radius


def _model_for(W, config, features):
    ids = {"query_rep_id": features.query_rep.fingerprint(),
           "candidate_rep_id": features.candidate_rep.fingerprint()}
    if config.regularizer == "nuclear":
        return factorize(W, epsilon=RANK_TOL, **ids)
    return BilinearModel.dense(W, sparse_storage=config.regularizer == "l1", **ids)


class FobosTrainer:
    """
    Regularized maximum-likelihood training of W with forward-backward splitting.

    W starts at zero. Each epoch shuffles the training pairs (seeded), takes one
    step per batch using the batch-mean gradient, applies the prox every
    prox_period steps and always at epoch end, then scores the dev split.
    The model from the best dev epoch is returned.
    """
    def __init__(self, config, verbose=False):
        self.config = config
        self.verbose = verbose

    def step_size(self, step0, t):
        if self.config.schedule == "constant":
            return step0
        return step0 / math.sqrt(t)

    def train(self, features):
        """
        Args:
            features (RelationFeatures): Dataset plus representations

        Returns:
            TrainedModel
        """
        cfg = self.config
        train_batch = _resolve_batch(features, "train")
        dev_pairs = features.dataset.pairs_for("dev")
        if not dev_pairs:
            raise EmptySplit("no pairs in split 'dev'")

        step0 = cfg.step0
        if step0 is None:
            step0 = 1.0 / max(estimate_curvature(features, train_batch), 1e-12)
            if self.verbose:
                print(f"Using step0={step0:.6g} from the curvature at W=0")

        rng = np.random.default_rng(cfg.seed)
        n = features.rep_dim
        W = np.zeros((n, n))
        total_weight = float(np.sum(train_batch.weight))
        initial_nll = nll(W, features, train_batch) / total_weight
        batch_size = cfg.batch_size or len(train_batch)
        period = cfg.effective_prox_period

        history = []
        best_acc, best_epoch, best_model, stale = -1.0, 0, None, 0
        t = 0
        eta = step0
        for epoch in range(1, cfg.epochs + 1):
            # Step 1: one FOBOS step per shuffled batch, prox every `period` steps
            order = rng.permutation(len(train_batch))
            pending = 0.0
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    for start in range(0, len(order), batch_size):
                        batch = train_batch.take(order[start:start + batch_size])
                        t += 1
                        eta = self.step_size(step0, t)
                        grad = gradient(W, features, batch) / float(np.sum(batch.weight))
                        pending += eta
                        apply = t % period == 0
                        W = fobos_step(W, grad, eta, cfg.regularizer, cfg.tau, apply_prox=apply,
                                       accumulated=pending)
                        if not np.isfinite(W).all():
                            raise DivergenceError(epoch, eta, float("nan"))
                        if apply:
                            pending = 0.0
                    if pending > 0.0:
                        W = prox(W, pending * cfg.tau, cfg.regularizer)
            except NumericError:
                raise DivergenceError(epoch, eta, float("nan"))

            # Step 2: divergence check on the mean training NLL
            with np.errstate(over="ignore", invalid="ignore"):
                train_nll = nll(W, features, train_batch) / total_weight
            if not math.isfinite(train_nll) or train_nll > DIVERGENCE_FACTOR * initial_nll:
                raise DivergenceError(epoch, eta, train_nll)

            # Step 3: score the dev split and record the epoch
            model = _model_for(W, cfg, features)
            dev_acc = pairwise_accuracy(model, dev_pairs, features=features)
            complexity = numerical_rank(W) if cfg.regularizer == "nuclear" else count_nonzero(W)
            history.append({
                "epoch": epoch,
                "nll": train_nll,
                "objective": train_nll + cfg.tau * penalty(W, cfg.regularizer),
                "dev_acc": dev_acc,
                "rank_or_nnz": complexity,
                "ops": model.op_count(features.n_candidates),
                "step": eta,
            })
            if self.verbose:
                kind = "rank" if cfg.regularizer == "nuclear" else "nnz"
                print(f"epoch {epoch}: nll={train_nll:.6f} dev_acc={dev_acc:.4f} {kind}={complexity} step={eta:.4g}")

            # Step 4: keep the best dev epoch, stop after `early_stop_patience` stale epochs
            if dev_acc > best_acc:
                best_acc, best_epoch, best_model, stale = dev_acc, epoch, model, 0
            else:
                stale += 1
                if cfg.early_stop_patience and stale >= cfg.early_stop_patience:
                    if self.verbose:
                        print(f"Stopping early after epoch {epoch}; best dev epoch was {best_epoch}")
                    break

        return TrainedModel(model=best_model, history=history, selected_epoch=best_epoch, config=cfg,
                            extra={"step0": step0})


def train(cfg, dataset, query_rep, candidate_rep=None, verbose=False):
    """Train one model on `dataset` with the given representations"""
    features = RelationFeatures(dataset, query_rep, candidate_rep)
    return FobosTrainer(cfg, verbose=verbose).train(features)


def sweep(cfgs, features, verbose=False):
    """
    Train one model per config on the same features and splits.

    A cell that raises is kept in place with its error message instead of
    stopping the sweep.

    Returns:
        list: TrainedModel per config, in input order
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise InvalidArgument("sweep needs at least one config")
    results = []
    for i, cfg in enumerate(cfgs, start=1):
        if verbose:
            print(f"[{i}/{len(cfgs)}] training {cfg.label}")
        try:
            results.append(FobosTrainer(cfg, verbose=verbose).train(features))
        except BilexicalError as e:
            print(f"Sweep cell {cfg.label} failed: {e}")
            results.append(TrainedModel(model=None, history=[], selected_epoch=0, config=cfg, error=str(e)))
    return results


def tau_grid(regularizer, taus, base=None):
    """TrainConfig per tau, copying every other field from `base`"""
    base = base or TrainConfig(regularizer=regularizer)
    out = []
    for tau in taus:
        data = base.to_dict()
        data.update(regularizer=regularizer, tau=float(tau))
        out.append(TrainConfig.from_dict(data))
    return out
