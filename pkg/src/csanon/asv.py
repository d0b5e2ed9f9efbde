"""Speaker verification trials, cosine scoring and equal error rate."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import CorpusManifest

TARGET, NONTARGET = "target", "nontarget"


class Trial(NamedTuple):
    enroll_speaker: str
    utt_id: str
    label: str


@dataclass
class TrialList:
    trials: list[Trial]

    def __post_init__(self):
        seen = set()
        for t in self.trials:
            if t.label not in (TARGET, NONTARGET):
                raise ValueError(f"bad trial label {t.label!r}")
            key = (t.enroll_speaker, t.utt_id)
            if key in seen:
                raise ValueError(f"duplicate trial {key}")
            seen.add(key)

    def __len__(self):
        return len(self.trials)

    @property
    def n_target(self) -> int:
        return sum(t.label == TARGET for t in self.trials)


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float
    n_target: int
    n_nontarget: int


def load_embeddings(path) -> dict[str, np.ndarray]:
    """Read ``{"utt_id": ..., "embedding": [...]}`` lines; all vectors share one dimension."""
    out: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            vec = np.asarray(rec["embedding"], dtype=np.float64)
            if dim is None:
                dim = vec.size
            if vec.ndim != 1 or vec.size != dim:
                raise ValueError(f"{path}:{n}: embedding dimension {vec.size}, expected {dim}")
            if not np.all(np.isfinite(vec)) or not np.any(vec):
                raise ValueError(f"{path}:{n}: embedding must be finite and non-zero")
            if rec["utt_id"] in out:
                raise ValueError(f"{path}:{n}: duplicate utt_id {rec['utt_id']!r}")
            out[rec["utt_id"]] = vec
    return out


def save_embeddings(embeddings: dict[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for utt_id in sorted(embeddings):
            f.write(json.dumps({"utt_id": utt_id, "embedding": [float(x) for x in embeddings[utt_id]]}) + "\n")


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise ValueError(f"zero-norm vector for {what}")
    return v / norm


def enroll_speaker(embeddings: Sequence[np.ndarray], speaker_id: str = "") -> np.ndarray:
    """Average the enrollment embeddings and length-normalize the mean."""
    if len(embeddings) == 0:
        raise ValueError(f"speaker {speaker_id}: no enrollment embeddings")
    mean = np.mean(np.stack([np.asarray(e, dtype=np.float64) for e in embeddings]), axis=0)
    return _unit(mean, f"speaker {speaker_id}")


def cosine_score(model, trial) -> float:
    a, b = np.asarray(model, dtype=np.float64), np.asarray(trial, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.clip(_unit(a, "model") @ _unit(b, "trial"), -1.0, 1.0))


def enrollment_sets(manifest: CorpusManifest, lang_setting: str, gender: str) -> dict[str, list[str]]:
    sets = defaultdict(list)
    for u in manifest.utterances:
        if u.subset == "enroll" and u.lang_setting == lang_setting and u.gender == gender:
            sets[u.speaker_id].append(u.utt_id)
    return {spk: sorted(ids) for spk, ids in sorted(sets.items())}


def build_trials(manifest: CorpusManifest, lang_setting: str, gender: str) -> TrialList:
    """All enrolled speakers of one gender against all trial utterances of that
    gender, within one language setting."""
    speakers = list(enrollment_sets(manifest, lang_setting, gender))
    trial_utts = sorted(
        (u.utt_id, u.speaker_id)
        for u in manifest.utterances
        if u.subset == "trial" and u.lang_setting == lang_setting and u.gender == gender
    )
    trials = [
        Trial(spk, utt, TARGET if spk == owner else NONTARGET) for spk in speakers for utt, owner in trial_utts
    ]
    tl = TrialList(trials)
    if tl.n_target == 0 or tl.n_target == len(tl):
        raise ValueError(
            f"{lang_setting}/{gender}: need both target and non-target trials "
            f"({len(speakers)} enrolled speakers, {len(trial_utts)} trial utterances)"
        )
    return tl


def score_trials(trials: TrialList, enroll: dict[str, list[str]], embeddings: dict[str, np.ndarray]):
    """Cosine scores as (enroll_speaker, utt_id, score, label) rows."""
    models = {spk: enroll_speaker([embeddings[u] for u in ids], spk) for spk, ids in enroll.items()}
    return [(t.enroll_speaker, t.utt_id, cosine_score(models[t.enroll_speaker], embeddings[t.utt_id]), t.label)
            for t in trials.trials]


def compute_eer(scores: Sequence[tuple[float, str]]) -> EerResult:
    """Equal error rate from (score, label) pairs.

    Operating points are taken at every distinct score t with
    FRR(t) = P(target < t) and FAR(t) = P(nontarget >= t), plus t = +inf.
    The EER is where the polyline through these points meets FAR = FRR.
    """
    s = np.array([float(x) for x, _ in scores])
    is_target = np.array([lab == TARGET for _, lab in scores], dtype=bool)
    tgt, non = np.sort(s[is_target]), np.sort(s[~is_target])
    if tgt.size == 0 or non.size == 0:
        raise ValueError("EER needs at least one target and one non-target score")
    thr = np.unique(s)
    frr = np.append(np.searchsorted(tgt, thr, side="left") / tgt.size, 1.0)
    far = np.append((non.size - np.searchsorted(non, thr, side="left")) / non.size, 0.0)
    thr = np.append(thr, np.inf)

    diff = far - frr
    k = int(np.argmax(diff <= 0))
    if diff[k] == 0 or k == 0:
        eer, t = far[k], thr[k]
    else:
        lam = diff[k - 1] / (diff[k - 1] - diff[k])
        eer = frr[k - 1] + lam * (frr[k] - frr[k - 1])
        t = thr[k - 1] + lam * (thr[k] - thr[k - 1]) if np.isfinite(thr[k]) else thr[k - 1]
    return EerResult(float(eer), float(t), int(tgt.size), int(non.size))


def gender_averaged_eer(eer_f: EerResult, eer_m: EerResult) -> float:
    return (eer_f.eer + eer_m.eer) / 2.0


def write_scores(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(["enroll_speaker", "utt_id", "score", "label"])
        for spk, utt, score, label in rows:
            w.writerow([spk, utt, repr(float(score)), label])


def read_scores(path):
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f, delimiter="\t"))
    if rows and rows[0][:2] == ["enroll_speaker", "utt_id"]:
        rows = rows[1:]
    return [(spk, utt, float(score), label) for spk, utt, score, label in rows]
