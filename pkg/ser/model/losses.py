from typing import Mapping, NamedTuple, Optional, Sequence, Tuple

from ..autodiff import Tensor
from ..autodiff import ops
from ..const import DEFAULT_BETA, DEFAULT_GAMMA, EOS_ID
from .dataobj import ForwardBundle


class Losses(NamedTuple):
    emo: Tensor
    d: Tensor
    e: Tensor
    total: Tensor

    def as_floats(self) -> Tuple[float, float, float, float]:
        return self.emo.item(), self.d.item(), self.e.item(), self.total.item()


def joint_objective(emo: Tensor, d: Tensor, e: Tensor, beta: float = DEFAULT_BETA,
                    gamma: float = DEFAULT_GAMMA) -> Tensor:
    """Loss_emo + β·(γ·Loss_d + Loss_e)"""
    if beta < 0 or gamma < 0:
        raise ValueError(f"loss weights must be nonnegative (got β={beta}, γ={gamma})")
    return ops.add(emo, ops.scale(ops.add(ops.scale(d, gamma), e), beta))


def _zero() -> Tensor:
    return Tensor(0.0)


def compute_losses(bundle: ForwardBundle, gold_emotion: int,
                   gold_labels: Optional[Sequence[int]] = None,
                   gold_targets: Optional[Mapping[int, Sequence[int]]] = None,
                   beta: float = DEFAULT_BETA, gamma: float = DEFAULT_GAMMA) -> Losses:
    """
    Computes the emotion, detection and correction losses of one example, and their
    weighted sum. A head missing from the bundle contributes a constant zero loss.

    gold_labels are edit-label class ids, one per hypothesis token;
    gold_targets map every decoded position to its uncapped target.
    """
    n_emotions = bundle.emotion.shape[0]
    if not 0 <= gold_emotion < n_emotions:
        raise ValueError(f"gold emotion {gold_emotion} outside of {n_emotions} classes")
    loss_emo = ops.neg_log_pick(bundle.emotion, [gold_emotion])

    loss_d = _zero()
    if bundle.aed is not None:
        if gold_labels is None:
            raise ValueError("detection head enabled, but no gold edit labels given")
        if len(gold_labels) != bundle.aed.shape[0]:
            raise ValueError(f"{len(gold_labels)} gold edit labels for "
                             f"{bundle.aed.shape[0]} hypothesis tokens")
        loss_d = ops.neg_log_pick(bundle.aed, gold_labels)

    loss_e = _zero()
    if bundle.aec:
        if gold_targets is None:
            raise ValueError("correction decoder enabled, but no gold targets given")

        for k, probs in sorted(bundle.aec.items()):
            target = gold_targets.get(k)
            if target is None:
                raise ValueError(f"no gold target for decoded position {k}")

            # Decoder length fixes the cap applied to the target
            kept = probs.shape[0] - 1
            if len(target) < kept:
                raise ValueError(f"gold target at {k} has {len(target)} tokens, "
                                 f"decoder ran {probs.shape[0]} steps")

            gold = list(target[:kept]) + [EOS_ID]
            loss_e = ops.add(loss_e, ops.neg_log_pick(probs, gold))

    return Losses(loss_emo, loss_d, loss_e, joint_objective(loss_emo, loss_d, loss_e, beta, gamma))
