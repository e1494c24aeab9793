"""policy"""

from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any

import numpy as np
import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from mapnet.config import PlacementConfig
from mapnet.errors import ShapeMismatchError
from mapnet.observation import MAP_FEATURES, SELF_FEATURES, UE_FEATURES, Observation
from mapnet.placement import N_ACTIONS, Action


@dataclass(frozen=True)
class ArchitectureDescriptor:
    """
    Everything that fixes the length and layout of a policy weight vector.

    Attributes
    ----------
    n_ue_obs, n_map_obs : `int`
        Rows of the observation blocks
    embedding_dim : `int`
        Per entity embedding width
    trunk : `tuple[int, ...]`
        Feed forward trunk widths
    attention_heads : `int`
        Learned queries per pooling block
    n_actions : `int = 7`
    """

    n_ue_obs: int = 15
    n_map_obs: int = 5
    embedding_dim: int = 32
    trunk: tuple[int, ...] = (64, 64)
    attention_heads: int = 1
    n_actions: int = N_ACTIONS

    @classmethod
    def from_config(cls, cfg: PlacementConfig) -> ArchitectureDescriptor:
        return cls(
            n_ue_obs=cfg.n_ue_obs,
            n_map_obs=cfg.n_map_obs,
            embedding_dim=cfg.embedding_dim,
            trunk=tuple(cfg.trunk),
            attention_heads=cfg.attention_heads,
        )

    @classmethod
    def from_dict(cls, table: dict[str, Any]) -> ArchitectureDescriptor:
        try:
            return cls(**{**table, "trunk": tuple(table["trunk"])})
        except (KeyError, TypeError) as e:
            raise ShapeMismatchError(f"invalid architecture descriptor {table}: {e}") from e

    def to_dict(self) -> dict[str, Any]:
        table = asdict(self)
        table["trunk"] = list(self.trunk)
        return table


class AttentionPooling(nn.Module):
    """
    Permutation invariant pooling of a variable size entity set: every row is embedded, scored against learned
    queries and averaged with a softmax over the valid rows. A set without valid rows pools to zeros.
    """

    def __init__(self, in_features: int, dim: int, heads: int = 1) -> None:
        super().__init__()
        self.heads = heads
        self.dim = dim
        self.embed = nn.Linear(in_features, dim)
        self.query = nn.Parameter(0.1 * torch.randn(heads, dim))
        self.scale = dim**-0.5

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        # x: [batch, rows, features], mask: [batch, rows]
        h = torch.tanh(self.embed(x))
        scores = torch.einsum("qd,bnd->bqn", self.query, h) * self.scale
        valid = (mask > 0).unsqueeze(1)
        any_valid = valid.any(dim=-1, keepdim=True)
        scores = scores.masked_fill(~valid, float("-inf"))
        scores = torch.where(any_valid, scores, torch.zeros_like(scores))
        weights = torch.softmax(scores, dim=-1) * valid
        pooled = torch.einsum("bqn,bnd->bqd", weights, h)
        return pooled.reshape(x.shape[0], self.heads * self.dim)


class PlacementPolicy(nn.Module):
    """
    Actor-critic placement policy shared by every regime: attention pooled UE and neighbour MAP blocks, the own
    location, a tanh trunk, a 7 way action head and a value head. The action head starts at zero so an untrained
    policy is uniform.

    Methods
    -------
    new(arch, seed) -> PlacementPolicy
        Seeded initialisation that leaves the global torch generator untouched
    forward(ue, ue_mask, maps, map_mask, self_block) -> (logits, value)
    distribution(observations) -> (Categorical, value)
    """

    def __init__(self, arch: ArchitectureDescriptor) -> None:
        super().__init__()
        self.arch = arch
        self.ue_pool = AttentionPooling(UE_FEATURES, arch.embedding_dim, arch.attention_heads)
        self.map_pool = AttentionPooling(MAP_FEATURES, arch.embedding_dim, arch.attention_heads)

        layers: list[nn.Module] = []
        width = 2 * arch.attention_heads * arch.embedding_dim + SELF_FEATURES
        for size in arch.trunk:
            layers += [nn.Linear(width, size), nn.Tanh()]
            width = size
        self.trunk = nn.Sequential(*layers)

        self.action_head = nn.Linear(width, arch.n_actions)
        nn.init.zeros_(self.action_head.weight)
        nn.init.zeros_(self.action_head.bias)
        self.value_head = nn.Linear(width, 1)

    @classmethod
    def new(cls, arch: ArchitectureDescriptor, seed: int = 0) -> PlacementPolicy:
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            return cls(arch)

    def forward(
        self,
        ue: torch.Tensor,
        ue_mask: torch.Tensor,
        maps: torch.Tensor,
        map_mask: torch.Tensor,
        self_block: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        features = torch.cat([self.ue_pool(ue, ue_mask), self.map_pool(maps, map_mask), self_block], dim=-1)
        hidden = self.trunk(features)
        return self.action_head(hidden), self.value_head(hidden).squeeze(-1)

    def distribution(
        self, observations: list[Observation]
    ) -> tuple[torch.distributions.Categorical, torch.Tensor]:
        logits, value = self(*observation_tensors(observations, self.arch, dtype=self.dtype))
        return torch.distributions.Categorical(logits=logits), value

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def weight_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def check_observation(obs: Observation, arch: ArchitectureDescriptor) -> None:
    expected = {
        "ue_block": (arch.n_ue_obs, UE_FEATURES),
        "ue_mask": (arch.n_ue_obs,),
        "map_block": (arch.n_map_obs, MAP_FEATURES),
        "map_mask": (arch.n_map_obs,),
        "self_block": (SELF_FEATURES,),
    }
    for name, shape in expected.items():
        if getattr(obs, name).shape != shape:
            raise ShapeMismatchError(f"{name} has shape {getattr(obs, name).shape}, the policy expects {shape}")


def observation_tensors(
    observations: list[Observation], arch: ArchitectureDescriptor, dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, ...]:
    """Stack observations into the five batched input tensors of `PlacementPolicy`"""

    for obs in observations:
        check_observation(obs, arch)

    return tuple(
        torch.as_tensor(np.stack([getattr(o, name) for o in observations]), dtype=dtype)
        for name in ("ue_block", "ue_mask", "map_block", "map_mask", "self_block")
    )


def act(
    policy: PlacementPolicy, obs: Observation, mode: str = "sample", rng: np.random.Generator | None = None
) -> tuple[Action, float, float]:
    """
    Pick an action for one observation.

    Parameters
    ----------
    policy : `PlacementPolicy`
    obs : `Observation`
    mode : `str = "sample"`
        `sample` draws from the action distribution with `rng`, `greedy` takes its mode (lowest action on ties),
        `random` draws uniformly with `rng` whatever the policy says
    rng : `np.random.Generator | None`
        Required in sample and random mode

    Returns
    -------
    `tuple[Action, float, float]`
        Action, its log-probability under the chosen mode and the value estimate
    """

    with torch.no_grad():
        dist, value = policy.distribution([obs])
    probs = dist.probs[0].double().numpy()

    if mode == "greedy":
        index = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs a random generator")
        index = int(rng.choice(len(probs), p=probs / probs.sum()))
    elif mode == "random":
        if rng is None:
            raise ValueError("random mode needs a random generator")
        index = int(rng.integers(len(probs)))
        return Action(index), float(-np.log(len(probs))), float(value[0])
    else:
        raise ValueError(f"unknown action mode {mode}")

    return Action(index), float(np.log(probs[index])), float(value[0])


@dataclass
class PolicyParameters:
    """
    Flat weight vector of a `PlacementPolicy`.

    Attributes
    ----------
    weights : `np.ndarray`
        float64 weights in `parameters()` order
    architecture : `ArchitectureDescriptor`
    version : `int = 0`
        Bumped on every write back
    step : `int = 0`
        Training step the weights were taken at
    """

    weights: np.ndarray
    architecture: ArchitectureDescriptor
    version: int = 0
    step: int = 0

    @classmethod
    def from_policy(cls, policy: PlacementPolicy, step: int = 0, version: int = 0) -> PolicyParameters:
        weights = parameters_to_vector(policy.parameters()).detach().double().numpy().copy()
        return cls(weights=weights, architecture=policy.arch, version=version, step=step)

    def load_into(self, policy: PlacementPolicy) -> PlacementPolicy:
        if policy.arch != self.architecture or policy.weight_count() != self.weights.size:
            raise ShapeMismatchError(
                f"weights of {self.architecture} ({self.weights.size}) do not fit {policy.arch}"
                f" ({policy.weight_count()})"
            )
        vector_to_parameters(torch.as_tensor(self.weights, dtype=policy.dtype), policy.parameters())
        return policy

    def to_policy(self) -> PlacementPolicy:
        return self.load_into(PlacementPolicy.new(self.architecture))
